"""
Bottom-up Honaker estimation over a heap-ordered binary tree.

A node whose subtree spans kappa levels (a leaf has kappa=1) is re-estimated as
a weighted average of the level sums of its own subtree, with weights
proportional to 1/2^j for the level j below the node.
"""

from functools import lru_cache

import numpy as np

from dpsqlp.errors import InvalidParameterError


def honaker_weights(kappa: int) -> np.ndarray:
    """c_0..c_{kappa-1}, c_j ∝ 1/2^j, summing to 1."""
    if int(kappa) != kappa or kappa < 1:
        raise InvalidParameterError(f"kappa must be a positive integer, got {kappa}")
    raw = np.ldexp(1.0, -np.arange(int(kappa)))
    return raw / raw.sum()


def honaker_variance(kappa: int, sigma: float) -> float:
    """σ² / (2(1 - 2^-kappa)); equals σ² at a leaf."""
    if int(kappa) != kappa or kappa < 1:
        raise InvalidParameterError(f"kappa must be a positive integer, got {kappa}")
    return sigma ** 2 / (2.0 * (1.0 - 2.0 ** -int(kappa)))


def level_slices(height: int) -> list[slice]:
    """Heap-array slices per depth; depth d holds node ids 2^d .. 2^{d+1}-1."""
    return [slice((1 << d) - 1, (1 << (d + 1)) - 1) for d in range(height + 1)]


def node_estimates(node_values: np.ndarray, height: int) -> np.ndarray:
    """Honaker estimate of every node, returned in heap order (index = node id - 1)."""
    expected = (1 << (height + 1)) - 1
    if node_values.shape != (expected,):
        raise InvalidParameterError(
            f"node array of a height-{height} tree must have {expected} entries, got {node_values.shape}"
        )

    by_depth = [node_values[s] for s in level_slices(height)]
    estimates = np.empty_like(node_values)
    for depth, out in zip(range(height + 1), level_slices(height)):
        weights = honaker_weights(height - depth + 1)
        acc = np.zeros(1 << depth)
        for j, weight in enumerate(weights):
            acc += weight * by_depth[depth + j].reshape(1 << depth, -1).sum(axis=1)
        estimates[out] = acc
    return estimates


@lru_cache(maxsize=64)
def _node_unit_variances(height: int) -> np.ndarray:
    out = np.empty((1 << (height + 1)) - 1)
    for depth, s in enumerate(level_slices(height)):
        out[s] = honaker_variance(height - depth + 1, 1.0)
    return out


def node_unit_variances(height: int) -> np.ndarray:
    """Per-node Honaker variance at σ=1, heap order."""
    return _node_unit_variances(height).copy()
