"""
DP binary tree aggregation over a fixed number of steps.

The tree keeps its leaf inputs only. Node noise is a pure function of the tree
seed, so node values and Honaker estimates are re-derived on demand and a
deserialised tree reproduces the exact same releases.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from dpsqlp.accountant.calibration import tree_height
from dpsqlp.dptree.honaker import level_slices, node_estimates, node_unit_variances
from dpsqlp.errors import CapacityError, InvalidParameterError, InvalidStepError, OutOfOrderError


@dataclass(frozen=True)
class PrefixEstimate:
    """Noisy prefix sum over leaves 1..step and its variance."""
    value: float
    variance: float
    step: int


@dataclass(eq=False)
class TreeState:
    height: int
    sigma: float
    seed: int
    next_leaf: int = 1
    leaf_inputs: np.ndarray = field(default=None, repr=False)
    _noise: Optional[np.ndarray] = field(default=None, init=False, repr=False)
    _prefixes: Optional[np.ndarray] = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        if self.leaf_inputs is None:
            self.leaf_inputs = np.zeros(self.leaf_count)
        if self.leaf_inputs.shape != (self.leaf_count,):
            raise InvalidParameterError(
                f"expected {self.leaf_count} leaf inputs, got {self.leaf_inputs.shape}"
            )
        if not 1 <= self.next_leaf <= self.leaf_count + 1:
            raise InvalidParameterError(f"next_leaf {self.next_leaf} outside [1, {self.leaf_count + 1}]")

    @property
    def leaf_count(self) -> int:
        return 1 << self.height

    @property
    def node_count(self) -> int:
        return (1 << (self.height + 1)) - 1

    @property
    def filled(self) -> int:
        return self.next_leaf - 1

    @property
    def is_full(self) -> bool:
        return self.next_leaf > self.leaf_count

    def leaf_node_id(self, i: int) -> int:
        return self.leaf_count + i - 1

    def path_node_ids(self, i: int) -> list[int]:
        """Root-to-leaf path of leaf i, root first."""
        node = self.leaf_node_id(i)
        path = []
        while node >= 1:
            path.append(node)
            node >>= 1
        return path[::-1]

    def noise(self) -> np.ndarray:
        if self._noise is None:
            if self.sigma == 0:
                self._noise = np.zeros(self.node_count)
            else:
                z = np.random.default_rng(self.seed).standard_normal(self.node_count)
                self._noise = self.sigma * z
        return self._noise

    @property
    def node_values(self) -> np.ndarray:
        """Noisy node values in heap order; index = node id - 1."""
        sums = np.empty(self.node_count)
        level = self.leaf_inputs
        for s in reversed(level_slices(self.height)):
            sums[s] = level
            level = level.reshape(-1, 2).sum(axis=1) if level.size > 1 else level
        return sums + self.noise()

    def invalidate(self) -> None:
        self._prefixes = None


def initialize_tree(T: int, sigma: float, seed: int) -> TreeState:
    """Tree with 2^⌈lg T⌉ leaves whose node noise is N(0, σ²) drawn from seed."""
    if not (math.isfinite(sigma) and sigma >= 0):
        raise InvalidParameterError(f"sigma must be finite and >= 0, got {sigma}")
    return TreeState(height=tree_height(T), sigma=float(sigma), seed=int(seed))


def add_to_tree(tree: TreeState, i: int, value: float) -> TreeState:
    """Write value at leaf i, which must be the next unfilled leaf."""
    if i > tree.leaf_count:
        raise CapacityError(f"leaf {i} exceeds tree capacity {tree.leaf_count}")
    if i != tree.next_leaf:
        raise OutOfOrderError(f"expected leaf {tree.next_leaf}, got {i}")
    if not math.isfinite(value):
        raise InvalidParameterError(f"leaf value must be finite, got {value}")

    tree.leaf_inputs[i - 1] = value
    tree.next_leaf += 1
    tree.invalidate()
    return tree


@lru_cache(maxsize=64)
def _decomposition(height: int) -> tuple[np.ndarray, np.ndarray]:
    """
    For every prefix i in 1..2^h, the node ids of its dyadic decomposition
    (padded with 0) and its variance at σ=1.
    """
    leaves = 1 << height
    index = np.zeros((leaves, height + 1), dtype=np.int64)
    unit = node_unit_variances(height)
    unit_var = np.zeros(leaves)
    for i in range(1, leaves + 1):
        start, col = 0, 0
        for bit in range(height, -1, -1):
            if i >> bit & 1:
                node = (1 << (height - bit)) + (start >> bit)
                index[i - 1, col] = node
                unit_var[i - 1] += unit[node - 1]
                start += 1 << bit
                col += 1
    index.setflags(write=False)
    unit_var.setflags(write=False)
    return index, unit_var


def decomposition_nodes(height: int, i: int) -> list[int]:
    """Node ids whose subtrees tile leaves 1..i, left to right."""
    index, _ = _decomposition(height)
    return [int(n) for n in index[i - 1] if n]


def all_prefix_estimates(tree: TreeState) -> np.ndarray:
    """
    Honaker prefix estimates for every step 1..leaf_count, treating unfilled
    leaves as zero.
    """
    if tree._prefixes is None:
        index, _ = _decomposition(tree.height)
        padded = np.concatenate(([0.0], node_estimates(tree.node_values, tree.height)))
        tree._prefixes = padded[index].sum(axis=1)
    return tree._prefixes


def all_prefix_variances(tree: TreeState) -> np.ndarray:
    _, unit_var = _decomposition(tree.height)
    return unit_var * tree.sigma ** 2


def _check_step(tree: TreeState, i: int) -> None:
    if int(i) != i or not 1 <= i <= tree.leaf_count:
        raise InvalidStepError(f"step {i} outside [1, {tree.leaf_count}]")


def prefix_variance(tree: TreeState, i: int) -> float:
    """λ² of the prefix-i estimate: sum of Honaker variances of its decomposition nodes."""
    _check_step(tree, i)
    return float(all_prefix_variances(tree)[i - 1])


def get_total_sum(tree: TreeState, i: int) -> PrefixEstimate:
    """Prefix-sum estimate over leaves 1..i; i must already be filled."""
    _check_step(tree, i)
    if i >= tree.next_leaf:
        raise InvalidStepError(f"step {i} not yet inserted (next leaf is {tree.next_leaf})")
    return PrefixEstimate(
        value=float(all_prefix_estimates(tree)[i - 1]),
        variance=prefix_variance(tree, i),
        step=i,
    )


def prefix_error_bound(n: int, sigma: float, beta: float) -> float:
    """High-probability bound on max_i |prefix error| over n steps."""
    if not 0 < beta < 1:
        raise InvalidParameterError(f"beta must be in (0, 1), got {beta}")
    return math.sqrt(2.0 * math.log(n / beta) * tree_height(n) * sigma ** 2 / math.pi)
