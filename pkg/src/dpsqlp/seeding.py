"""
Deterministic seed derivation.

All randomness in the engine is keyed by labels such as (run seed, key, tree,
round) rather than by execution order, so any tree can be re-derived exactly.
"""

import hashlib
from typing import Union

import numpy as np

Label = Union[str, int]

SEED_BYTES = 16


def derive_seed(root: int, *labels: Label) -> int:
    """Derive a 128-bit seed from a root seed and an ordered label path."""
    hash_input = "|".join([str(root), *(str(label) for label in labels)]).encode("utf-8")
    return int.from_bytes(hashlib.sha256(hash_input).digest()[:SEED_BYTES], "big")


def make_rng(root: int, *labels: Label) -> np.random.Generator:
    """numpy Generator seeded from a derived seed."""
    return np.random.default_rng(derive_seed(root, *labels))


def user_fingerprint(user_id: str) -> str:
    """Stable short fingerprint of a user id for per-round dedup sets."""
    return hashlib.blake2b(user_id.encode("utf-8"), digest_size=8).hexdigest()
