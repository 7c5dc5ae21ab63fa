"""
Binary encoding of TreeState for the state store.

Layout: tag byte, then big-endian height (u16), sigma (f64), next_leaf (u32),
seed (16 bytes), then the filled leaf inputs as little-endian f64. Unfilled
leaves are zero and are not written.
"""

import base64
import struct

import numpy as np

from dpsqlp.dptree.tree import TreeState
from dpsqlp.errors import RecoveryError
from dpsqlp.seeding import SEED_BYTES

TREE_TAG_V1 = 0x01

_HEADER = struct.Struct(">BHdI")


def encode_tree(tree: TreeState) -> bytes:
    header = _HEADER.pack(TREE_TAG_V1, tree.height, tree.sigma, tree.next_leaf)
    seed = int(tree.seed).to_bytes(SEED_BYTES, "big")
    leaves = np.ascontiguousarray(tree.leaf_inputs[: tree.filled], dtype="<f8").tobytes()
    return header + seed + leaves


def decode_tree(blob: bytes) -> TreeState:
    if len(blob) < _HEADER.size + SEED_BYTES:
        raise RecoveryError(f"tree blob too short ({len(blob)} bytes)")
    tag, height, sigma, next_leaf = _HEADER.unpack_from(blob)
    if tag != TREE_TAG_V1:
        raise RecoveryError(f"unknown tree encoding tag {tag:#04x}")

    offset = _HEADER.size
    seed = int.from_bytes(blob[offset: offset + SEED_BYTES], "big")
    offset += SEED_BYTES

    filled = next_leaf - 1
    body = blob[offset:]
    if len(body) != 8 * filled:
        raise RecoveryError(f"tree blob carries {len(body)} leaf bytes, expected {8 * filled}")

    leaves = np.zeros(1 << height)
    leaves[:filled] = np.frombuffer(body, dtype="<f8")
    return TreeState(height=height, sigma=sigma, seed=seed, next_leaf=next_leaf, leaf_inputs=leaves)


def tree_to_text(tree: TreeState) -> str:
    return base64.b64encode(encode_tree(tree)).decode("ascii")


def tree_from_text(text: str) -> TreeState:
    try:
        blob = base64.b64decode(text.encode("ascii"), validate=True)
    except ValueError as e:
        raise RecoveryError(f"tree payload is not valid base64: {e}") from e
    return decode_tree(blob)
