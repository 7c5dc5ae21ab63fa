"""
Binary tree aggregation with bottom-up Honaker prefix estimates.
"""

from dpsqlp.dptree.codec import decode_tree, encode_tree, tree_from_text, tree_to_text
from dpsqlp.dptree.honaker import honaker_variance, honaker_weights, node_estimates
from dpsqlp.dptree.tree import (
    PrefixEstimate,
    TreeState,
    add_to_tree,
    all_prefix_estimates,
    all_prefix_variances,
    decomposition_nodes,
    get_total_sum,
    initialize_tree,
    prefix_error_bound,
    prefix_variance,
)

__all__ = [
    "PrefixEstimate",
    "TreeState",
    "add_to_tree",
    "all_prefix_estimates",
    "all_prefix_variances",
    "decode_tree",
    "decomposition_nodes",
    "encode_tree",
    "get_total_sum",
    "honaker_variance",
    "honaker_weights",
    "initialize_tree",
    "node_estimates",
    "prefix_error_bound",
    "prefix_variance",
    "tree_from_text",
    "tree_to_text",
]
