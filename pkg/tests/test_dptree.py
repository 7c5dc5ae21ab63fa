import numpy as np
import pytest

from dpsqlp.dptree import (
    add_to_tree,
    all_prefix_estimates,
    decode_tree,
    decomposition_nodes,
    encode_tree,
    get_total_sum,
    honaker_variance,
    honaker_weights,
    initialize_tree,
    node_estimates,
    prefix_error_bound,
    prefix_variance,
    tree_from_text,
    tree_to_text,
)
from dpsqlp.errors import CapacityError, InvalidStepError, OutOfOrderError, RecoveryError


def filled_tree(T, sigma, seed, values):
    tree = initialize_tree(T, sigma, seed)
    for i, v in enumerate(values, start=1):
        add_to_tree(tree, i, v)
    return tree


class TestInitialize:
    def test_single_leaf(self):
        tree = initialize_tree(1, 0.0, seed=1)
        assert tree.leaf_count == 1
        assert tree.node_count == 1
        assert np.all(tree.node_values == 0)

    def test_rounds_up_to_power_of_two(self):
        tree = initialize_tree(5, 0.0, seed=1)
        assert tree.leaf_count == 8
        assert tree.node_count == 15

    def test_same_seed_same_noise(self):
        a = initialize_tree(16, 2.0, seed=42)
        b = initialize_tree(16, 2.0, seed=42)
        c = initialize_tree(16, 2.0, seed=43)
        np.testing.assert_array_equal(a.node_values, b.node_values)
        assert not np.array_equal(a.node_values, c.node_values)


class TestAdd:
    def test_zero_changes_nothing(self):
        tree = initialize_tree(8, 1.0, seed=3)
        before = tree.node_values.copy()
        add_to_tree(tree, 1, 0.0)
        np.testing.assert_array_equal(tree.node_values, before)
        assert tree.next_leaf == 2

    def test_noiseless_two_leaves(self):
        tree = filled_tree(2, 0.0, 1, [1.0])
        np.testing.assert_array_equal(tree.node_values, [1.0, 1.0, 0.0])

    def test_touches_one_root_path(self):
        tree = filled_tree(8, 1.0, 5, [1.0, 2.0])
        before = tree.node_values.copy()
        add_to_tree(tree, 3, 5.0)
        changed = np.flatnonzero(tree.node_values != before) + 1
        assert sorted(changed) == tree.path_node_ids(3)
        assert len(changed) == tree.height + 1

    def test_out_of_order(self):
        tree = initialize_tree(4, 0.0, seed=1)
        with pytest.raises(OutOfOrderError):
            add_to_tree(tree, 2, 1.0)

    def test_capacity(self):
        tree = filled_tree(2, 0.0, 1, [1.0, 1.0])
        assert tree.is_full
        with pytest.raises(CapacityError):
            add_to_tree(tree, 3, 1.0)


class TestHonaker:
    @pytest.mark.parametrize("kappa,weights", [(1, [1.0]), (2, [2 / 3, 1 / 3]), (3, [4 / 7, 2 / 7, 1 / 7])])
    def test_weights(self, kappa, weights):
        np.testing.assert_allclose(honaker_weights(kappa), weights)

    def test_leaf_variance_is_sigma_squared(self):
        assert honaker_variance(1, 3.0) == pytest.approx(9.0)

    def test_noiseless_estimates_are_exact(self):
        tree = filled_tree(8, 0.0, 1, [1, 2, 3, 4, 5, 6, 7, 8])
        np.testing.assert_allclose(node_estimates(tree.node_values, tree.height), tree.node_values)

    def test_empirical_node_variance(self):
        trials = 20_000
        height = 3
        first_node_at_depth = [(1 << d) - 1 for d in range(height + 1)]
        samples = np.empty((trials, height + 1))
        for seed in range(trials):
            tree = initialize_tree(8, 1.0, seed)
            samples[seed] = node_estimates(tree.node_values, height)[first_node_at_depth]
        observed = samples.var(axis=0)
        for depth in range(height + 1):
            kappa = height - depth + 1
            assert observed[depth] == pytest.approx(honaker_variance(kappa, 1.0), rel=0.05)


class TestPrefix:
    def test_noiseless_prefix(self):
        tree = filled_tree(4, 0.0, 1, [1.0, 2.0, 3.0])
        estimate = get_total_sum(tree, 3)
        assert estimate.value == pytest.approx(6.0)
        assert estimate.variance == 0
        assert estimate.step == 3

    def test_decomposition(self):
        assert decomposition_nodes(2, 3) == [2, 6]
        assert decomposition_nodes(2, 4) == [1]
        assert decomposition_nodes(3, 5) == [2, 12]
        assert decomposition_nodes(3, 7) == [2, 6, 14]

    def test_prefix_variances(self):
        assert prefix_variance(initialize_tree(2, 1.0, 1), 1) == pytest.approx(1.0)
        assert prefix_variance(initialize_tree(4, 1.0, 1), 3) == pytest.approx(5 / 3)
        assert prefix_variance(initialize_tree(4, 2.0, 1), 3) == pytest.approx(20 / 3)
        assert prefix_variance(initialize_tree(4, 0.0, 1), 2) == 0

    def test_invalid_steps(self):
        tree = filled_tree(4, 1.0, 1, [1.0])
        with pytest.raises(InvalidStepError):
            prefix_variance(tree, 0)
        with pytest.raises(InvalidStepError):
            prefix_variance(tree, 5)
        with pytest.raises(InvalidStepError):
            get_total_sum(tree, 2)

    def test_estimates_reuse_cache_until_next_add(self):
        tree = filled_tree(8, 1.0, 9, [1.0, 2.0])
        first = all_prefix_estimates(tree)
        assert all_prefix_estimates(tree) is first
        add_to_tree(tree, 3, 4.0)
        assert all_prefix_estimates(tree)[2] == pytest.approx(first[2] + 4.0)

    def test_unfilled_leaves_count_as_zero(self):
        sparse = filled_tree(8, 1.5, 11, [3.0])
        dense = filled_tree(8, 1.5, 11, [3.0, 0.0, 0.0, 0.0, 0.0])
        np.testing.assert_array_equal(all_prefix_estimates(sparse), all_prefix_estimates(dense))

    def test_error_bound_grows_with_steps(self):
        assert prefix_error_bound(64, 1.0, 0.05) > prefix_error_bound(8, 1.0, 0.05) > 0

    def test_prefix_estimates_are_unbiased_with_stated_variance(self):
        values = np.arange(1.0, 17.0)
        steps = (3, 8, 13, 16)
        trials = 20_000
        samples = np.empty((trials, len(steps)))
        for seed in range(trials):
            tree = filled_tree(16, 1.5, seed, values)
            samples[seed] = [get_total_sum(tree, i).value for i in steps]

        reference = filled_tree(16, 1.5, 0, values)
        for col, i in enumerate(steps):
            variance = prefix_variance(reference, i)
            assert samples[:, col].mean() == pytest.approx(values[:i].sum(), abs=4 * np.sqrt(variance / trials))
            assert samples[:, col].var() == pytest.approx(variance, rel=0.05)

    @pytest.mark.slow
    def test_max_prefix_error_within_bound(self):
        n, sigma, beta, trials = 64, 1.0, 0.05, 10_000
        values = np.ones(n)
        truth = np.cumsum(values)
        bound = prefix_error_bound(n, sigma, beta)
        exceeded = 0
        for seed in range(trials):
            tree = filled_tree(n, sigma, seed, values)
            if np.abs(all_prefix_estimates(tree) - truth).max() > bound:
                exceeded += 1
        assert exceeded / trials <= beta + 0.01


class TestCodec:
    def test_restores_releases(self):
        tree = filled_tree(16, 2.5, 2**100 + 7, [1.0, -2.0, 3.5])
        restored = decode_tree(encode_tree(tree))
        assert restored.seed == tree.seed
        assert restored.next_leaf == 4
        np.testing.assert_array_equal(all_prefix_estimates(restored), all_prefix_estimates(tree))

    def test_text_form(self):
        tree = filled_tree(4, 1.0, 5, [2.0])
        assert tree_from_text(tree_to_text(tree)).leaf_inputs[0] == 2.0

    def test_bad_tag(self):
        blob = bytearray(encode_tree(initialize_tree(4, 1.0, 5)))
        blob[0] = 0x7F
        with pytest.raises(RecoveryError):
            decode_tree(bytes(blob))

    def test_truncated(self):
        blob = encode_tree(filled_tree(4, 1.0, 5, [1.0, 2.0]))
        with pytest.raises(RecoveryError):
            decode_tree(blob[:-3])

    def test_not_base64(self):
        with pytest.raises(RecoveryError):
            tree_from_text("not base64!")
