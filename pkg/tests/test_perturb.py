import pytest

from dpsqlp.accountant import DpBudget
from dpsqlp.bounding import Record, SensitivityConfig
from dpsqlp.errors import ContractViolationError, InvalidParameterError, SequencingError
from dpsqlp.perturb import AggregationState, ColumnSpec, accumulate_delta, perturbation_sigma, release

VALUE = ColumnSpec("value", "sum", 5.0)
NOISELESS = {"value": 0.0}


def rec(value, key="k", user="u"):
    return Record(key=key, value=value, timestamp=0.0, user_id=user)


def state():
    return AggregationState(key="k", seed=99)


class TestColumnSpec:
    def test_parse(self):
        assert ColumnSpec.parse("clicks", 2.0) == ColumnSpec("clicks", "sum", 2.0)
        assert ColumnSpec.parse("visits:count", 2.0) == ColumnSpec("visits", "count", 1.0)

    def test_unknown_kind(self):
        with pytest.raises(InvalidParameterError):
            ColumnSpec.parse("clicks:median", 1.0)

    def test_count_needs_unit_clamp(self):
        with pytest.raises(InvalidParameterError):
            ColumnSpec("visits", "count", 2.0)


class TestAccumulate:
    def test_values_cancel(self):
        s = accumulate_delta(state(), [rec(1.0), rec(-1.0)], [VALUE])
        assert s.buffered_delta["value"] == 0

    def test_accumulates_across_batches(self):
        s = accumulate_delta(state(), [rec(1.0)], [VALUE])
        accumulate_delta(s, [rec(2.0)], [VALUE])
        assert s.buffered_delta["value"] == 3

    def test_empty_records(self):
        s = accumulate_delta(state(), [], [VALUE])
        assert s.buffered_delta == {}

    def test_count_column(self):
        visits = ColumnSpec("visits", "count")
        s = accumulate_delta(state(), [rec(4.0), rec(-2.0)], [VALUE, visits])
        assert s.buffered_delta == {"value": 2.0, "visits": 2.0}

    def test_unclamped_value(self):
        with pytest.raises(ContractViolationError):
            accumulate_delta(state(), [rec(6.0)], [VALUE])

    def test_wrong_key(self):
        with pytest.raises(ContractViolationError):
            accumulate_delta(state(), [rec(1.0, key="other")], [VALUE])


class TestRelease:
    def test_noiseless_running_sum(self):
        s = accumulate_delta(state(), [rec(5.0)], [VALUE])
        first = release(s, 2, True, NOISELESS, capacity=8)
        accumulate_delta(s, [rec(3.0)], [VALUE])
        second = release(s, 5, True, NOISELESS, capacity=8)
        assert [r.noisy_value for r in first + second] == pytest.approx([5.0, 8.0])
        assert [r.trigger_index for r in first + second] == [2, 5]
        assert s.release_count == 2
        assert s.trees["value"].next_leaf == 3

    def test_zero_delta_repeats_previous_output(self):
        s = accumulate_delta(state(), [rec(4.0)], [VALUE])
        first = release(s, 1, True, NOISELESS, capacity=8)
        again = release(s, 2, True, NOISELESS, capacity=8)
        assert again[0].noisy_value == pytest.approx(first[0].noisy_value)

    def test_buffer_cleared_after_release(self):
        s = accumulate_delta(state(), [rec(4.0)], [VALUE])
        release(s, 1, True, NOISELESS, capacity=8)
        assert s.buffered_delta["value"] == 0

    def test_requires_selection(self):
        with pytest.raises(SequencingError):
            release(state(), 1, False, NOISELESS, capacity=8)

    def test_triggers_must_increase(self):
        s = state()
        release(s, 3, True, NOISELESS, capacity=8)
        with pytest.raises(SequencingError):
            release(s, 3, True, NOISELESS, capacity=8)

    def test_noisy_release_is_reproducible(self):
        a = accumulate_delta(state(), [rec(2.0)], [VALUE])
        b = accumulate_delta(state(), [rec(2.0)], [VALUE])
        sigmas = {"value": 4.0}
        assert release(a, 1, True, sigmas, 8) == release(b, 1, True, sigmas, 8)

    def test_state_survives_serialisation(self):
        s = accumulate_delta(state(), [rec(2.0)], [VALUE])
        release(s, 1, True, {"value": 1.0}, 8)
        accumulate_delta(s, [rec(1.5)], [VALUE])
        restored = AggregationState.from_dict(s.to_dict())
        assert release(restored, 2, True, {"value": 1.0}, 8) == release(s, 2, True, {"value": 1.0}, 8)

    def test_release_dict(self):
        out = release(state(), 4, True, NOISELESS, 8)[0]
        assert out.to_dict() == {"trigger": 4, "key": "k", "column": "value", "value": 0.0}


class TestSigma:
    def test_scales_linearly_with_contributions(self):
        budget = DpBudget(3.0, 1e-9 / 3)
        base = perturbation_sigma(SensitivityConfig(1, 1.0), budget, T=100)
        assert perturbation_sigma(SensitivityConfig(32, 1.0), budget, T=100) == pytest.approx(32 * base, rel=1e-8)

    def test_columns_share_budget(self):
        budget = DpBudget(3.0, 1e-9 / 3)
        one = perturbation_sigma(SensitivityConfig(2, 1.0), budget, T=16, columns=1)
        four = perturbation_sigma(SensitivityConfig(2, 1.0), budget, T=16, columns=4)
        assert four == pytest.approx(2 * one, rel=1e-8)
