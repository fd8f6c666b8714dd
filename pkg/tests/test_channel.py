import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from winp.channel import (
    RateTrace,
    RbAllocation,
    generate_rate_trace,
    replay_delivery,
    slot_mean_rates,
    suffix_mean_predictor,
)
from winp.errors import ConfigError

from oracles import exhaustive_allocations, replay_arrivals, suffix_means


def test_degenerate_rate_range():
    trace = generate_rate_trace(2, 3, 5, (5000, 5000), 1.0, seed=1)
    assert np.all(trace.rates == 5000)
    assert np.all(trace.rb_bits() == 5000)


def test_reference_trace_mean():
    trace = generate_rate_trace(6, 16, 8000, (1000, 10000), 1.0, seed=0)
    assert trace.shape == (6, 16, 8000)
    assert abs(trace.rates.mean() / 5500 - 1) < 0.02
    assert trace.rates.min() >= 1000 and trace.rates.max() <= 10000


def test_trace_determinism_and_prefix():
    a = generate_rate_trace(3, 8, 50, seed=9)
    b = generate_rate_trace(3, 8, 50, seed=9)
    assert np.array_equal(a.rates, b.rates)
    for F in (1, 4, 8):
        small = generate_rate_trace(3, F, 50, seed=9)
        assert np.array_equal(small.rates, a.rates[:, :F])
        assert np.array_equal(a.prefix(F).rates, small.rates)


def test_trace_rejects_bad_range():
    with pytest.raises(ConfigError):
        generate_rate_trace(1, 1, 1, (0, 10))
    with pytest.raises(ConfigError):
        generate_rate_trace(1, 1, 1, (10, 5))


@pytest.mark.parametrize(
    "rates, mean",
    [([4000, 6000], 5000), ([3000], 3000), ([1000, 2000, 3000, 4000], 2500)],
)
def test_slot_mean(rates, mean):
    trace = RateTrace(np.array(rates, dtype=float).reshape(1, -1, 1))
    assert slot_mean_rates(trace)[0, 0] == mean


def test_suffix_mean_examples():
    np.testing.assert_array_equal(suffix_mean_predictor(np.full((1, 4), 5000.0)), 5000.0)
    np.testing.assert_allclose(suffix_mean_predictor(np.array([[2000.0, 4000.0, 6000.0]])), [[4000, 5000, 6000]])
    np.testing.assert_array_equal(suffix_mean_predictor(np.zeros((2, 3)), eps=1e-6), 1e-6)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(1, 30), st.integers(0, 10_000))
def test_suffix_mean_matches_loop_oracle(K, T, seed):
    u = np.random.default_rng(seed).uniform(0, 10_000, (K, T))
    got = suffix_mean_predictor(u, 1e-6)
    np.testing.assert_allclose(got, suffix_means(u, 1e-6), rtol=1e-12)
    assert np.all(got >= 1e-6)
    np.testing.assert_allclose(got[:, -1], np.maximum(u[:, -1], 1e-6))


def _one_rb_trace(rates_per_slot):
    return RateTrace(np.array(rates_per_slot, dtype=float).reshape(1, 1, -1), 1.0)


def test_replay_constant_rate():
    trace = _one_rb_trace([2000] * 6)
    alloc = RbAllocation(np.zeros((1, 6), dtype=int), 1)
    res = replay_delivery(trace, alloc, [10_000])
    np.testing.assert_array_equal(res.cumulative_bits[0, :5], [2000, 4000, 6000, 8000, 10000])
    assert res.arrival_slot == [4]
    assert res.release_ms == [5.0]


def test_replay_overshoot_and_infeasible():
    trace = _one_rb_trace([2000, 2000])
    res = replay_delivery(trace, RbAllocation(np.zeros((1, 2), dtype=int), 1), [3000])
    assert res.arrival_slot == [1] and res.release_ms == [2.0]

    trace2 = RateTrace(np.full((2, 1, 3), 1000.0))
    res = replay_delivery(trace2, RbAllocation(np.zeros((1, 3), dtype=int), 2), [500, 500])
    assert res.arrival_slot == [0, None]
    assert not res.feasible and res.unfinished == [1]


def test_allocation_exclusivity_and_roundtrips():
    x = np.zeros((2, 2, 3), dtype=int)
    x[0, 0, 0] = x[1, 0, 0] = 1
    with pytest.raises(ConfigError):
        RbAllocation.from_binary(x)
    x[1, 0, 0] = 0
    x[1, 1, 2] = 1
    alloc = RbAllocation.from_binary(x)
    assert np.array_equal(alloc.x(), x)
    assert alloc.assigned() == [(0, 0, 0), (2, 1, 1)]
    assert np.array_equal(RbAllocation.from_csv(alloc.to_csv("meta"), 2, 2, 3).owner, alloc.owner)
    assert np.array_equal(RbAllocation.from_csv(alloc.to_dense_csv(), 2, 2, 3).owner, alloc.owner)
    assert np.array_equal(RbAllocation.from_json(alloc.to_json()).owner, alloc.owner)
    assert alloc.to_dense_csv().splitlines()[0] == "k,f,t,value"


def test_trace_serialization_roundtrip():
    trace = generate_rate_trace(2, 2, 3, seed=4)
    assert trace.to_csv().splitlines()[0] == "k,f,t,value"
    assert np.array_equal(RateTrace.from_csv(trace.to_csv()).rates, trace.rates)
    assert np.array_equal(RateTrace.from_json(trace.to_json()).rates, trace.rates)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 6), st.integers(0, 10_000))
def test_replay_matches_rb_walk_and_conserves_bits(K, F, T, seed):
    rng = np.random.default_rng(seed)
    trace = generate_rate_trace(K, F, T, seed=seed)
    owner = rng.integers(-1, K, size=(F, T))
    need = rng.uniform(1000, 40_000, K)
    res = replay_delivery(trace, RbAllocation(owner, K), need)
    arrivals, finals = replay_arrivals(trace.rates, owner, 1.0, need)
    assert res.arrival_slot == arrivals
    np.testing.assert_allclose(res.cumulative_bits[:, -1], finals, rtol=1e-12)
    assert np.all(np.diff(res.cumulative_bits, axis=1) >= 0)
    x = RbAllocation(owner, K).x()
    np.testing.assert_allclose(res.cumulative_bits[:, -1], (x * trace.rates).sum(axis=(1, 2)), rtol=1e-12)
    for k, a in enumerate(res.arrival_slot):
        if a is not None:
            assert res.cumulative_bits[k, a] >= need[k]
            assert a == 0 or res.cumulative_bits[k, a - 1] < need[k]
            assert res.release_ms[k] == (a + 1) * 1.0


def test_extra_rb_never_delays_arrival_exhaustive():
    K, F, T = 2, 1, 3
    trace = generate_rate_trace(K, F, T, (1000, 3000), seed=5)
    need = [2500.0, 3000.0]
    for owner in exhaustive_allocations(K, F, T):
        base = replay_delivery(trace, RbAllocation(owner, K), need).arrival_slot
        for f, t in zip(*np.nonzero(owner == -1)):
            more = owner.copy()
            more[f, t] = 0
            after = replay_delivery(trace, RbAllocation(more, K), need).arrival_slot
            if base[0] is not None:
                assert after[0] is not None and after[0] <= base[0]
            assert after[1] == base[1]
