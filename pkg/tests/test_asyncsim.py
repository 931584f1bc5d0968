import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relca.asyncsim import (AsyncError, check_invariant_histories, cur_of, is_commutative,
                            lift_marching, run_aca, run_ca, run_variable_period,
                            schedule_all, schedule_from_lists, schedule_random, schedules_csv)
from relca.core import builtin, random_rule


@pytest.fixture(scope="module")
def lift():
    return lift_marching(random_rule(1, np.random.default_rng(0)), 3)


def test_lift_is_commutative_exhaustive(lift):
    v = is_commutative(lift, ring=5)
    assert v.commutative and v.exhaustive and v.checked == 12 ** 5 == 248832


def test_plain_xor_is_not_commutative():
    v = is_commutative(builtin("xor"), ring=4)
    assert not v.commutative
    xi, x, y = v.witness
    assert abs(x - y) in (1, 3)


def test_exhaustive_budget():
    with pytest.raises(AsyncError):
        is_commutative(lift_marching(builtin("xor"), 3), ring=8)
    v = is_commutative(lift_marching(builtin("xor"), 3), ring=8, mode="sampled", samples=500)
    assert v.commutative and not v.exhaustive


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.1, 0.9))
def test_tau_is_lipschitz(seed, p):
    rng = np.random.default_rng(seed)
    lift = lift_marching(random_rule(1, rng), 3)
    xi = rng.integers(0, 2, 12)
    r = run_aca(lift, xi, schedule_random(12, 60, p, rng))
    tau = r.tau[:, 0]
    assert (np.abs(tau - np.roll(tau, -1, -1)) <= 1).all()


def test_schedule_all_moves_every_cell(lift):
    r = run_aca(lift, np.array([1, 0, 1, 1, 0]), schedule_all(5, 7))
    assert (r.tau[-1, 0] == 7).all()


def test_lockstep_equals_synchronous(lift):
    xi = np.array([1, 0, 0, 1, 1, 0, 1, 0])
    r = run_aca(lift, xi, schedule_all(8, 20))
    assert np.array_equal(cur_of(lift, r.frames[:, 0]), run_ca(lift.tr2, xi, 20))


def test_single_cell_ring():
    lift = lift_marching(builtin("xor"), 3)
    r = run_aca(lift, np.array([1]), schedule_all(1, 4))
    assert cur_of(lift, r.frames[:, 0, 0]).tolist() == [1, 0, 0, 0, 0]


def test_invariant_histories(lift):
    rng = np.random.default_rng(9)
    xi = rng.integers(0, 2, 16)
    v = check_invariant_histories(lift, xi, schedule_random(16, 100, 0.5, rng, batch=200))
    assert v.holds and v.checked_schedules == 200


def test_invariant_histories_fail_without_lift():
    rng = np.random.default_rng(1)
    v = check_invariant_histories(builtin("xor"), rng.integers(0, 2, 8),
                                  schedule_random(8, 30, 0.5, rng, batch=50))
    assert not v.holds and v.counterexample["eta"] != v.counterexample["zeta"]


def test_schedule_from_lists_and_csv():
    s = schedule_from_lists(4, [{0, 2}, set(), {3}])
    assert schedules_csv(s) == "t,sites\n0,0 2\n1,\n2,3\n"
    with pytest.raises(AsyncError):
        schedule_from_lists(4, [{4}])


@pytest.mark.parametrize("sampler", ["uniform", "exponential"])
def test_variable_period_decodes_to_ca(sampler):
    rng = np.random.default_rng(3)
    tr2 = random_rule(1, rng)
    lift = lift_marching(tr2, 3)
    xi = rng.integers(0, 2, 8)
    vp = run_variable_period(lift, xi, 0.5, 1.0, horizon=1e9, rng=rng, steps=50, sampler=sampler)
    assert vp.complete_steps == 50 and not vp.partial
    assert np.array_equal(vp.decoded, run_ca(tr2, xi, 50))


def test_variable_period_partial_horizon():
    lift = lift_marching(builtin("xor"), 3)
    vp = run_variable_period(lift, np.array([1, 0, 0]), 1.0, 1.0, horizon=5.5,
                             rng=np.random.default_rng(0), steps=50)
    assert vp.partial and vp.complete_steps < 50
    with pytest.raises(AsyncError):
        run_variable_period(lift, np.array([1]), 1.0, 0.5, 10, np.random.default_rng(0))


def test_lift_needs_three_ages():
    with pytest.raises(AsyncError):
        lift_marching(builtin("xor"), 2)


def test_lagging_neighbor_prev_is_used():
    lift = lift_marching(builtin("xor"), 3)
    # left neighbor already at Age 1 with Cur 0, Prev 1: the Age-0 cell must read Prev.
    left = lift.pack(0, 1, 1)
    mid = lift.pack(0, 0, 0)
    right = lift.pack(0, 0, 0)
    assert lift(left, mid, right) == lift.pack(1, 0, 1)


def test_identity_zero_start_constant_under_any_schedule():
    lift = lift_marching(builtin("identity"), 3)
    rng = np.random.default_rng(0)
    r = run_aca(lift, np.zeros(7, np.int64), schedule_random(7, 30, 0.4, rng, batch=5))
    assert (cur_of(lift, r.frames) == 0).all()


def test_identity_is_vacuously_commutative():
    v = is_commutative(builtin("identity"), ring=5)
    assert v.commutative and v.witness is None


def test_empty_schedule_freezes():
    lift = lift_marching(builtin("xor"), 3)
    xi = np.array([1, 0, 1, 1])
    r = run_aca(lift, xi, np.zeros((10, 1, 4), bool))
    assert (r.tau == 0).all() and (r.frames == xi).all()


def test_xor_variable_period_many_seeds():
    tr2 = builtin("xor")
    lift = lift_marching(tr2, 3)
    xi = np.array([1, 0, 0, 1, 0, 1, 1, 0])
    ref = run_ca(tr2, xi, 50)
    for s in range(20):
        vp = run_variable_period(lift, xi, 0.5, 1.0, 1e9, np.random.default_rng(s), steps=50)
        assert np.array_equal(vp.decoded, ref)


def test_lockstep_variable_period():
    tr2 = random_rule(1, np.random.default_rng(6))
    lift = lift_marching(tr2, 3)
    xi = np.array([0, 1, 1, 0, 1])
    vp = run_variable_period(lift, xi, 1.0, 1.0, 1e9, np.random.default_rng(0), steps=10)
    assert np.array_equal(vp.decoded, run_ca(tr2, xi, 10))
    assert all(t == list(range(11)) for t in map(lambda ts: [int(v) for v in ts], vp.switch_times))
