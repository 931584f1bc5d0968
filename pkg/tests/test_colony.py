import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relca.colony import (FAULT_FIELDS, ColonyError, ColonyLayout, ColonySimulator, Fault,
                          HostState, build, ca_oracle, copy_between_colonies, decode,
                          decode_state, encode, faults_csv, one_fault_per_period,
                          read_faults_csv, repair, run, run_ftol_trial)
from relca.core import VAC, builtin, random_rule

BASIC = ColonyLayout(4, ColonyLayout.min_U(4), 2)
FTOL = ColonyLayout(6, ColonyLayout.min_U(6, "ftol"), 2, "ftol")


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=5), st.sampled_from([BASIC, FTOL]))
def test_encode_decode_identity(values, lay):
    got = decode(lay, encode(lay, [values]))
    assert got.tolist() == [values]


def test_pack_unpack_roundtrip():
    st0 = encode(FTOL, [[1, 2, 3]])
    packed = st0.pack(FTOL)
    back = HostState.unpack(FTOL, packed)
    for k in st0.f:
        assert np.array_equal(back.f[k], st0.f[k])
    for k in st0.mail:
        assert np.array_equal(back.mail[k], st0.mail[k])


@pytest.mark.parametrize("lay,frag", [
    (ColonyLayout(2, 7, 3), "Colony Size"),
    (ColonyLayout(6, 57, 3, "ftol"), "3b"),
    (ColonyLayout(4, 10, 2), "Work Period"),
    (ColonyLayout(6, 56, 2, "ftol"), "Work Period"),
])
def test_bounds_rejected(lay, frag):
    with pytest.raises(ColonyError) as e:
        lay.check()
    assert frag in str(e.value)
    with pytest.raises(ColonyError):
        build(lay, builtin("identity", lay.b))


def test_min_periods():
    assert ColonyLayout.min_U(32) == 67
    assert ColonyLayout.min_U(32, "ftol") == 265


@pytest.mark.parametrize("name", ["identity", "xor", "majority", "left-shift"])
def test_named_rules_basic(name):
    tr = builtin(name, 2)
    vals = np.array([[0, 1, 2, 3, 1], [3, 3, 0, 2, 1]])
    res = run(build(BASIC, tr), vals, 4)
    assert np.array_equal(res.decoded, ca_oracle(tr, vals, 4))


def test_random_rules_basic_and_ftol():
    rng = np.random.default_rng(7)
    trs = [random_rule(2, rng) for _ in range(6)]
    vals = rng.integers(0, 4, size=(6, 3))
    want = ca_oracle(trs, vals, 3)
    for lay in (BASIC, FTOL):
        assert np.array_equal(run(build(lay, trs), vals, 3).decoded, want)


def test_xor_one_bit_example():
    lay = ColonyLayout(3, 9, 1)
    res = run(build(lay, builtin("xor")), [[1, 0, 0, 0]], 2)
    assert res.decoded[:, 0].tolist() == [[1, 0, 0, 0], [0, 1, 0, 1], [0, 0, 0, 0]]


def test_age_stays_coherent():
    res = run(build(BASIC, builtin("xor", 2)), [[1, 2, 3]], 2, keep_frames=True)
    fm = BASIC.fieldmap
    for t, frame in enumerate(res.frames, start=1):
        ages = {fm.get(int(s), "Age") for s in frame[0]}
        assert ages == {t % BASIC.U}


def test_ftol_restores_a_bad_third():
    tr = random_rule(2, np.random.default_rng(1))
    st0 = encode(FTOL, [[2, 1, 3]])
    sim = build(FTOL, tr)
    # corrupt third 1 of colony 1 and rerun from the corrupted state
    x = 1 * FTOL.Q + FTOL.T
    st0.f["Info"][0, x] ^= 1
    assert decode(FTOL, st0).tolist() == [[2, 1, 3]]
    tables = np.array([[tr(a, b, c) for a in range(4) for b in range(4) for c in range(4)]])
    cur = st0
    for _ in range(FTOL.U):
        cur = sim.step(cur, tables)
    info = cur.f["Info"].reshape(3, FTOL.Q)
    want = ca_oracle(tr, [[2, 1, 3]], 1)[1, 0]
    for c in range(3):
        thirds = [sum(int(info[c, j * FTOL.T + i]) << i for i in range(2)) for j in range(3)]
        assert thirds == [want[c]] * 3


def test_decode_state_cases():
    fresh = encode(FTOL, [[3]]).pack(FTOL)[0]
    assert decode_state(FTOL, fresh) == 3
    fm = FTOL.fieldmap
    one_bad = fresh.copy()
    one_bad[0] = fm.set(int(one_bad[0]), "Info", 0)
    assert decode_state(FTOL, one_bad) == 3
    broken = encode(BASIC, [[1]]).pack(BASIC)[0]
    broken[2] = BASIC.fieldmap.set(int(broken[2]), "Addr", 0)
    assert decode_state(BASIC, broken) is VAC
    with pytest.raises(ColonyError):
        decode_state(BASIC, broken[:3])


def test_ftol_decoder_tolerates_one_bad_addr():
    snap = encode(FTOL, [[2]]).pack(FTOL)[0]
    snap[4] = FTOL.fieldmap.set(int(snap[4]), "Addr", 1)
    assert decode_state(FTOL, snap) == 2


def test_repair_single_fault():
    Q, U = 6, 57
    addr = np.tile(np.arange(Q), 3)[None, :]
    age = np.full((1, 18), 5)
    bad_a, bad_g = addr.copy(), age.copy()
    bad_a[0, 7] = 4
    bad_g[0, 11] = 0
    a, g = repair(bad_a, bad_g, Q, U)
    assert np.array_equal(a, addr) and np.array_equal(g, age)


def test_copy_within_colony():
    Q = 6
    src = np.arange(18) % 2
    src[[1, 2, 7, 8, 13, 14]] = [1, 0, 0, 1, 1, 1]
    res = copy_between_colonies(0, src, 1, 3, 2, Q)
    for c in range(3):
        assert res.target[c * Q + 3:c * Q + 5].tolist() == src[c * Q + 1:c * Q + 3].tolist()
    assert res.target[[0, 1, 2, 5]].tolist() == [0, 0, 0, 0]


def test_copy_across_boundary_from_left():
    Q = 4
    src = np.array([1, 1, 0, 0, 0, 1, 0, 1, 1, 0, 1, 1])
    res = copy_between_colonies(-1, src, 0, 0, 4, Q)
    assert res.target.tolist() == np.roll(src, Q).tolist()
    posts = [e for e in res.log if e[0] == "post"]
    lands = [e for e in res.log if e[0] == "land"]
    assert len(posts) == len(lands) == 12
    assert sorted(e[4:] for e in posts) == sorted(e[4:] for e in lands)


def test_copy_zero_length_is_noop():
    tgt = np.ones(12, np.int64)
    res = copy_between_colonies(1, np.zeros(12), 0, 0, 0, 4, target=tgt)
    assert res.target.tolist() == tgt.tolist() and res.log == [] and res.steps == 0
    with pytest.raises(ColonyError):
        copy_between_colonies(1, np.zeros(12), 3, 0, 2, 4)


def test_mail_conservation_one_period():
    sim = build(BASIC, builtin("xor", 2))
    sim.log = []
    run(sim, [[1, 2, 3]], 1)
    posts = [e for e in sim.log if e[0] == "post"]
    lands = [e for e in sim.log if e[0] == "land"]
    assert len(posts) == len(lands) == 2 * 12
    # every landing carries the Info of a matching post with the same Fromaddr and Fromnb
    assert sorted((e[4], e[5], e[6]) for e in posts) == sorted((e[4], e[5], e[6]) for e in lands)


def test_info_fault_in_phase_one_each_period():
    tr = random_rule(2, np.random.default_rng(4))
    sim = build(FTOL, tr)
    faults = [Fault(p, c, (p + c) % FTOL.Q, "Info", -1, FTOL.phase_base(1) + 3)
              for p in range(3) for c in range(3)]
    v = run_ftol_trial(sim, [[0, 1, 3]], 3, faults)
    assert v.passed and v.in_model.all()
    assert v.corrupted_thirds.max() <= 1


def test_random_single_faults_are_tolerated():
    rng = np.random.default_rng(12)
    tr = random_rule(2, rng)
    sim = build(FTOL, [tr] * 10)
    vals = rng.integers(0, 4, size=(10, 3))
    faults = [f for b in range(10) for f in one_fault_per_period(FTOL, 3, 3, rng, batch=b)]
    v = run_ftol_trial(sim, vals, 3, faults)
    assert v.in_model.all()
    assert v.passed, v.first_divergence


def test_two_faults_flagged_out_of_model():
    sim = build(FTOL, builtin("identity", 2))
    # Both hit at the period boundary, before the next Refresh posts the copies.
    faults = [Fault(0, 1, 0, "Info", -1, FTOL.U), Fault(0, 1, FTOL.T, "Info", -1, FTOL.U)]
    v = run_ftol_trial(sim, [[1, 2, 3]], 2, faults)
    assert not v.in_model.any()
    assert not v.passed


def test_basic_variant_breaks_under_one_fault():
    sim = build(BASIC, builtin("identity", 2))
    res = run(sim, [[1, 2, 3]], 1, [Fault(0, 1, 0, "Info", -1, BASIC.U)])
    assert res.decoded[-1, 0].tolist() == [1, 3, 3]


def test_faults_csv_roundtrip():
    rng = np.random.default_rng(2)
    faults = one_fault_per_period(FTOL, 2, 3, rng, batch=4)
    text = faults_csv(faults, with_trial=True)
    assert text.splitlines()[0] == "period,colony,cell,field,value,step,trial"
    assert read_faults_csv(text) == faults
    assert read_faults_csv(faults_csv(faults), batch=4) == faults
    assert all(f.field in FAULT_FIELDS for f in faults)
    with pytest.raises(ColonyError):
        read_faults_csv("period,colony,cell,field,value,step\n0,0,0,Mail,1,1\n")


def test_empty_schedule_passes():
    v = run_ftol_trial(build(FTOL, builtin("xor", 2)), [[1, 2, 3]], 2, [])
    assert v.passed and v.first_divergence is None and (v.corrupted_thirds == 0).all()


def test_basic_ramp_broken_at_cell_zero():
    snap = encode(BASIC, [[2]]).pack(BASIC)[0]
    snap[0] = BASIC.fieldmap.set(int(snap[0]), "Addr", 1)
    assert decode_state(BASIC, snap) is VAC


def test_xor_q32_five_periods():
    lay = ColonyLayout(32, ColonyLayout.min_U(32), 2)
    tr = builtin("xor", 2)
    vals = [[1, 2, 3]]
    assert np.array_equal(run(build(lay, tr), vals, 5).decoded, ca_oracle(tr, vals, 5))


def test_identity_constant():
    res = run(build(BASIC, builtin("identity", 2)), [[3, 0, 2]], 3)
    assert (res.decoded == [[3, 0, 2]]).all()
