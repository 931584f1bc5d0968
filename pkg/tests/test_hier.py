import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from relca.coding.hier import (HierError, HierSystem, block_offsets, decode_payload, digits,
                               gamma_constant, hier_decode, hier_derive, hier_encode, site_map,
                               verify_properties)

DEEP = dict(Q=(4, 4, 4), a=(1, 1, 1), q=(2, 2, 2), w1=2)


@pytest.fixture(scope="module")
def deep():
    return HierSystem(**DEEP)


def test_derived_numbers(deep):
    d = hier_derive(deep)
    assert d["K"] == 4
    assert d["B"] == {1: 1, 2: 4, 3: 16, 4: 64}
    assert d["o"][4] == -21 and d["op"][4] == -7
    assert list(deep.visible()) == list(range(-7, 1))
    assert block_offsets(deep.Q, deep.a) == [deep.o(k) for k in range(1, 5)]


def test_properties_hold(deep):
    assert verify_properties(deep) == []


@pytest.mark.parametrize("kw", [dict(Q=(4,), a=(2,), q=(2,)), dict(Q=(4,), a=(0,), q=(5,)),
                                dict(Q=(2,), a=(1,), q=(2,)), dict(Q=(4, 4), a=(0,), q=(2,))])
def test_bad_systems(kw):
    with pytest.raises(HierError):
        HierSystem(**kw)


def test_exhaustive_payload_readback(deep):
    V = len(deep.visible())
    rho = np.array(list(itertools.product(range(4), repeat=V)), np.int64)
    xi = hier_encode(deep, rho)
    assert np.array_equal(decode_payload(deep, xi[1]), rho)
    levels, ok = hier_decode(deep, xi[1])
    assert ok.all()
    for k in range(1, deep.K + 1):
        assert np.array_equal(levels[k], xi[k])


def test_site_map_is_injective(deep):
    sites = [site_map(deep, y) % deep.N for y in deep.visible()]
    assert len(set(sites)) == len(sites)
    assert site_map(deep, 0) == 0


@given(st.integers(-7, 0), st.integers(1, 4))
def test_site_map_splits_by_level(y, i):
    sys = HierSystem(**DEEP)
    d = digits(sys, y, sys.K)
    a = list(sys.a) + [0]
    term = (d[i - 1] - a[i - 1]) * sys.B(i)
    rest = site_map(sys, y, i + 1) if i < sys.K else 0
    assert site_map(sys, y, i) == term + rest


@given(st.integers(-7, 0))
def test_primed_site_map_is_identity_on_visible(y):
    sys = HierSystem(**DEEP)
    assert site_map(sys, y, primed=True) == y
    d = digits(sys, y, sys.K)
    assert all(0 <= v < q for v, q in zip(d, sys.q))


def test_finite_site_map_rejects_invisible(deep):
    with pytest.raises(HierError):
        site_map(deep, 1, finite=True)


def test_corrupted_colony_rejected(deep):
    xi = hier_encode(deep, np.zeros(8, np.int64))
    bad = xi[1].copy()
    bad[5] ^= 1           # Addr bit of one level-1 cell
    _, ok = hier_decode(deep, bad)
    assert not ok


def test_gamma_constant_levels_agree():
    sys = HierSystem(Q=(3, 3), a=(0, 1), q=(2, 2), w1=1)
    xi = gamma_constant(sys, 1)
    assert (decode_payload(sys, xi[1]) == 1).all()


def test_payload_must_fit(deep):
    with pytest.raises(HierError):
        hier_encode(deep, np.full(8, 4))
    with pytest.raises(HierError):
        hier_encode(deep, np.zeros(7, np.int64))


def test_derive_examples():
    d = hier_derive(HierSystem(Q=(31, 31), a=(1, 1), q=(2, 2), w1=1))
    assert d["B"][2] == 31 and d["o"][2] == -1 and d["o"][3] == -32
    zero = hier_derive(HierSystem(Q=(3, 4), a=(0, 0), q=(2, 2)))
    assert set(zero["o"].values()) == {0}
    flat = HierSystem(Q=(), a=(), q=())
    assert hier_derive(flat)["B"] == {1: 1} and flat.o(1) == 0


def test_depth_one_is_cellwise_gamma():
    flat = HierSystem(Q=(), a=(), q=(), w1=2)
    xi = hier_encode(flat, np.array([3]))
    assert xi[1].tolist() == [3]


@pytest.mark.parametrize("y", [0, -3, -7])
def test_site_map_at_zero(deep, y):
    assert site_map(deep, 0, 2) == 0 and site_map(deep, 0, primed=True) == 0
    assert site_map(deep, y, 1, primed=True) == y


def test_q_equal_Q_gives_identity_site_map():
    sys = HierSystem(Q=(3, 2), a=(1, 0), q=(3, 2))
    assert [site_map(sys, y) for y in sys.visible()] == list(sys.visible())


def test_depth_two_readback():
    sys = HierSystem(Q=(4,), a=(1,), q=(2,))
    rho = np.array([[0, 1], [1, 0], [1, 1]])
    xi = hier_encode(sys, rho)
    assert np.array_equal(decode_payload(sys, xi[1]), rho)
