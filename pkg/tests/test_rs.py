import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relca.coding import RSCode, RSError, preset
from relca.coding.gf import GF, GFError, family_modulus, is_irreducible


def test_family_modulus_is_irreducible():
    assert family_modulus(6) == 0b1001001
    assert is_irreducible(family_modulus(6))
    assert is_irreducible(family_modulus(2))
    with pytest.raises(GFError):
        family_modulus(10)


def test_reducible_modulus_rejected():
    with pytest.raises(GFError):
        GF(6, 0b1000001)    # x^6 + 1 = (x^3 + 1)^2


def test_field_axioms_spot():
    F = GF(6)
    rng = np.random.default_rng(3)
    for a, b, c in rng.integers(1, 64, size=(200, 3)):
        a, b, c = int(a), int(b), int(c)
        assert F.mul(a, F.inv(a)) == 1
        assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
        assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))
    assert F.pow(F.generator, F.order) == 1


def test_random_codewords_have_zero_syndromes():
    code = RSCode(6, 10, 3)
    rng = np.random.default_rng(0)
    for _ in range(500):
        w = code.encode(rng.integers(0, 64, code.k))
        assert code.syndromes(w) == [0] * 6


@pytest.mark.parametrize("weight", [0, 1, 2, 3])
def test_corrects_up_to_t(weight):
    code = RSCode(6, 10, 3)
    rng = np.random.default_rng(weight)
    for _ in range(100):
        info = [int(v) for v in rng.integers(0, 64, code.k)]
        w = code.encode(info)
        pos = rng.choice(10, weight, replace=False)
        for p in pos:
            w[p] ^= int(rng.integers(1, 64))
        res = code.decode(w)
        assert res.ok and res.info == info
        assert set(res.positions) == set(int(p) for p in pos)


def test_beyond_t_never_silently_wrong_here():
    code = RSCode(6, 10, 3)
    rng = np.random.default_rng(11)
    wrong = 0
    for _ in range(200):
        info = [int(v) for v in rng.integers(0, 64, code.k)]
        w = code.encode(info)
        for p in rng.choice(10, 4, replace=False):
            w[p] ^= int(rng.integers(1, 64))
        res = code.decode(w)
        if res.ok:
            # miscorrection lands on a different codeword at distance <= t
            assert res.info != info and code.is_codeword(res.codeword)
            wrong += 1
    assert wrong < 200


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 63), min_size=57, max_size=57))
def test_t3_long_roundtrip(info):
    code = RSCode(6, 63, 3)
    assert code.decode(code.encode(info)).info == info


@pytest.mark.parametrize("kw", [dict(l=6, N=64, t=1), dict(l=6, N=6, t=3), dict(l=6, N=10, t=-1)])
def test_bad_parameters(kw):
    with pytest.raises(RSError):
        RSCode(**kw)


def test_bad_input_lengths():
    code = preset("small")
    with pytest.raises(RSError):
        code.encode([0] * 5)
    with pytest.raises(RSError):
        code.syndromes([0] * 9)
    with pytest.raises(RSError):
        preset("huge")


def test_t12_preset_corrects_twelve():
    code = preset("t12")
    rng = np.random.default_rng(5)
    info = [int(v) for v in rng.integers(0, 64, code.k)]
    w = code.encode(info)
    for p in rng.choice(63, 12, replace=False):
        w[p] ^= int(rng.integers(1, 64))
    assert code.decode(w).info == info


def test_frobenius_exhaustive():
    F = GF(6)
    for a in range(64):
        for b in range(64):
            s = F.add(a, b)
            assert F.mul(s, s) == F.add(F.mul(a, a), F.mul(b, b))


def test_field_axioms_many_triples():
    F = GF(6)
    rng = np.random.default_rng(8)
    exp, log = np.array(F.exp), np.array(F.log)

    def mul(x, y):
        out = exp[(log[x] + log[y]) % F.order]
        return np.where((x == 0) | (y == 0), 0, out)

    a, b, c = rng.integers(0, 64, size=(3, 10_000))
    assert np.array_equal(mul(mul(a, b), c), mul(a, mul(b, c)))
    assert np.array_equal(mul(a, b ^ c), mul(a, b) ^ mul(a, c))
    # the table multiplication agrees with the scalar one
    for x, y in zip(a[:200], b[:200]):
        assert mul(np.array(x), np.array(y)) == F.mul(int(x), int(y))


def test_encoding_is_linear():
    code = RSCode(6, 10, 3)
    rng = np.random.default_rng(21)
    for _ in range(500):
        a, b = rng.integers(0, 64, size=(2, code.k))
        lhs = code.encode(a ^ b)
        rhs = [x ^ y for x, y in zip(code.encode(a), code.encode(b))]
        assert lhs == rhs


def test_clean_word_has_no_positions():
    code = preset("small")
    w = code.encode([5, 6, 7, 8])
    r = code.decode(w)
    assert r.ok and r.positions == () and r.info == [5, 6, 7, 8]
