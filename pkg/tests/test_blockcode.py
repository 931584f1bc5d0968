import numpy as np
import pytest

from relca.coding.blockcode import (CodeError, addr_info_code, aggregation_code, constant_code,
                                    lift_field, overlap_free_check)
from relca.core import VAC


def test_addr_info_roundtrip():
    code = addr_info_code(8, 4, 5)
    for r in range(32):
        assert code.decode(code.encode(r)) == r


def test_addr_info_rejects_second_zero():
    code = addr_info_code(4, 3, 2)
    w = list(code.encode(1))
    w[2] = w[0]
    assert code.decode(tuple(w)) is VAC
    assert code.decode((VAC,) + tuple(w[1:])) is VAC


def test_addr_info_is_overlap_free():
    assert overlap_free_check(addr_info_code(4, 3, 2)).verdict is True


def test_constant_code_overlaps():
    v = overlap_free_check(constant_code(3, 2))
    assert v.verdict is False
    i, s = v.witness
    assert 0 < i < 3 and len(s) == 3 + i


def test_overlap_sampled_is_unknown():
    v = overlap_free_check(addr_info_code(8, 4, 8), budget=16)
    assert v.verdict == "unknown" and v.checked_words == 16


def test_aggregation_inverse():
    code = aggregation_code(3, 4)
    rng = np.random.default_rng(0)
    for r in rng.integers(0, 1 << 12, 50):
        assert code.decode(code.encode(int(r))) == r
    assert lift_field([1], 3, 4) == (1, 5, 9)


def test_parameter_errors():
    with pytest.raises(CodeError):
        addr_info_code(8, 3, 1)
    with pytest.raises(CodeError):
        addr_info_code(4, 3, 5)
