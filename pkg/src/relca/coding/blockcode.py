"""Block codes between a big cell and a colony of ``Q`` small cells."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import VAC, CapacityOverflow, FieldMap, join_block, split_block


class CodeError(ValueError):
    code = "code-parameters"


@dataclass(frozen=True)
class BlockCode:
    """An encode/decode pair; ``decode`` returns ``VAC`` for rejected words."""

    Q: int
    inner_capacity: int
    outer_capacity: int
    encode: Callable
    decode: Callable
    name: str = "code"
    fieldmap: FieldMap | None = None

    def accepts(self, word) -> bool:
        return self.decode(tuple(word)) is not VAC

    def outer_states(self):
        return range(1 << self.outer_capacity)


def addr_bits(Q: int) -> int:
    return max(1, math.ceil(math.log2(Q)))


def addr_info_code(Q: int, capacity: int, payload: int) -> BlockCode:
    """Cell ``i`` carries ``Addr = i`` and payload bit ``i`` in ``Info`` (cells ``i < payload``).

    With ``a = ceil(log2 Q)`` the Addr field is bits ``[0, a-1]`` and Info is
    the top bit ``capacity - 1``; all other bits are zero.  A word is
    accepted iff cell 0 is the only cell with ``Addr = 0``.
    """
    a = addr_bits(Q)
    if a + 1 > capacity:
        raise CodeError(f"capacity {capacity} cannot hold {a} Addr bits and an Info bit")
    if payload > Q:
        raise CodeError("one payload bit per cell: payload must not exceed Q")
    fm = FieldMap({"Addr": range(a), "Info": [capacity - 1]}, capacity)

    def encode(r: int):
        if not 0 <= r < (1 << payload):
            raise CodeError("payload out of range")
        return tuple(fm.pack(Addr=i, Info=(r >> i) & 1 if i < payload else 0) for i in range(Q))

    def decode(word):
        if len(word) != Q or any(s is VAC for s in word):
            return VAC
        if fm.get(word[0], "Addr") != 0 or any(fm.get(s, "Addr") == 0 for s in word[1:]):
            return VAC
        return sum(fm.get(word[i], "Info") << i for i in range(payload))

    return BlockCode(Q, capacity, payload, encode, decode, f"addr-info({Q},{capacity},{payload})",
                     fm)


def aggregation_code(Q: int, capacity: int) -> BlockCode:
    """Concatenation of ``Q`` states (cell 0 in the low bits); the exact inverse pair."""
    if Q * capacity > 64:
        raise CapacityOverflow(f"aggregate of {Q} x {capacity} bits exceeds 64")

    def encode(r: int):
        return tuple(split_block(r, Q, capacity))

    def decode(word):
        if len(word) != Q or any(s is VAC for s in word):
            return VAC
        return join_block(word, capacity)

    return BlockCode(Q, capacity, Q * capacity, encode, decode, f"aggregation({Q})")


def lift_field(indices, Q: int, capacity: int) -> tuple[int, ...]:
    """Bit indices of a field ``F`` in the aggregated state: the union of ``F + i*capacity``."""
    return tuple(sorted(i + k * capacity for k in range(Q) for i in indices))


@dataclass
class OverlapVerdict:
    verdict: object           # True, False or "unknown"
    witness: tuple | None = None
    checked_words: int = 0
    total_words: int = 0


def overlap_free_check(code: BlockCode, budget: int = 1 << 16, seed: int = 0) -> OverlapVerdict:
    """Look for two accepted words overlapping at an offset ``0 < i < Q``.

    The candidate accepted words are the codewords ``encode(r)``.  When all
    of them fit in ``budget`` the search is exhaustive; otherwise a random
    sample is searched and the verdict is ``"unknown"`` unless a
    counterexample turns up.  A witness is a string of length ``Q + i``
    whose windows at 0 and at ``i`` both decode.
    """
    Q = code.Q
    total = 1 << code.outer_capacity
    if total <= budget:
        words = [tuple(code.encode(r)) for r in range(total)]
        exhaustive = True
    else:
        rng = np.random.default_rng(seed)
        words = [tuple(code.encode(int(r))) for r in rng.integers(0, total, size=budget)]
        exhaustive = False
    for i in range(1, Q):
        prefixes = {}
        for w in words:
            prefixes.setdefault(w[:Q - i], w)
        for w in words:
            other = prefixes.get(w[i:])
            if other is None:
                continue
            s = w + other[Q - i:]
            if code.accepts(s[:Q]) and code.accepts(s[i:i + Q]):
                return OverlapVerdict(False, (i, s), len(words), total)
    return OverlapVerdict(True if exhaustive else "unknown", None, len(words), total)


def constant_code(Q: int, capacity: int) -> BlockCode:
    """A deliberately bad code: every cell holds the state, any constant word is accepted."""

    def encode(r):
        return (r,) * Q

    def decode(word):
        if len(word) != Q or any(s is VAC for s in word) or len(set(word)) != 1:
            return VAC
        return word[0]

    return BlockCode(Q, capacity, capacity, encode, decode, "constant")

