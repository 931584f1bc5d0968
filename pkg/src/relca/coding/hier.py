"""Hierarchical block codes with a shared field, and their site map.

Conventions
-----------
Layers are numbered ``k = 1..L``; layer ``k`` encodes one level-``k+1``
cell into a colony of ``Q[k]`` level-``k`` cells.  Levels run ``1..K``
with ``K = L + 1``.  On a ring of ``N`` sites (``N`` a multiple of
``B_K``), the level-``k`` cells sit at sites ``o_k + y*B_k`` and are stored
in arrays indexed by ``y`` (``0 <= y < N / B_k``).

A level-``k`` state (``k < K``) has three fields: ``Addr`` (address within
the colony), ``F`` (the shared field, ``w1 * B'_k`` bits) and ``Rest``
(which, in cell ``Q_k - 1`` only, keeps the parent's non-``F`` bits).  The
top level has ``F`` alone.  In the layer-``k`` code, cell ``j`` gets slice
``j mod q_k`` of the parent's ``F``, so ``F`` over ``[0, q_k-1]`` is
identified with the parent's ``F`` and the remaining cells repeat it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..core import VAC


class HierError(ValueError):
    code = "hier-property"


def _bits(n: int) -> int:
    return max(1, math.ceil(math.log2(n))) if n > 1 else 1


@dataclass(frozen=True)
class Level:
    addr: int   # width of Addr (0 on the top level)
    w: int      # width of F
    rest: int   # width of Rest

    @property
    def capacity(self) -> int:
        return self.addr + self.w + self.rest


@dataclass(frozen=True)
class HierSystem:
    Q: tuple
    a: tuple
    q: tuple
    w1: int = 1
    N: int | None = None
    levels: tuple = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        Q, a, q = tuple(self.Q), tuple(self.a), tuple(self.q)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "q", q)
        if not len(Q) == len(a) == len(q):
            raise HierError("Q, a and q must have one entry per layer")
        for k, (Qk, ak, qk) in enumerate(zip(Q, a, q), start=1):
            if not 2 <= qk <= Qk:
                raise HierError(f"layer {k}: need 2 <= q_k <= Q_k")
            if not 0 <= ak < qk:
                raise HierError(f"layer {k}: need 0 <= a_k < q_k so that X(0) = 0")
            if ak == Qk - 1:
                raise HierError(f"layer {k}: a_k = Q_k - 1 collides with the Rest carrier cell")
        if self.w1 < 1:
            raise HierError("w1 must be positive")
        N = self.B(self.K) if self.N is None else self.N
        if N % self.B(self.K):
            raise HierError(f"N = {N} must be a multiple of B_K = {self.B(self.K)}")
        object.__setattr__(self, "N", N)
        lv = [None] * (self.K + 1)
        lv[self.K] = Level(0, self.w1 * self.Bp(self.K), 0)
        for k in range(self.K - 1, 0, -1):
            up = lv[k + 1]
            lv[k] = Level(_bits(Q[k - 1]), self.w1 * self.Bp(k), up.addr + up.rest)
        if any(l.capacity > 62 for l in lv[1:]):
            raise HierError("level capacity exceeds 62 bits")
        object.__setattr__(self, "levels", tuple(lv))

    # -- derived numbers -------------------------------------------------
    @property
    def L(self) -> int:
        return len(self.Q)

    @property
    def K(self) -> int:
        return self.L + 1

    def B(self, k: int) -> int:
        return math.prod(self.Q[:k - 1])

    def Bp(self, k: int) -> int:
        return math.prod(self.q[:k - 1])

    def o(self, k: int) -> int:
        return -sum(self.a[i - 1] * self.B(i) for i in range(1, k))

    def op(self, k: int) -> int:
        return -sum(self.a[i - 1] * self.Bp(i) for i in range(1, k))

    def n(self, k: int) -> int:
        """Number of level-k cells on the ring."""
        return self.N // self.B(k)

    def K_of_N(self, N: int | None = None) -> int:
        """``sup{k : B_k < N} + 1`` over the levels this system defines."""
        N = self.N if N is None else N
        return max((k for k in range(1, self.K + 1) if self.B(k) < N), default=0) + 1

    def visible(self) -> range:
        K = self.K
        return range(self.op(K), self.op(K) + self.N * self.Bp(K) // self.B(K))

    # -- state packing ---------------------------------------------------
    def pack(self, k, addr, F, rest):
        lv = self.levels[k]
        return np.asarray(addr, np.int64) | (np.asarray(F, np.int64) << lv.addr) | \
            (np.asarray(rest, np.int64) << (lv.addr + lv.w))

    def unpack(self, k, s):
        lv = self.levels[k]
        s = np.asarray(s, np.int64)
        return (s & ((1 << lv.addr) - 1), (s >> lv.addr) & ((1 << lv.w) - 1),
                (s >> (lv.addr + lv.w)) & ((1 << lv.rest) - 1))

    def gamma(self, k: int, r):
        """Control map: the level-k state whose F is ``r`` at the controlled address."""
        return self.pack(k, self.a[k - 1] if k < self.K else 0, r, 0)

    # -- the layer codes -------------------------------------------------
    def phi_encode(self, k: int, s):
        """Layer-k encoding of level-(k+1) states ``s`` (any shape) -> shape + (Q_k,)."""
        Qk, qk = self.Q[k - 1], self.q[k - 1]
        w = self.levels[k].w
        up = self.levels[k + 1]
        s = np.asarray(s, np.int64)
        addr_up, F_up, rest_up = self.unpack(k + 1, s)
        carry = addr_up | (rest_up << up.addr)
        out = np.empty(s.shape + (Qk,), np.int64)
        for j in range(Qk):
            Fj = (F_up >> ((j % qk) * w)) & ((1 << w) - 1)
            out[..., j] = self.pack(k, j, Fj, carry if j == Qk - 1 else 0)
        return out

    def phi_decode(self, k: int, word):
        """Inverse of ``phi_encode``; returns (states, accepted mask)."""
        Qk, qk = self.Q[k - 1], self.q[k - 1]
        w = self.levels[k].w
        up = self.levels[k + 1]
        word = np.asarray(word, np.int64)
        addr, F, rest = self.unpack(k, word)
        ok = np.ones(word.shape[:-1], bool)
        for j in range(Qk):
            ok &= addr[..., j] == j
            if j >= qk:
                ok &= F[..., j] == F[..., j % qk]
            if j != Qk - 1:
                ok &= rest[..., j] == 0
        F_up = np.zeros(word.shape[:-1], np.int64)
        for j in range(qk):
            F_up |= F[..., j] << (j * w)
        carry = rest[..., Qk - 1]
        s = self.pack(k + 1, carry & ((1 << up.addr) - 1), F_up, carry >> up.addr)
        return s, ok

    # -- configurations --------------------------------------------------
    def child_index(self, k: int) -> np.ndarray:
        """``idx[y, j]``: level-k index of cell ``j`` of the colony of level-(k+1) cell ``y``."""
        Qk, ak = self.Q[k - 1], self.a[k - 1]
        y = np.arange(self.n(k + 1))[:, None]
        return (y * Qk + np.arange(Qk)[None, :] - ak) % self.n(k)

    def encode_down(self, k: int, xi_up: np.ndarray) -> np.ndarray:
        """Apply the layer-k code to a whole level-(k+1) configuration (batch axis first)."""
        xi_up = np.asarray(xi_up, np.int64)
        words = self.phi_encode(k, xi_up)
        out = np.empty(xi_up.shape[:-1] + (self.n(k),), np.int64)
        out[..., self.child_index(k)] = words
        return out

    def decode_up(self, k: int, xi: np.ndarray):
        xi = np.asarray(xi, np.int64)
        return self.phi_decode(k, xi[..., self.child_index(k)])

    def aggregate(self, rho: np.ndarray, k: int) -> np.ndarray:
        """``rho^k`` on the blocks of the visible payload (index ``z`` <-> ``C'_k``-aligned block)."""
        rho = np.asarray(rho, np.int64)
        Bp = self.Bp(k)
        V = rho.shape[-1]
        blocks = rho.reshape(rho.shape[:-1] + (V // Bp, Bp))
        out = np.zeros(blocks.shape[:-1], np.int64)
        for i in range(Bp):
            out |= blocks[..., i] << (i * self.w1)
        return out

    def top_config(self, rho) -> np.ndarray:
        """``xi^K_K``: the top level holds ``gamma_K(rho^K(C'_K(y)))`` at ``C_K(y)``."""
        rho = np.asarray(rho, np.int64)
        if rho.shape[-1] != len(self.visible()):
            raise HierError(f"payload must cover the {len(self.visible())} visible sites")
        if (rho < 0).any() or (rho >> self.w1).any():
            raise HierError("payload symbol does not fit F^1")
        return self.gamma(self.K, self.aggregate(rho, self.K))

    def site_of(self, k: int, y_index) -> np.ndarray:
        return (self.o(k) + np.asarray(y_index) * self.B(k)) % self.N


def hier_derive(sys: HierSystem) -> dict:
    K = sys.K
    return {
        "K": K,
        "B": {k: sys.B(k) for k in range(1, K + 1)},
        "Bp": {k: sys.Bp(k) for k in range(1, K + 1)},
        "o": {k: sys.o(k) for k in range(1, K + 1)},
        "op": {k: sys.op(k) for k in range(1, K + 1)},
    }


def block_offsets(Q, a) -> list[int]:
    """``o_1 .. o_{len(Q)+1}`` for a block frame, straight from the definition."""
    B, out, acc = 1, [0], 0
    for Qk, ak in zip(Q, a):
        acc -= ak * B
        B *= Qk
        out.append(acc)
    return out


def digits(sys: HierSystem, y: int, k: int) -> list[int]:
    """``y'_1..y'_k`` with ``y = sum (y'_m - a_m) B'_m`` and ``0 <= y'_m < q_m`` for ``m < k``."""
    a = list(sys.a) + [0]
    u = y - sys.op(k)
    out = []
    for m in range(1, k):
        out.append(u % sys.q[m - 1])
        u //= sys.q[m - 1]
    out.append(u + a[k - 1])
    return out


def site_map(sys: HierSystem, y: int, i: int = 1, k: int | None = None, finite: bool = False,
             primed: bool = False) -> int:
    """``X(y, i; k) = sum_{m=i}^{k} (y'_m - a_m) B_m`` (or ``X'`` with ``primed=True``)."""
    k = sys.K if k is None else k
    if finite and y not in sys.visible():
        raise HierError(f"y = {y} is outside Visible(K, N)")
    a = list(sys.a) + [0]
    d = digits(sys, y, k)
    Bf = sys.Bp if primed else sys.B
    return sum((d[m - 1] - a[m - 1]) * Bf(m) for m in range(i, k + 1))


def hier_encode(sys: HierSystem, rho, check: bool = True) -> list:
    """Return ``[None, xi^1_K, ..., xi^K_K]`` for payload(s) ``rho`` over the visible sites."""
    if check:
        bad = verify_properties(sys)
        if bad:
            raise HierError("; ".join(bad))
    xi = [None] * (sys.K + 1)
    xi[sys.K] = sys.top_config(rho)
    for k in range(sys.K - 1, 0, -1):
        xi[k] = sys.encode_down(k, xi[k + 1])
    return xi


def hier_decode(sys: HierSystem, xi1):
    """Decode level by level; returns ``[None, xi^1, ..., xi^K]`` and an accepted mask."""
    out = [None, np.asarray(xi1, np.int64)]
    ok = np.ones(out[1].shape[:-1], bool)
    for k in range(1, sys.K):
        s, acc = sys.decode_up(k, out[k])
        ok &= acc.all(axis=-1)
        out.append(s)
    return out, ok


def decode_payload(sys: HierSystem, xi1) -> np.ndarray:
    """Read ``rho(y)`` back from ``xi^1(X(y)).F^1`` for every visible ``y``."""
    xi1 = np.asarray(xi1, np.int64)
    sites = np.array([site_map(sys, y) % sys.N for y in sys.visible()])
    return sys.unpack(1, xi1[..., sites])[1]


def verify_properties(sys: HierSystem, samples: int = 64, seed: int = 0) -> list[str]:
    """Check identification and control for every layer; returns violation messages."""
    bad = []
    rng = np.random.default_rng(seed)
    for k in range(1, sys.K):
        up = sys.levels[k + 1]
        lv = sys.levels[k]
        nF = 1 << up.w
        F_vals = np.arange(nF) if nF <= 1 << 16 else rng.integers(0, nF, 1 << 16)
        other = rng.integers(0, 1 << (up.addr + up.rest), size=F_vals.shape) \
            if up.addr + up.rest else np.zeros_like(F_vals)
        s = sys.pack(k + 1, other & ((1 << up.addr) - 1), F_vals, other >> up.addr)
        word = sys.phi_encode(k, s)
        _, F, _ = sys.unpack(k, word)
        for a in range(sys.q[k - 1]):
            if not np.array_equal(F[:, a], (F_vals >> (a * lv.w)) & ((1 << lv.w) - 1)):
                bad.append(f"level {k}: identification fails at address {a}")
                break
        ak = sys.a[k - 1]
        if len(np.unique(F[:, ak])) != min(1 << lv.w, len(F_vals)):
            bad.append(f"level {k}: control clause 1 (F at a_k does not take every value)")
        if not np.array_equal(word[:, ak], sys.gamma(k, F[:, ak])):
            bad.append(f"level {k}: control clause 2 (cell a_k is not gamma_k of its F)")
        dec, ok = sys.phi_decode(k, word)
        if not (ok.all() and np.array_equal(dec, s)):
            bad.append(f"level {k}: decode does not invert encode")
    return bad


def gamma_constant(sys: HierSystem, u1: int) -> list:
    """``Gamma(u1; K)``: the encoding of the constant payload ``u1``."""
    rho = np.full(len(sys.visible()), u1, np.int64)
    return hier_encode(sys, rho)


__all__ = ["HierSystem", "HierError", "hier_derive", "site_map", "hier_encode", "hier_decode",
           "decode_payload", "verify_properties", "gamma_constant", "digits", "block_offsets",
           "VAC"]
