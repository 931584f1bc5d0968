"""Amplifier-frame parameter calculus.

All derived sequences are exact ``Fraction`` values: ``eps_k`` squares at
every level, and by ``k = 8`` it is far below the smallest float.  Only the
logarithmic inequalities (which involve ``log2`` of integers) are evaluated
in floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence


class FrameError(ValueError):
    code = "frame-parameters"


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x) if not isinstance(x, str) else Fraction(x)


@dataclass
class FrameParams:
    """Base constants and level sequences (index 0 holds level 1)."""

    T_lo: Fraction
    T_hi: Fraction
    eps: Fraction
    eps1p: Fraction
    R0: Fraction
    Q: Sequence[int]
    U: Sequence[int]
    cap: Sequence[float]
    derived: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.T_lo, self.T_hi = _frac(self.T_lo), _frac(self.T_hi)
        self.eps, self.eps1p, self.R0 = _frac(self.eps), _frac(self.eps1p), _frac(self.R0)
        self.Q, self.U, self.cap = list(self.Q), list(self.U), list(self.cap)
        if not len(self.Q) == len(self.U) == len(self.cap):
            raise FrameError("Q, U and cap must have the same length")

    @property
    def K(self) -> int:
        return len(self.Q)


def frame_derive(fp: FrameParams) -> dict:
    """Fill ``fp.derived`` with B, nu, T_lo, T_hi, eps, eps2 (eps'') and eps1 (eps') per level.

    Each sequence is a list indexed by ``k - 1``.  ``B`` and ``T`` get one
    extra entry (level ``K + 1``) because they are products over lower levels.
    """
    if fp.T_hi < fp.T_lo or fp.T_lo <= 0:
        raise FrameError("need 0 < T_lo <= T_hi")
    bound = 1 / fp.R0 ** 2
    if not (0 <= fp.eps < bound and 0 <= fp.eps1p < bound):
        raise FrameError(f"need eps, eps' < 1/R0^2 = {float(bound):.4g}")
    if any(q < 1 for q in fp.Q) or any(u < 1 for u in fp.U):
        raise FrameError("Q_k and U_k must be positive")
    K = fp.K
    varying = fp.T_lo != fp.T_hi
    nu = [1 + fp.R0 * Fraction(q, u) if varying else Fraction(1) for q, u in zip(fp.Q, fp.U)]
    B, T_lo, T_hi = [1], [fp.T_lo], [fp.T_hi]
    for k in range(K):
        B.append(B[-1] * fp.Q[k])
        T_lo.append(T_lo[-1] * fp.U[k] / nu[k])
        T_hi.append(T_hi[-1] * fp.U[k] * nu[k])
    eps = [fp.eps]
    for k in range(K - 1):
        eps.append(25 * (fp.Q[k] * fp.U[k] * nu[k] * eps[k]) ** 2)
    eps2 = [4 * fp.Q[k] * fp.U[k] * nu[k] * eps[k] for k in range(K)]
    eps1 = [fp.eps1p]
    for k in range(1, K):
        eps1.append(eps1[-1] + eps2[k - 1])
    fp.derived = dict(B=B, nu=nu, T_lo=T_lo, T_hi=T_hi, eps=eps, eps2=eps2, eps1=eps1)
    return fp.derived


def eps_closed(fp: FrameParams, k: int) -> Fraction:
    """``eps_k`` re-derived in closed form, ``eps^(2^(k-1)) * prod_i (25 (Q_i U_i nu_i)^2)^(2^(k-1-i))``."""
    nu = fp.derived["nu"] if fp.derived else frame_derive(fp)["nu"]
    out = fp.eps ** (2 ** (k - 1))
    for i in range(1, k):
        out *= (25 * (fp.Q[i - 1] * fp.U[i - 1] * nu[i - 1]) ** 2) ** (2 ** (k - 1 - i))
    return out


def _log2_bounds(x: Fraction) -> tuple[float, float]:
    """An interval certainly containing ``log2(x)`` for ``x > 0`` (rounding slack 1e-9)."""

    def lg(n: int) -> float:
        b = n.bit_length()
        if b <= 60:
            return math.log2(n)
        return b - 60 + math.log2(n >> (b - 60))

    v = lg(x.numerator) - lg(x.denominator)
    slack = 1e-9 * (1 + abs(v))
    return v - slack, v + slack


def power_le(x: Fraction, a: int, y: Fraction, b: int) -> bool:
    """Decide ``x^a <= y^b`` for nonnegative rationals, exactly.

    A certified float comparison of the logarithms settles almost every
    case; the exact big-integer comparison is the fallback when the two
    sides are too close to call.
    """
    if x == 0:
        return True
    if y == 0:
        return False
    lx, hx = _log2_bounds(x)
    ly, hy = _log2_bounds(y)
    if a * hx < b * ly:
        return True
    if a * lx > b * hy:
        return False
    return x ** a <= y ** b


@dataclass
class FrameReport:
    violations: list
    exp_error: list            # (k, holds) for eps_k <= eps^(1.5^(k-1))
    superex: list | None       # (k, holds) for eps_k <= eps^(2^(k-2)+(k+1)/4), example frame only
    rows: list                 # per-level table rows

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def eps_bounds_hold(self) -> bool:
        good = all(h for _, h in self.exp_error)
        return good and (self.superex is None or all(h for _, h in self.superex))


def frame_check(fp: FrameParams, K: int | None = None, example: bool = False) -> FrameReport:
    """Evaluate the frame inequalities for ``k = 1..K``; violations name the rule and level."""
    d = fp.derived or frame_derive(fp)
    K = fp.K if K is None else min(K, fp.K)
    R0 = float(fp.R0)
    bad, exp_err, sup, rows = [], [], [] if example else None, []
    eps = fp.eps
    for k in range(1, K + 1):
        Qk, Uk, ck = fp.Q[k - 1], fp.U[k - 1], fp.cap[k - 1]
        ek = d["eps"][k - 1]
        if ck < R0 * math.log2(Uk):
            bad.append(f"k={k}: bandwidth lower bound cap_k >= R0 log U_k")
        if k < fp.K and R0 * fp.cap[k] > Qk * ck:
            bad.append(f"k={k}: capacity lower bound R0 cap_(k+1) <= Q_k cap_k")
        if Uk < R0 * (math.log2(Qk) + math.log2(k)) * Qk:
            bad.append(f"k={k}: work period lower bound U_k >= R0 (log Q_k + log k) Q_k")
        # eps_k^0.2 <= R0/(Q_k U_k)  <=>  eps_k <= (R0/(Q_k U_k))^5
        if ek > (fp.R0 / (Qk * Uk)) ** 5:
            bad.append(f"k={k}: error upper bound eps_k^0.2 <= R0/(Q_k U_k)")
        ratio = d["T_hi"][k - 1] / d["T_lo"][k - 1]
        if ratio > 3:
            bad.append(f"k={k}: time stability T_hi/T_lo <= 3")
        # eps_k <= eps^(1.5^(k-1))  <=>  eps_k^(2^(k-1)) <= eps^(3^(k-1))
        exp_err.append((k, power_le(ek, 2 ** (k - 1), eps, 3 ** (k - 1))))
        if example:
            # eps_k <= eps^(2^(k-2)+(k+1)/4)  <=>  eps_k^4 <= eps^(2^k+k+1)
            sup.append((k, power_le(ek, 4, eps, 2 ** k + k + 1)))
        rows.append(dict(k=k, Q=Qk, U=Uk, cap=ck, B=d["B"][k - 1], nu=float(d["nu"][k - 1]),
                         T_ratio=float(ratio), log10_eps=_log10(ek),
                         log10_eps2=_log10(d["eps2"][k - 1]), log10_eps1=_log10(d["eps1"][k - 1])))
    return FrameReport(bad, exp_err, sup, rows)


def _log10(x: Fraction) -> float:
    if x == 0:
        return float("-inf")
    lo, hi = _log2_bounds(x)
    return (lo + hi) / 2 * math.log10(2)


def brc_amp_preset(c: int, eps, K: int = 10, R0=1, eps1p=None) -> FrameParams:
    """The example broadcast frame: T_lo=1, T_hi=2, Q_k=c^2 k^2, U_k=c^3 k^4, cap_k=c max(log2 k, 1)."""
    if c < 1:
        raise FrameError("need c >= 1")
    ks = range(1, K + 1)
    return FrameParams(1, 2, _frac(eps), _frac(eps if eps1p is None else eps1p), _frac(R0),
                       [c * c * k * k for k in ks], [c ** 3 * k ** 4 for k in ks],
                       [c * max(math.log2(k), 1.0) for k in ks])


def brc_amp_recurrence_ok(fp: FrameParams) -> list[tuple[int, bool]]:
    """Check ``eps_(k+1) <= 25 (2 Q_k U_k)^2 eps_k^2`` (``= 100 c^10 k^12 eps_k^2`` on the example)."""
    d = fp.derived or frame_derive(fp)
    return [(k, d["eps"][k] <= 25 * (2 * fp.Q[k - 1] * fp.U[k - 1]) ** 2 * d["eps"][k - 1] ** 2)
            for k in range(1, fp.K)]


def eps_threshold(make: Callable[[Fraction], FrameParams], K: int | None = None,
                  lo_exp: int = 400, hi_exp: int = 0, example: bool = False) -> int | None:
    """Bisect on ``e`` for the smallest ``e`` such that ``eps = 10^-e`` passes frame_check.

    Returns None when even ``10^-lo_exp`` fails (the failure is not an
    error-probability one).  Assumes monotonicity in ``eps``, which holds for
    every inequality involving eps.
    """

    def good(e: int) -> bool:
        try:
            fp = make(Fraction(1, 10 ** e))
            frame_derive(fp)
        except FrameError:
            return False
        return frame_check(fp, K, example).ok

    if not good(lo_exp):
        return None
    lo, hi = hi_exp, lo_exp  # good(hi) holds
    if good(lo):
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if good(mid):
            hi = mid
        else:
            lo = mid
    return hi


def report_table(report: FrameReport) -> str:
    cols = ["k", "Q", "U", "cap", "B", "nu", "T_ratio", "log10_eps", "log10_eps2", "log10_eps1"]
    lines = ["  ".join(f"{c:>12}" for c in cols)]
    for r in report.rows:
        cells = []
        for c in cols:
            v = r[c]
            cells.append(f"{v:>12.4g}" if isinstance(v, float) else f"{v:>12}")
        lines.append("  ".join(cells))
    return "\n".join(lines)
