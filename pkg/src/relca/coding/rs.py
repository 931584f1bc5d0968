"""Reed-Solomon style codes over GF(2^l) defined by check equations.

A word ``c`` of ``N`` symbols is a codeword iff ``sum_i alpha_i^j c(i) = 0``
for ``j = 1..2t``.  The first ``N - 2t`` symbols carry the information and
the last ``2t`` are obtained by solving the (Vandermonde) check system.
Decoding follows the textbook route with an explicit trial search for the
roots of the error-locator polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .gf import GF, GFError, gf


class RSError(ValueError):
    code = "rs-contract"


@dataclass
class DecodeResult:
    ok: bool
    info: list | None = None
    positions: tuple = ()
    codeword: list | None = None


@dataclass
class RSCode:
    l: int
    N: int
    t: int
    points: tuple | None = None
    ctx: GF = field(init=False, repr=False)

    def __post_init__(self):
        self.ctx = gf(self.l)
        if not 0 < self.N <= self.ctx.order:
            raise RSError(f"N must lie in [1, {self.ctx.order}]")
        if self.t < 0 or 2 * self.t >= self.N:
            raise RSError("need 0 <= 2t < N")
        if self.points is None:
            self.points = tuple(self.ctx.alpha(i) for i in range(self.N))
        pts = tuple(self.points)
        if len(pts) != self.N or len(set(pts)) != self.N or 0 in pts:
            raise RSError("evaluation points must be N distinct nonzero elements")
        self.points = pts
        k = self.N - 2 * self.t
        # Check matrix rows j = 1..2t restricted to the check positions.
        F = self.ctx
        self._check_cols = list(range(k, self.N))
        self._V = [[F.pow(self.points[i], j) for i in self._check_cols]
                   for j in range(1, 2 * self.t + 1)]

    @property
    def k(self) -> int:
        return self.N - 2 * self.t

    def syndromes(self, word) -> list[int]:
        if len(word) != self.N:
            raise RSError(f"word length {len(word)} != N = {self.N}")
        F = self.ctx
        out = []
        for j in range(1, 2 * self.t + 1):
            s = 0
            for a, c in zip(self.points, word):
                if c:
                    s ^= F.mul(c, F.pow(a, j))
            out.append(s)
        return out

    def encode(self, info) -> list[int]:
        info = [int(v) for v in info]
        if len(info) != self.k:
            raise RSError(f"info length {len(info)} != N - 2t = {self.k}")
        if any(v < 0 or v > self.ctx.order for v in info):
            raise RSError("info symbol outside the field")
        word = info + [0] * (2 * self.t)
        if self.t == 0:
            return word
        rhs = self.syndromes(word)  # char 2: -S = S
        sol = self.ctx.solve(self._V, rhs)
        if sol is None:
            raise GFError("check system singular: field arithmetic inconsistent")
        for i, v in zip(self._check_cols, sol):
            word[i] = v
        return word

    def is_codeword(self, word) -> bool:
        return not any(self.syndromes(word))

    def decode(self, word) -> DecodeResult:
        """Correct up to ``t`` symbol errors; failure is an ordinary return value."""
        word = [int(v) for v in word]
        S = self.syndromes(word)
        if not any(S):
            return DecodeResult(True, word[:self.k], (), word)
        F = self.ctx
        Sx = [0] + S  # 1-based: Sx[j] = S_j
        for nu in range(1, self.t + 1):
            # sum_{s=1}^{nu} L_s S_{j+nu-s} = S_{j+nu}, j = 1..nu
            A = [[Sx[j + nu - s] for s in range(1, nu + 1)] for j in range(1, nu + 1)]
            b = [Sx[j + nu] for j in range(1, nu + 1)]
            lam = F.solve(A, b)
            if lam is None:
                continue
            coeffs = [1] + lam
            pos = [i for i, a in enumerate(self.points) if F.poly_eval(coeffs, F.inv(a)) == 0]
            if len(pos) != nu:
                continue
            X = [self.points[i] for i in pos]
            M = [[F.pow(x, j) for x in X] for j in range(1, nu + 1)]
            Y = F.solve(M, S[:nu])
            if Y is None:
                continue
            fixed = list(word)
            for i, y in zip(pos, Y):
                fixed[i] ^= y
            if self.is_codeword(fixed):
                return DecodeResult(True, fixed[:self.k], tuple(i for i, y in zip(pos, Y) if y),
                                    fixed)
        return DecodeResult(False)


PRESETS = {
    # Desk-scale instances of the 12- and 6-error-correcting codes.
    "t12": dict(l=6, N=63, t=12),
    "t6": dict(l=6, N=63, t=6),
    "small": dict(l=6, N=10, t=3),
}


def preset(name: str) -> RSCode:
    try:
        return RSCode(**PRESETS[name])
    except KeyError:
        raise RSError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
