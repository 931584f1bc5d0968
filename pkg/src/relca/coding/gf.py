"""Arithmetic in GF(2^l) for l = 2 * 3^s, using log/antilog tables.

The modulus is x^(2*3^s) + x^(3^s) + 1.  Irreducibility is checked when a
context is built instead of being taken on trust.
"""

from __future__ import annotations

from functools import lru_cache

MAX_TABLE_DEGREE = 16


class GFError(ArithmeticError):
    code = "gf-arithmetic"


def poly_mulmod(a: int, b: int, mod: int, deg: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a >> deg & 1:
            a ^= mod
    return r


def poly_mod(a: int, m: int) -> int:
    dm = m.bit_length() - 1
    while a and a.bit_length() - 1 >= dm:
        a ^= m << (a.bit_length() - 1 - dm)
    return a


def is_irreducible(poly: int) -> bool:
    """Trial division by every polynomial of degree 1..deg/2 (fine for deg <= 18)."""
    deg = poly.bit_length() - 1
    if deg < 1:
        return False
    for d in range(1, deg // 2 + 1):
        for f in range(1 << d, 1 << (d + 1)):
            if poly_mod(poly, f) == 0:
                return False
    return True


def family_modulus(l: int) -> int:
    s3 = l // 2
    s = 0
    while 3 ** s < s3:
        s += 1
    if l < 2 or l % 2 or 3 ** s != s3:
        raise GFError(f"l = {l} is not of the form 2*3^s")
    return (1 << l) | (1 << s3) | 1


class GF:
    """The field GF(2^l) with elements encoded as ints in [0, 2^l)."""

    def __init__(self, l: int, modulus: int | None = None):
        if l > MAX_TABLE_DEGREE:
            raise GFError(f"table arithmetic supports l <= {MAX_TABLE_DEGREE}")
        self.l = l
        self.modulus = family_modulus(l) if modulus is None else modulus
        if self.modulus.bit_length() - 1 != l:
            raise GFError("modulus degree differs from l")
        if not is_irreducible(self.modulus):
            raise GFError(f"modulus {self.modulus:#x} is reducible")
        self.order = (1 << l) - 1
        self.generator = self._find_generator()
        self.exp = [0] * (2 * self.order)
        self.log = [0] * (1 << l)
        x = 1
        for i in range(self.order):
            self.exp[i] = self.exp[i + self.order] = x
            self.log[x] = i
            x = poly_mulmod(x, self.generator, self.modulus, l)

    def _elem_order(self, g: int) -> int:
        x, k = g, 1
        while x != 1:
            x = poly_mulmod(x, g, self.modulus, self.l)
            k += 1
        return k

    def _find_generator(self) -> int:
        for g in range(2, 1 << self.l):
            if self._elem_order(g) == self.order:
                return g
        return 1  # GF(2): only for l = 1, not reachable with the family

    def add(self, a: int, b: int) -> int:
        return a ^ b

    sub = add

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self.exp[self.log[a] + self.log[b]]

    def inv(self, a: int) -> int:
        if a == 0:
            raise GFError("inverse of zero")
        return self.exp[(self.order - self.log[a]) % self.order]

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            if e == 0:
                return 1
            if e < 0:
                raise GFError("negative power of zero")
            return 0
        return self.exp[(self.log[a] * e) % self.order]

    def alpha(self, i: int) -> int:
        return self.exp[i % self.order]

    def solve(self, A: list[list[int]], b: list[int]) -> list[int] | None:
        """Gaussian elimination; returns None when ``A`` is singular."""
        n = len(A)
        M = [list(row) + [v] for row, v in zip(A, b)]
        for col in range(n):
            piv = next((r for r in range(col, n) if M[r][col]), None)
            if piv is None:
                return None
            M[col], M[piv] = M[piv], M[col]
            iv = self.inv(M[col][col])
            M[col] = [self.mul(iv, v) for v in M[col]]
            for r in range(n):
                if r != col and M[r][col]:
                    f = M[r][col]
                    M[r] = [x ^ self.mul(f, y) for x, y in zip(M[r], M[col])]
        return [M[r][n] for r in range(n)]

    def poly_eval(self, coeffs: list[int], x: int) -> int:
        """Evaluate sum coeffs[k] x^k (Horner)."""
        acc = 0
        for c in reversed(coeffs):
            acc = self.mul(acc, x) ^ c
        return acc


@lru_cache(maxsize=None)
def gf(l: int) -> GF:
    return GF(l)
