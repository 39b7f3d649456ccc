"""Gaussian moments as pairing sums.

``wick_sum(I, J, hinv)`` is the normalised moment of ``y^I ybar^J``: the sum
over bijections between the holomorphic slots of ``I`` and the
antiholomorphic slots of ``J`` of the product of ``h^{i jbar}``.
"""
from __future__ import annotations

from itertools import permutations
from math import factorial

from gmpy2 import mpq

from .jets import TruncatedJet, split_key
from .rings import QQI, mfact, slots

__all__ = ["wick_sum", "wick_bijections", "wick_by_differentiation", "gaussian_integrate",
           "WickTable", "contingency_tables"]


def contingency_tables(rows: tuple, cols: tuple):
    """Non-negative integer matrices with the given row and column sums."""
    n, m = len(rows), len(cols)
    if sum(rows) != sum(cols):
        return
    M = [[0] * m for _ in range(n)]

    def fill(i, colrem):
        if i == n - 1:
            M[i] = list(colrem)
            yield M
            return
        row = M[i]

        def place(j, left, colrem):
            if j == m - 1:
                if left <= colrem[j]:
                    row[j] = left
                    new = list(colrem)
                    new[j] -= left
                    yield from fill(i + 1, new)
                return
            rest = sum(colrem[j + 1:])
            for x in range(max(0, left - rest), min(left, colrem[j]) + 1):
                row[j] = x
                new = list(colrem)
                new[j] -= x
                yield from place(j + 1, left - x, new)

        yield from place(0, rows[i], list(colrem))

    yield from fill(0, list(cols))


class WickTable:
    """Memoised moments for one inverse metric over one ring."""

    def __init__(self, hinv, ring=QQI):
        self.hinv = hinv
        self.n = len(hinv)
        self.ring = ring
        self._memo = {}
        self._pow = {}
        self._fact_inv = [ring.const(mpq(1, factorial(k))) for k in range(64)]

    def _power(self, i, j, e):
        key = (i, j, e)
        v = self._pow.get(key)
        if v is None:
            if e == 0:
                v = self.ring.one
            elif e == 1:
                v = self.hinv[i][j]
            else:
                v = self._power(i, j, e - 1) * self.hinv[i][j]
            self._pow[key] = v
        return v

    def __call__(self, I: tuple, J: tuple):
        key = (I, J)
        v = self._memo.get(key)
        if v is None:
            v = self._compute(I, J)
            self._memo[key] = v
        return v

    def _compute(self, I, J):
        R = self.ring
        if sum(I) != sum(J):
            return R.zero
        if not sum(I):
            return R.one
        n = self.n
        if n == 1:
            return self._power(0, 0, I[0]) * factorial(I[0])
        total = R.zero
        for M in contingency_tables(I, J):
            term = None
            for i in range(n):
                for j in range(n):
                    e = M[i][j]
                    if e:
                        f = self._power(i, j, e)
                        if e > 1:
                            f = f * self._fact_inv[e]
                        term = f if term is None else term * f
            total = total + term
        return total * (mfact(I) * mfact(J))


def wick_sum(I, J, hinv, ring=QQI):
    """Pairing sum of ``y^I ybar^J`` against ``h^{i jbar} = hinv[i][j]``."""
    n = len(hinv)
    if len(I) != n or len(J) != n:
        raise ValueError("multi-index length does not match the metric dimension")
    return WickTable(hinv, ring)(tuple(I), tuple(J))


def wick_bijections(I, J, hinv, ring=QQI):
    """Literal sum over bijections of slots; the reference implementation."""
    a, b = slots(tuple(I)), slots(tuple(J))
    if len(a) != len(b):
        return ring.zero
    total = ring.zero
    for perm in permutations(range(len(b))):
        term = ring.one
        for k, s in enumerate(perm):
            term = term * hinv[a[k]][b[s]]
        total = total + term
    return total


def wick_by_differentiation(I, J, hinv, ring=QQI):
    """``d^I dbar^J exp(sum h^{i jbar} z_i zbar_j)`` at 0, by expanding the jet."""
    n = len(hinv)
    M = sum(I) + sum(J)
    q = TruncatedJet(2 * n, M, {}, ring)
    for i in range(n):
        for j in range(n):
            e = [0] * (2 * n)
            e[i] += 1
            e[n + j] += 1
            q = q + TruncatedJet(2 * n, M, {tuple(e): hinv[i][j]}, ring)
    ex = q.exp()
    return ex[tuple(I) + tuple(J)] * (mfact(tuple(I)) * mfact(tuple(J)))


def gaussian_integrate(poly: TruncatedJet, hinv, ring=QQI, table: WickTable | None = None):
    """Normalised Gaussian integral of a polynomial in (y, ybar)."""
    n = poly.nvars // 2
    table = table or WickTable(hinv, ring)
    total = ring.zero
    for key, c in poly.c.items():
        A, B = split_key(key, n)
        if sum(A) == sum(B):
            total = total + c * table(A, B)
    return total
