"""Polynomial test functions typed as text, e.g. ``"z*conj(z) + 1/2*I*z**2"``.

Variables are ``z`` (or ``z1``, ``z2``, ...) and their conjugates, written
``conj(z)``, ``zb`` or ``zbar``. Coefficients must be Gaussian rationals;
the result is an exact polynomial that can be expanded around any point.
"""
from __future__ import annotations

import sympy
from gmpy2 import mpq

from .jets import TruncatedJet, pack
from .rings import QQI, QQi

__all__ = ["Polynomial", "parse_polynomial"]


def _symbols(n):
    if n == 1:
        names = ["z"]
    else:
        names = [f"z{i + 1}" for i in range(n)]
    holo = [sympy.Symbol(s) for s in names]
    anti = [sympy.Symbol(s + "b") for s in names]
    table = {}
    for s, a, b in zip(names, holo, anti):
        idx = s[1:]
        table[s] = a
        for alias in ("zb" + idx, "zbar" + idx, s + "b", s + "bar"):
            table[alias] = b
    return holo, anti, table


def _gaussian(c) -> QQi:
    re, im = sympy.re(c), sympy.im(c)
    if not (re.is_Rational and im.is_Rational):
        raise ValueError(f"coefficient {c} is not a Gaussian rational")
    return QQi(mpq(int(re.p), int(re.q)), mpq(int(im.p), int(im.q)))


class Polynomial:
    """``sum c[(I, J)] z^I zbar^J`` with exact coefficients."""

    def __init__(self, n: int, terms: dict):
        self.n = n
        self.terms = {k: v for k, v in terms.items() if v != 0}

    def degree(self) -> int:
        return max((sum(k) for k in self.terms), default=0)

    def jet(self, point, order: int, ring=QQI) -> TruncatedJet:
        """Taylor jet at ``point`` in ``(y, ybar)``, cut at ``order``."""
        n = self.n
        if not isinstance(point, (list, tuple)):
            point = (point,)
        p = [ring.coerce(x) if ring is QQI else x for x in point]
        lin = []
        for i in range(n):
            e = [0] * (2 * n)
            e[i] = 1
            zi = TruncatedJet(2 * n, order, {0: p[i], pack(tuple(e)): ring.one}, ring)
            e = [0] * (2 * n)
            e[n + i] = 1
            zb = TruncatedJet(2 * n, order, {0: ring.conj(p[i]), pack(tuple(e)): ring.one}, ring)
            lin += [zi, zb]
        out = TruncatedJet(2 * n, order, {}, ring)
        for key, c in self.terms.items():
            m = TruncatedJet(2 * n, order, {0: c if ring is QQI else complex(c)}, ring)
            for i in range(n):
                for _ in range(key[i]):
                    m = m * lin[2 * i]
                for _ in range(key[n + i]):
                    m = m * lin[2 * i + 1]
            out = out + m
        return out

    def __repr__(self):
        return f"Polynomial(n={self.n}, terms={len(self.terms)})"


def parse_polynomial(text: str, n: int = 1) -> Polynomial:
    """Parse a polynomial in ``z_i`` and ``conj(z_i)``."""
    holo, anti, table = _symbols(n)
    by_holo = dict(zip(holo, anti))

    def conj(x):
        x = sympy.sympify(x)
        if x in by_holo:
            return by_holo[x]
        raise ValueError("conj() applies to a coordinate only")

    local = dict(table, conj=conj, I=sympy.I, i=sympy.I)
    try:
        expr = sympy.parse_expr(text, local_dict=local, evaluate=True)
    except (SyntaxError, TypeError) as exc:
        raise ValueError(f"cannot parse {text!r}: {exc}") from None
    gens = holo + anti
    stray = expr.free_symbols - set(gens)
    if stray:
        raise ValueError(f"unknown symbols in {text!r}: {sorted(map(str, stray))}")
    try:
        poly = sympy.Poly(expr, *gens)
    except sympy.PolynomialError as exc:
        raise ValueError(f"{text!r} is not a polynomial: {exc}") from None
    terms = {tuple(m): _gaussian(c) for m, c in poly.terms()}
    return Polynomial(n, terms)
