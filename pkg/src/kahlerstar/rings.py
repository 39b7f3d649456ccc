"""Scalar rings and multi-index helpers.

Three rings are used throughout the package:

* :data:`QQI` -- complex numbers with exact rational real and imaginary parts
  (elements are :class:`QQi`). This is the default everywhere.
* :data:`CC` -- double precision complex numbers, or numpy arrays of them.
  Only the quadrature harness uses it.
* :class:`JetRing` -- truncated jets over another ring (see :mod:`kahlerstar.jets`).

Engines never construct scalars directly; they ask the ring of their context
for ``zero``, ``one`` and ``const(q)``.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement
from math import factorial, prod

import numpy as np
from gmpy2 import mpq

__all__ = [
    "QQi", "QQI", "CC", "I_UNIT", "ExactComplexRing", "FloatComplexRing",
    "as_qqi", "parse_rational", "multi_indices", "mfact", "slots", "madd",
    "msub", "unit_index", "mdeg",
]


def parse_rational(text) -> mpq:
    """Parse ``"3"``, ``"-2/5"``, ints, Fractions or mpq into an mpq."""
    if isinstance(text, str):
        text = text.strip()
        if "/" in text:
            num, den = text.split("/")
            return mpq(int(num), int(den))
        return mpq(int(text))
    if isinstance(text, Fraction):
        return mpq(text.numerator, text.denominator)
    if isinstance(text, float):
        raise TypeError("floats are not exact; pass a string or Fraction")
    return mpq(text)


class QQi:
    """Exact complex rational ``re + i*im``."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is type(_ZQ) else parse_rational(re)
        self.im = im if type(im) is type(_ZQ) else parse_rational(im)

    @staticmethod
    def _make(re, im):
        z = object.__new__(QQi)
        z.re = re
        z.im = im
        return z

    @classmethod
    def parse(cls, text: str) -> "QQi":
        """Parse ``"a/b"``, ``"a/b+c/d*i"`` or ``"c/d*i"`` style strings."""
        s = text.replace(" ", "").replace("I", "i").replace("j", "i")
        if "i" not in s:
            return cls(parse_rational(s))
        body = s.replace("*i", "i")
        # split at the last sign that is not the leading one
        cut = max(body.rfind("+", 1), body.rfind("-", 1))
        if cut <= 0:
            re_s, im_s = "0", body[:-1]
        else:
            re_s, im_s = body[:cut], body[cut:-1]
        if im_s in ("", "+"):
            im_s = "1"
        elif im_s == "-":
            im_s = "-1"
        return cls(parse_rational(re_s), parse_rational(im_s))

    def __add__(self, other):
        if type(other) is QQi:
            return QQi._make(self.re + other.re, self.im + other.im)
        if isinstance(other, (int, type(_ZQ), Fraction)):
            return QQi._make(self.re + mpq(other), self.im)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if type(other) is QQi:
            return QQi._make(self.re - other.re, self.im - other.im)
        if isinstance(other, (int, type(_ZQ), Fraction)):
            return QQi._make(self.re - mpq(other), self.im)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if type(other) is QQi:
            a, b, c, d = self.re, self.im, other.re, other.im
            if not b:
                if not d:
                    return QQi._make(a * c, _ZQ)
                return QQi._make(a * c, a * d)
            if not d:
                return QQi._make(a * c, b * c)
            return QQi._make(a * c - b * d, a * d + b * c)
        if isinstance(other, (int, type(_ZQ), Fraction)):
            q = mpq(other)
            return QQi._make(self.re * q, self.im * q)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return QQi._make(-self.re, -self.im)

    def __pos__(self):
        return self

    def conjugate(self):
        return QQi._make(self.re, -self.im)

    conj = conjugate

    def inverse(self):
        n = self.re * self.re + self.im * self.im
        if not n:
            raise ZeroDivisionError("QQi zero has no inverse")
        return QQi._make(self.re / n, -self.im / n)

    def __truediv__(self, other):
        if type(other) is QQi:
            return self * other.inverse()
        if isinstance(other, (int, type(_ZQ), Fraction)):
            q = mpq(other)
            return QQi._make(self.re / q, self.im / q)
        return NotImplemented

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = QQi._make(_OQ, _ZQ)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def is_zero(self) -> bool:
        return not self.re and not self.im

    def __eq__(self, other):
        if type(other) is QQi:
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, type(_ZQ), Fraction)):
            return not self.im and self.re == other
        return NotImplemented

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"QQi({self})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}*i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}*i"

    def to_json(self) -> dict:
        return {"re_num": int(self.re.numerator), "re_den": int(self.re.denominator),
                "im_num": int(self.im.numerator), "im_den": int(self.im.denominator)}

    @classmethod
    def from_json(cls, d: dict) -> "QQi":
        return cls(mpq(int(d["re_num"]), int(d["re_den"])),
                   mpq(int(d.get("im_num", 0)), int(d.get("im_den", 1))))


_ZQ = mpq(0)
_OQ = mpq(1)
I_UNIT = QQi._make(_ZQ, _OQ)


def as_qqi(x) -> QQi:
    if isinstance(x, QQi):
        return x
    if isinstance(x, str):
        return QQi.parse(x)
    if isinstance(x, complex):
        raise TypeError("complex floats are not exact")
    return QQi(x)


class ExactComplexRing:
    """The ring of :class:`QQi` numbers."""

    name = "exact"
    exact = True

    def __init__(self):
        self.zero = QQi._make(_ZQ, _ZQ)
        self.one = QQi._make(_OQ, _ZQ)

    def const(self, q) -> QQi:
        if isinstance(q, QQi):
            return q
        return QQi._make(mpq(q), _ZQ)

    def coerce(self, x) -> QQi:
        return as_qqi(x)

    @staticmethod
    def is_zero(x) -> bool:
        return not x.re and not x.im

    @staticmethod
    def conj(x):
        return x.conjugate()

    @staticmethod
    def inv(x):
        return x.inverse()

    def __repr__(self):
        return "QQI"


class FloatComplexRing:
    """Complex doubles; elements may also be numpy arrays (vectorised points)."""

    name = "float"
    exact = False
    zero = 0j
    one = 1 + 0j

    @staticmethod
    def const(q):
        if isinstance(q, QQi):
            return complex(q)
        return complex(float(q))

    coerce = const

    @staticmethod
    def is_zero(x) -> bool:
        if isinstance(x, np.ndarray):
            return False
        return x == 0

    @staticmethod
    def conj(x):
        return np.conj(x)

    @staticmethod
    def inv(x):
        return 1.0 / x

    def __repr__(self):
        return "CC"


QQI = ExactComplexRing()
CC = FloatComplexRing()


# --- multi-indices -----------------------------------------------------------

@lru_cache(maxsize=None)
def multi_indices(n: int, degree: int) -> tuple:
    """All multi-indices of length ``n`` with ``|I| == degree``, lex-descending.

    Concatenating ``multi_indices(n, d)`` for ``d = 0, 1, ...`` gives the
    graded lexicographic order used throughout.
    """
    out = []
    for combo in combinations_with_replacement(range(n), degree):
        idx = [0] * n
        for c in combo:
            idx[c] += 1
        out.append(tuple(idx))
    return tuple(sorted(out, reverse=True))


def graded(n: int, max_degree: int, min_degree: int = 0):
    for d in range(min_degree, max_degree + 1):
        yield from multi_indices(n, d)


@lru_cache(maxsize=None)
def mfact(index: tuple) -> int:
    return prod(factorial(i) for i in index)


def mdeg(index: tuple) -> int:
    return sum(index)


def madd(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def msub(a: tuple, b: tuple):
    """``a - b`` or ``None`` if some component would be negative."""
    out = tuple(x - y for x, y in zip(a, b))
    return None if min(out, default=0) < 0 else out


@lru_cache(maxsize=None)
def unit_index(n: int, i: int) -> tuple:
    return tuple(1 if k == i else 0 for k in range(n))


@lru_cache(maxsize=None)
def slots(index: tuple) -> tuple:
    """Expand a multi-index into its slot list, e.g. ``(2, 1) -> (0, 0, 1)``."""
    return tuple(i for i, c in enumerate(index) for _ in range(c))
