"""Truncated jets, the ring of jets, and truncated series in hbar.

A :class:`TruncatedJet` is a polynomial in ``nvars`` variables with all terms
of total degree above ``cutoff`` discarded. Jets of functions on C^n use
``2n`` variables, ``y_1..y_n`` followed by ``ybar_1..ybar_n``; the coefficient
of ``y^A ybar^B`` is the Taylor coefficient ``d^A dbar^B f / (A! B!)``.

Monomials are stored under packed integer keys (6 bits per exponent), so that
multiplying monomials is adding keys.
"""
from __future__ import annotations

from math import comb, factorial

from .rings import QQI, multi_indices

__all__ = [
    "TruncatedJet", "JetRing", "HbarSeries", "pack", "unpack", "split_key",
    "join_key", "jet_mul", "jet_exp", "series_invert", "jet_from_terms",
]

_BITS = 6
_MASK = (1 << _BITS) - 1
_deg_cache: dict = {}


def pack(exps) -> int:
    key = 0
    for v, e in enumerate(exps):
        if e < 0 or e > _MASK:
            raise ValueError(f"exponent {e} out of range")
        key |= e << (_BITS * v)
    return key


def unpack(key: int, nvars: int) -> tuple:
    return tuple((key >> (_BITS * v)) & _MASK for v in range(nvars))


def kdeg(key: int) -> int:
    d = _deg_cache.get(key)
    if d is None:
        d, k = 0, key
        while k:
            d += k & _MASK
            k >>= _BITS
        _deg_cache[key] = d
    return d


def join_key(A, B) -> int:
    """Key of ``y^A ybar^B`` in a 2n-variable jet."""
    return pack(tuple(A) + tuple(B))


def split_key(key: int, n: int):
    e = unpack(key, 2 * n)
    return e[:n], e[n:]


class TruncatedJet:
    """Polynomial modulo total degree ``> cutoff`` with ring coefficients."""

    __slots__ = ("nvars", "cutoff", "ring", "c", "_bydeg")

    def __init__(self, nvars: int, cutoff: int, coeffs=None, ring=QQI):
        self.nvars = nvars
        self.cutoff = cutoff
        self.ring = ring
        self.c = {}
        self._bydeg = None
        if coeffs:
            for k, v in coeffs.items():
                if not isinstance(k, int):
                    k = pack(k)
                if kdeg(k) <= cutoff and not ring.is_zero(v):
                    self.c[k] = v

    @classmethod
    def _raw(cls, nvars, cutoff, ring, c):
        j = object.__new__(cls)
        j.nvars, j.cutoff, j.ring, j.c, j._bydeg = nvars, cutoff, ring, c, None
        return j

    # -- basic accessors -------------------------------------------------
    def __getitem__(self, exps):
        key = exps if isinstance(exps, int) else pack(exps)
        return self.c.get(key, self.ring.zero)

    def items(self):
        """Yield ``(exponent tuple, coefficient)`` pairs."""
        for k, v in self.c.items():
            yield unpack(k, self.nvars), v

    def constant(self):
        return self.c.get(0, self.ring.zero)

    def degree(self) -> int:
        return max((kdeg(k) for k in self.c), default=0)

    def is_zero(self) -> bool:
        return all(self.ring.is_zero(v) for v in self.c.values())

    def _grouped(self):
        if self._bydeg is None:
            g = [[] for _ in range(self.cutoff + 1)]
            for k, v in self.c.items():
                g[kdeg(k)].append((k, v))
            self._bydeg = g
        return self._bydeg

    def _like(self, c):
        return TruncatedJet._raw(self.nvars, self.cutoff, self.ring, c)

    def _check(self, other):
        if self.nvars != other.nvars:
            raise ValueError(f"jet dimension mismatch: {self.nvars} vs {other.nvars}")
        if self.cutoff != other.cutoff:
            raise ValueError(f"jet cutoff mismatch: {self.cutoff} vs {other.cutoff}")

    # -- arithmetic --------------------------------------------------------
    def _peer(self, other) -> bool:
        """Is ``other`` a jet of the same kind (rather than a jet-valued scalar)?"""
        return isinstance(other, TruncatedJet) and \
            isinstance(other.ring, JetRing) == isinstance(self.ring, JetRing)

    def __add__(self, other):
        if self._peer(other):
            self._check(other)
            c = dict(self.c)
            for k, v in other.c.items():
                c[k] = c[k] + v if k in c else v
            return self._like(c)
        c = dict(self.c)
        c[0] = c[0] + other if 0 in c else other
        return self._like(c)

    __radd__ = __add__

    def __neg__(self):
        return self._like({k: -v for k, v in self.c.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if self._peer(other):
            self._check(other)
            return self._like(_mul_dicts(self, other, self.cutoff))
        if isinstance(other, (int,)) and other == 0:
            return self._like({})
        return self._like({k: v * other for k, v in self.c.items()})

    def __rmul__(self, other):
        if self._peer(other):
            return other.__mul__(self)
        return self._like({k: other * v for k, v in self.c.items()})

    def __truediv__(self, other):
        if self._peer(other):
            return self * other.inverse()
        inv = self.ring.inv(self.ring.coerce(other)) if not isinstance(other, int) \
            else self.ring.inv(self.ring.const(other))
        return self * inv

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = self._like({0: self.ring.one})
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, TruncatedJet):
            if self.nvars != other.nvars:
                return False
            keys = set(self.c) | set(other.c)
            z = self.ring.zero
            return all(self.c.get(k, z) == other.c.get(k, z) for k in keys)
        return NotImplemented

    __hash__ = None

    def __repr__(self):
        terms = []
        for k in sorted(self.c, key=lambda k: (kdeg(k), k)):
            terms.append(f"{self.c[k]}*{unpack(k, self.nvars)}")
        return f"Jet[{self.nvars},{self.cutoff}](" + " + ".join(terms or ["0"]) + ")"

    # -- structural operations -------------------------------------------
    def nilpotent_part(self):
        c = dict(self.c)
        c.pop(0, None)
        return self._like(c)

    def exp(self):
        """``exp`` of a jet whose constant term is zero."""
        if not self.ring.is_zero(self.constant()):
            raise ValueError("jet_exp needs a nilpotent argument (zero constant term)")
        one = self._like({0: self.ring.one})
        out, term = one, one
        for m in range(1, self.cutoff + 1):
            term = term * self * self.ring.const(_frac(1, m))
            if not term.c:
                break
            out = out + term
        return out

    def log1p(self):
        """``log(1 + x)`` for nilpotent ``x``."""
        if not self.ring.is_zero(self.constant()):
            raise ValueError("log1p needs a nilpotent argument")
        out = self._like({})
        term = self._like({0: self.ring.one})
        for m in range(1, self.cutoff + 1):
            term = term * self
            if not term.c:
                break
            out = out + term * self.ring.const(_frac((-1) ** (m + 1), m))
        return out

    def inverse(self):
        """Neumann-series inverse; needs an invertible constant term."""
        a0 = self.constant()
        if self.ring.is_zero(a0):
            raise ZeroDivisionError("jet with zero constant term is not invertible")
        inv0 = self.ring.inv(a0)
        x = self.nilpotent_part() * inv0
        out = self._like({0: self.ring.one})
        term = out
        for _ in range(self.cutoff):
            term = -(term * x)
            if not term.c:
                break
            out = out + term
        return out * inv0

    def conj(self):
        """Complex conjugate of the function: swaps the y and ybar blocks."""
        if self.nvars % 2:
            raise ValueError("conjugation needs an even number of variables")
        n = self.nvars // 2
        c = {}
        for k, v in self.c.items():
            e = unpack(k, self.nvars)
            c[pack(e[n:] + e[:n])] = self.ring.conj(v)
        return self._like(c)

    def truncate(self, cutoff: int):
        return TruncatedJet._raw(self.nvars, cutoff, self.ring,
                                 {k: v for k, v in self.c.items() if kdeg(k) <= cutoff})

    def with_cutoff(self, cutoff: int):
        """Same coefficients under a different cutoff (extra terms dropped)."""
        return self.truncate(cutoff) if cutoff < self.cutoff else \
            TruncatedJet._raw(self.nvars, cutoff, self.ring, dict(self.c))

    def map(self, fn):
        return self._like({k: fn(v) for k, v in self.c.items()})

    def diff(self, var: int, times: int = 1):
        """Partial derivative in one variable; the cutoff drops by ``times``."""
        sh = _BITS * var
        c = {}
        for k, v in self.c.items():
            e = (k >> sh) & _MASK
            if e >= times:
                f = factorial(e) // factorial(e - times)
                c[k - (times << sh)] = v * f
        return TruncatedJet._raw(self.nvars, self.cutoff - times, self.ring, c)

    def restrict(self, keep):
        """Keep only monomials whose exponents vanish outside ``keep`` vars."""
        c = {}
        for k, v in self.c.items():
            e = unpack(k, self.nvars)
            if all(e[i] == 0 for i in range(self.nvars) if i not in keep):
                c[k] = v
        return self._like(c)


def _frac(a, b):
    from gmpy2 import mpq
    return mpq(a, b)


def _mul_dicts(a: TruncatedJet, b: TruncatedJet, cutoff: int) -> dict:
    ga = a._grouped()
    gb = b._grouped()
    out = {}
    get = out.get
    for da, la in enumerate(ga):
        if not la:
            continue
        for db in range(0, min(len(gb), cutoff - da + 1)):
            lb = gb[db]
            if not lb:
                continue
            for ka, va in la:
                for kb, vb in lb:
                    k = ka + kb
                    p = va * vb
                    prev = get(k)
                    out[k] = p if prev is None else prev + p
    return out


def jet_mul(a: TruncatedJet, b: TruncatedJet) -> TruncatedJet:
    return a * b


def jet_exp(a: TruncatedJet) -> TruncatedJet:
    return a.exp()


def jet_from_terms(n: int, cutoff: int, terms: dict, ring=QQI) -> TruncatedJet:
    """Build a 2n-variable jet from ``{(A, B): coeff}``."""
    return TruncatedJet(2 * n, cutoff, {join_key(A, B): ring.coerce(v) if ring is QQI else v
                                        for (A, B), v in terms.items()}, ring)


class JetRing:
    """Truncated jets as scalars.

    Every element is a 2n-variable jet of cutoff ``degree``. ``directions``
    records which variables a shift may move along ('both', 'holo' or
    'anti'); it is bookkeeping for callers, multiplication ignores it.
    """

    exact = True

    def __init__(self, n: int, degree: int, directions: str = "both", base=QQI):
        if directions not in ("both", "holo", "anti"):
            raise ValueError(f"unknown shift direction {directions!r}")
        self.n = n
        self.degree = degree
        self.directions = directions
        self.base = base
        self.exact = base.exact
        self.name = f"jets[{n},{degree},{directions}]"
        self.zero = TruncatedJet._raw(2 * n, degree, base, {})
        self.one = TruncatedJet._raw(2 * n, degree, base, {0: base.one})

    def const(self, q):
        return TruncatedJet._raw(2 * self.n, self.degree, self.base, {0: self.base.const(q)})

    def coerce(self, x):
        if isinstance(x, TruncatedJet):
            return x
        return TruncatedJet._raw(2 * self.n, self.degree, self.base, {0: self.base.coerce(x)})

    def is_zero(self, x) -> bool:
        return x.is_zero()

    @staticmethod
    def conj(x):
        return x.conj()

    @staticmethod
    def inv(x):
        return x.inverse()

    def variables(self):
        """Indices of the 2n jet variables a shift may move."""
        n = self.n
        if self.directions == "holo":
            return tuple(range(n))
        if self.directions == "anti":
            return tuple(range(n, 2 * n))
        return tuple(range(2 * n))

    def __repr__(self):
        return self.name


def shifted_taylor(F: TruncatedJet, A, B, ring: JetRing):
    """Taylor coefficient ``[y^A ybar^B]`` of ``f`` at the shifted point, as a jet.

    ``F`` is the Taylor jet of ``f`` at ``p`` (2n variables). The result is the
    jet in the shift variables of ``[y^A ybar^B] f(p + delta + y)``, namely
    ``sum_C F[(A,B)+C] * binom((A,B)+C, C) * delta^C`` over shift monomials ``C``
    permitted by ``ring.directions`` with ``|C| <= ring.degree``.
    """
    base_e = tuple(A) + tuple(B)
    need = sum(base_e) + ring.degree
    if need > F.cutoff:
        raise ValueError(f"jet of order {F.cutoff} too short: need {need}")
    keep = ring.variables()
    out = {}
    nv = 2 * ring.n
    for k, v in F.c.items():
        e = unpack(k, nv)
        ok = True
        mult = 1
        shift = [0] * nv
        for i in range(nv):
            d = e[i] - base_e[i]
            if d < 0 or (d and i not in keep):
                ok = False
                break
            if d:
                mult *= comb(e[i], d)
                shift[i] = d
        if not ok or sum(shift) > ring.degree:
            continue
        out[pack(shift)] = v * mult if mult != 1 else v
    return TruncatedJet._raw(nv, ring.degree, F.ring, out)


def shifted_derivative(F: TruncatedJet, A, B, ring: JetRing):
    """``d^A dbar^B f`` at the shifted point, as a jet in the shift variables."""
    from .rings import mfact
    t = shifted_taylor(F, A, B, ring)
    f = mfact(tuple(A)) * mfact(tuple(B))
    return t if f == 1 else t * f


# ---------------------------------------------------------------------------


class HbarSeries:
    """Truncated power series in hbar, stored internally by powers of eps = hbar^(1/2).

    ``eps[m]`` is the coefficient of ``eps^m``; the cutoff is ``hbar^K``.
    """

    __slots__ = ("eps", "K", "ring")

    def __init__(self, eps_coeffs, K: int, ring=QQI):
        eps = list(eps_coeffs)[: 2 * K + 1]
        eps += [ring.zero] * (2 * K + 1 - len(eps))
        self.eps = eps
        self.K = K
        self.ring = ring

    @classmethod
    def from_hbar(cls, coeffs, K=None, ring=QQI):
        coeffs = list(coeffs)
        if K is None:
            K = len(coeffs) - 1
        eps = []
        for c in coeffs[: K + 1]:
            eps += [c, ring.zero]
        return cls(eps, K, ring)

    @classmethod
    def one(cls, K, ring=QQI):
        return cls.from_hbar([ring.one], K, ring)

    def coeff(self, k: int):
        return self.eps[2 * k] if 2 * k < len(self.eps) else self.ring.zero

    def coeffs(self) -> list:
        return [self.coeff(k) for k in range(self.K + 1)]

    def odd_parts(self) -> list:
        return self.eps[1::2]

    def is_even(self) -> bool:
        return all(self.ring.is_zero(c) for c in self.odd_parts())

    def assert_even(self):
        if not self.is_even():
            bad = [2 * i + 1 for i, c in enumerate(self.odd_parts()) if not self.ring.is_zero(c)]
            raise ArithmeticError(f"odd powers of hbar^(1/2) survived: eps^{bad}")
        return self

    def _other(self, other):
        if isinstance(other, HbarSeries):
            return other
        return HbarSeries.from_hbar([other], self.K, self.ring)

    def __add__(self, other):
        o = self._other(other)
        K = min(self.K, o.K)
        return HbarSeries([a + b for a, b in zip(self.eps, o.eps)], K, self.ring)

    __radd__ = __add__

    def __neg__(self):
        return HbarSeries([-a for a in self.eps], self.K, self.ring)

    def __sub__(self, other):
        return self + (-self._other(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, HbarSeries):
            return HbarSeries([a * other for a in self.eps], self.K, self.ring)
        K = min(self.K, other.K)
        N = 2 * K + 1
        out = [self.ring.zero] * N
        for i in range(N):
            a = self.eps[i]
            if self.ring.is_zero(a):
                continue
            for j in range(N - i):
                out[i + j] = out[i + j] + a * other.eps[j]
        return HbarSeries(out, K, self.ring)

    def __rmul__(self, other):
        return HbarSeries([other * a for a in self.eps], self.K, self.ring)

    def map(self, fn, ring=None):
        return HbarSeries([fn(a) for a in self.eps], self.K, ring or self.ring)

    def truncate(self, K: int):
        return HbarSeries(self.eps[: 2 * K + 1], K, self.ring)

    def invert(self):
        """Multiplicative inverse via the Neumann recursion."""
        a0 = self.eps[0]
        if self.ring.is_zero(a0):
            raise ZeroDivisionError("series with zero leading coefficient is not invertible")
        inv0 = self.ring.inv(a0)
        N = 2 * self.K + 1
        out = [inv0] + [self.ring.zero] * (N - 1)
        for m in range(1, N):
            s = self.ring.zero
            for j in range(1, m + 1):
                s = s + self.eps[j] * out[m - j]
            out[m] = -(s * inv0)
        return HbarSeries(out, self.K, self.ring)

    def __eq__(self, other):
        if not isinstance(other, HbarSeries):
            return NotImplemented
        K = min(self.K, other.K)
        return all(a == b for a, b in zip(self.eps[: 2 * K + 1], other.eps[: 2 * K + 1]))

    __hash__ = None

    def __repr__(self):
        parts = [f"({c})*hbar^{k}" for k, c in enumerate(self.coeffs())]
        return "HbarSeries(" + " + ".join(parts) + f"; K={self.K})"


def series_invert(s: HbarSeries) -> HbarSeries:
    return s.invert()


def graded_jet_keys(n: int, cutoff: int):
    """All (A, B) pairs of a 2n-variable jet up to ``cutoff``, graded order."""
    for d in range(cutoff + 1):
        for da in range(d + 1):
            for A in multi_indices(n, da):
                for B in multi_indices(n, d - da):
                    yield A, B
