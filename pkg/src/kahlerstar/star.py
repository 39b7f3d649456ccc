"""Unit element, normalized product and contravariant symbols.

Derived quantities are computed in jet-scalar mode: the engines run over a
ring of truncated jets in shift variables ``delta``, so a coefficient
computed at ``p + delta`` is the Taylor jet at ``p`` of that coefficient.

Series of jets are *balanced*: with cutoff ``K`` and base degree ``d`` the
``hbar^m`` coefficient is a jet of degree ``d + 2(K - m)``. The ``hbar^k``
part of every operator here differentiates at most ``2k`` times, so
balanced series map to balanced series with the same base.
"""
from __future__ import annotations

from itertools import product
from math import comb, prod

from gmpy2 import mpq

from .jets import HbarSeries, JetRing, TruncatedJet, join_key, shifted_derivative, shifted_taylor
from .laplace import OperatorSeries, engine_for
from .models import BudgetError, KahlerJets, ModelError, PotentialModel, kahler_jets
from .rings import QQI, mfact, msub

__all__ = ["JetSeries", "StarAlgebra", "UnitElement", "star_algebra", "unit_element",
           "normalized_star", "star_operator", "i_map", "i_inverse", "hat_star",
           "sub_indices"]

DIRECTIONS = ("anti", "holo", "both")


def sub_indices(J):
    """All multi-indices ``J' <= J`` componentwise."""
    return product(*(range(j + 1) for j in J))


def _binom(J, Jp):
    return prod(comb(a, b) for a, b in zip(J, Jp))


class JetSeries:
    """Balanced hbar-series of Taylor jets at the base point.

    ``directions`` says which shift variables the jets are valid in: a
    product evaluated along ``anti`` only knows the pure-antiholomorphic
    part of its result's jet.
    """

    def __init__(self, n: int, K: int, base: int, coeffs, directions: str = "both",
                 ring=QQI):
        self.n, self.K, self.base = n, K, base
        self.directions = directions
        self.ring = ring
        self.coeffs = list(coeffs)
        if len(self.coeffs) != K + 1:
            raise ValueError("need one jet per power of hbar")
        for m, c in enumerate(self.coeffs):
            if c.cutoff < self.degree(m):
                raise BudgetError(f"hbar^{m} jet has order {c.cutoff}, "
                                  f"{self.degree(m)} required")

    def degree(self, m: int) -> int:
        return self.base + 2 * (self.K - m)

    @classmethod
    def from_jet(cls, f: TruncatedJet, K: int, base: int = 0) -> "JetSeries":
        """The hbar-independent function with Taylor jet ``f``."""
        n = f.nvars // 2
        need = base + 2 * K
        if f.cutoff < need:
            raise BudgetError(f"function jet of order {f.cutoff} is too short; "
                              f"order {need} is required")
        coeffs = [f.truncate(need)] + [TruncatedJet._raw(f.nvars, base + 2 * (K - m), f.ring, {})
                                       for m in range(1, K + 1)]
        return cls(n, K, base, coeffs, "both", f.ring)

    def __getitem__(self, m):
        return self.coeffs[m]

    def values(self) -> HbarSeries:
        return HbarSeries.from_hbar([c.constant() for c in self.coeffs], self.K, self.ring)

    def _zip(self, other, fn):
        if (self.K, self.base) != (other.K, other.base):
            raise ValueError("series with different cutoffs or base degrees")
        dirs = self.directions if self.directions == other.directions else \
            _meet(self.directions, other.directions)
        return JetSeries(self.n, self.K, self.base, [fn(a, b) for a, b in
                                                     zip(self.coeffs, other.coeffs)],
                         dirs, self.ring)

    def __add__(self, other):
        return self._zip(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._zip(other, lambda a, b: a - b)

    def __mul__(self, other):
        """Pointwise product of the functions (Cauchy product in hbar)."""
        if not isinstance(other, JetSeries):
            return JetSeries(self.n, self.K, self.base, [c * other for c in self.coeffs],
                             self.directions, self.ring)
        out = []
        for m in range(self.K + 1):
            d = self.degree(m)
            acc = TruncatedJet._raw(2 * self.n, d, self.ring, {})
            for a in range(m + 1):
                acc = acc + self.coeffs[a].truncate(d) * other.coeffs[m - a].truncate(d)
            out.append(acc)
        return JetSeries(self.n, self.K, self.base, out, _meet(self.directions,
                                                               other.directions), self.ring)

    def restrict(self, directions: str) -> "JetSeries":
        """Drop the jet components outside ``directions``."""
        n = self.n
        if directions == "both":
            return self
        keep = range(n) if directions == "holo" else range(n, 2 * n)
        out = [c.restrict(set(keep)) for c in self.coeffs]
        return JetSeries(n, self.K, self.base, out, directions, self.ring)

    def __eq__(self, other):
        if not isinstance(other, JetSeries):
            return NotImplemented
        if (self.K, self.base) != (other.K, other.base):
            return False
        return all((a - b).is_zero() for a, b in zip(self.coeffs, other.coeffs))

    __hash__ = None

    def __repr__(self):
        return f"JetSeries(K={self.K}, base={self.base}, {self.directions})"


def _meet(a, b):
    if a == b or b == "both":
        return a
    if a == "both":
        return b
    return "none"


class UnitElement:
    """``e_hbar`` as Taylor jets of each coefficient, valid along ``directions``."""

    def __init__(self, series: JetSeries):
        self.series = series
        self.directions = series.directions
        self.K = series.K

    @property
    def jets(self):
        return self.series.coeffs

    def values(self) -> HbarSeries:
        return self.series.values()

    def inverse_values(self) -> HbarSeries:
        return self.values().invert()

    def is_real(self) -> bool:
        """``conj(e^(l)) == e^(l)`` (meaningful for ``both`` jets)."""
        return all((j.conj() - j).is_zero() for j in self.jets)


class StarAlgebra:
    """Products, unit and contravariant map of one Kähler potential near ``p``.

    ``kj`` must be shiftable (closed-form models). ``K`` is the hbar cutoff
    and ``base`` the jet degree wanted for results at ``hbar^K``.
    """

    def __init__(self, kj: KahlerJets, K: int, base: int = 0, engine: str = "oracle"):
        if not kj.shiftable:
            raise ModelError("jet-valued evaluation needs a closed-form model; jet tables "
                             "only provide derivatives at their own point")
        need = 2 * K + 2 + base
        if kj.N < need:
            raise BudgetError(f"order {K} with base degree {base} needs potential jets of "
                              f"order {need}; got {kj.N}")
        if engine not in ("oracle", "graphs"):
            raise ValueError(f"unknown engine {engine!r}")
        self.kj, self.K, self.base, self.engine = kj, K, base, engine
        self.n = kj.n
        self.base_ring = kj.ring
        self._ctx = {}
        self._tables = {}
        self._units = {}
        self._ops = {}

    # --- bullet coefficients --------------------------------------------------
    def degree(self, m: int) -> int:
        return self.base + 2 * (self.K - m)

    def ring(self, directions, m):
        if directions is None:
            return self.base_ring
        return JetRing(self.n, self.degree(m), directions, self.base_ring)

    def context(self, directions, D):
        key = (directions, D)
        ctx = self._ctx.get(key)
        if ctx is None:
            if directions is None:
                ctx = self.kj.context(None)
            else:
                ctx = self.kj.context(JetRing(self.n, D, directions, self.base_ring))
            self._ctx[key] = ctx
        return ctx

    def table(self, k: int, directions, m: int | None = None) -> dict:
        """``C_k`` at ``p + delta``, with jets truncated to the degree of ``hbar^m``."""
        m = k if m is None else m
        key = (k, directions)
        tab = self._tables.get(key)
        if tab is None:
            D = None if directions is None else self.degree(k)
            ctx = self.context(directions, D)
            if self.engine == "graphs":
                from .graphs import graph_operator_series
                tab = graph_operator_series(ctx, k).tables[k]
            else:
                tab = engine_for(ctx).operator(k)
            self._tables[key] = tab
        if directions is None or m == k:
            return tab
        d = self.degree(m)
        return {key: v.truncate(d) for key, v in tab.items()}

    def bullet_operator(self) -> OperatorSeries:
        """Bidifferential coefficients of the bullet product at ``p``."""
        return OperatorSeries(self.n, self.K, [self.table(k, None) for k in range(self.K + 1)],
                              self.base_ring)

    # --- unit element -----------------------------------------------------------
    def unit(self, directions: str = "both") -> UnitElement:
        """Solve ``e • 1 = 1`` (or ``1 • e = 1`` along ``holo``) order by order."""
        if directions not in DIRECTIONS:
            raise ValueError(f"unknown direction {directions!r}")
        u = self._units.get(directions)
        if u is not None:
            return u
        n, K = self.n, self.K
        z = (0,) * n
        R0 = self.base_ring
        E = [TruncatedJet._raw(2 * n, self.degree(0), R0, {0: R0.one})]
        for l in range(1, K + 1):
            R = self.ring(directions, l)
            acc = R.zero
            for k in range(1, l + 1):
                for (J, I), c in self.table(k, directions, l).items():
                    if directions == "holo":
                        if any(J):
                            continue
                        acc = acc + c * shifted_derivative(E[l - k], I, z, R)
                    else:
                        if any(I):
                            continue
                        acc = acc + c * shifted_derivative(E[l - k], z, J, R)
            E.append(-acc)
        u = UnitElement(JetSeries(n, K, self.base, E, directions, R0))
        self._units[directions] = u
        return u

    # --- derivatives of e at the (shifted) point -------------------------------
    def _e_source(self, directions):
        """Units providing anti and holo derivatives of ``e`` along ``directions``."""
        if directions is None:
            return self.unit("anti"), self.unit("holo")
        u = self.unit("both")
        return u, u

    def _e_taylor(self, E, A, B, R):
        if isinstance(R, JetRing):
            return shifted_taylor(E, A, B, R)
        return E[join_key(A, B)]

    def _e_inverse(self, directions, m):
        """Coefficients of ``1/e`` at ``p + delta`` up to ``hbar^m``, in the ring of ``m``."""
        R = self.ring(directions, m)
        ua, _ = self._e_source(directions)
        z = (0,) * self.n
        vals = [self._e_taylor(ua.jets[l], z, z, R) for l in range(m + 1)]
        return HbarSeries.from_hbar(vals, m, R).invert().coeffs()

    # --- normalized product -------------------------------------------------------
    def star_table(self, k: int, directions=None) -> dict:
        """``C~_k[J, I]`` of ``f1 ⋆ f2 = e^-1 ((f1 e) • (f2 e))``."""
        key = ("star", k, directions)
        tab = self._ops.get(key)
        if tab is not None:
            return tab
        R = self.ring(directions, k)
        ua, uh = self._e_source(directions)
        n = self.n
        z = (0,) * n
        raw = [dict() for _ in range(k + 1)]  # by total order k1 + l1 + l2 <= k
        for k1 in range(k + 1):
            tab1 = self.table(k1, directions, k)
            for l1 in range(k - k1 + 1):
                for l2 in range(k - k1 - l1 + 1):
                    t = k1 + l1 + l2
                    out = raw[t]
                    ea, eh = ua.jets[l1], uh.jets[l2]
                    for (J, I), c in tab1.items():
                        for Jp in sub_indices(J):
                            Jd = msub(J, Jp)
                            a = self._e_deriv(ea, z, Jd, R)
                            if _nil(a):
                                continue
                            ca = c * a * _binom(J, Jp)
                            for Ip in sub_indices(I):
                                Id = msub(I, Ip)
                                b = self._e_deriv(eh, Id, z, R)
                                if _nil(b):
                                    continue
                                v = ca * b * _binom(I, Ip)
                                kk = (Jp, Ip)
                                out[kk] = out[kk] + v if kk in out else v
        inv = self._e_inverse(directions, k)
        tab = {}
        for t in range(k + 1):
            w = inv[k - t]
            if _nil(w):
                continue
            for kk, v in raw[t].items():
                p = v * w
                tab[kk] = tab[kk] + p if kk in tab else p
        tab = {kk: v for kk, v in tab.items() if not _nil(v)}
        self._ops[key] = tab
        return tab

    def _e_deriv(self, E, A, B, R):
        if isinstance(R, JetRing):
            return shifted_derivative(E, A, B, R)
        return E[join_key(A, B)] * (mfact(A) * mfact(B))

    def star_operator(self) -> OperatorSeries:
        return OperatorSeries(self.n, self.K, [self.star_table(k) for k in range(self.K + 1)],
                              self.base_ring)

    # --- applying operators to jet series ------------------------------------------
    def _apply2(self, tables, F1: JetSeries, F2: JetSeries, directions) -> JetSeries:
        self._check_series(F1)
        self._check_series(F2)
        n, K = self.n, self.K
        z = (0,) * n
        out = []
        for m in range(K + 1):
            R = self.ring(directions, m)
            acc = R.zero
            for k in range(m + 1):
                tab = tables(k)
                d = self.degree(m)
                for a in range(m - k + 1):
                    b = m - k - a
                    f1, f2 = F1[a], F2[b]
                    if f1.is_zero() or f2.is_zero():
                        continue
                    for (J, I), c in tab.items():
                        x = shifted_derivative(f1, z, J, R)
                        if x.is_zero():
                            continue
                        y = shifted_derivative(f2, I, z, R)
                        if y.is_zero():
                            continue
                        acc = acc + c.truncate(d) * x * y
            out.append(acc)
        return JetSeries(n, K, self.base, out, directions, self.base_ring)

    def _check_series(self, F):
        if (F.K, F.base) != (self.K, self.base):
            raise ValueError(f"series has K={F.K}, base={F.base}; expected "
                             f"K={self.K}, base={self.base}")

    def series(self, f) -> JetSeries:
        if isinstance(f, JetSeries):
            return f
        return JetSeries.from_jet(f, self.K, self.base)

    def bullet(self, f1, f2, directions: str = "both") -> JetSeries:
        """``f1 • f2`` as Taylor jets along ``directions``."""
        return self._apply2(lambda k: self.table(k, directions), self.series(f1),
                            self.series(f2), directions)

    def star(self, f1, f2, directions: str = "both") -> JetSeries:
        """``f1 ⋆ f2`` as Taylor jets along ``directions``."""
        return self._apply2(lambda k: self.star_table(k, directions), self.series(f1),
                            self.series(f2), directions)

    def bullet_value(self, f1, f2) -> HbarSeries:
        return self._apply_values(self.bullet_operator(), f1, f2)

    def star_value(self, f1, f2) -> HbarSeries:
        return self._apply_values(self.star_operator(), f1, f2)

    def _apply_values(self, op, f1, f2):
        if isinstance(f1, TruncatedJet) and isinstance(f2, TruncatedJet):
            return op.apply(f1, f2, self.K)
        F1, F2 = self.series(f1), self.series(f2)
        R = self.base_ring
        z = (0,) * self.n
        out = [R.zero] * (self.K + 1)
        for k in range(self.K + 1):
            for a in range(self.K - k + 1):
                for b in range(self.K - k - a + 1):
                    s = R.zero
                    for (J, I), c in op.tables[k].items():
                        x = F1[a][join_key(z, J)]
                        y = F2[b][join_key(I, z)]
                        s = s + c * x * y * (mfact(J) * mfact(I))
                    out[k + a + b] = out[k + a + b] + s
        return HbarSeries.from_hbar(out, self.K, R)

    # --- contravariant symbols ------------------------------------------------------
    def i_table(self, k: int, directions=None) -> dict:
        """``U_k[A, B]``: coefficient of ``hbar^k d^A dbar^B fhat`` in ``I(fhat)``."""
        key = ("imap", k, directions)
        tab = self._ops.get(key)
        if tab is not None:
            return tab
        R = self.ring(directions, k)
        ua, uh = self._e_source(directions)
        z = (0,) * self.n
        raw = [dict() for _ in range(k + 1)]
        for k1 in range(k + 1):
            tab1 = self.table(k1, directions, k)
            for l1 in range(k - k1 + 1):
                for l2 in range(k - k1 - l1 + 1):
                    out = raw[k1 + l1 + l2]
                    ea, eh = ua.jets[l1], uh.jets[l2]
                    for (B, A), c in tab1.items():
                        f = mfact(A) * mfact(B)
                        for Bp in sub_indices(B):
                            a = self._e_taylor(ea, z, msub(B, Bp), R)
                            if _nil(a):
                                continue
                            for Ap in sub_indices(A):
                                b = self._e_taylor(eh, msub(A, Ap), z, R)
                                if _nil(b):
                                    continue
                                v = c * a * b * R.const(mpq(f, mfact(Ap) * mfact(Bp)))
                                kk = (Ap, Bp)
                                out[kk] = out[kk] + v if kk in out else v
        inv = self._e_inverse(directions, k)
        tab = {}
        for t in range(k + 1):
            w = inv[k - t]
            if _nil(w):
                continue
            for kk, v in raw[t].items():
                p = v * w
                tab[kk] = tab[kk] + p if kk in tab else p
        tab = {kk: v for kk, v in tab.items() if not _nil(v)}
        self._ops[key] = tab
        return tab

    def _apply1(self, tables, F: JetSeries, directions, skip_identity=False) -> JetSeries:
        self._check_series(F)
        n, K = self.n, self.K
        out = []
        for m in range(K + 1):
            R = self.ring(directions, m)
            d = self.degree(m)
            acc = R.zero
            for k in range(1 if skip_identity else 0, m + 1):
                f = F[m - k]
                if f.is_zero():
                    continue
                for (A, B), c in tables(k).items():
                    x = shifted_derivative(f, A, B, R)
                    if not x.is_zero():
                        acc = acc + c.truncate(d) * x
            out.append(acc)
        return JetSeries(n, K, self.base, out, directions, self.base_ring)

    def i_map(self, fhat) -> JetSeries:
        """``I_hbar(fhat)`` as full Taylor jets."""
        return self._apply1(lambda k: self.i_table(k, "both"), self.series(fhat), "both")

    def i_map_value(self, fhat) -> HbarSeries:
        F = self.series(fhat)
        R = self.base_ring
        out = [R.zero] * (self.K + 1)
        for k in range(self.K + 1):
            for a in range(self.K - k + 1):
                s = R.zero
                for (A, B), c in self.i_table(k).items():
                    x = F[a][join_key(A, B)]
                    s = s + c * x * (mfact(A) * mfact(B))
                out[k + a] = out[k + a] + s
        return HbarSeries.from_hbar(out, self.K, R)

    def i_inverse(self, f) -> JetSeries:
        """Neumann inverse: iterate ``g <- f - (I - id) g``."""
        F = self.series(f)
        G = F
        for _ in range(self.K + 1):
            G = F - self._apply1(lambda k: self.i_table(k, "both"), G, "both",
                                 skip_identity=True)
        return G

    def hat_star(self, fhat1, fhat2) -> JetSeries:
        """``I^-1(I(fhat1) ⋆ I(fhat2))`` as full Taylor jets."""
        return self.i_inverse(self.star(self.i_map(fhat1), self.i_map(fhat2), "both"))


def _nil(x):
    if isinstance(x, TruncatedJet):
        return not x.c
    try:
        return not x
    except ValueError:
        return False


# --- functional front end -------------------------------------------------------------

def star_algebra(model, point, K: int, base: int = 0, ring=QQI, engine: str = "oracle",
                 extra: int = 0) -> StarAlgebra:
    """A :class:`StarAlgebra` with potential jets deep enough for ``K`` and ``base``."""
    if isinstance(model, KahlerJets):
        return StarAlgebra(model, K, base, engine)
    if not isinstance(model, PotentialModel):
        raise TypeError("expected a potential model or KahlerJets")
    if not model.supports_shift:
        raise ModelError(f"{model.name} only provides jets at its own point; the unit "
                         "element and star product need a closed-form model")
    kj = kahler_jets(model, point, 2 * K + 2 + base + extra, ring)
    return StarAlgebra(kj, K, base, engine)


def unit_element(model, point, K: int, depth: int = 0, directions: str = "both",
                 engine: str = "oracle") -> UnitElement:
    return star_algebra(model, point, K, depth, engine=engine).unit(directions)


def normalized_star(model, point, f1, f2, K: int, engine: str = "oracle") -> HbarSeries:
    return star_algebra(model, point, K, engine=engine).star_value(f1, f2)


def star_operator(model, point, K: int, engine: str = "oracle") -> OperatorSeries:
    return star_algebra(model, point, K, engine=engine).star_operator()


def i_map(model, point, fhat, K: int) -> HbarSeries:
    return star_algebra(model, point, K).i_map_value(fhat)


def i_inverse(model, point, f, K: int) -> HbarSeries:
    return star_algebra(model, point, K).i_inverse(f).values()


def hat_star(model, point, fhat1, fhat2, K: int) -> HbarSeries:
    return star_algebra(model, point, K).hat_star(fhat1, fhat2).values()
