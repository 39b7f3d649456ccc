"""The bullet product by direct Laplace expansion.

With ``v = z + eps y`` the integrand of the bullet product becomes

    f1(z, zbar + eps ybar) f2(z + eps y, zbar) exp(V)

against the normalised Gaussian weight ``exp(-(Hy, ybar))``. Expanding in
``eps`` and integrating monomial by monomial gives every coefficient
exactly. The central object is the moment

    <y^A ybar^B E_e>,   exp(V) = sum_e eps^e E_e,

from which both the bidifferential operator of the product and arbitrary
Gaussian integrals are read off.
"""
from __future__ import annotations

import json

from gmpy2 import mpq

from .jets import HbarSeries, TruncatedJet, join_key, kdeg, split_key
from .models import BudgetError, JetContext, interaction_potential
from .rings import QQI, QQi, madd, mfact, multi_indices
from .wick import WickTable

__all__ = ["LaplaceEngine", "OperatorSeries", "engine_for", "bullet_oracle",
           "bullet_operator_oracle", "laplace_integrate", "vacuum_constant"]


def _imbalance_fn(n):
    cache = {}
    shift = 6 * n
    low = (1 << shift) - 1

    def imb(key):
        v = cache.get(key)
        if v is None:
            v = kdeg(key & low) - kdeg(key >> shift)
            cache[key] = v
        return v

    return imb


class _Tables:
    """Everything an engine caches; holds no reference back to the context."""

    __slots__ = ("wick", "E", "budget", "V", "ops", "imb")

    def __init__(self, ctx):
        self.wick = WickTable(ctx.hinv, ctx.ring)
        self.E = [{0: ctx.ring.one}]
        self.budget = 0
        self.V = None
        self.ops = {}
        self.imb = _imbalance_fn(ctx.n)


class LaplaceEngine:
    """Moment tables of ``exp(V)`` for one context.

    The tables live on the context, so engines for the same context share
    them and no reference cycle keeps large jets alive.
    """

    def __init__(self, ctx: JetContext):
        self.ctx = ctx
        self.n = ctx.n
        self.ring = ctx.ring
        t = getattr(ctx, "_laplace_tables", None)
        if t is None:
            t = ctx._laplace_tables = _Tables(ctx)
        self._t = t

    @property
    def wick(self):
        return self._t.wick

    def expansion(self, max_eps: int):
        """``E_e`` for ``e <= max_eps``, pruned to monomials that can still pair."""
        if max_eps <= self._t.budget and self._t.V is not None:
            return self._t.E
        R = self.ring
        V = interaction_potential(self.ctx, max_eps)
        self._t.V = V
        imb = self._t.imb
        E = [{0: R.one}]
        # imbalance |deg y - deg ybar| of E_e must not exceed what jets of total
        # degree max_eps - e can compensate
        for e in range(1, max_eps + 1):
            room = max_eps - e
            acc = {}
            get = acc.get
            for j in range(1, e + 1):
                Vj = V.get(j)
                if not Vj:
                    continue
                prev = E[e - j]
                for k1, c1 in Vj.items():
                    cj = c1 * j
                    for k2, c2 in prev.items():
                        k = k1 + k2
                        if abs(imb(k)) > room:
                            continue
                        p = cj * c2
                        old = get(k)
                        acc[k] = p if old is None else old + p
            inv = R.const(mpq(1, e))
            E.append({k: v * inv for k, v in acc.items() if not R.is_zero(v)})
        self._t.E = E
        self._t.budget = max_eps
        return E

    def eps_table(self, m: int) -> dict:
        """``T[(B, A)] = <y^A ybar^B E_{m-|A|-|B|}>`` for every ``|A|+|B| <= m``."""
        E = self.expansion(max(m, self._t.budget))
        n = self.n
        R = self.ring
        wick = self.wick
        imb = self._t.imb
        out = {}
        for e in range(0, m + 1):
            s = m - e
            for key, c in E[e].items():
                d = imb(key)
                if (s - d) % 2 or abs(d) > s:
                    continue
                a = (s + d) // 2  # |B| of the jet
                b = (s - d) // 2  # |A|
                # pairing y^(A+Am) ybar^(B+Bm) needs |A| + |Am| = |B| + |Bm|
                Am, Bm = split_key(key, n)
                for A in multi_indices(n, b):
                    AA = madd(A, Am)
                    for B in multi_indices(n, a):
                        w = wick(AA, madd(B, Bm))
                        if R.is_zero(w):
                            continue
                        k2 = (B, A)
                        old = out.get(k2)
                        p = c * w
                        out[k2] = p if old is None else old + p
        return out

    def operator(self, k: int) -> dict:
        """``C_k[(J, I)]``: coefficient of ``hbar^k dbar^J f1 d^I f2``."""
        if k in self._t.ops:
            return self._t.ops[k]
        self.ctx.require(k)
        if k == 0:
            z = (0,) * self.n
            tab = {(z, z): self.ring.one}
        else:
            T = self.eps_table(2 * k)
            tab = {}
            for (J, I), v in T.items():
                f = mfact(I) * mfact(J)
                tab[(J, I)] = v if f == 1 else v * self.ring.const(mpq(1, f))
        self._t.ops[k] = tab
        return tab

    def operator_series(self, K: int) -> "OperatorSeries":
        self.ctx.require(K)
        self.expansion(2 * K)
        return OperatorSeries(self.n, K, [self.operator(k) for k in range(K + 1)], self.ring)


def engine_for(ctx: JetContext) -> LaplaceEngine:
    return LaplaceEngine(ctx)


class OperatorSeries:
    """``sum_k hbar^k sum_{J,I} C_k[J,I] dbar^J f1 d^I f2``."""

    def __init__(self, n: int, K: int, tables: list, ring=QQI, header: dict | None = None):
        self.n = n
        self.K = K
        self.tables = tables
        self.ring = ring
        self.header = header or {}

    def __getitem__(self, k):
        return self.tables[k]

    def coeff(self, k, J, I):
        return self.tables[k].get((tuple(J), tuple(I)), self.ring.zero)

    def apply(self, f1: TruncatedJet, f2: TruncatedJet, K: int | None = None) -> HbarSeries:
        """Evaluate on the Taylor jets of f1, f2 at the base point."""
        K = self.K if K is None else K
        _check_jet(f1, 2 * K)
        _check_jet(f2, 2 * K)
        R = self.ring
        z = (0,) * self.n
        out = []
        for k in range(K + 1):
            s = R.zero
            for (J, I), c in self.tables[k].items():
                a = f1[join_key(z, J)]
                b = f2[join_key(I, z)]
                if _zero(a) or _zero(b):
                    continue
                s = s + c * (a * b * (mfact(I) * mfact(J)))
            out.append(s)
        return HbarSeries.from_hbar(out, K, R)

    def integrate(self, G, K: int | None = None) -> HbarSeries:
        """``sum_k hbar^k sum_{A,B} g_AB A! B! C_k[B, A]`` for an integrand jet G.

        ``G`` is a jet (2n variables, Taylor coefficients of the integrand at
        the base point) or an :class:`HbarSeries` of such jets.
        """
        K = self.K if K is None else K
        R = self.ring
        if isinstance(G, HbarSeries):
            parts = [G.coeff(l) for l in range(min(G.K, K) + 1)]
        else:
            parts = [G]
        out = [R.zero] * (K + 1)
        for l, g in enumerate(parts):
            _check_jet(g, 2 * (K - l))
            for k in range(K - l + 1):
                s = R.zero
                for (B, A), c in self.tables[k].items():
                    v = g[join_key(A, B)]
                    if _zero(v):
                        continue
                    s = s + c * (v * (mfact(A) * mfact(B)))
                out[k + l] = out[k + l] + s
        return HbarSeries.from_hbar(out, K, R)

    def __eq__(self, other):
        if not isinstance(other, OperatorSeries):
            return NotImplemented
        return not self.diff(other)

    __hash__ = None

    def diff(self, other, limit: int | None = None) -> list:
        """Entries where two operator series disagree: ``[(k, J, I, a, b)]``."""
        out = []
        K = min(self.K, other.K)
        R = self.ring
        for k in range(K + 1):
            keys = sorted(set(self.tables[k]) | set(other.tables[k]), key=_order_key)
            for key in keys:
                a = self.tables[k].get(key, R.zero)
                b = other.tables[k].get(key, R.zero)
                if a != b:
                    out.append((k, key[0], key[1], a, b))
                    if limit and len(out) >= limit:
                        return out
        return out

    def to_json(self) -> dict:
        series = []
        for k, tab in enumerate(self.tables):
            terms = []
            for (J, I) in sorted(tab, key=_order_key):
                v = tab[(J, I)]
                if v == 0:
                    continue
                terms.append({"J": list(J), "I": list(I), **v.to_json()})
            series.append({"k": k, "terms": terms})
        return {"header": dict(self.header), "series": series}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, d: dict) -> "OperatorSeries":
        tables = []
        n = None
        for entry in sorted(d["series"], key=lambda e: e["k"]):
            tab = {}
            for t in entry["terms"]:
                J, I = tuple(t["J"]), tuple(t["I"])
                n = len(J)
                tab[(J, I)] = QQi.from_json(t)
            tables.append(tab)
        hdr = d.get("header", {})
        n = n or int(hdr.get("n", 1))
        return cls(n, len(tables) - 1, tables, QQI, hdr)


def _order_key(key):
    J, I = key
    return (sum(J) + sum(I), sum(J), tuple(-x for x in J), tuple(-x for x in I))


def _zero(x):
    if isinstance(x, QQi):
        return not x.re and not x.im
    if isinstance(x, TruncatedJet):
        return not x.c
    return False


def _check_jet(f, need):
    if isinstance(f, TruncatedJet) and f.cutoff < need:
        raise BudgetError(f"function jet of order {f.cutoff} is too short; "
                          f"order {need} is required")


# --- public operations ----------------------------------------------------------

def bullet_oracle(ctx: JetContext, f1: TruncatedJet, f2: TruncatedJet, K: int) -> HbarSeries:
    """``f1 • f2`` at the base point by literal eps-expansion and Wick pairing.

    All eps powers (odd ones included) are computed and the odd ones are
    asserted to cancel.
    """
    ctx.require(K)
    _check_jet(f1, 2 * K)
    _check_jet(f2, 2 * K)
    eng = engine_for(ctx)
    E = eng.expansion(2 * K)
    R = ctx.ring
    n = ctx.n
    # f1(z, zbar + eps ybar) f2(z + eps y, zbar) as {(A, B): coeff} by degree
    prod = {}
    for (e1, c1) in f1.items():
        if any(e1[:n]):
            continue
        B = tuple(e1[n:])
        for (e2, c2) in f2.items():
            if any(e2[n:]):
                continue
            A = tuple(e2[:n])
            d = sum(A) + sum(B)
            if d <= 2 * K:
                key = (A, B)
                p = c1 * c2
                prod[key] = prod[key] + p if key in prod else p
    wick = eng.wick
    out = [R.zero] * (2 * K + 1)
    for (A, B), c in prod.items():
        d = sum(A) + sum(B)
        for e in range(0, 2 * K + 1 - d):
            for key, cm in E[e].items():
                Am, Bm = split_key(key, n)
                w = wick(madd(A, Am), madd(B, Bm))
                if not _zero(w):
                    out[d + e] = out[d + e] + c * cm * w
    return HbarSeries(out, K, R).assert_even()


def bullet_operator_oracle(ctx: JetContext, K: int) -> OperatorSeries:
    return engine_for(ctx).operator_series(K)


def laplace_integrate(ctx: JetContext, G, K: int) -> HbarSeries:
    """Normalised formal integral of ``G(v) exp(phi/hbar)`` at the base point."""
    return engine_for(ctx).operator_series(K).integrate(G, K)


def vacuum_constant(ctx: JetContext):
    """The constant D: coefficient of hbar^2 in ``1 • 1``."""
    z = (0,) * ctx.n
    return engine_for(ctx).operator(2).get((z, z), ctx.ring.zero)


def bullet_jets(op: OperatorSeries, f1, f2, K=None) -> HbarSeries:
    return op.apply(f1, f2, K)
