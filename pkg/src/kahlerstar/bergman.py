"""Formal contour integrals in one complex dimension.

Around ``v = z`` write ``u = v - z`` and ``w = vbar - zbar``. With
``S = Phi(z, vbar) - Phi(v, vbar)`` and ``sigma = dbar_v S`` (which vanishes
like ``-h u``) the series

    A = sum_{k >= 1} (-1)^k hbar^k A_k,   A_1 = 1/sigma,   A_{k+1} = A_1 dbar A_k

solves ``dbar A + A sigma / hbar = -1``. Integrating by parts repeatedly
turns the normalised integral of ``g exp(S/hbar) h d^2v / (pi hbar)`` into

    (1/hbar) sum_{n >= 0} Res_{u=0} [A D^n(g h)]_{w=0} exp(S/hbar)|_{w=0},
    D = A dbar,

since on a shrinking circle only the ``w``-free part of each term survives.
``A_k`` carries ``hbar^k`` and a pole of order ``k`` together, so every
coefficient of the result is a finite sum as long as the exponent at
``w = 0`` vanishes. It does for the tilde-transformed integrands of the
equality of integrals, and for the Bergman projector in the normal gauge at
the base point evaluated along holomorphic shifts.
"""
from __future__ import annotations

from gmpy2 import mpq

from .jets import HbarSeries, JetRing, TruncatedJet, pack, shifted_taylor
from .models import BudgetError, JetContext
from .star import JetSeries, StarAlgebra

__all__ = ["LaurentJet", "a_coefficients", "oint_eval", "oint_core", "projector_apply",
           "projector_full_shift", "toeplitz_compose_check", "normal_gauge"]

U, W = 0, 1  # jet variables: u = v - z, w = vbar - zbar


class LaurentJet:
    """``u^-pole * reg`` with ``reg`` a jet in ``(u, w)``."""

    __slots__ = ("pole", "reg")

    def __init__(self, pole: int, reg: TruncatedJet):
        self.pole = pole
        self.reg = reg

    def __mul__(self, other):
        a, b = _fit(self.reg, other.reg)
        return LaurentJet(self.pole + other.pole, a * b)

    def dbar(self):
        return LaurentJet(self.pole, self.reg.diff(W))

    def coeff(self, a: int, b: int = 0):
        """Coefficient of ``u^a w^b``."""
        e = a + self.pole
        if e < 0:
            return self.reg.ring.zero
        if e + b > self.reg.cutoff:
            raise BudgetError(f"coefficient u^{a} w^{b} lies beyond the jet cutoff")
        return self.reg[pack((e, b))]

    def pole_order(self) -> int:
        """Actual order of the pole (the leading ``u`` power may vanish)."""
        R = self.reg.ring
        lead = min((k & 63 for k, v in self.reg.c.items() if not R.is_zero(v)), default=None)
        return 0 if lead is None else self.pole - lead

    def __repr__(self):
        return f"LaurentJet(u^-{self.pole} * {self.reg!r})"


def _fit(a, b):
    c = min(a.cutoff, b.cutoff)
    return (a if a.cutoff == c else a.truncate(c)), (b if b.cutoff == c else b.truncate(c))


def _mul(a, b):
    x, y = _fit(a, b)
    return x * y


def _uw_jet(cutoff, ring, terms):
    return TruncatedJet._raw(2, cutoff, ring, {pack(e): v for e, v in terms.items()
                                               if sum(e) <= cutoff})


def _metric_pieces(phi_t, cutoff, ring):
    """``tau = -sigma/u`` and ``h(v, vbar)`` as ``(u, w)`` jets."""
    tau, h = {}, {}
    for a in range(1, cutoff + 2):
        for b in range(1, cutoff + 3 - a):
            c = phi_t(a, b)
            tau[(a - 1, b - 1)] = c * b
            h[(a - 1, b - 1)] = c * (a * b)
    return _uw_jet(cutoff, ring, tau), _uw_jet(cutoff, ring, h)


def _phi_taylor(ctx: JetContext):
    def phi_t(a, b):
        return ctx.phi_taylor((a,), (b,))
    return phi_t


def a_coefficients(ctx: JetContext, order: int, cutoff: int | None = None) -> list:
    """``[A_1, ..., A_order]`` as :class:`LaurentJet`; ``A_k`` has a pole of order ``k``."""
    if ctx.n != 1:
        raise ValueError("contour integrals are implemented for n = 1")
    cutoff = 2 * order if cutoff is None else cutoff
    if ctx.order < cutoff + 2:
        raise BudgetError(f"A_k through order {order} need potential jets of order "
                          f"{cutoff + 2}; context has {ctx.order}")
    tau, _ = _metric_pieces(_phi_taylor(ctx), cutoff, ctx.ring)
    R1 = -tau.inverse()
    out = [LaurentJet(1, R1)]
    A1 = out[0]
    for _ in range(order - 1):
        out.append(A1 * out[-1].dbar())
    return out


def oint_core(phi_t, g: TruncatedJet, K: int, ring, E: TruncatedJet | None = None,
              lowest: int = 0) -> list:
    """Coefficients ``hbar^lowest .. hbar^K`` of the contour integral of ``g``.

    ``phi_t(a, b)`` gives Taylor coefficients of the potential at the
    evaluation point; ``g`` is the integrand's ``(u, w)`` jet (without the
    factor ``h``); ``E`` is the exponent ``S`` at ``w = 0`` as a ``u``-jet,
    or ``None`` when it vanishes. A non-zero ``E`` must be nilpotent in the
    scalar ring; ``lowest < 0`` collects the negative powers it creates.
    """
    top = K - lowest if E is not None else K  # deepest A-order that can reach hbar^K
    C = 2 * top
    if g.cutoff < C:
        raise BudgetError(f"integrand jet of order {g.cutoff} is too short; {C} is required")
    tau, h = _metric_pieces(phi_t, C, ring)
    g = g.truncate(C)
    F0 = _mul(g, h)
    R1 = -tau.inverse()
    Rk = [None, R1]
    for k in range(2, top + 2):
        Rk.append(_mul(R1, Rk[-1].diff(W)))
    Q = [F0]
    for j in range(1, top + 1):
        acc = None
        for k in range(1, j + 1):
            t = _mul(Rk[k], Q[j - k].diff(W))
            if k % 2:
                t = -t
            if acc is None:
                acc = t
            else:
                x, y = _fit(acc, t)
                acc = x + y
        Q.append(acc)
    Epow = [None]
    if E is not None:
        Epow = [TruncatedJet._raw(2, C, ring, {0: ring.one})]
        x = E.truncate(C)
        i = 1
        while True:
            nxt = Epow[-1] * x * ring.const(mpq(1, i))
            if nxt.is_zero():
                break
            Epow.append(nxt)
            i += 1
    out = [ring.zero] * (K - lowest + 1)
    for j in range(0, top + 1):
        for k in range(1, top + 2 - j):
            t = j + k - 1
            prodjet = _mul(Rk[k], Q[j])
            sign = -1 if k % 2 else 1
            for i, Ei in enumerate(Epow):
                p = t - i
                if p < lowest or p > K:
                    continue
                src = prodjet if Ei is None else _mul(prodjet, Ei)
                if t > src.cutoff:
                    raise BudgetError("contour integral needs deeper jets")
                c = src[pack((t, 0))]
                out[p - lowest] = out[p - lowest] + (c if sign > 0 else -c)
    return out


def oint_eval(ctx: JetContext, g: TruncatedJet, K: int) -> HbarSeries:
    """Contour integral of ``g~ = g exp((Phi(v, zbar) - Phi(z, zbar))/hbar)``.

    The tilde factor is holomorphic in ``v`` and cancels ``exp(S/hbar)`` on
    ``w = 0``, so only ``g`` (a 2-variable jet at the base point) is needed.
    By the equality of integrals this equals the Laplace integral of ``g``.
    """
    if ctx.n != 1:
        raise ValueError("contour integrals are implemented for n = 1")
    ctx.require(K)
    coeffs = oint_core(_phi_taylor(ctx), g, K, ctx.ring)
    return HbarSeries.from_hbar(coeffs, K, ctx.ring)


# --- the Bergman projector ----------------------------------------------------------

def normal_gauge(phi: TruncatedJet) -> TruncatedJet:
    """Drop the pure holomorphic and antiholomorphic Taylor terms at the base point."""
    return phi._like({k: v for k, v in phi.c.items()
                      if (k & 63) and (k >> 6)})


def _shifted_phi(S: StarAlgebra, R):
    ctx = S.context(R.directions, R.degree)

    def phi_t(a, b):
        return ctx.phi_taylor((a,), (b,))
    return phi_t


def _integrand(S: StarAlgebra, E_l: TruncatedJet, f: TruncatedJet, C: int, R):
    """``e^(l)(z, vbar) f(v, vbar)`` as a ``(u, w)`` jet at ``z = p + delta``."""
    terms_e = {}
    for b in range(C + 1):
        terms_e[(0, b)] = shifted_taylor(E_l, (0,), (b,), R)
    terms_f = {}
    for a in range(C + 1):
        for b in range(C + 1 - a):
            terms_f[(a, b)] = shifted_taylor(f, (a,), (b,), R)
    return _uw_jet(C, R, terms_e) * _uw_jet(C, R, terms_f)


def projector_apply(S: StarAlgebra, F) -> JetSeries:
    """``P_hbar(F)`` as holomorphic Taylor jets at the base point.

    The potential is put in the normal gauge at the base point (the
    projector depends on that choice by conjugation with ``exp(g/hbar)``
    for holomorphic ``g``). Along holomorphic shifts the exponent at
    ``w = 0`` then vanishes and every coefficient is a finite sum.
    """
    if S.n != 1:
        raise ValueError("the Bergman projector is implemented for n = 1")
    F = S.series(F)
    K = S.K
    eu = S.unit("both")
    out = []
    for m in range(K + 1):
        R = JetRing(1, S.degree(m), "holo", S.base_ring)
        phi_t = _shifted_phi(S, R)
        acc = R.zero
        for a in range(m + 1):
            if F[a].is_zero():
                continue
            for l in range(m - a + 1):
                k = m - a - l
                g = _integrand(S, eu.jets[l], F[a], 2 * k, R)
                acc = acc + oint_core(phi_t, g, k, R)[k]
        out.append(acc)
    return JetSeries(1, K, S.base, out, "holo", S.base_ring)


def projector_full_shift(model, point, f: TruncatedJet, K: int, depth: int):
    """``P_hbar(f)(p + delta)`` along all shift directions, for the holomorphy check.

    Returns ``(coeffs, negative)``: jets of degree ``depth`` for
    ``hbar^0..hbar^K`` and the coefficients of ``hbar^-depth..hbar^-1``,
    which must vanish. Off holomorphic shifts the exponent at ``w = 0`` is
    nilpotent (every term carries a ``deltabar``), so the negative powers it
    creates are collected and cancelled explicitly.
    """
    from .star import star_algebra
    if model.n != 1:
        raise ValueError("the Bergman projector is implemented for n = 1")
    Kint = K + depth
    S = star_algebra(model, point, Kint, depth)
    kj = S.kj
    R = JetRing(1, depth, "both", S.base_ring)
    ctx = S.context("both", depth)

    def phi_t(a, b):
        return ctx.phi_taylor((a,), (b,))

    gauge = normal_gauge(kj.phi)
    C = 2 * Kint
    E = _uw_jet(C, R, {(a, 0): -shifted_taylor(gauge, (a,), (0,), R) for a in range(1, C + 1)})
    need = C + depth
    # f is needed to (u, w)-order 2 * Kint at the shifted point
    if f.cutoff < need:
        raise BudgetError(f"function jet of order {f.cutoff} is too short; {need} is required")
    eu = S.unit("both")
    total = [R.zero] * (K + depth + 1)
    for l in range(min(Kint, K + depth) + 1):
        g = _integrand(S, eu.jets[l], f, 2 * (Kint - l), R)
        part = oint_core(phi_t, g, K - l, R, E, lowest=-depth)
        for idx, c in enumerate(part):
            p = idx - depth + l
            if p <= K:
                total[p + depth] = total[p + depth] + c
    return total[depth:], total[:depth]


def toeplitz_compose_check(S: StarAlgebra, fhat1, fhat2, g):
    """``F1(F2(g)) == F(g)`` with ``F_i = P(fhat_i . )`` and ``F = P(fhat1 hat-star fhat2 . )``.

    Returns ``(equal, first_bad_order)`` with ``first_bad_order = None`` on success.
    """
    G = S.series(g)
    F1, F2 = S.series(fhat1), S.series(fhat2)
    lhs = projector_apply(S, F1 * projector_apply(S, F2 * G))
    fh = S.hat_star(F1, F2)
    rhs = projector_apply(S, fh * G)
    for m in range(S.K + 1):
        if not (lhs[m] - rhs[m]).is_zero():
            return False, m
    return True, None
