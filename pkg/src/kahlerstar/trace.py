"""Numerical trace defect of the bullet and star products in one dimension.

The ``hbar^k`` coefficient of ``f1 • f2 - f2 • f1`` (or of
``e (f1 * f2 - f2 * f1)`` for the normalised product) is a total
derivative, so its integral against the Liouville density vanishes for
compactly supported ``f``. Here that integral is evaluated on a polar
product grid: Gauss-Legendre in the radius, the periodic trapezoid rule in
the angle. Nodes are carried in batches as numpy arrays inside the jet
coefficients, so the exact algebra code runs unchanged over doubles.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import TruncatedJet, pack
from .models import BudgetError, KahlerJets, ModelError, PotentialModel
from .rings import CC
from .star import StarAlgebra

__all__ = ["BumpPolynomial", "Quadrature", "TraceReport", "trace_report", "trace_defect",
           "QuadratureError"]


class QuadratureError(ArithmeticError):
    """The refined grid disagrees with the coarse one beyond the tolerance."""


class BumpPolynomial:
    """``p(z, zbar) exp(-1 / (1 - |z - c|^2 / R^2))``, zero outside the disc."""

    def __init__(self, terms: dict, center: complex = 0j, radius: float = 1.0):
        self.terms = {tuple(k): complex(v) for k, v in terms.items()}
        self.center = complex(center)
        self.radius = float(radius)

    def jet(self, z0: np.ndarray, order: int) -> TruncatedJet:
        """Taylor jets at the nodes ``z0`` (all strictly inside the support)."""
        one = np.ones_like(z0)
        y = TruncatedJet(2, order, {0: z0 - self.center, pack((1, 0)): 1.0}, CC)
        yb = TruncatedJet(2, order, {0: np.conj(z0 - self.center), pack((0, 1)): 1.0}, CC)
        s = (y * yb) * (-1.0 / self.radius ** 2) + one
        q = s.inverse() * -1.0
        q0 = q.constant()
        bump = q.nilpotent_part().exp() * np.exp(q0)
        z = TruncatedJet(2, order, {0: z0, pack((1, 0)): 1.0}, CC)
        zb = TruncatedJet(2, order, {0: np.conj(z0), pack((0, 1)): 1.0}, CC)
        poly = TruncatedJet(2, order, {}, CC)
        for (a, b), c in self.terms.items():
            m = TruncatedJet(2, order, {0: c * one}, CC)
            for _ in range(a):
                m = m * z
            for _ in range(b):
                m = m * zb
            poly = poly + m
        return poly * bump

    def __repr__(self):
        return f"BumpPolynomial({self.terms}, center={self.center}, radius={self.radius})"


@dataclass(frozen=True)
class Quadrature:
    """Polar grid on a disc; ``radial`` Gauss nodes times ``angular`` equispaced angles."""

    center: complex = 0j
    radius: float = 1.0
    radial: int = 128
    angular: int = 48

    def refined(self) -> "Quadrature":
        return Quadrature(self.center, self.radius, 2 * self.radial, 2 * self.angular)

    def nodes(self):
        x, w = np.polynomial.legendre.leggauss(self.radial)
        r = 0.5 * self.radius * (x + 1.0)
        wr = 0.5 * self.radius * w * r
        th = 2 * np.pi * np.arange(self.angular) / self.angular
        z = self.center + np.outer(r, np.exp(1j * th)).ravel()
        weights = np.repeat(wr, self.angular) * (2 * np.pi / self.angular)
        return z, weights


@dataclass
class TraceReport:
    k: int
    product: str
    defect: float      # |integral| on the refined grid
    scale: float       # integral of |f1 • f2| + |f2 • f1| at order k
    error: float       # coarse versus refined
    nodes: int

    @property
    def relative(self) -> float:
        return self.defect / self.scale if self.scale else self.defect


def _integrand(model, f1, f2, k, product, z, extra):
    order = 2 * k + 2 + extra
    jet = model.taylor_jet((z,), order, CC)
    kj = KahlerJets(jet, 1, (z,), shiftable=model.supports_shift)
    sa = StarAlgebra(kj, k)
    d = 2 * k
    g1, g2 = f1.jet(z, d), f2.jet(z, d)
    if product == "bullet":
        a, b = sa.bullet_value(g1, g2), sa.bullet_value(g2, g1)
        terms = [a.coeff(k), b.coeff(k)]
        total = terms[0] - terms[1]
    else:
        e = sa.unit("both").values()
        a, b = sa.star_value(g1, g2), sa.star_value(g2, g1)
        total = sum(e.coeff(l) * (a.coeff(k - l) - b.coeff(k - l)) for l in range(k + 1))
        terms = [sum(e.coeff(l) * a.coeff(k - l) for l in range(k + 1)),
                 sum(e.coeff(l) * b.coeff(k - l) for l in range(k + 1))]
    return total, terms


def _density(model, z):
    jet = model.taylor_jet((z,), 2, CC)
    return jet[pack((1, 1))]


CHUNK = 4096  # nodes per batch; bounds the size of the jet arrays


def _integrate(model, f1, f2, k, product, quad):
    zs, ws = quad.nodes()
    val, scale = 0j, 0.0
    for s in range(0, zs.size, CHUNK):
        z, w = zs[s:s + CHUNK], ws[s:s + CHUNK]
        total, terms = _integrand(model, f1, f2, k, product, z, 2 if product == "star" else 0)
        mu = _density(model, z) * w
        val += complex(np.sum(np.broadcast_to(total, z.shape) * mu))
        scale += float(sum(np.sum(np.abs(np.broadcast_to(t, z.shape) * mu)) for t in terms))
    return val, scale


def trace_report(model: PotentialModel, f1: BumpPolynomial, f2: BumpPolynomial, k: int,
                 quad: Quadrature | None = None, product: str = "bullet",
                 tol: float | None = None) -> TraceReport:
    """Integrate the ``hbar^k`` commutator coefficient against ``det H d^2 z``.

    The result is refined once; if the two grids disagree by more than
    ``tol`` (when given) :class:`QuadratureError` carries the estimate.
    """
    if model.n != 1:
        raise ModelError("trace defect is implemented for one complex dimension")
    if product not in ("bullet", "star"):
        raise ValueError(f"unknown product {product!r}")
    if k < 0:
        raise BudgetError("order must be non-negative")
    quad = quad or Quadrature(f1.center, max(f1.radius, f2.radius))
    coarse, _ = _integrate(model, f1, f2, k, product, quad)
    fine_q = quad.refined()
    fine, scale = _integrate(model, f1, f2, k, product, fine_q)
    err = abs(fine - coarse)
    if tol is not None and err > tol:
        raise QuadratureError(f"quadrature did not converge: estimated error {err:.3e} "
                              f"exceeds {tol:.1e}")
    z, _ = fine_q.nodes()
    return TraceReport(k, product, abs(fine), scale, err, z.size)


def trace_defect(model, f1, f2, k, quad=None, product="bullet") -> float:
    """``|integral|`` of the order-k commutator coefficient; expected to be about 0."""
    return trace_report(model, f1, f2, k, quad, product).defect
