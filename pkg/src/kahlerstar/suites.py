"""Seeded randomized property suites.

Each suite draws its models, points and test jets from ``random.Random(seed)``
and returns a :class:`SuiteResult` with the number of trials that held and
a description of the first one that did not.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from gmpy2 import mpq

from .bergman import oint_eval, projector_apply, projector_full_shift, toeplitz_compose_check
from .jets import HbarSeries, TruncatedJet, graded_jet_keys, join_key
from .laplace import engine_for, laplace_integrate
from .models import (Flat, FubiniStudy1D, Hyperbolic1D, JetContext, ModelError, build_context,
                     kahler_jets, random_perturbation, transport_jets)
from .graphs import graph_operator_series
from .rings import QQI, QQi, unit_index
from .star import star_algebra
from .trace import BumpPolynomial, trace_report

__all__ = ["SuiteConfig", "SuiteResult", "SUITES", "run_suite", "random_jet", "random_point"]


@dataclass
class SuiteConfig:
    order: int = 3
    trials: int = 20
    seed: int = 0
    n: int | None = None        # None: alternate 1 and 2 where the suite allows
    model: object = None        # None: random perturbations
    point: tuple | None = None
    bound: int = 3              # numerators and denominators of random data
    engine: str = "oracle"


@dataclass
class SuiteResult:
    suite: str
    trials: int = 0
    passed: int = 0
    failure: str | None = None
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.trials > 0 and self.passed == self.trials

    def record(self, ok: bool, what):
        self.trials += 1
        if ok:
            self.passed += 1
        elif self.failure is None:
            self.failure = what() if callable(what) else str(what)

    def to_json(self) -> dict:
        return {"suite": self.suite, "trials": self.trials, "passed": self.passed,
                "ok": self.ok, "failure": self.failure, "notes": list(self.notes)}


# --- random data ----------------------------------------------------------------------

def _rat(rng, bound):
    return mpq(rng.randint(-bound, bound), rng.randint(1, bound))


def random_jet(n: int, degree: int, rng: random.Random, bound: int = 3,
               density: float = 0.7) -> TruncatedJet:
    """A jet with small Gaussian-rational coefficients in every degree up to ``degree``."""
    c = {}
    for A, B in graded_jet_keys(n, degree):
        if rng.random() < density:
            c[join_key(A, B)] = QQi(_rat(rng, bound), _rat(rng, bound))
    return TruncatedJet(2 * n, degree, c)


def random_point(n: int, rng: random.Random) -> tuple:
    return tuple(QQi(mpq(rng.randint(-2, 2), 3), mpq(rng.randint(-2, 2), 3)) for _ in range(n))


def _dimension(cfg, t, allowed=(1, 2)):
    if cfg.n is not None:
        if cfg.n not in allowed:
            raise ModelError(f"this suite supports n in {allowed}")
        return cfg.n
    return allowed[t % len(allowed)]


def _draw(cfg, rng, n):
    """Model and point for one trial; redraws degenerate metrics."""
    if cfg.model is not None:
        if cfg.model.n != n:
            raise ModelError(f"model {cfg.model.name} has n={cfg.model.n}, suite needs n={n}")
        return cfg.model, cfg.point or random_point(n, rng)
    for _ in range(20):
        model = random_perturbation(n, rng, bound=cfg.bound)
        point = cfg.point or random_point(n, rng)
        try:
            kahler_jets(model, point, 2)
        except (ZeroDivisionError, ArithmeticError, ModelError):
            continue
        return model, point
    raise ModelError("could not draw a non-degenerate metric")


def _conj_series(s: HbarSeries) -> HbarSeries:
    R = s.ring
    return HbarSeries.from_hbar([R.conj(s.coeff(k)) for k in range(s.K + 1)], s.K, R)


def _where(model, point):
    return f"model={model.spec()} point={[str(p) for p in point]}"


# --- suites ---------------------------------------------------------------------------

def suite_associativity(cfg: SuiteConfig) -> SuiteResult:
    res = SuiteResult("associativity")
    rng = random.Random(cfg.seed)
    K = cfg.order
    for t in range(cfg.trials):
        n = _dimension(cfg, t)
        model, point = _draw(cfg, rng, n)
        S = star_algebra(model, point, K, engine=cfg.engine)
        f1, f2, f3 = (random_jet(n, 4 * K, rng, cfg.bound) for _ in range(3))
        left = S.bullet_value(S.bullet(f1, f2, "anti"), f3)
        right = S.bullet_value(f1, S.bullet(f2, f3, "holo"))
        res.record(left == right, lambda: f"{_where(model, point)}: (f1•f2)•f3 = {left}, "
                                          f"f1•(f2•f3) = {right}")
    return res


def suite_unit(cfg: SuiteConfig) -> SuiteResult:
    """``e • f = f • e = f``, ``e`` real and ``e^(1) = -A`` on the standard models."""
    res = SuiteResult("unit")
    rng = random.Random(cfg.seed)
    K = cfg.order
    models = [cfg.model] if cfg.model is not None else \
        [Flat(1), FubiniStudy1D(), Hyperbolic1D()] + \
        [random_perturbation(1 + i % 2, rng, bound=cfg.bound) for i in range(5)]
    for model in models:
        n = model.n
        point = cfg.point or random_point(n, rng)
        S = star_algebra(model, point, K, engine=cfg.engine)
        ea, eh = S.unit("anti"), S.unit("holo")
        A = S.context(None, None).A
        res.record(ea.values().coeff(1) == -A if K >= 1 else True,
                   lambda: f"{_where(model, point)}: e^(1) = {ea.values().coeff(1)}, A = {A}")
        res.record(S.unit("both").is_real(), lambda: f"{_where(model, point)}: e is not real")
        if isinstance(model, Flat):
            e = ea.values()
            res.record(e == HbarSeries.one(K), lambda: f"flat unit is {e}")
        for _ in range(cfg.trials):
            f = random_jet(n, 2 * K, rng, cfg.bound)
            want = HbarSeries.from_hbar([f.constant()], K)
            a, b = S.bullet_value(ea.series, f), S.bullet_value(f, eh.series)
            res.record(a == want and b == want,
                       lambda: f"{_where(model, point)}: e•f = {a}, f•e = {b}, f = {want}")
    return res


def suite_conjugation(cfg: SuiteConfig) -> SuiteResult:
    """``conj(f1 • f2) = conj(f2) • conj(f1)`` and the same for the star product."""
    res = SuiteResult("conjugation")
    rng = random.Random(cfg.seed)
    K = cfg.order
    for t in range(cfg.trials):
        n = _dimension(cfg, t)
        model, point = _draw(cfg, rng, n)
        S = star_algebra(model, point, K, engine=cfg.engine)
        f1, f2 = random_jet(n, 2 * K, rng, cfg.bound), random_jet(n, 2 * K, rng, cfg.bound)
        a = _conj_series(S.bullet_value(f1, f2))
        b = S.bullet_value(f2.conj(), f1.conj())
        c = _conj_series(S.star_value(f1, f2))
        d = S.star_value(f2.conj(), f1.conj())
        res.record(a == b and c == d,
                   lambda: f"{_where(model, point)}: bullet {a} vs {b}; star {c} vs {d}")
    return res


def _first_order(S, f1, f2):
    """``sum h^{i jbar} dbar_j f1 d_i f2`` at the base point."""
    n = S.n
    hinv = S.context(None, None).hinv
    z = (0,) * n
    s = QQI.zero
    for i in range(n):
        for j in range(n):
            s = s + hinv[i][j] * f1[join_key(z, unit_index(n, j))] * \
                f2[join_key(unit_index(n, i), z)]
    return s


def poisson_bracket(S, f1, f2):
    """``(2/sqrt(-1)) sum h^{i jbar} (d_i f1 dbar_j f2 - dbar_j f1 d_i f2)`` at the point."""
    n = S.n
    hinv = S.context(None, None).hinv
    z = (0,) * n
    s = QQI.zero
    for i in range(n):
        for j in range(n):
            di1 = f1[join_key(unit_index(n, i), z)]
            dj2 = f2[join_key(z, unit_index(n, j))]
            dj1 = f1[join_key(z, unit_index(n, j))]
            di2 = f2[join_key(unit_index(n, i), z)]
            s = s + hinv[i][j] * (di1 * dj2 - dj1 * di2)
    return s * QQi(0, -2)


def suite_poisson(cfg: SuiteConfig) -> SuiteResult:
    """First-order star term and the correspondence principle."""
    res = SuiteResult("poisson")
    rng = random.Random(cfg.seed)
    K = max(cfg.order, 1)
    for t in range(cfg.trials):
        n = _dimension(cfg, t)
        model, point = _draw(cfg, rng, n)
        S = star_algebra(model, point, K, engine=cfg.engine)
        f1, f2 = random_jet(n, 2 * K, rng, cfg.bound), random_jet(n, 2 * K, rng, cfg.bound)
        s12, s21 = S.star_value(f1, f2), S.star_value(f2, f1)
        first = _first_order(S, f1, f2)
        comm = s12.coeff(1) - s21.coeff(1)
        want = poisson_bracket(S, f1, f2) * QQi(0, mpq(-1, 2))  # 1 / (2 sqrt(-1))
        res.record(s12.coeff(0) == f1.constant() * f2.constant() and s12.coeff(1) == first
                   and comm == want,
                   lambda: f"{_where(model, point)}: hbar^1 {s12.coeff(1)} vs {first}; "
                           f"commutator {comm} vs {want}")
    return res


def suite_separation(cfg: SuiteConfig) -> SuiteResult:
    """``a * f = a f`` for holomorphic ``a`` and ``f * b = f b`` for antiholomorphic ``b``."""
    res = SuiteResult("separation")
    rng = random.Random(cfg.seed)
    K = cfg.order
    for t in range(cfg.trials):
        n = _dimension(cfg, t)
        model, point = _draw(cfg, rng, n)
        S = star_algebra(model, point, K, engine=cfg.engine)
        f = random_jet(n, 2 * K, rng, cfg.bound)
        a = random_jet(n, 2 * K, rng, cfg.bound).restrict(set(range(n)))
        b = random_jet(n, 2 * K, rng, cfg.bound).restrict(set(range(n, 2 * n)))
        left, right = S.star_value(a, f), S.star_value(f, b)
        want_l = HbarSeries.from_hbar([a.constant() * f.constant()], K)
        want_r = HbarSeries.from_hbar([f.constant() * b.constant()], K)
        res.record(left == want_l and right == want_r,
                   lambda: f"{_where(model, point)}: a*f = {left}, f*b = {right}")
    return res


def suite_logdet(cfg: SuiteConfig) -> SuiteResult:
    """Contexts (plain and shifted) pass the inverse-metric and log-det checks."""
    res = SuiteResult("logdet")
    rng = random.Random(cfg.seed)
    for t in range(cfg.trials):
        n = _dimension(cfg, t)
        model, point = _draw(cfg, rng, n)
        try:
            ctx = build_context(model, point, 2 * cfg.order + 2)
            ctx.check_identities()
            S = star_algebra(model, point, 1, base=2)
            S.context("both", 2).check_identities()
            ok, why = True, ""
        except ArithmeticError as exc:
            ok, why = False, str(exc)
        res.record(ok, lambda: f"{_where(model, point)}: {why}")
    return res


def suite_functoriality(cfg: SuiteConfig) -> SuiteResult:
    """Bullet products agree after pulling everything back through ``w = z + c z^2``."""
    res = SuiteResult("functoriality")
    rng = random.Random(cfg.seed)
    K = cfg.order
    N = 2 * K + 2
    for _ in range(cfg.trials):
        model, _ = _draw(cfg, rng, 1)
        c = QQi(_rat(rng, cfg.bound), _rat(rng, cfg.bound))
        (z0,) = cfg.point or random_point(1, rng)
        w0 = z0 + c * z0 * z0
        g = [w0, QQI.one + c * z0 * 2, c]
        try:
            kw = kahler_jets(model, (w0,), N)
        except (ZeroDivisionError, ArithmeticError):
            continue
        F1, F2 = random_jet(1, 2 * K, rng, cfg.bound), random_jet(1, 2 * K, rng, cfg.bound)
        kz, (f1, f2) = transport_jets(g, kw, (F1, F2))
        a = engine_for(JetContext(kw)).operator_series(K).apply(F1, F2)
        b = engine_for(JetContext(kz)).operator_series(K).apply(f1, f2)
        res.record(a == b, lambda: f"{_where(model, (w0,))} c={c}: w-chart {a}, z-chart {b}")
    return res


def suite_appendix(cfg: SuiteConfig) -> SuiteResult:
    """Formal Laplace integral equals the contour-integral formula (n = 1)."""
    res = SuiteResult("appendix-identity")
    rng = random.Random(cfg.seed)
    K = cfg.order
    flat = build_context(Flat(1), (QQi(0),), 2 * (K + 1) + 2)
    for _ in range(min(cfg.trials, 5)):
        g = random_jet(1, 2 * (K + 1), rng, cfg.bound)
        a, b = oint_eval(flat, g, K + 1), laplace_integrate(flat, g, K + 1)
        res.record(a == b, lambda: f"flat: oint {a}, integral {b}")
    for _ in range(cfg.trials):
        model, point = _draw(cfg, rng, 1)
        ctx = build_context(model, point, 2 * K + 2)
        g = random_jet(1, 2 * K, rng, cfg.bound)
        a, b = oint_eval(ctx, g, K), laplace_integrate(ctx, g, K)
        res.record(a == b, lambda: f"{_where(model, point)}: oint {a}, integral {b}")
    return res


def suite_projector(cfg: SuiteConfig) -> SuiteResult:
    """``P f`` is holomorphic, ``P`` fixes holomorphic jets and ``P^2 = P``."""
    res = SuiteResult("projector")
    rng = random.Random(cfg.seed)
    K = min(cfg.order, 2)
    models = [cfg.model] if cfg.model is not None else [Flat(1), FubiniStudy1D()]
    for model in models:
        for _ in range(cfg.trials):
            point = cfg.point or random_point(1, rng)
            S = star_algebra(model, point, K, base=2)
            f = random_jet(1, 2 * K + 4, rng, cfg.bound)
            P = projector_apply(S, f)
            hol = f.restrict({0})
            holo = all(c.restrict({0}) == c for c in P.coeffs)
            fixes = projector_apply(S, hol) == S.series(hol)
            idem = projector_apply(S, P) == P
            res.record(holo and fixes and idem,
                       lambda: f"{_where(model, point)}: holomorphic={holo} fixes={fixes} "
                               f"idempotent={idem}")
        point = cfg.point or random_point(1, rng)
        f = random_jet(1, 2 * K + 6, rng, cfg.bound)
        coeffs, negative = projector_full_shift(model, point, f, K, 2)
        res.record(all(x.is_zero() for x in negative)
                   and all(c.restrict({0}) == c for c in coeffs),
                   lambda: f"{_where(model, point)}: fully shifted P has antiholomorphic "
                           "or polar terms")
    return res


def suite_toeplitz(cfg: SuiteConfig) -> SuiteResult:
    """``T_f1 T_f2 = T_(f1 hat-star f2)`` on holomorphic jets (n = 1)."""
    res = SuiteResult("toeplitz")
    rng = random.Random(cfg.seed)
    K = min(cfg.order, 2)
    for _ in range(cfg.trials):
        model, point = _draw(cfg, rng, 1)
        S = star_algebra(model, point, K)
        d = 4 * K + 4
        f1, f2 = random_jet(1, d, rng, cfg.bound), random_jet(1, d, rng, cfg.bound)
        g = random_jet(1, d, rng, cfg.bound).restrict({0})
        ok, bad = toeplitz_compose_check(S, f1, f2, g)
        res.record(ok, lambda: f"{_where(model, point)}: first mismatch at hbar^{bad}")
    return res


TRACE_TOLERANCE = {"flat": 1e-8}
CURVED_TOLERANCE = 1e-6


def suite_trace(cfg: SuiteConfig) -> SuiteResult:
    """Quadrature trace defect of the commutators at orders ``1..order``."""
    res = SuiteResult("trace")
    rng = random.Random(cfg.seed)
    models = [cfg.model] if cfg.model is not None else [Flat(1), FubiniStudy1D()]
    trials = max(1, min(cfg.trials, 3))
    for model in models:
        tol = TRACE_TOLERANCE.get(model.name, CURVED_TOLERANCE)
        for _ in range(trials):
            center = complex(rng.randint(-2, 2) / 10, rng.randint(-2, 2) / 10)
            radius = rng.choice((0.6, 0.8))

            def poly():
                return {(a, b): complex(rng.randint(-3, 3), rng.randint(-3, 3))
                        for a in range(3) for b in range(3) if rng.random() < 0.6}

            f1 = BumpPolynomial(poly() or {(0, 1): 1}, center, radius)
            f2 = BumpPolynomial(poly() or {(1, 0): 1}, center, radius)
            for k in range(1, max(cfg.order, 1) + 1):
                for product in ("bullet", "star"):
                    r = trace_report(model, f1, f2, k, product=product)
                    ok = r.defect < tol and r.error < tol
                    res.record(ok, lambda: f"{model.name} k={k} {product}: defect {r.defect:.3e}"
                                           f" (estimate {r.error:.3e}, scale {r.scale:.3e})")
                    if k == 1 and product == "bullet":
                        res.notes.append(f"{model.name}: hbar^1 defect {r.defect:.2e}, "
                                         f"relative {r.relative:.2e}")
    return res


def suite_engines(cfg: SuiteConfig) -> SuiteResult:
    """Graph enumeration against the Laplace oracle, coefficient by coefficient."""
    res = SuiteResult("engines")
    rng = random.Random(cfg.seed)
    for t in range(cfg.trials):
        n = _dimension(cfg, t)
        K = cfg.order if n == 1 else min(cfg.order, 3)
        model, point = _draw(cfg, rng, n)
        ctx = build_context(model, point, 2 * K + 2)
        a = engine_for(ctx).operator_series(K)
        b = graph_operator_series(ctx, K)
        diff = a.diff(b, limit=1)
        res.record(not diff, lambda: f"{_where(model, point)}: first difference {diff[0]}")
    return res


SUITES = {
    "associativity": suite_associativity,
    "unit": suite_unit,
    "conjugation": suite_conjugation,
    "poisson": suite_poisson,
    "separation": suite_separation,
    "logdet": suite_logdet,
    "functoriality": suite_functoriality,
    "appendix-identity": suite_appendix,
    "projector": suite_projector,
    "toeplitz": suite_toeplitz,
    "trace": suite_trace,
    "engines": suite_engines,
}


def run_suite(name: str, cfg: SuiteConfig | None = None) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return SUITES[name](cfg or SuiteConfig())
