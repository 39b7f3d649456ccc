"""Kähler potentials, jet contexts at a base point, and the Calabi expansion.

A potential model only has to produce the Taylor jet of its potential at a
point. Everything else (metric, inverse metric, log-det jets, the
interaction potential) is derived from that jet here, generically over the
scalar ring. Contexts whose scalars are themselves jets ("shifted"
contexts) describe the same tables at the moving point ``p + delta``.
"""
from __future__ import annotations

import json
import random
import numpy as np
from gmpy2 import mpq

from .jets import JetRing, TruncatedJet, join_key, pack, shifted_taylor
from .rings import QQI, QQi, madd, mfact, multi_indices, unit_index

__all__ = [
    "BudgetError", "ModelError", "PotentialModel", "Flat", "FubiniStudy1D",
    "Hyperbolic1D", "PolynomialPerturbation", "JetTable", "KahlerJets",
    "JetContext", "build_context", "calabi_jet", "interaction_potential",
    "transport_jets", "random_perturbation", "required_order", "mat_inverse",
    "load_jet_table", "dump_jet_table",
]


class BudgetError(ValueError):
    """A jet is too short for the requested order."""


class ModelError(ValueError):
    pass


def required_order(K: int) -> int:
    """Potential-jet order needed for a bullet product through hbar^K."""
    return 2 * K + 2


# --- small generic linear algebra -------------------------------------------

def mat_mul(a, b, zero):
    n, m, p = len(a), len(b), len(b[0])
    out = []
    for i in range(n):
        row = []
        for j in range(p):
            s = zero
            for k in range(m):
                s = s + a[i][k] * b[k][j]
            row.append(s)
        out.append(row)
    return out


def mat_inverse(a, ring):
    """Inverse by Gauss-Jordan elimination with non-zero pivots."""
    n = len(a)
    m = [list(row) + [ring.one if i == j else ring.zero for j in range(n)]
         for i, row in enumerate(a)]
    for col in range(n):
        piv = None
        for r in range(col, n):
            x = m[r][col]
            x0 = x.constant() if isinstance(x, TruncatedJet) else x
            if not _base_zero(x0):
                piv = r
                break
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        m[col], m[piv] = m[piv], m[col]
        inv = ring.inv(m[col][col])
        m[col] = [x * inv for x in m[col]]
        for r in range(n):
            if r != col:
                f = m[r][col]
                if not ring.is_zero(f):
                    m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [row[n:] for row in m]


def _base_zero(x):
    try:
        return not x
    except ValueError:  # numpy arrays: treat as invertible if nowhere zero
        import numpy as np
        return bool(np.any(x == 0))


# --- potential models -----------------------------------------------------

class PotentialModel:
    """Base class. Subclasses implement :meth:`taylor_jet`."""

    n = 1
    name = "model"
    supports_shift = True

    def taylor_jet(self, point, order: int, ring=QQI) -> TruncatedJet:
        raise NotImplementedError

    def _point(self, point, ring):
        if not isinstance(point, (list, tuple)):
            point = (point,)
        if len(point) != self.n:
            raise ModelError(f"{self.name}: point must have {self.n} coordinate(s)")
        return tuple(ring.coerce(p) if ring is QQI else p for p in point)

    def spec(self) -> dict:
        return {"model": self.name}

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n})"


def _linear_jets(p, ring, order, n=1, i=0):
    """Jets of ``z_i`` and ``zbar_i`` at the point ``p``."""
    z = TruncatedJet(2 * n, order, {0: p, pack(unit_index(2 * n, i)): ring.one}, ring)
    zb = TruncatedJet(2 * n, order, {0: ring.conj(p), pack(unit_index(2 * n, n + i)): ring.one},
                      ring)
    return z, zb


class Flat(PotentialModel):
    def __init__(self, n: int = 1):
        self.n = n
        self.name = "flat"

    def taylor_jet(self, point, order, ring=QQI):
        point = self._point(point, ring)
        out = TruncatedJet(2 * self.n, order, {}, ring)
        for i, p in enumerate(point):
            z, zb = _linear_jets(p, ring, order, self.n, i)
            out = out + z * zb
        return out

    def spec(self):
        return {"model": "flat", "n": self.n}


class _LogModel(PotentialModel):
    """``sign * log(1 + sign * z zbar)`` up to an additive constant."""

    sign = 1

    def taylor_jet(self, point, order, ring=QQI):
        (p,) = self._point(point, ring)
        z, zb = _linear_jets(p, ring, order)
        s = self.sign
        w = z * zb  # (p + y)(pbar + ybar)
        base = ring.one + w.constant() * s
        if ring is QQI and ring.is_zero(base):
            raise ModelError(f"{self.name} is singular at {p}")
        x = w.nilpotent_part() * (ring.inv(base) * s)
        # the constant log(base) is irrational in general and never used
        return x.log1p() * s


class FubiniStudy1D(_LogModel):
    sign = 1
    name = "fubini-study"


class Hyperbolic1D(_LogModel):
    sign = -1
    name = "hyperbolic"


class PolynomialPerturbation(PotentialModel):
    """``sum z_i zbar_i + sum c_IJ z^I zbar^J`` with Hermitian ``c``."""

    def __init__(self, n: int, coeffs: dict):
        self.n = n
        self.name = "perturbation"
        self.coeffs = {(tuple(I), tuple(J)): QQI.coerce(c) for (I, J), c in coeffs.items()}
        for (I, J), c in self.coeffs.items():
            if len(I) != n or len(J) != n:
                raise ModelError("multi-index length does not match n")
            other = self.coeffs.get((J, I), QQI.zero)
            if other != c.conjugate():
                raise ModelError(f"coefficients not Hermitian at I={I}, J={J}")

    def taylor_jet(self, point, order, ring=QQI):
        point = self._point(point, ring)
        n = self.n
        lin = [_linear_jets(p, ring, order, n, i) for i, p in enumerate(point)]
        out = TruncatedJet(2 * n, order, {}, ring)
        for z, zb in lin:
            out = out + z * zb
        powers = {}

        def power(i, bar, e):
            key = (i, bar, e)
            if key not in powers:
                powers[key] = lin[i][bar] ** e
            return powers[key]

        for (I, J), c in self.coeffs.items():
            term = TruncatedJet(2 * n, order, {0: ring.const(c) if ring is not QQI else c}, ring)
            for i in range(n):
                if I[i]:
                    term = term * power(i, 0, I[i])
                if J[i]:
                    term = term * power(i, 1, J[i])
            out = out + term
        return out

    def spec(self):
        return {"model": "perturbation", "n": self.n,
                "coeffs": [{"I": list(I), "J": list(J), **c.to_json()}
                           for (I, J), c in sorted(self.coeffs.items())]}


class JetTable(PotentialModel):
    """User-supplied mixed derivatives ``Phi_{I Jbar}`` at one fixed point."""

    supports_shift = False

    def __init__(self, n: int, point, order: int, phi: dict):
        self.n = n
        self.name = "jet-table"
        self.point = tuple(QQI.coerce(p) for p in (point if isinstance(point, (list, tuple))
                                                   else (point,)))
        self.order = order
        self.phi = {(tuple(I), tuple(J)): QQI.coerce(v) for (I, J), v in phi.items()}
        for (I, J), v in self.phi.items():
            if not sum(I) or not sum(J):
                raise ModelError("jet tables hold mixed derivatives only (|I|, |J| >= 1)")
            if sum(I) + sum(J) > order:
                raise ModelError(f"entry I={I}, J={J} exceeds declared order {order}")
            if self.phi.get((J, I), QQI.zero) != v.conjugate():
                raise ModelError(f"jet table violates Hermitian symmetry at I={I}, J={J}")

    def taylor_jet(self, point, order, ring=QQI):
        point = self._point(point, QQI)
        if point != self.point:
            raise ModelError("jet-table models can only be evaluated at their own point")
        if order > self.order:
            raise BudgetError(f"jet table has order {self.order}, {order} requested")
        if ring is not QQI:
            raise ModelError("jet-table models are exact only")
        c = {join_key(I, J): v * mpq(1, mfact(I) * mfact(J)) for (I, J), v in self.phi.items()
             if sum(I) + sum(J) <= order}
        return TruncatedJet(2 * self.n, order, c, QQI)


def random_perturbation(n: int, rng: random.Random, max_degree: int = 6, terms: int = 6,
                        bound: int = 3) -> PolynomialPerturbation:
    """Random Hermitian perturbation with small rational coefficients."""

    def rat():
        num = rng.randint(-bound, bound)
        return mpq(num, rng.randint(1, bound))

    coeffs = {}
    for _ in range(terms):
        d = rng.randint(3, max_degree)
        a = rng.randint(1, d - 1)
        I = _random_index(n, a, rng)
        J = _random_index(n, d - a, rng)
        if I == J:
            c = QQi(rat())
        else:
            c = QQi(rat(), rat())
        coeffs[(I, J)] = c
        coeffs[(J, I)] = c.conjugate()
    return PolynomialPerturbation(n, coeffs)


def _random_index(n, d, rng):
    idx = [0] * n
    for _ in range(d):
        idx[rng.randrange(n)] += 1
    return tuple(idx)


# --- Taylor data at a base point ---------------------------------------------

class KahlerJets:
    """Taylor jets at ``p`` of the potential, the inverse metric and log det H.

    ``phi`` has order ``N``; ``hinv[i][j]`` (the entry ``h^{i jbar}``) and
    ``psi`` (``log det H - log det H(p)``) have order ``N - 2``.
    """

    def __init__(self, phi: TruncatedJet, n: int, point=None, shiftable=True):
        self.n = n
        self.ring = phi.ring
        self.point = point
        self.N = phi.cutoff
        self.shiftable = shiftable
        if self.N < 2:
            raise BudgetError("potential jet must have order >= 2")
        self.phi = phi
        ring = self.ring
        # H_{a b} = d_a dbar_b Phi as a jet of order N - 2
        Hj = [[phi.diff(a).diff(n + b) for b in range(n)] for a in range(n)]
        H0 = [[Hj[a][b].constant() for b in range(n)] for a in range(n)]
        try:
            H0inv = mat_inverse(H0, ring)
        except ZeroDivisionError:
            raise ModelError(f"metric H is singular at the point {point}") from None
        self.H0 = H0
        # X = H0^{-1} dH, matrix of nilpotent jets
        dH = [[Hj[a][b].nilpotent_part() for b in range(n)] for a in range(n)]
        zero = Hj[0][0]._like({})
        X = [[_lin(H0inv[a], [dH[c][b] for c in range(n)], zero) for b in range(n)]
             for a in range(n)]
        # log det(H0 + dH) - log det H0 = tr log(1 + X)
        psi = zero
        P = X
        m = 1
        while m <= self.N - 2:
            tr = zero
            for a in range(n):
                tr = tr + P[a][a]
            if tr.is_zero() and _mat_is_zero(P):
                break
            psi = psi + tr * ring.const(mpq((-1) ** (m + 1), m))
            P = mat_mul(P, X, zero)
            m += 1
        self.psi = psi
        # Hm^{-1} = (1 + X)^{-1} H0^{-1}; hinv = (Hm^T)^{-1}
        acc = [[zero + (ring.one if a == b else ring.zero) for b in range(n)] for a in range(n)]
        term = acc
        for _ in range(self.N - 2):
            term = [[-x for x in row] for row in mat_mul(term, X, zero)]
            if _mat_is_zero(term):
                break
            acc = [[x + y for x, y in zip(r1, r2)] for r1, r2 in zip(acc, term)]
        Hm_inv = mat_mul(acc, [[zero + x for x in row] for row in H0inv], zero)
        self.hinv = [[Hm_inv[b][a] for b in range(n)] for a in range(n)]

    def context(self, shift: JetRing | None = None, check: bool = True) -> "JetContext":
        return JetContext(self, shift, check=check)


def _lin(row, col, zero):
    s = zero
    for a, b in zip(row, col):
        s = s + b * a
    return s


def _mat_is_zero(m):
    return all(x.is_zero() for row in m for x in row)


# --- the context used by the engines ------------------------------------------

class JetContext:
    """Derivative tables at the base point (or at ``p + delta`` when shifted).

    ``phi[(I, J)]`` is ``d^I dbar^J Phi`` for ``|I|, |J| >= 1``;
    ``psi[(I, J)]`` is ``d^I dbar^J log det H`` for ``|I| + |J| >= 1``;
    ``hinv[i][j]`` is ``h^{i jbar}``. Scalars live in ``self.ring``.
    """

    def __init__(self, kj: KahlerJets, shift: JetRing | None = None, check: bool = True):
        n = kj.n
        self.n = n
        self.kj = kj
        self.shift = shift
        self.base_ring = kj.ring
        self.point = kj.point
        if shift is not None:
            if not kj.shiftable:
                raise ModelError("this model only provides jets at its own point; "
                                 "use a closed-form model for shifted or jet-valued evaluation")
            if shift.n != n:
                raise ValueError("shift ring dimension mismatch")
            self.ring = shift
            D = shift.degree
        else:
            self.ring = kj.ring
            D = 0
        self.order = kj.N - D
        self.psi_order = kj.N - 2 - D
        if self.order < 2:
            raise BudgetError(f"potential jet order {kj.N} too short for shift degree {D}")
        self._phi_t = {}
        self._psi_t = {}
        self.phi = {}
        self.psi = {}
        for d in range(2, self.order + 1):
            for a in range(1, d):
                for I in multi_indices(n, a):
                    for J in multi_indices(n, d - a):
                        t = self._taylor(kj.phi, I, J)
                        self._phi_t[(I, J)] = t
                        self.phi[(I, J)] = t * (mfact(I) * mfact(J))
        for d in range(1, self.psi_order + 1):
            for a in range(0, d + 1):
                for I in multi_indices(n, a):
                    for J in multi_indices(n, d - a):
                        t = self._taylor(kj.psi, I, J)
                        self._psi_t[(I, J)] = t
                        self.psi[(I, J)] = t * (mfact(I) * mfact(J))
        z = (0,) * n
        self.hinv = [[self._taylor(kj.hinv[i][j], z, z) for j in range(n)] for i in range(n)]
        self.h = [[self.phi[(unit_index(n, i), unit_index(n, j))] for j in range(n)]
                  for i in range(n)]
        if check:
            self.check_identities()

    def _taylor(self, F, I, J):
        if self.shift is None:
            return F[join_key(I, J)]
        return shifted_taylor(F, I, J, self.shift)

    # Taylor coefficients Phi_{IJ}/(I!J!) and Psi_{IJ}/(I!J!)
    def phi_taylor(self, I, J):
        try:
            return self._phi_t[(I, J)]
        except KeyError:
            raise BudgetError(f"Phi jet order {self.order} too short for I={I}, J={J}") from None

    def psi_taylor(self, I, J):
        try:
            return self._psi_t[(I, J)]
        except KeyError:
            raise BudgetError(f"log-det jet order {self.psi_order} too short "
                              f"for I={I}, J={J}") from None

    @property
    def A(self):
        """``A = 1/2 sum h^{i jbar} d_i dbar_j log det H``."""
        n = self.n
        s = self.ring.zero
        for i in range(n):
            for j in range(n):
                s = s + self.hinv[i][j] * self.psi[(unit_index(n, i), unit_index(n, j))]
        return s * self.ring.const(mpq(1, 2))

    def require(self, K: int):
        need = required_order(K)
        if self.order < need:
            raise BudgetError(f"order {K} in hbar needs potential jets of order {need}; "
                              f"context has {self.order}")

    def check_identities(self):
        """Hermitian symmetry, H^{-1} H = 1 and the two log-det identities."""
        n, R = self.n, self.ring
        e = [unit_index(n, i) for i in range(n)]
        for i in range(n):
            for k in range(n):
                s = R.zero
                for j in range(n):
                    s = s + self.hinv[i][j] * self.h[k][j]
                want = R.one if i == k else R.zero
                if not _negligible(R, s - want):
                    raise ArithmeticError("inverse metric check failed")
        if not R.exact:
            return
        if self.shift is None or self.shift.directions == "both":
            for (I, J), v in self.phi.items():
                if not R.is_zero(v - R.conj(self.phi[(J, I)])):
                    raise ArithmeticError(f"Phi not Hermitian at {I}, {J}")
            for (I, J), v in self.psi.items():
                if not R.is_zero(v - R.conj(self.psi[(J, I)])):
                    raise ArithmeticError(f"Psi not Hermitian at {I}, {J}")
        if self.psi_order < 1 or self.order < 3:
            return
        # d_i log det H = sum h^{j kbar} Phi_{(e_i+e_j)(e_k)}
        for i in range(n):
            s = R.zero
            for j in range(n):
                for k in range(n):
                    s = s + self.hinv[j][k] * self.phi[(madd(e[i], e[j]), e[k])]
            if not R.is_zero(s - self.psi[(e[i], (0,) * n)]):
                raise ArithmeticError("first log-det identity failed")
        if self.psi_order < 2 or self.order < 4:
            return
        for i in range(n):
            for j in range(n):
                s = R.zero
                for a in range(n):
                    for b in range(n):
                        s = s + self.hinv[a][b] * self.phi[(madd(e[a], e[i]), madd(e[b], e[j]))]
                for a in range(n):
                    for b in range(n):
                        for c in range(n):
                            for d in range(n):
                                s = s - (self.hinv[b][a] * self.phi[(madd(e[b], e[i]), e[c])]
                                         * self.hinv[d][c] * self.phi[(e[d], madd(e[a], e[j]))])
                if not R.is_zero(s - self.psi[(e[i], e[j])]):
                    raise ArithmeticError("second log-det identity failed")


def _negligible(R, x) -> bool:
    if R.exact:
        return R.is_zero(x)
    if isinstance(x, TruncatedJet):
        return all(_negligible(x.ring, v) for v in x.c.values())
    return bool(np.all(np.abs(x) < 1e-9))


def build_context(model: PotentialModel, point, order: int, ring=QQI,
                  check: bool = True) -> JetContext:
    """Context at ``point`` with potential jets of ``order``."""
    jet = model.taylor_jet(point, order, ring)
    kj = KahlerJets(jet, model.n, point, shiftable=model.supports_shift)
    return JetContext(kj, None, check=check)


def kahler_jets(model: PotentialModel, point, order: int, ring=QQI) -> KahlerJets:
    jet = model.taylor_jet(point, order, ring)
    return KahlerJets(jet, model.n, point, shiftable=model.supports_shift)


def calabi_jet(ctx: JetContext, cutoff: int | None = None) -> TruncatedJet:
    """Jet of ``phi(z, zbar; z + y, zbar + ybar)`` at the base point."""
    if cutoff is None:
        cutoff = ctx.order
    if cutoff > ctx.order:
        raise BudgetError(f"calabi jet cutoff {cutoff} exceeds context order {ctx.order}")
    n = ctx.n
    c = {}
    for (I, J), t in ctx._phi_t.items():
        if sum(I) + sum(J) <= cutoff and not ctx.ring.is_zero(t):
            c[join_key(I, J)] = -t
    return TruncatedJet._raw(2 * n, cutoff, ctx.ring, c)


def interaction_potential(ctx: JetContext, max_eps: int) -> dict:
    """The interaction V graded by powers of eps.

    Returns ``{d: {key: coeff}}`` for ``1 <= d <= max_eps`` where ``key`` packs
    ``y^I ybar^J``. Solid terms ``-Phi_{IJ}/(I!J!)`` sit at ``d = |I|+|J|-2``,
    hollow terms ``Psi_{IJ}/(I!J!)`` at ``d = |I|+|J|``.
    """
    if ctx.order < max_eps + 2 or ctx.psi_order < max_eps:
        raise BudgetError(f"V through eps^{max_eps} needs potential jets of order "
                          f"{max_eps + 2}; context has {ctx.order}")
    R = ctx.ring
    V = {d: {} for d in range(1, max_eps + 1)}
    for (I, J), t in ctx._phi_t.items():
        d = sum(I) + sum(J) - 2
        if 1 <= d <= max_eps and not R.is_zero(t):
            V[d][join_key(I, J)] = -t
    for (I, J), t in ctx._psi_t.items():
        d = sum(I) + sum(J)
        if d <= max_eps and not R.is_zero(t):
            k = join_key(I, J)
            V[d][k] = V[d][k] + t if k in V[d] else t
    return V


def interaction_jet(ctx: JetContext, max_eps: int):
    """V as ``{d: TruncatedJet}`` (each part a polynomial in y, ybar)."""
    V = interaction_potential(ctx, max_eps)
    return {d: TruncatedJet._raw(2 * ctx.n, d + 2, ctx.ring, dict(p)) for d, p in V.items()}


# --- holomorphic change of coordinates (n = 1) ---------------------------------

def compose_1d(F: TruncatedJet, g: list, ring=QQI) -> TruncatedJet:
    """Substitute ``y -> sum_a g[a] y^a`` and ``ybar -> conj`` into a 2-variable jet.

    ``g[0]`` is ignored (the base points correspond); ``g[1]`` must be non-zero.
    """
    N = F.cutoff
    u = TruncatedJet(2, N, {pack((a, 0)): ring.coerce(c) for a, c in enumerate(g)
                            if a >= 1 and a <= N}, ring)
    v = TruncatedJet(2, N, {pack((0, a)): ring.conj(ring.coerce(c)) for a, c in enumerate(g)
                            if a >= 1 and a <= N}, ring)
    upow = [u._like({0: ring.one})]
    vpow = [v._like({0: ring.one})]
    for _ in range(N):
        upow.append(upow[-1] * u)
        vpow.append(vpow[-1] * v)
    out = F._like({})
    for (a, b), c in F.items():
        out = out + upow[a] * vpow[b] * c
    return out


def transport_jets(g: list, kj: KahlerJets, fjets=(), ring=QQI):
    """Pull potential and function jets back through the chart map ``w = g(z)``.

    ``g`` lists the Taylor coefficients of ``g`` at the new base point
    (``g[0]`` is the old base point). Returns the new :class:`KahlerJets` and
    the transported function jets. Only ``n = 1``.
    """
    if kj.n != 1:
        raise ValueError("transport_jets is implemented for n = 1")
    if not kj.shiftable:
        raise ModelError("jet-table models cannot be transported")
    if len(g) < 2 or ring.is_zero(ring.coerce(g[1])):
        raise ModelError("chart map has vanishing derivative at the base point")
    phi = compose_1d(kj.phi, g, ring)
    new_point = None
    out = KahlerJets(phi, 1, new_point, shiftable=False)
    return out, [compose_1d(f, g, ring) for f in fjets]


# --- JSON jet tables ------------------------------------------------------------

def load_jet_table(path_or_dict) -> JetTable:
    if isinstance(path_or_dict, dict):
        d = path_or_dict
    else:
        with open(path_or_dict) as fh:
            d = json.load(fh)
    n = int(d["n"])
    pt = d.get("point", [0, 0])
    point = tuple(QQi(_ratish(pt[2 * i]), _ratish(pt[2 * i + 1])) for i in range(n)) \
        if len(pt) == 2 * n else (QQi(0),) * n
    phi = {}
    for e in d["phi"]:
        phi[(tuple(e["I"]), tuple(e["J"]))] = QQi.from_json(e)
    return JetTable(n, point, int(d["order"]), phi)


def _ratish(x):
    if isinstance(x, str):
        return x
    if isinstance(x, float):
        if x != int(x):
            raise ModelError("jet-table point coordinates must be exact")
        return int(x)
    return x


def dump_jet_table(table: JetTable) -> dict:
    pt = []
    for p in table.point:
        pt += [str(p.re), str(p.im)]
    return {"n": table.n, "point": pt, "order": table.order,
            "phi": [{"I": list(I), "J": list(J), **v.to_json()}
                    for (I, J), v in sorted(table.phi.items(),
                                            key=lambda kv: (sum(kv[0][0]) + sum(kv[0][1]), kv[0]))]}


def jet_table_from_model(model: PotentialModel, point, order: int) -> JetTable:
    ctx = build_context(model, point, order, check=False)
    return JetTable(model.n, point, order, dict(ctx.phi))
