"""Low-order closed forms of the products, written out term by term."""
from gmpy2 import mpq

from kahlerstar.jets import join_key
from kahlerstar.rings import QQI, QQi, madd, unit_index

HALF = QQi(mpq(1, 2))


class Geometry:
    """Values and first derivatives of ``h^{i jbar}`` and ``A`` at the base point."""

    def __init__(self, kj):
        n = self.n = kj.n
        self.z = (0,) * n
        self.e = [unit_index(n, i) for i in range(n)]
        self.H = kj.hinv
        zero = kj.hinv[0][0]._like({})
        A = zero
        for i in range(n):
            for j in range(n):
                d = kj.psi.diff(i).diff(n + j)
                A = A.truncate(d.cutoff) + kj.hinv[i][j].truncate(d.cutoff) * d
        self.Ajet = A * HALF

    def h(self, i, j):
        return self.H[i][j].constant()

    def dh(self, a, i, j):
        return self.H[i][j][join_key(self.e[a], self.z)]

    def dbh(self, a, i, j):
        return self.H[i][j][join_key(self.z, self.e[a])]

    @property
    def A(self):
        return self.Ajet.constant()

    def dA(self, a):
        return self.Ajet[join_key(self.e[a], self.z)]

    def dbA(self, a):
        return self.Ajet[join_key(self.z, self.e[a])]


def _add(T, key, v):
    T[key] = T.get(key, QQI.zero) + v


def _clean(T):
    return {k: v for k, v in T.items() if v != 0}


def bullet_first(g: Geometry) -> dict:
    n, z, e = g.n, g.z, g.e
    T = {(z, z): g.A}
    for i in range(n):
        for j in range(n):
            _add(T, (e[j], e[i]), g.h(i, j))
    return _clean(T)


def bullet_second_groups(g: Geometry, D) -> dict:
    """The hbar^2 coefficient, split into its displayed term groups."""
    n, z, e = g.n, g.z, g.e
    R = range(n)
    groups = {name: {} for name in ("hh", "h_dh", "h_dbh", "A_derivs", "A_first", "vacuum")}
    for i in R:
        for j in R:
            for k in R:
                for l in R:
                    _add(groups["hh"], (madd(e[j], e[l]), madd(e[i], e[k])),
                         HALF * g.h(i, j) * g.h(k, l))
                    _add(groups["h_dh"], (madd(e[j], e[l]), e[k]),
                         HALF * g.h(i, j) * g.dh(i, k, l))
                    _add(groups["h_dbh"], (e[l], madd(e[i], e[k])),
                         HALF * g.h(i, j) * g.dbh(j, k, l))
            # h (dbar(A f1) d f2 + dbar f1 d(A f2)) and A h dbar f1 d f2
            _add(groups["A_derivs"], (z, e[i]), HALF * g.h(i, j) * g.dbA(j))
            _add(groups["A_derivs"], (e[j], z), HALF * g.h(i, j) * g.dA(i))
            _add(groups["A_first"], (e[j], e[i]), HALF * g.h(i, j) * g.A * 3)
    groups["vacuum"] = {(z, z): D}
    return {k: _clean(v) for k, v in groups.items()}


def bullet_second(g: Geometry, D) -> dict:
    """Second-order bullet coefficient as the engines produce it for every n.

    Metric groups as in :func:`star_second`, then ``h^{i jbar} dbar_j A`` on
    ``d_i f2``, ``h^{i jbar} d_i A`` on ``dbar_j f1``, ``A h^{i jbar}`` on
    ``dbar_j f1 d_i f2`` and ``D`` on ``f1 f2``.
    """
    n, z, e = g.n, g.z, g.e
    T = dict(star_second(g))
    for i in range(n):
        for j in range(n):
            _add(T, (z, e[i]), g.h(i, j) * g.dbA(j))
            _add(T, (e[j], z), g.h(i, j) * g.dA(i))
            _add(T, (e[j], e[i]), g.h(i, j) * g.A)
    _add(T, (z, z), D)
    return _clean(T)


def by_type(T: dict) -> dict:
    """Split a table by ``(|J|, |I|)``."""
    out = {}
    for (J, I), v in T.items():
        out.setdefault((sum(J), sum(I)), {})[(J, I)] = v
    return out


def merge(groups: dict) -> dict:
    T = {}
    for part in groups.values():
        for k, v in part.items():
            _add(T, k, v)
    return _clean(T)


def star_first(g: Geometry) -> dict:
    n, e = g.n, g.e
    T = {((0,) * n, (0,) * n): QQI.one * 0}
    for i in range(n):
        for j in range(n):
            _add(T, (e[j], e[i]), g.h(i, j))
    return _clean(T)


def star_second(g: Geometry) -> dict:
    """Second-order star coefficient with the index placement that holds for every n.

    ``1/2 sum [h h dbar^2 f1 d^2 f2 + h^{i jbar} dbar_j(h^{k lbar}) dbar_l f1 d^2_{ik} f2
    + h^{i jbar} d_i(h^{k lbar}) dbar^2_{jl} f1 d_k f2
    + d_k(h^{i jbar}) dbar_j(h^{k lbar}) dbar_l f1 d_i f2]``
    """
    n, e = g.n, g.e
    R = range(n)
    T = {}
    for i in R:
        for j in R:
            for k in R:
                for l in R:
                    _add(T, (madd(e[j], e[l]), madd(e[i], e[k])), HALF * g.h(i, j) * g.h(k, l))
                    _add(T, (e[l], madd(e[i], e[k])), HALF * g.h(i, j) * g.dbh(j, k, l))
                    _add(T, (madd(e[j], e[l]), e[k]), HALF * g.h(i, j) * g.dh(i, k, l))
                    _add(T, (e[l], e[i]), HALF * g.dh(k, i, j) * g.dbh(j, k, l))
    return _clean(T)


def star_second_as_displayed(g: Geometry) -> dict:
    """The same coefficient with the contractions exactly as they are usually printed:

    ``1/2 sum [h^{i jbar} h^{k lbar} dbar^2_{jl} f1 d^2_{ik} f2
    + h^{i jbar} dbar_l(h^{k lbar}) dbar_j f1 d^2_{ik} f2
    + d_i(h^{i jbar}) h^{k lbar} dbar^2_{jl} f1 d_k f2
    + d_i(h^{i jbar}) dbar_l(h^{k lbar}) dbar_j f1 d_k f2]``
    """
    n, e = g.n, g.e
    R = range(n)
    T = {}
    for i in R:
        for j in R:
            for k in R:
                for l in R:
                    _add(T, (madd(e[j], e[l]), madd(e[i], e[k])), HALF * g.h(i, j) * g.h(k, l))
                    _add(T, (e[j], madd(e[i], e[k])), HALF * g.h(i, j) * g.dbh(l, k, l))
                    _add(T, (madd(e[j], e[l]), e[k]), HALF * g.dh(i, i, j) * g.h(k, l))
                    _add(T, (e[j], e[k]), HALF * g.dh(i, i, j) * g.dbh(l, k, l))
    return _clean(T)
