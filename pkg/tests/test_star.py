import random

import pytest
from gmpy2 import mpq

from conftest import jet
from kahlerstar.jets import HbarSeries, TruncatedJet
from kahlerstar.laplace import engine_for, vacuum_constant
from kahlerstar.models import (BudgetError, Flat, FubiniStudy1D, Hyperbolic1D, ModelError,
                               PolynomialPerturbation, build_context, jet_table_from_model,
                               random_perturbation)
from kahlerstar.rings import QQI, QQi
from kahlerstar.star import (JetSeries, hat_star, i_inverse, i_map, normalized_star, star_algebra,
                             unit_element)
from kahlerstar.suites import random_jet, random_point


def _const(f, K):
    return HbarSeries.from_hbar([f.constant()], K)


@pytest.mark.parametrize("model,want", [(Flat(1), [1, 0, 0, 0, 0]),
                                        (FubiniStudy1D(), [1, 1, 0, 0, 0]),
                                        (Hyperbolic1D(), [1, -1, 0, 0, 0])])
def test_unit_closed_forms(model, want):
    e = unit_element(model, (QQi(0),), 4).values()
    assert e.coeffs() == [QQi(w) for w in want]


def test_unit_equations_and_reality():
    rng = random.Random(1)
    for n in (1, 2):
        m = random_perturbation(n, rng)
        S = star_algebra(m, random_point(n, rng), 3)
        ea, eh = S.unit("anti"), S.unit("holo")
        assert ea.values() == eh.values() == S.unit("both").values()
        assert ea.values().coeff(1) == -S.context(None, None).A
        assert S.unit("both").is_real()
        f = random_jet(n, 6, rng)
        assert S.bullet_value(ea.series, f) == _const(f, 3)
        assert S.bullet_value(f, eh.series) == _const(f, 3)
        # e times its inverse
        prod = [sum((ea.values().coeff(a) * ea.inverse_values().coeff(k - a)
                     for a in range(k + 1)), QQI.zero) for k in range(4)]
        assert prod == [QQI.one, QQI.zero, QQI.zero, QQI.zero]


def test_wrong_direction_breaks_associativity():
    # (f1 • f2) must be expanded in the antiholomorphic direction when it sits on the left
    rng = random.Random(2)
    S = star_algebra(random_perturbation(1, rng), random_point(1, rng), 2)
    f1, f2, f3 = (random_jet(1, 8, rng) for _ in range(3))
    good = S.bullet_value(S.bullet(f1, f2, "anti"), f3)
    assert good == S.bullet_value(f1, S.bullet(f2, f3, "holo"))
    assert S.bullet_value(S.bullet(f1, f2, "holo"), f3) != good


@pytest.mark.parametrize("n,K", [(1, 3), (2, 2)])
def test_star_associative_and_unital(n, K):
    rng = random.Random(10 * n + K)
    S = star_algebra(random_perturbation(n, rng), random_point(n, rng), K)
    f1, f2, f3 = (random_jet(n, 4 * K, rng) for _ in range(3))
    one = TruncatedJet(2 * n, 2 * K, {0: QQI.one})
    g = f1.truncate(2 * K)
    assert S.star_value(g, one) == S.star_value(one, g) == _const(g, K)
    left = S.star_value(S.star(f1, f2, "anti"), f3)
    assert left == S.star_value(f1, S.star(f2, f3, "holo"))


def test_flat_star_is_wick():
    # conj(z) * z = |z|^2 + hbar on the flat plane
    zb = jet({(0, 1): 1}, 6)
    z = jet({(1, 0): 1}, 6)
    s = normalized_star(Flat(1), (QQi(0),), zb, z, 3)
    assert s.coeffs() == [QQI.zero, QQI.one, QQI.zero, QQI.zero]
    assert normalized_star(Flat(1), (QQi(0),), z, zb, 3).coeffs() == [QQI.zero] * 4


def test_jet_series_balance():
    f = jet({(1, 1): 1, (3, 0): 2}, 8)
    F = JetSeries.from_jet(f, 2, base=1)
    assert [F.degree(m) for m in range(3)] == [5, 3, 1]
    assert (F * F)[0] == (f * f).truncate(5)
    with pytest.raises(BudgetError):
        JetSeries.from_jet(jet({(1, 0): 1}, 2), 2, base=1)


def test_imap_flat():
    zz = jet({(1, 1): 1}, 6)
    v = i_map(Flat(1), (QQi(0),), zz, 2)
    assert v.coeffs() == [QQI.zero, QQI.one, QQI.zero]
    assert i_inverse(Flat(1), (QQi(0),), zz, 2).coeffs() == [QQI.zero, -QQI.one, QQI.zero]


@pytest.mark.parametrize("model", [FubiniStudy1D(), random_perturbation(2, random.Random(4))])
def test_imap_inverse_and_hat_star(model):
    rng = random.Random(5)
    n = model.n
    pt = (QQi(mpq(1, 3)),) if n == 1 else random_point(n, rng)
    S = star_algebra(model, pt, 2)
    f = random_jet(n, 4, rng)
    F = S.series(f)
    assert S.i_map(S.i_inverse(f)) == F
    assert S.i_inverse(S.i_map(f)) == F
    assert S.i_map_value(f).coeff(0) == f.constant()
    one = TruncatedJet(2 * n, 4, {0: QQI.one})
    assert S.hat_star(f, one) == F == S.hat_star(one, f)
    assert hat_star(model, pt, f, one, 2) == F.values()


def test_jet_tables_cannot_shift():
    table = jet_table_from_model(FubiniStudy1D(), (QQi(0),), 6)
    with pytest.raises(ModelError):
        star_algebra(table, (QQi(0),), 2)


def test_engines_give_same_star():
    rng = random.Random(8)
    m, pt = random_perturbation(2, rng), random_point(2, rng)
    a = star_algebra(m, pt, 2).star_operator()
    b = star_algebra(m, pt, 2, engine="graphs").star_operator()
    assert a == b


@pytest.mark.parametrize("n", [1, 2])
def test_second_unit_coefficient_is_a_squared_minus_d(n):
    rng = random.Random(70 + n)
    for _ in range(3):
        m, p = random_perturbation(n, rng), random_point(n, rng)
        S = star_algebra(m, p, 2)
        e, A = S.unit("both").values(), S.context(None, None).A
        assert e.coeff(2) == A * A - vacuum_constant(build_context(m, p, 6))


@pytest.mark.parametrize("n", [1, 2])
def test_holomorphic_shift_of_potential(n):
    # adding f(z) + conj(f(z)) to the potential changes neither product
    rng = random.Random(80 + n)
    for K in (1, 2, 3):
        m, p = random_perturbation(n, rng), random_point(n, rng)
        shift = {}
        for _ in range(3):
            I = tuple(rng.randint(0, 2) for _ in range(n))
            c = QQi(rng.randint(-3, 3), rng.randint(-3, 3))
            shift[(I, (0,) * n)] = c
            shift[((0,) * n, I)] = c.conjugate()
        shift.pop(((0,) * n, (0,) * n), None)
        m2 = PolynomialPerturbation(n, {**m.coeffs, **{k: m.coeffs.get(k, 0) + v
                                                       for k, v in shift.items()}})
        a = engine_for(build_context(m, p, 2 * K + 2)).operator_series(K)
        b = engine_for(build_context(m2, p, 2 * K + 2)).operator_series(K)
        assert a.diff(b) == []
        f1, f2 = random_jet(n, 2 * K, rng), random_jet(n, 2 * K, rng)
        assert star_algebra(m, p, K).star_value(f1, f2) == \
            star_algebra(m2, p, K).star_value(f1, f2)
