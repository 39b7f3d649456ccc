import random
from math import factorial

import pytest
from gmpy2 import mpq

from closed_forms import Geometry, bullet_first
from conftest import jet
from kahlerstar.laplace import (OperatorSeries, bullet_oracle, engine_for, laplace_integrate,
                                vacuum_constant)
from kahlerstar.models import (BudgetError, Flat, FubiniStudy1D, build_context, kahler_jets,
                               random_perturbation)
from kahlerstar.rings import QQI, QQi
from kahlerstar.suites import random_jet, random_point


def test_flat_is_wick_exponential():
    ctx = build_context(Flat(1), (QQi(0),), 10)
    op = engine_for(ctx).operator_series(4)
    for k in range(5):
        assert op[k] == {((k,), (k,)): QQi(mpq(1, factorial(k)))}


def test_flat_two_dimensions():
    ctx = build_context(Flat(2), (QQi(0), QQi(0)), 6)
    C2 = {k: v for k, v in engine_for(ctx).operator(2).items() if v != 0}
    assert C2 == {((2, 0), (2, 0)): QQi(mpq(1, 2)), ((1, 1), (1, 1)): QQI.one,
                  ((0, 2), (0, 2)): QQi(mpq(1, 2))}


@pytest.mark.parametrize("n,K", [(1, 3), (2, 2)])
def test_literal_expansion_matches_table(n, K):
    rng = random.Random(7 * n + K)
    m = random_perturbation(n, rng)
    ctx = build_context(m, random_point(n, rng), 2 * K + 2)
    f1, f2 = random_jet(n, 2 * K, rng), random_jet(n, 2 * K, rng)
    # bullet_oracle keeps odd eps powers and asserts that they cancel
    assert bullet_oracle(ctx, f1, f2, K) == engine_for(ctx).operator_series(K).apply(f1, f2)


def test_integral_of_table():
    ctx = build_context(Flat(1), (QQi(0),), 8)
    g = jet({(0, 0): 1, (1, 1): 1, (2, 2): 3}, 6)
    # <1> = 1, <y ybar> = hbar, <y^2 ybar^2> = 2 hbar^2
    assert laplace_integrate(ctx, g, 3).coeffs() == [QQI.one, QQI.one, QQi(6), QQI.zero]


def test_json_round_trip():
    ctx = build_context(FubiniStudy1D(), (QQi(mpq(1, 2)),), 8)
    op = engine_for(ctx).operator_series(3)
    op.header = {"model": "fubini-study", "K": 3}
    again = OperatorSeries.from_json(__import__("json").loads(op.dumps()))
    assert again == op
    assert again.header == op.header
    assert again.dumps() == op.dumps()


def test_budget():
    ctx = build_context(Flat(1), (QQi(0),), 5)
    with pytest.raises(BudgetError):
        engine_for(ctx).operator(2)
    ctx = build_context(Flat(1), (QQi(0),), 8)
    with pytest.raises(BudgetError):
        engine_for(ctx).operator_series(3).apply(jet({(1, 1): 1}, 4), jet({(1, 1): 1}, 6))


@pytest.mark.parametrize("n", [1, 2])
def test_first_order_closed_form(n):
    rng = random.Random(n)
    for _ in range(3):
        m = random_perturbation(n, rng)
        kj = kahler_jets(m, random_point(n, rng), 6)
        g = Geometry(kj)
        C1 = {k: v for k, v in engine_for(kj.context()).operator(1).items() if v != 0}
        assert C1 == bullet_first(g)


def test_vacuum_constant_flat():
    assert vacuum_constant(build_context(Flat(2), (QQi(0), QQi(0)), 6)) == QQI.zero
