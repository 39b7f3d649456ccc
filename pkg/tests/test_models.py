import json
import random

import pytest
from gmpy2 import mpq

from kahlerstar.models import (BudgetError, Flat, FubiniStudy1D, Hyperbolic1D, ModelError,
                               PolynomialPerturbation, build_context, calabi_jet, dump_jet_table,
                               jet_table_from_model, kahler_jets, load_jet_table,
                               random_perturbation, transport_jets)
from kahlerstar.rings import CC, QQI, QQi
from kahlerstar.star import StarAlgebra
from kahlerstar.suites import random_point


def test_flat_context():
    ctx = build_context(Flat(2), (QQi(1), QQi(0, 1)), 6)
    assert ctx.hinv == [[QQI.one, QQI.zero], [QQI.zero, QQI.one]]
    assert ctx.A == QQI.zero


def test_fubini_study_at_origin():
    ctx = build_context(FubiniStudy1D(), (QQi(0),), 6)
    # Phi = log(1 + |z|^2) = |z|^2 - |z|^4 / 2 + ...: h_{1 1bar}(0) = 1, Phi_{2 2bar}(0) = -2
    assert ctx.phi[((1,), (1,))] == QQI.one
    assert ctx.phi[((2,), (2,))] == QQi(-2)
    assert ctx.A == QQi(-1)


def test_hyperbolic_curvature_sign():
    ctx = build_context(Hyperbolic1D(), (QQi(mpq(1, 2)),), 6)
    assert ctx.A == QQi(1)
    with pytest.raises(ModelError):
        Hyperbolic1D().taylor_jet((QQi(1),), 4)


def test_hermitian_checked():
    with pytest.raises(ModelError):
        PolynomialPerturbation(1, {((2,), (1,)): QQi(1)})
    with pytest.raises(ModelError):
        PolynomialPerturbation(1, {((2,), (1,)): QQi(0, 1), ((1,), (2,)): QQi(0, 1)})


@pytest.mark.parametrize("n", [1, 2])
def test_log_det_identities_every_build(n):
    rng = random.Random(n)
    for _ in range(5):
        m = random_perturbation(n, rng)
        ctx = build_context(m, random_point(n, rng), 8)
        ctx.check_identities()
        # shifted contexts are checked on construction as well
        S = StarAlgebra(kahler_jets(m, random_point(n, rng), 6), 1, base=2)
        S.context("both", 2).check_identities()


def test_singular_metric():
    m = PolynomialPerturbation(1, {((2,), (2,)): QQi(mpq(-1, 4))})
    # h = 1 - |z|^2 vanishes on |z| = 1
    with pytest.raises(ModelError):
        build_context(m, (QQi(1),), 4)


def test_budget_errors():
    ctx = build_context(Flat(1), (QQi(0),), 4)
    with pytest.raises(BudgetError):
        ctx.require(2)
    with pytest.raises(BudgetError):
        calabi_jet(ctx, 9)


def test_jet_table_round_trip(tmp_path):
    m = random_perturbation(2, random.Random(3))
    pt = (QQi(mpq(1, 3)), QQi(0, mpq(-1, 3)))
    table = jet_table_from_model(m, pt, 6)
    path = tmp_path / "t.json"
    path.write_text(json.dumps(dump_jet_table(table)))
    again = load_jet_table(str(path))
    assert again.phi == table.phi
    a = build_context(m, pt, 6)
    b = build_context(again, pt, 6)
    assert a.hinv == b.hinv and a.psi == b.psi
    with pytest.raises(ModelError):
        again.taylor_jet((QQi(0), QQi(0)), 4)
    with pytest.raises(BudgetError):
        again.taylor_jet(pt, 8)


def test_jet_table_rejects_asymmetry():
    bad = {"n": 1, "order": 3, "phi": [{"I": [2], "J": [1], "re_num": 1, "re_den": 1}]}
    with pytest.raises(ModelError):
        load_jet_table(bad)


def test_float_context_matches_exact():
    import numpy as np

    m = FubiniStudy1D()
    exact = build_context(m, (QQi(mpq(1, 2), mpq(1, 4)),), 6)
    z = np.array([0.5 + 0.25j, 0.1j])
    approx = build_context(m, (z,), 6, ring=CC)
    assert abs(approx.hinv[0][0][0] - complex(exact.hinv[0][0])) < 1e-12
    assert abs(approx.A[0] - complex(exact.A)) < 1e-12


def test_transport_identity_chart():
    m = random_perturbation(1, random.Random(5))
    kj = kahler_jets(m, (QQi(0),), 6)
    out, _ = transport_jets([QQi(0), QQi(1)], kj)
    assert out.phi == kj.phi
    with pytest.raises(ModelError):
        transport_jets([QQi(0), QQi(0), QQi(1)], kj)
