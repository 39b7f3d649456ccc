import numpy as np
import pytest

from kahlerstar.models import Flat, FubiniStudy1D, ModelError
from kahlerstar.trace import BumpPolynomial, Quadrature, QuadratureError, trace_report, trace_defect

F1 = BumpPolynomial({(0, 1): 1, (1, 1): 2 - 1j}, 0.1 + 0.1j, 0.7)
F2 = BumpPolynomial({(1, 0): 1, (2, 1): 0.5j}, 0.1 + 0.1j, 0.7)


def test_bump_jet_matches_finite_differences():
    z0 = np.array([0.2 + 0.1j])
    j = F1.jet(z0, 2)
    f = lambda z: (np.conj(z) + (2 - 1j) * z * np.conj(z)) * \
        np.exp(-1 / (1 - abs(z - F1.center) ** 2 / 0.49))
    h = 1e-6
    # d/dz = (d/dx - i d/dy) / 2
    dz = ((f(z0 + h) - f(z0 - h)) - 1j * (f(z0 + 1j * h) - f(z0 - 1j * h))) / (4 * h)
    assert abs(j[(0, 0)][0] - f(z0)[0]) < 1e-12
    assert abs(j[(1, 0)][0] - dz[0]) < 1e-7


def test_quadrature_integrates_area():
    z, w = Quadrature(0.5j, 2.0, 16, 8).nodes()
    assert abs(w.sum() - np.pi * 4) < 1e-12
    assert abs(np.sum(w * abs(z - 0.5j) ** 2) - np.pi * 8) < 1e-10


def test_order_zero_is_exact():
    assert trace_defect(Flat(1), F1, F2, 0) < 1e-15


@pytest.mark.parametrize("model,tol", [(Flat(1), 1e-8), (FubiniStudy1D(), 1e-6)])
@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("product", ["bullet", "star"])
def test_commutators_have_zero_trace(model, tol, k, product):
    r = trace_report(model, F1, F2, k, product=product)
    assert r.defect < tol
    assert r.error < tol
    assert r.scale > 1e3 * r.defect


def test_non_commutator_is_not_traceless():
    # f1 • f2 alone integrates to something of order one: the test is not vacuous
    z, w = Quadrature(F1.center, F1.radius).nodes()
    from kahlerstar.trace import _integrand
    total, terms = _integrand(Flat(1), F1, F2, 1, "bullet", z, 0)
    assert abs(np.sum(terms[0] * w)) > 1e-3


def test_coarse_grid_reports_error():
    with pytest.raises(QuadratureError):
        trace_report(Flat(1), F1, F2, 3, Quadrature(F1.center, F1.radius, 6, 4), tol=1e-12)


def test_one_dimension_only():
    with pytest.raises(ModelError):
        trace_defect(Flat(2), F1, F2, 1)
