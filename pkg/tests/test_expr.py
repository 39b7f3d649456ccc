import pytest
from gmpy2 import mpq

from kahlerstar.expr import parse_polynomial
from kahlerstar.rings import QQi


def test_terms_and_aliases():
    p = parse_polynomial("z*conj(z) + 1/2*I*z**2 - zbar")
    assert p.terms == {(1, 1): QQi(1), (2, 0): QQi(0, mpq(1, 2)), (0, 1): QQi(-1)}
    q = parse_polynomial("z1*zb2 + conj(z2)**2 + z2bar", 2)
    assert q.terms == {(1, 0, 0, 1): QQi(1), (0, 0, 0, 2): QQi(1), (0, 0, 0, 1): QQi(1)}


def test_jet_at_point():
    p = parse_polynomial("z*conj(z)")
    j = p.jet((QQi(1, 2),), 3)
    assert j[(0, 0)] == QQi(5) and j[(1, 0)] == QQi(1, -2) and j[(1, 1)] == QQi(1)


@pytest.mark.parametrize("bad", ["exp(z)", "w*z", "conj(z*z)", "sqrt(2)*z", "z+", "1/z"])
def test_rejects(bad):
    with pytest.raises(ValueError):
        parse_polynomial(bad)
