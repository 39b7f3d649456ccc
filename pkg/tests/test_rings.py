from fractions import Fraction

import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from kahlerstar.rings import CC, QQI, QQi, graded, madd, mfact, msub, multi_indices, parse_rational

rationals = st.fractions(max_denominator=50).map(lambda f: mpq(f.numerator, f.denominator))
gaussians = st.builds(QQi, rationals, rationals)


def test_parse_forms():
    assert QQi.parse("1/2") == QQi(mpq(1, 2))
    assert QQi.parse("-1/3+2/5*i") == QQi(mpq(-1, 3), mpq(2, 5))
    assert QQi.parse("3/4*i") == QQi(0, mpq(3, 4))
    assert QQi.parse("2-i") == QQi(2, -1)
    assert parse_rational(Fraction(3, 9)) == mpq(1, 3)


def test_floats_rejected():
    with pytest.raises(TypeError):
        parse_rational(0.5)


def test_str_and_json_round_trip():
    z = QQi(mpq(-7, 3), mpq(5, 2))
    assert str(z) == "-7/3+5/2*i"
    assert QQi.from_json(z.to_json()) == z


@given(gaussians, gaussians, gaussians)
def test_field_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert a * b == b * a
    assert (a * b).conjugate() == a.conjugate() * b.conjugate()
    if a != 0:
        assert a * a.inverse() == QQI.one


def test_multi_index_order():
    assert multi_indices(2, 2) == ((2, 0), (1, 1), (0, 2))
    assert list(graded(2, 1)) == [(0, 0), (1, 0), (0, 1)]
    assert mfact((3, 2)) == 12
    assert madd((1, 0), (0, 2)) == (1, 2)
    assert msub((1, 0), (0, 1)) is None


def test_float_ring_vectorised():
    import numpy as np

    x = np.array([1 + 1j, 2.0])
    assert not CC.is_zero(x)
    assert np.allclose(CC.conj(x), [1 - 1j, 2.0])
    assert CC.const(QQi(mpq(1, 2), 1)) == 0.5 + 1j
