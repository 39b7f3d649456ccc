import pytest
from hypothesis import given, settings, strategies as st

from conftest import jet
from kahlerstar.jets import HbarSeries, JetRing, TruncatedJet, join_key, pack, split_key
from kahlerstar.rings import QQI, QQi


def test_pack_round_trip():
    k = join_key((2, 1), (0, 3))
    assert split_key(k, 2) == ((2, 1), (0, 3))


def test_product_truncates():
    x = jet({(1, 0): 1}, 3)
    assert (x ** 4).is_zero()
    assert (x ** 3)[(3, 0)] == QQI.one


def test_exp_log_inverse():
    x = jet({(1, 0): 1, (0, 1): "1/2", (1, 1): 3}, 5)
    one = jet({(0, 0): 1}, 5)
    assert (x.exp() * (-x).exp()) == one
    assert x.exp().nilpotent_part().log1p() == x
    y = one + x
    assert y * y.inverse() == one


def test_exp_needs_nilpotent():
    with pytest.raises(ValueError):
        jet({(0, 0): 1}, 2).exp()
    with pytest.raises(ZeroDivisionError):
        jet({(1, 0): 1}, 2).inverse()


def test_diff_and_restrict():
    f = jet({(2, 1): 1, (0, 1): 5}, 4)
    assert f.diff(0)[(1, 1)] == QQi(2)
    assert f.diff(1)[(2, 0)] == QQI.one
    assert f.restrict({1}) == jet({(0, 1): 5}, 4)


def test_conj_swaps_blocks():
    f = jet({(2, 1): "1+i"}, 4)
    assert f.conj() == jet({(1, 2): "1-i"}, 4)


def test_cutoff_mismatch():
    with pytest.raises(ValueError):
        jet({(1, 0): 1}, 2) * jet({(1, 0): 1}, 3)


small = st.integers(-3, 3)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(small, small), min_size=6, max_size=6), st.integers(1, 3))
def test_inverse_property(vals, c0):
    keys = [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (2, 1)]
    c = {pack(k): QQi(a, b) for k, (a, b) in zip(keys, vals)}
    c[0] = QQi(c0)
    f = TruncatedJet(2, 4, c)
    assert (f * f.inverse()) == TruncatedJet(2, 4, {0: QQI.one})


def test_jet_ring_scalars():
    R = JetRing(1, 2, "anti")
    a = R.coerce(QQi(2))
    assert (a * R.inv(a)) == R.one
    assert R.exact


def test_hbar_series():
    s = HbarSeries.from_hbar([QQi(1), QQi(2)], 2)
    assert s.coeff(1) == QQi(2) and s.coeff(2) == QQI.zero
    assert s.is_even()
    inv = s.invert()
    assert (s * inv).coeffs() == [QQI.one, QQI.zero, QQI.zero]
