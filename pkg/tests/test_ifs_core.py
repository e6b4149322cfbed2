import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chfif.ifs_core import (
    ContractivityError,
    DataPoints,
    HiddenParams,
    KnotError,
    Knots,
    apply_map,
    build_system,
    uniform_knots,
)

from conftest import SQRT7, admissible_params, pub_system, systems


def test_hat_coefficients(hat):
    assert np.allclose(hat.coeffs.c, [1.0, -1.0])
    assert np.allclose(hat.coeffs.d, [0.0, 1.0])
    assert np.all(hat.coeffs.e == 0) and np.all(hat.coeffs.h == 0)


def test_template_zero_coefficients():
    al1 = 0.3
    r1 = -0.2
    p = HiddenParams([al1, 0.1], [0.0, 0.0], [0.0, 0.0])
    s = build_system(uniform_knots(2), p, DataPoints([1.0, r1, 0.0], [0, 0, 0]))
    assert s.coeffs.c[0] == pytest.approx(r1 + al1 - 1)
    assert s.coeffs.d[0] == pytest.approx(1 - al1)


def test_zero_data_zero_coefficients(pub_params):
    s = build_system(uniform_knots(2), pub_params, DataPoints([0, 0, 0], [0, 0, 0]))
    for k in "cdeh":
        assert np.all(getattr(s.coeffs, k) == 0)


def test_apply_map_hat_endpoint(hat):
    assert apply_map(hat, 1, (1.0, 0.0, 0.0)) == pytest.approx((0.5, 1.0, 0.0))


def test_apply_map_published():
    s = pub_system([1.0, SQRT7 - 3, 0.0], [0.0, 0.3, 0.0])
    x, y, z = apply_map(s, 2, (0.0, 1.0, 0.0))
    assert (x, y, z) == pytest.approx((0.5, SQRT7 - 3, 0.3), abs=1e-12)


@given(systems())
@settings(max_examples=60, deadline=None)
def test_join_up(sys):
    x, y, z = sys.knots.x, sys.data.y, sys.data.z
    for n in range(1, sys.N + 1):
        left = apply_map(sys, n, (x[0], y[0], z[0]))
        right = apply_map(sys, n, (x[-1], y[-1], z[-1]))
        assert np.allclose(left, (x[n - 1], y[n - 1], z[n - 1]), atol=1e-12, rtol=0)
        assert np.allclose(right, (x[n], y[n], z[n]), atol=1e-12, rtol=0)


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=6, unique=True))
def test_L_endpoints(xs):
    k = Knots(sorted(xs))
    for n in range(1, k.N + 1):
        assert k.L(n, k.x[0]) == pytest.approx(k.x[n - 1], abs=1e-12)
        assert k.L(n, k.x[-1]) == pytest.approx(k.x[n], abs=1e-12)


@given(admissible_params(), st.floats(-2, 2), st.data())
@settings(max_examples=40, deadline=None)
def test_linearity(p, a, data):
    vals = st.floats(-3, 3, allow_nan=False)
    N = p.N
    d1 = DataPoints(*[[data.draw(vals) for _ in range(N + 1)] for _ in range(2)])
    d2 = DataPoints(*[[data.draw(vals) for _ in range(N + 1)] for _ in range(2)])
    knots = uniform_knots(N)
    s = build_system(knots, p, a * d1 + d2)
    s1, s2 = build_system(knots, p, d1), build_system(knots, p, d2)
    for k in "cdeh":
        assert np.allclose(getattr(s.coeffs, k), a * getattr(s1.coeffs, k) + getattr(s2.coeffs, k), atol=1e-12)


def test_contractivity_strict():
    with pytest.raises(ContractivityError):
        HiddenParams([0.0, 0.0], [0.5, 0.0], [0.5, 0.0])
    with pytest.raises(ContractivityError):
        HiddenParams([1.0, 0.0], [0.0, 0.0], [0.0, 0.0])
    HiddenParams([0.0, 0.0], [0.49, 0.0], [0.5, 0.0])


def test_bad_knots_and_sizes(pub_params):
    with pytest.raises(KnotError):
        Knots([0.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        build_system(uniform_knots(3), pub_params, DataPoints([0] * 4, [0] * 4))
    with pytest.raises(ValueError):
        build_system(uniform_knots(2), pub_params, DataPoints([0] * 4, [0] * 4))


def test_consistency(pub_params):
    s = pub_system([1.0, 0.2, -0.4], [0.1, 0.0, 0.2])
    assert s.is_consistent()
