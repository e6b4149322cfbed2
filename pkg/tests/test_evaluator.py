import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chfif.evaluator import MemoryCapError, evaluate_at, grid_size, refine, to_csv

from conftest import pub_f0, systems


def test_hat_depth1(hat):
    s = refine(hat, 1)
    assert np.array_equal(s.xs, [0, 0.25, 0.5, 0.75, 1.0])
    assert np.allclose(s.f1, [0, 0.5, 1, 0.5, 0])


@given(systems(), st.integers(0, 5))
@settings(max_examples=40, deadline=None)
def test_interpolation_exact(sys, depth):
    s = refine(sys, depth)
    step = sys.N ** depth
    assert np.array_equal(s.f1[::step], sys.data.y)
    assert np.array_equal(s.f2[::step], sys.data.z)
    for i, x in enumerate(sys.knots.x):
        assert evaluate_at(sys, x, depth) == (sys.data.y[i], sys.data.z[i])


@given(systems(), st.integers(0, 5))
@settings(max_examples=40, deadline=None)
def test_self_consistency_bitwise(sys, depth):
    fine = refine(sys, depth + 1).restrict(depth)
    coarse = refine(sys, depth)
    assert np.array_equal(fine.f1, coarse.f1) and np.array_equal(fine.f2, coarse.f2)


@given(systems(), st.integers(0, 4))
@settings(max_examples=40, deadline=None)
def test_hidden_self_affinity(sys, depth):
    fine = refine(sys, depth + 1)
    coarse = refine(sys, depth)
    M = coarse.xs.size - 1
    for n in range(1, sys.N + 1):
        k = n - 1
        part = fine.f2[k * M : n * M + 1]
        expect = sys.params.gamma[k] * coarse.f2 + sys.coeffs.q(n, coarse.xs)
        assert np.allclose(part, expect, atol=1e-12)


@given(systems(N=2))
@settings(max_examples=25, deadline=None)
def test_boundedness(sys):
    maxima = [np.max(np.abs(refine(sys, d).f1)) for d in range(10)]
    assert all(b >= a for a, b in zip(maxima, maxima[1:]))
    diffs = np.diff(maxima)
    c = sys.params.contraction_modulus(sys.knots)
    # Cauchy: increments are bounded by a geometric sequence with ratio c.
    bound = (np.max(np.abs(sys.data.y)) + np.max(np.abs(sys.data.z)) + 10) * 10
    assert np.all(diffs[3:] <= bound * c ** np.arange(4, 10) + 1e-12)


def test_published_depth2_by_hand():
    f0 = pub_f0()
    d1 = refine(f0, 1)
    d2 = refine(f0, 2)
    p = f0.params
    x_half = 0.5
    f1, f2 = d1.f1[2], d1.f2[2]
    expect = p.alpha[0] * f1 + p.beta[0] * f2 + f0.coeffs.p(1, x_half)
    assert d2.xs[2] == 0.25
    assert d2.f1[2] == pytest.approx(expect, abs=1e-15)


def test_evaluate_at(hat):
    assert evaluate_at(hat, 0.3, 20)[0] == pytest.approx(0.6, abs=1e-6)
    f0 = pub_f0()
    s = refine(f0, 20)
    i = (s.xs.size - 1) // 4
    assert evaluate_at(f0, 0.25, 20) == (s.f1[i], s.f2[i])
    with pytest.raises(ValueError):
        evaluate_at(hat, 1.5, 3)


def test_grid_size_and_cap(hat):
    assert grid_size(2, 3) == 17
    assert refine(hat, 3).xs.size == 17
    with pytest.raises(MemoryCapError):
        refine(hat, 30)
    with pytest.raises(ValueError):
        refine(hat, -1)


def test_csv(hat):
    text = to_csv(refine(hat, 1))
    lines = text.strip().split("\n")
    assert lines[0] == "x,f1,f2"
    assert len(lines) == 6
    assert lines[2].split(",")[:2] == ["0.25", "0.5"]
