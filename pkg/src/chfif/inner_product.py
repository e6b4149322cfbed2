"""Exact L2 inner products and moments of attractor functions.

Substituting the functional equations

    f1(L_n x) = alpha_n f1(x) + beta_n f2(x) + p_n(x)
    f2(L_n x) = gamma_n f2(x) + q_n(x)

into ``int_I f g dx = sum_n a_n int_I f(L_n t) g(L_n t) dt`` turns every inner
product between two systems on the same knots into one row of a small linear
system.  The unknowns are the four cross products ``<f_i, g_j>`` and the
moments ``int_I f_i(t) t^m dt`` (m = 0, 1) of both systems.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .evaluator import GridSamples
from .ifs_core import CoalescenceSystem

__all__ = [
    "InnerProductTable",
    "SingularSystemError",
    "moments",
    "cross_inner",
    "eq_I_residual",
    "quad_inner",
    "translated_inner",
]


class SingularSystemError(np.linalg.LinAlgError):
    pass


def _definite(coef, lo: float, hi: float) -> float:
    """Integral over ``[lo, hi]`` of the polynomial with ascending coefficients ``coef``."""
    return float(sum(c * (hi ** (k + 1) - lo ** (k + 1)) / (k + 1) for k, c in enumerate(coef)))


def _mul(a, b):
    out = [0.0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _lin(c: float, d: float):
    return [float(d), float(c)]


def _solve(A: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            "self-similarity system is singular; were the contractivity bounds bypassed?"
        ) from exc


def _moment_rows(sys: CoalescenceSystem, maxdeg: int):
    """Rows ``A m = r`` for the moment vector ``[M1^0..M1^D, M2^0..M2^D]``."""
    D = maxdeg + 1
    knots, par, co = sys.knots, sys.params, sys.coeffs
    lo, hi = knots.x[0], knots.x[-1]
    A = np.eye(2 * D)
    r = np.zeros(2 * D)
    for n in range(1, sys.N + 1):
        k = n - 1
        an, bn = knots.a[k], knots.b[k]
        affine = [bn, an]
        for m in range(D):
            # (a t + b)^m = sum_j C(m, j) a^j b^(m-j) t^j
            for j in range(m + 1):
                w = an * comb(m, j) * an**j * bn ** (m - j)
                A[m, j] -= w * par.alpha[k]
                A[m, D + j] -= w * par.beta[k]
                A[D + m, D + j] -= w * par.gamma[k]
            power = [1.0]
            for _ in range(m):
                power = _mul(power, affine)
            r[m] += an * _definite(_mul(_lin(co.c[k], co.d[k]), power), lo, hi)
            r[D + m] += an * _definite(_mul(_lin(co.e[k], co.h[k]), power), lo, hi)
    return A, r


def moments(sys: CoalescenceSystem, maxdeg: int = 1):
    """Exact moments ``int f_i(x) x^m dx`` over ``[x_0, x_N]``.

    Returns
    -------
    m1, m2 : ndarray
        Moment arrays of length ``maxdeg + 1`` for ``f1`` and ``f2``.
    """
    if maxdeg < 1:
        raise ValueError("maxdeg must be at least 1")
    A, r = _moment_rows(sys, maxdeg)
    sol = _solve(A, r)
    D = maxdeg + 1
    return sol[:D], sol[D:]


@dataclass(frozen=True)
class InnerProductTable:
    """Cross products ``ip_ij = <f_i, g_j>`` and first two moments of each side."""

    ip11: float
    ip12: float
    ip21: float
    ip22: float
    momentsA: np.ndarray
    momentsB: np.ndarray

    def ip(self, i: int, j: int) -> float:
        return getattr(self, f"ip{i}{j}")


# Unknown layout for the joint system.
_IP11, _IP12, _IP21, _IP22 = 0, 1, 2, 3
_MA, _MB = 4, 8  # offsets: [M1^0, M1^1, M2^0, M2^1]


def _same_knots(a: CoalescenceSystem, b: CoalescenceSystem) -> bool:
    return a.knots.x.shape == b.knots.x.shape and np.array_equal(a.knots.x, b.knots.x)


def cross_inner(a: CoalescenceSystem, b: CoalescenceSystem) -> InnerProductTable:
    """Solve for all cross inner products between two systems on shared knots."""
    if not _same_knots(a, b):
        raise ValueError("systems must share the same knots")
    knots = a.knots
    lo, hi = knots.x[0], knots.x[-1]
    A = np.zeros((12, 12))
    rhs = np.zeros(12)

    for off, s in ((_MA, a), (_MB, b)):
        Am, rm = _moment_rows(s, 1)
        A[off : off + 4, off : off + 4] = Am
        rhs[off : off + 4] = rm

    for i in range(4):
        A[i, i] = 1.0
    pa, pb = a.params, b.params
    ca, cb = a.coeffs, b.coeffs

    def mom(off, comp, poly):
        # <f_comp, poly> over I as a linear combination of moment unknowns.
        base = off + 2 * (comp - 1)
        coef = poly
        out = {}
        for j, cj in enumerate(coef[:2]):
            out[base + j] = out.get(base + j, 0.0) + cj
        return out

    def add(row, terms, scale):
        for col, val in terms.items():
            A[row, col] -= scale * val

    for n in range(1, knots.N + 1):
        k = n - 1
        an = knots.a[k]
        al, be, ga = pa.alpha[k], pa.beta[k], pa.gamma[k]
        alh, beh, gah = pb.alpha[k], pb.beta[k], pb.gamma[k]
        p = _lin(ca.c[k], ca.d[k])
        q = _lin(ca.e[k], ca.h[k])
        ph = _lin(cb.c[k], cb.d[k])
        qh = _lin(cb.e[k], cb.h[k])

        # <f1, g1>
        A[_IP11, _IP11] -= an * al * alh
        A[_IP11, _IP12] -= an * al * beh
        A[_IP11, _IP21] -= an * be * alh
        A[_IP11, _IP22] -= an * be * beh
        add(_IP11, mom(_MA, 1, ph), an * al)
        add(_IP11, mom(_MA, 2, ph), an * be)
        add(_IP11, mom(_MB, 1, p), an * alh)
        add(_IP11, mom(_MB, 2, p), an * beh)
        rhs[_IP11] += an * _definite(_mul(p, ph), lo, hi)

        # <f1, g2>
        A[_IP12, _IP12] -= an * al * gah
        A[_IP12, _IP22] -= an * be * gah
        add(_IP12, mom(_MA, 1, qh), an * al)
        add(_IP12, mom(_MA, 2, qh), an * be)
        add(_IP12, mom(_MB, 2, p), an * gah)
        rhs[_IP12] += an * _definite(_mul(p, qh), lo, hi)

        # <f2, g1>
        A[_IP21, _IP21] -= an * ga * alh
        A[_IP21, _IP22] -= an * ga * beh
        add(_IP21, mom(_MA, 2, ph), an * ga)
        add(_IP21, mom(_MB, 1, q), an * alh)
        add(_IP21, mom(_MB, 2, q), an * beh)
        rhs[_IP21] += an * _definite(_mul(q, ph), lo, hi)

        # <f2, g2>
        A[_IP22, _IP22] -= an * ga * gah
        add(_IP22, mom(_MA, 2, qh), an * ga)
        add(_IP22, mom(_MB, 2, q), an * gah)
        rhs[_IP22] += an * _definite(_mul(q, qh), lo, hi)

    sol = _solve(A, rhs)
    return InnerProductTable(
        ip11=float(sol[_IP11]),
        ip12=float(sol[_IP12]),
        ip21=float(sol[_IP21]),
        ip22=float(sol[_IP22]),
        momentsA=sol[_MA : _MA + 4].reshape(2, 2),
        momentsB=sol[_MB : _MB + 4].reshape(2, 2),
    )


def eq_I_residual(a: CoalescenceSystem, b: CoalescenceSystem, table: InnerProductTable) -> float:
    """Residual of the closed-form ``<f1, g1>`` identity at the solved table.

    The identity reads ``<f1,g1> (1 - sum a_n alpha_n alpha'_n) = sum a_n (...)``
    with the bracket holding the cross, moment and polynomial terms.
    """
    knots = a.knots
    lo, hi = knots.x[0], knots.x[-1]
    Ma, Mb = table.momentsA, table.momentsB

    def pair(moms, comp, poly):
        c = poly
        return float(c[0] * moms[comp - 1, 0] + c[1] * moms[comp - 1, 1])

    denom = 1.0
    total = 0.0
    for k in range(knots.N):
        an = knots.a[k]
        al, be = a.params.alpha[k], a.params.beta[k]
        alh, beh = b.params.alpha[k], b.params.beta[k]
        p = _lin(a.coeffs.c[k], a.coeffs.d[k])
        ph = _lin(b.coeffs.c[k], b.coeffs.d[k])
        denom -= an * al * alh
        total += an * (
            al * beh * table.ip12
            + be * alh * table.ip21
            + be * beh * table.ip22
            + al * pair(Ma, 1, ph)
            + alh * pair(Mb, 1, p)
            + be * pair(Ma, 2, ph)
            + beh * pair(Mb, 2, p)
            + _definite(_mul(p, ph), lo, hi)
        )
    return abs(table.ip11 * denom - total)


def quad_inner(sa: GridSamples, sb: GridSamples, component_a: int = 1, component_b: int = 1) -> float:
    """Composite trapezoidal integral of the product of two sampled components."""
    if sa.xs.shape != sb.xs.shape or not np.array_equal(sa.xs, sb.xs):
        raise ValueError("sample grids differ")
    prod = sa.component(component_a) * sb.component(component_b)
    return float(np.trapezoid(prod, sa.xs))


def translated_inner(a, b, shift: int) -> float:
    """``int f(x) g(x - shift) dx`` over the real line.

    ``a`` and ``b`` are either systems on ``[0, 1]`` (extended by zero) or
    :class:`~chfif.piecewise.PiecewiseFunction` objects; the latter are split
    into cells and summed cell by cell.
    """
    from .piecewise import PiecewiseFunction

    if isinstance(a, CoalescenceSystem) and isinstance(b, CoalescenceSystem):
        for s in (a, b):
            if s.knots.x[0] != 0.0 or s.knots.x[-1] != 1.0:
                raise ValueError("translated_inner expects systems on [0, 1]")
        if int(shift) != shift:
            raise ValueError("shift must be an integer")
        if shift != 0:
            return 0.0
        return cross_inner(a, b).ip11
    if isinstance(a, PiecewiseFunction) and isinstance(b, PiecewiseFunction):
        return a.inner(b.shift(shift))
    raise TypeError("unsupported argument types for translated_inner")
