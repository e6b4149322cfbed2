"""Coalescence hidden-variable IFS: interpolation data and map coefficients.

A system is built from knots ``x_0 < ... < x_N``, the scaling parameters
``alpha``, ``beta``, ``gamma`` and the generalized data ``(y_i, z_i)``.  Each
map acts as

    w_n(x, y, z) = (a_n x + b_n,
                    alpha_n y + beta_n z + c_n x + d_n,
                    gamma_n z + e_n x + h_n)

and the linear parts ``p_n = c_n x + d_n`` and ``q_n = e_n x + h_n`` are fixed
by the join-up conditions at the interval endpoints.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ContractivityError",
    "KnotError",
    "Knots",
    "HiddenParams",
    "DataPoints",
    "MapCoefficients",
    "CoalescenceSystem",
    "build_system",
    "apply_map",
    "uniform_knots",
]


class KnotError(ValueError):
    """Knots are not strictly increasing or too few."""


class ContractivityError(ValueError):
    """A scaling parameter violates the strict contractivity bounds."""


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Knots:
    x: np.ndarray

    def __post_init__(self):
        x = _frozen(self.x)
        if x.ndim != 1 or x.size < 2:
            raise KnotError("need at least two knots (N >= 1)")
        if not np.all(np.diff(x) > 0):
            raise KnotError(f"knots must be strictly increasing: {x.tolist()}")
        object.__setattr__(self, "x", x)

    @property
    def N(self) -> int:
        return self.x.size - 1

    @property
    def length(self) -> float:
        return float(self.x[-1] - self.x[0])

    @property
    def a(self) -> np.ndarray:
        """Contraction ratios of the affine maps ``L_n``."""
        return np.diff(self.x) / self.length

    @property
    def b(self) -> np.ndarray:
        x = self.x
        return (x[-1] * x[:-1] - x[0] * x[1:]) / self.length

    def L(self, n: int, x):
        """Affine map of ``[x_0, x_N]`` onto the n-th interval (1-based n)."""
        return self.a[n - 1] * np.asarray(x) + self.b[n - 1]

    def L_inv(self, n: int, x):
        return (np.asarray(x) - self.b[n - 1]) / self.a[n - 1]


def uniform_knots(N: int, left: float = 0.0, right: float = 1.0) -> Knots:
    """Knots ``x_i = left + i (right - left) / N``."""
    return Knots(left + (right - left) * np.arange(N + 1) / N)


@dataclass(frozen=True)
class HiddenParams:
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if not (self.alpha.shape == self.beta.shape == self.gamma.shape):
            raise ValueError("alpha, beta and gamma must have equal lengths")
        self.check()

    @property
    def N(self) -> int:
        return self.alpha.size

    def check(self):
        """Raise :class:`ContractivityError` unless every bound holds strictly."""
        for n in range(self.N):
            al, be, ga = self.alpha[n], self.beta[n], self.gamma[n]
            if not abs(al) < 1:
                raise ContractivityError(f"|alpha_{n + 1}| = {abs(al)!r} is not < 1")
            if not abs(ga) < 1:
                raise ContractivityError(f"|gamma_{n + 1}| = {abs(ga)!r} is not < 1")
            if not abs(be) + abs(ga) < 1:
                raise ContractivityError(
                    f"|beta_{n + 1}| + |gamma_{n + 1}| = {abs(be) + abs(ga)!r} is not < 1"
                )

    @classmethod
    def zeros(cls, N: int) -> "HiddenParams":
        z = np.zeros(N)
        return cls(z, z, z)

    def contraction_modulus(self, knots: Knots) -> float:
        """``max(|alpha_n| + |beta_n|, |gamma_n|, a_n)`` over all maps."""
        return float(
            max(
                np.max(np.abs(self.alpha) + np.abs(self.beta)),
                np.max(np.abs(self.gamma)),
                np.max(knots.a),
            )
        )


@dataclass(frozen=True)
class DataPoints:
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y", _frozen(self.y))
        object.__setattr__(self, "z", _frozen(self.z))
        if self.y.shape != self.z.shape or self.y.ndim != 1:
            raise ValueError("y and z must be 1-d arrays of equal length")

    def __add__(self, other: "DataPoints") -> "DataPoints":
        return DataPoints(self.y + other.y, self.z + other.z)

    def __rmul__(self, s: float) -> "DataPoints":
        return DataPoints(s * self.y, s * self.z)


@dataclass(frozen=True)
class MapCoefficients:
    """Per-interval coefficients of ``p_n = c x + d`` and ``q_n = e x + h``."""

    c: np.ndarray
    d: np.ndarray
    e: np.ndarray
    h: np.ndarray

    def p(self, n: int, x):
        return self.c[n - 1] * np.asarray(x) + self.d[n - 1]

    def q(self, n: int, x):
        return self.e[n - 1] * np.asarray(x) + self.h[n - 1]


def _solve_join_up(knots: Knots, params: HiddenParams, data: DataPoints) -> MapCoefficients:
    x0, xN = knots.x[0], knots.x[-1]
    y, z = data.y, data.z
    al, be, ga = params.alpha, params.beta, params.gamma
    # Two endpoint conditions per component and interval, solved directly.
    c = (y[1:] - y[:-1] - al * (y[-1] - y[0]) - be * (z[-1] - z[0])) / (xN - x0)
    d = y[:-1] - al * y[0] - be * z[0] - c * x0
    e = (z[1:] - z[:-1] - ga * (z[-1] - z[0])) / (xN - x0)
    h = z[:-1] - ga * z[0] - e * x0
    return MapCoefficients(_frozen(c), _frozen(d), _frozen(e), _frozen(h))


@dataclass(frozen=True)
class CoalescenceSystem:
    """One interpolation problem together with its solved IFS coefficients.

    ``f1`` (the CHFIF) and ``f2`` (the hidden AFIF) are the two components of
    the attractor's defining function.
    """

    knots: Knots
    params: HiddenParams
    data: DataPoints
    coeffs: MapCoefficients = field(repr=False)

    @property
    def N(self) -> int:
        return self.knots.N

    def with_data(self, data: DataPoints) -> "CoalescenceSystem":
        return build_system(self.knots, self.params, data)

    def is_consistent(self) -> bool:
        fresh = _solve_join_up(self.knots, self.params, self.data)
        return all(
            np.array_equal(getattr(fresh, k), getattr(self.coeffs, k)) for k in "cdeh"
        )


def build_system(knots: Knots, params: HiddenParams, data: DataPoints) -> CoalescenceSystem:
    """Solve the join-up conditions and return the complete system.

    Raises
    ------
    ValueError
        If the lengths of ``params`` or ``data`` do not match the knots.
    """
    N = knots.N
    if params.N != N:
        raise ValueError(f"expected {N} parameter triples, got {params.N}")
    if data.y.size != N + 1:
        raise ValueError(f"expected {N + 1} data values, got {data.y.size}")
    params.check()
    return CoalescenceSystem(knots, params, data, _solve_join_up(knots, params, data))


def apply_map(sys: CoalescenceSystem, n: int, point):
    """Apply the n-th IFS map (1-based) to ``(x, y, z)``."""
    if not 1 <= n <= sys.N:
        raise IndexError(f"map index {n} outside 1..{sys.N}")
    x, y, z = point
    p = sys.params
    k = n - 1
    return (
        float(sys.knots.L(n, x)),
        float(p.alpha[k] * y + p.beta[k] * z + sys.coeffs.p(n, x)),
        float(p.gamma[k] * z + sys.coeffs.q(n, x)),
    )
