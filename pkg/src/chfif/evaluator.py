"""Exact evaluation of the attractor function on N-adic grids.

Every grid point has a finite address under the maps ``L_n``, so its value
follows from the knot data by finitely many applications of the
Read-Bajraktarevic operator; there is no truncation error on the grid.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .ifs_core import CoalescenceSystem

__all__ = ["GridSamples", "MemoryCapError", "refine", "evaluate_at", "grid_size", "to_csv"]

DEFAULT_MAX_SAMPLES = 2**24


class MemoryCapError(ValueError):
    """Requested grid would exceed the configured sample cap."""


@dataclass(frozen=True)
class GridSamples:
    depth: int
    xs: np.ndarray
    f1: np.ndarray
    f2: np.ndarray

    def component(self, i: int) -> np.ndarray:
        if i == 1:
            return self.f1
        if i == 2:
            return self.f2
        raise ValueError(f"component must be 1 or 2, got {i}")

    def restrict(self, depth: int) -> "GridSamples":
        """Samples of the coarser depth-``depth`` grid contained in this one."""
        if depth > self.depth:
            raise ValueError("cannot restrict to a finer grid")
        N = round((self.xs.size - 1) ** (1.0 / (self.depth + 1)))
        step = N ** (self.depth - depth)
        return GridSamples(depth, self.xs[::step], self.f1[::step], self.f2[::step])


def grid_size(N: int, depth: int) -> int:
    """Number of points of the depth-``depth`` grid: ``N**(depth+1) + 1``."""
    return N ** (depth + 1) + 1


def refine(sys: CoalescenceSystem, depth: int, max_samples: int = DEFAULT_MAX_SAMPLES) -> GridSamples:
    """Values of ``(f1, f2)`` on the grid obtained by ``depth`` refinements of the knots.

    Points already present on the coarser grid keep their previous values, so
    ``refine(s, d + 1).restrict(d)`` equals ``refine(s, d)`` bitwise and knot
    values equal the data exactly.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    N = sys.N
    if grid_size(N, depth) > max_samples:
        raise MemoryCapError(
            f"depth {depth} needs {grid_size(N, depth)} samples (cap {max_samples})"
        )
    knots, p, co = sys.knots, sys.params, sys.coeffs
    xs = knots.x.copy()
    f1 = sys.data.y.copy()
    f2 = sys.data.z.copy()
    for _ in range(depth):
        M = xs.size - 1
        new_x = np.empty(N * M + 1)
        new_1 = np.empty(N * M + 1)
        new_2 = np.empty(N * M + 1)
        for n in range(1, N + 1):
            k = n - 1
            sl = slice(k * M, n * M + 1)
            new_x[sl] = knots.L(n, xs)
            new_1[sl] = p.alpha[k] * f1 + p.beta[k] * f2 + co.p(n, xs)
            new_2[sl] = p.gamma[k] * f2 + co.q(n, xs)
        # Old grid points sit at every N-th index.
        new_x[::N] = xs
        new_1[::N] = f1
        new_2[::N] = f2
        xs, f1, f2 = new_x, new_1, new_2
    return GridSamples(depth, xs, f1, f2)


def evaluate_at(sys: CoalescenceSystem, x: float, depth: int):
    """Value of ``(f1, f2)`` at the depth-``depth`` grid point nearest to ``x``.

    The point is located by following its address digits, so the cost is
    ``O(depth)`` instead of building the whole grid.  For ``x`` off the grid the
    error is bounded by the modulus of continuity of the attractor function
    over one grid cell, which decays like ``c**depth`` with ``c`` the
    contraction modulus of the system.
    """
    knots = sys.knots
    x0, xN = knots.x[0], knots.x[-1]
    if not x0 <= x <= xN:
        raise ValueError(f"x = {x} lies outside [{x0}, {xN}]")
    tol = 1e-14 * knots.length
    address = []
    xi = float(x)
    for _ in range(depth + 1):
        hit = np.flatnonzero(np.abs(knots.x - xi) <= tol)
        if hit.size:
            k = int(hit[0])
            break
        if len(address) == depth:
            k = int(np.argmin(np.abs(knots.x - xi)))
            break
        n = int(np.clip(np.searchsorted(knots.x, xi, side="right"), 1, sys.N))
        address.append(n)
        xi = float(knots.L_inv(n, xi))
    point = (knots.x[k], sys.data.y[k], sys.data.z[k])
    p, co = sys.params, sys.coeffs
    for n in reversed(address):
        xk, y, z = point
        point = (
            knots.L(n, xk),
            p.alpha[n - 1] * y + p.beta[n - 1] * z + co.p(n, xk),
            p.gamma[n - 1] * z + co.q(n, xk),
        )
    return float(point[1]), float(point[2])


def to_csv(samples: GridSamples) -> str:
    """CSV text with header ``x,f1,f2``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "f1", "f2"])
    for row in zip(samples.xs, samples.f1, samples.f2):
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()
