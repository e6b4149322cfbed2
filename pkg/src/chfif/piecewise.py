"""Compactly supported functions built cell by cell from attractor functions.

On a cell of width ``N**-res`` starting at ``m * N**-res`` the function is
``F(t)`` with ``t`` the local coordinate in ``[0, 1]`` and

    F = f1[y, z] + f2[w] + c0 + c1 t,

where ``f1[y, z]`` is the CHFIF of data ``(y, z)``, ``f2[w]`` the hidden AFIF of
data ``w``, all sharing one parameter set on uniform knots.  This form is
closed under restriction to the ``N`` sub-cells, so any two such functions
can be brought to a common resolution and their L2 product read off a small
Gram matrix of the local basis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .evaluator import refine
from .ifs_core import DataPoints, HiddenParams, build_system, uniform_knots
from .inner_product import cross_inner, moments

__all__ = ["LocalSpace", "PiecewiseFunction", "local_space"]


class LocalSpace:
    """Coordinates ``[y (N+1), z (N+1), w (N+1), c0, c1]`` of one cell."""

    def __init__(self, params: HiddenParams):
        self.params = params
        self.N = N = params.N
        self.knots = uniform_knots(N)
        self.dim = 3 * (N + 1) + 2
        self.sy = slice(0, N + 1)
        self.sz = slice(N + 1, 2 * (N + 1))
        self.sw = slice(2 * (N + 1), 3 * (N + 1))
        self.ipoly = 3 * (N + 1)
        self._gram = None
        self._factor = None
        self._refine = None

    def system(self, y, z):
        return build_system(self.knots, self.params, DataPoints(y, z))

    def vector(self, y=None, z=None, w=None, poly=(0.0, 0.0)) -> np.ndarray:
        v = np.zeros(self.dim)
        if y is not None:
            v[self.sy] = y
        if z is not None:
            v[self.sz] = z
        if w is not None:
            v[self.sw] = w
        v[self.ipoly :] = poly
        return v

    @property
    def gram(self) -> np.ndarray:
        """Exact ``int_0^1 e_i e_j`` for the local coordinate functions."""
        if self._gram is None:
            self._gram = self._build_gram()
        return self._gram

    @property
    def factor(self) -> np.ndarray:
        """``F`` with ``F.T @ F = gram`` restricted to its range.

        The coordinates are redundant (the Gram matrix has a kernel), so the
        quadratic form is evaluated as ``|F v|**2``; this drops kernel
        components exactly and keeps small norms accurate.
        """
        if self._factor is None:
            w, Q = np.linalg.eigh(self.gram)
            keep = w > 1e-10 * w[-1]
            self._factor = np.sqrt(w[keep])[:, None] * Q[:, keep].T
        return self._factor

    def _build_gram(self) -> np.ndarray:
        N, D = self.N, self.dim
        eye = np.eye(N + 1)
        zero = np.zeros(N + 1)
        # 2(N+1) unit systems: first N+1 carry y-data, the rest z-data.
        systems = [self.system(eye[k], zero) for k in range(N + 1)]
        systems += [self.system(zero, eye[k]) for k in range(N + 1)]
        # Column index of each coordinate in terms of (system, component).
        coords = [(s, 1) for s in range(2 * (N + 1))]
        coords += [(N + 1 + k, 2) for k in range(N + 1)]
        G = np.zeros((D, D))
        tables = {}
        for i in range(len(systems)):
            for j in range(i, len(systems)):
                tables[i, j] = cross_inner(systems[i], systems[j])
        nf = len(coords)
        for a in range(nf):
            for b in range(a, nf):
                (si, ci), (sj, cj) = coords[a], coords[b]
                if si <= sj:
                    val = tables[si, sj].ip(ci, cj)
                else:
                    val = tables[sj, si].ip(cj, ci)
                G[a, b] = G[b, a] = val
        for a, (si, ci) in enumerate(coords):
            m = moments(systems[si], 1)[ci - 1]
            for j in range(2):
                G[a, nf + j] = G[nf + j, a] = m[j]
        for i in range(2):
            for j in range(2):
                G[nf + i, nf + j] = 1.0 / (i + j + 1)
        return G

    @property
    def refine_matrices(self) -> list[np.ndarray]:
        """``R[n-1] @ v`` gives the coordinates of ``F(L_n t)``."""
        if self._refine is None:
            self._refine = [self._refine_matrix(n) for n in range(1, self.N + 1)]
        return self._refine

    def _refine_matrix(self, n: int) -> np.ndarray:
        N, D = self.N, self.dim
        k = n - 1
        al, be, ga = self.params.alpha[k], self.params.beta[k], self.params.gamma[k]
        R = np.zeros((D, D))
        iy = np.arange(N + 1)
        iz = iy + N + 1
        iw = iy + 2 * (N + 1)
        c0, c1 = self.ipoly, self.ipoly + 1
        R[iy, iy] = al
        R[iz, iz] = al
        R[iw, iz] = be
        R[iw, iw] += ga
        # p_n[y, z] = c t + d with c, d from the join-up conditions on [0, 1].
        R[c1, k + 1] += 1.0
        R[c1, k] -= 1.0
        R[c1, N] -= al
        R[c1, 0] += al
        R[c1, iz[N]] -= be
        R[c1, iz[0]] += be
        R[c0, k] += 1.0
        R[c0, 0] -= al
        R[c0, iz[0]] -= be
        # q_n[w] = e t + h.
        R[c1, iw[k + 1]] += 1.0
        R[c1, iw[k]] -= 1.0
        R[c1, iw[N]] -= ga
        R[c1, iw[0]] += ga
        R[c0, iw[k]] += 1.0
        R[c0, iw[0]] -= ga
        # Polynomial part: c0 + c1 (t + n - 1) / N.
        R[c0, c0] += 1.0
        R[c0, c1] += (n - 1) / N
        R[c1, c1] += 1.0 / N
        return R

    def endpoint_values(self, v: np.ndarray):
        """Local function value at ``t = 0`` and ``t = 1``."""
        N = self.N
        y, w = v[self.sy], v[self.sw]
        c0, c1 = v[self.ipoly], v[self.ipoly + 1]
        return y[0] + w[0] + c0, y[N] + w[N] + c0 + c1

    def sample(self, v: np.ndarray, depth: int):
        """Local coordinates and values on the depth-``depth`` grid of ``[0, 1]``."""
        s1 = refine(self.system(v[self.sy], v[self.sz]), depth)
        s2 = refine(self.system(np.zeros(self.N + 1), v[self.sw]), depth)
        t = s1.xs
        return t, s1.f1 + s2.f2 + v[self.ipoly] + v[self.ipoly + 1] * t


@lru_cache(maxsize=32)
def _cached_space(N, alpha, beta, gamma) -> LocalSpace:
    return LocalSpace(HiddenParams(alpha, beta, gamma))


def local_space(params: HiddenParams) -> LocalSpace:
    """Shared :class:`LocalSpace` for a parameter set (Gram matrix computed once)."""
    return _cached_space(
        params.N, tuple(params.alpha.tolist()), tuple(params.beta.tolist()), tuple(params.gamma.tolist())
    )


@dataclass(frozen=True)
class PiecewiseFunction:
    """Function on the real line, zero outside the listed cells.

    Cell ``m`` at resolution ``res`` covers ``[m, m + 1] * N**-res``.
    """

    space: LocalSpace
    res: int
    cells: dict = field(default_factory=dict)

    @classmethod
    def from_pair(cls, space: LocalSpace, res: int, pieces: dict, hidden: bool = False):
        """Build from ``{cell: (y, z)}``; ``hidden`` selects the AFIF component."""
        cells = {}
        for m, (y, z) in pieces.items():
            if hidden:
                cells[m] = space.vector(w=z)
            else:
                cells[m] = space.vector(y=y, z=z)
        return cls(space, res, cells)

    @property
    def N(self) -> int:
        return self.space.N

    @property
    def width(self) -> float:
        return float(self.N) ** (-self.res)

    def support(self):
        """Hull of the cells with nonzero coordinates."""
        used = [m for m, v in self.cells.items() if np.any(v != 0)]
        if not used:
            return (0.0, 0.0)
        lo, hi = min(used), max(used)
        return lo * self.width, (hi + 1) * self.width

    def refined(self, res: int | None = None) -> "PiecewiseFunction":
        """Same function expressed on finer cells."""
        res = self.res + 1 if res is None else res
        if res < self.res:
            raise ValueError("cannot coarsen a piecewise function")
        f = self
        R = self.space.refine_matrices
        while f.res < res:
            cells = {}
            for m, v in f.cells.items():
                for n in range(self.N):
                    cells[self.N * m + n] = R[n] @ v
            f = PiecewiseFunction(self.space, f.res + 1, cells)
        return f

    def _aligned(self, other: "PiecewiseFunction"):
        if other.space is not self.space:
            raise ValueError("functions use different parameter sets")
        res = max(self.res, other.res)
        return self.refined(res), other.refined(res)

    def inner(self, other: "PiecewiseFunction") -> float:
        a, b = self._aligned(other)
        F = self.space.factor
        total = 0.0
        for m, v in a.cells.items():
            u = b.cells.get(m)
            if u is not None:
                total += float((F @ v) @ (F @ u))
        return total * a.width

    def norm(self) -> float:
        F = self.space.factor
        return float(np.sqrt(sum(float(np.sum((F @ v) ** 2)) for v in self.cells.values()) * self.width))

    def shift(self, t) -> "PiecewiseFunction":
        """``x -> f(x - t)``; ``t`` must be a multiple of the cell width."""
        k = t * self.N**self.res
        if abs(k - round(k)) > 1e-12:
            raise ValueError(f"shift {t} is not a multiple of the cell width")
        k = int(round(k))
        return PiecewiseFunction(self.space, self.res, {m + k: v for m, v in self.cells.items()})

    def dilate(self, k: int = 1) -> "PiecewiseFunction":
        """``x -> f(N**k x)``."""
        return PiecewiseFunction(self.space, self.res + k, dict(self.cells))

    def __add__(self, other: "PiecewiseFunction") -> "PiecewiseFunction":
        a, b = self._aligned(other)
        cells = dict(a.cells)
        for m, v in b.cells.items():
            cells[m] = cells[m] + v if m in cells else v.copy()
        return PiecewiseFunction(self.space, a.res, cells)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, s: float) -> "PiecewiseFunction":
        return PiecewiseFunction(self.space, self.res, {m: s * v for m, v in self.cells.items()})

    def __neg__(self):
        return (-1.0) * self

    def sample(self, depth: int):
        """Sorted ``(x, value)`` arrays over the support; shared cell edges appear once."""
        xs, vals = [], []
        w = self.width
        for i, m in enumerate(sorted(self.cells)):
            t, f = self.space.sample(self.cells[m], depth)
            x = (m + t) * w
            if xs and np.isclose(xs[-1][-1], x[0]):
                x, f = x[1:], f[1:]
            xs.append(x)
            vals.append(f)
        if not xs:
            return np.zeros(0), np.zeros(0)
        return np.concatenate(xs), np.concatenate(vals)

    def values_on(self, x: np.ndarray, depth: int) -> np.ndarray:
        """Values at arbitrary points, using each cell's depth-``depth`` grid."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        w = self.width
        for m, v in self.cells.items():
            t, f = self.space.sample(v, depth)
            mask = (x >= m * w) & (x <= (m + 1) * w)
            if mask.any():
                out[mask] = np.interp(x[mask] / w - m, t, f)
        return out

    def endpoint_jumps(self) -> float:
        """Largest mismatch between adjacent cells at shared edges (and at the support ends)."""
        worst = 0.0
        keys = sorted(self.cells)
        ends = {m: self.space.endpoint_values(self.cells[m]) for m in keys}
        for m in keys:
            left, right = ends[m]
            prev = ends[m - 1][1] if m - 1 in ends else 0.0
            nxt = ends[m + 1][0] if m + 1 in ends else 0.0
            worst = max(worst, abs(left - prev), abs(right - nxt))
        return worst
