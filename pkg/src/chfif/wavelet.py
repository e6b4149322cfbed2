"""Wavelets for the N = 2 scaling basis.

Each wavelet is continuous on ``[0, 2]`` and built from four attractor pieces
on the half-unit cells ``[j/2, (j+1)/2]``.  Piece ``j`` uses the consecutive
triple ``(A[2j], A[2j+1], A[2j+2])`` of the padded knot-value row
``(0, A_1, ..., A_7, 0)`` as its ``y`` data and the matching ``B`` triple as
its hidden data, so ``A_l`` is the value at ``x = l / 4``.

The unknowns are fixed by orthogonality conditions:

(A) ``psi_i`` against every scaling function and its overlapping translates;
(B) ``psi_i`` against ``psi_j`` for ``i < j``;
(C) the hidden part of ``psi_i`` against the hidden part of the hidden-type
    scaling function at shifts 0 and 1;
(D) the hidden part of ``psi_i`` against the interior and two-cell scaling
    functions at shift 0;

plus ``||psi_i||^2 = 1``.  That is 36 + 3 equations in 42 unknowns.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .mra_basis import ScalingBasis
from .piecewise import PiecewiseFunction

log = logging.getLogger(__name__)

__all__ = [
    "WaveletSolution",
    "WaveletConvergenceError",
    "PUBLISHED_TABLE",
    "D_PHI",
    "assemble_psi",
    "residuals",
    "residual_labels",
    "solve_wavelets",
    "jacobian",
    "null_space_dimension",
    "psi_samples",
]

N_PSI = 3
N_KNOT = 7
DEFAULT_GAUGE = (("A", 1, 0), ("A", 1, 1), ("A", 2, 0))

# Scaling functions paired with hidden wavelet parts in (D): the interior one
# and the two-cell one.
D_PHI = (0, 2)

PUBLISHED_TABLE = {
    "A": [
        [-1.04784, 0.0125935, -1.04663, 0.0231596, 0.00599567, -0.00795969, 0.00391617],
        [0.0, 0.0, -0.298716, 1.32346, -2.4746, 1.12432, -0.553166],
        [0.0, 0.0, 0.0, 0.0, 1.06312, 0.0, 0.983686],
    ],
    "B": [
        [19.1929, -21.6229, 11.8901, -11.1171, -4.93066, 1.19803, 0.567807],
        [0.0, 0.0, 0.0, 0.0, -11.6825, -15.2071, -3.19525],
        [0.0, 0.0, 0.0, 0.0, -13.3015, 33.9169, -11.0405],
    ],
}


class WaveletConvergenceError(RuntimeError):
    def __init__(self, msg, best_residual, iterations, best=None):
        super().__init__(msg)
        self.best_residual = best_residual
        self.iterations = iterations
        self.best = best


@dataclass(frozen=True)
class WaveletSolution:
    """Knot values ``A[i, l-1] = A_{i+1, l}`` and ``B`` likewise (3x7 each)."""

    A: np.ndarray
    B: np.ndarray
    gauge: tuple = DEFAULT_GAUGE
    report: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        B = np.array(self.B, dtype=float)
        if A.shape != (N_PSI, N_KNOT) or B.shape != (N_PSI, N_KNOT):
            raise ValueError("A and B must be 3x7 arrays")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @classmethod
    def published(cls) -> "WaveletSolution":
        return cls(PUBLISHED_TABLE["A"], PUBLISHED_TABLE["B"])

    @classmethod
    def zeros(cls) -> "WaveletSolution":
        return cls(np.zeros((N_PSI, N_KNOT)), np.zeros((N_PSI, N_KNOT)))

    def vector(self) -> np.ndarray:
        return np.concatenate([self.A.ravel(), self.B.ravel()])

    @classmethod
    def from_vector(cls, v, gauge=DEFAULT_GAUGE, report=None) -> "WaveletSolution":
        v = np.asarray(v, float)
        n = N_PSI * N_KNOT
        return cls(v[:n].reshape(N_PSI, N_KNOT), v[n:].reshape(N_PSI, N_KNOT), tuple(gauge), report or {})

    def to_dict(self) -> dict:
        return {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "gauge": [list(g) for g in self.gauge],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WaveletSolution":
        gauge = tuple(tuple(g) for g in d.get("gauge", DEFAULT_GAUGE))
        return cls(d["A"], d["B"], gauge)


def _padded(row):
    return np.r_[0.0, row, 0.0]


def assemble_psi(sol: WaveletSolution, basis: ScalingBasis, i: int):
    """First and hidden components of wavelet ``i`` (0-based) as piecewise functions."""
    if basis.N != 2:
        raise ValueError("wavelets are built for N = 2 only")
    if not 0 <= i < N_PSI:
        raise IndexError(f"wavelet index {i} outside 0..{N_PSI - 1}")
    a, b = _padded(sol.A[i]), _padded(sol.B[i])
    pieces = {j: (a[2 * j : 2 * j + 3], b[2 * j : 2 * j + 3]) for j in range(4)}
    space = basis.space
    return (
        PiecewiseFunction.from_pair(space, 1, pieces),
        PiecewiseFunction.from_pair(space, 1, pieces, hidden=True),
    )


def _overlapping_shifts(f: PiecewiseFunction, g: PiecewiseFunction):
    """Integer shifts ``l`` for which ``g(. - l)`` overlaps ``f`` on a set of positive length."""
    flo, fhi = f.support()
    glo, ghi = g.support()
    return [l for l in range(int(np.floor(flo - ghi)), int(np.ceil(fhi - glo)) + 1)
            if glo + l < fhi and ghi + l > flo]


def _conditions(basis: ScalingBasis):
    """Enumerate conditions as ``(label, kind, i, j, shift)``."""
    phi = basis.phi
    # Structural support [0, 2] of every wavelet, independent of its values.
    psi_support = PiecewiseFunction(basis.space, 1, {m: np.ones(basis.space.dim) for m in range(4)})
    out = []
    for i in range(N_PSI):
        for j, p in enumerate(phi):
            for l in _overlapping_shifts(psi_support, p):
                out.append((f"A psi{i + 1} phi{j + 1} shift{l}", "A", i, j, l))
    for i in range(N_PSI):
        for j in range(i + 1, N_PSI):
            out.append((f"B psi{i + 1} psi{j + 1}", "B", i, j, 0))
    hidden_j = 1  # the hidden-type scaling function
    for i in range(N_PSI):
        for l in _overlapping_shifts(psi_support, phi[hidden_j]):
            if l >= 0:
                out.append((f"C psi{i + 1}_2 phi{hidden_j + 1}_2 shift{l}", "C", i, hidden_j, l))
    for i in range(N_PSI):
        for j in D_PHI:
            out.append((f"D psi{i + 1}_2 phi{j + 1} shift0", "D", i, j, 0))
    n_orth = len(out)
    if n_orth != 36:
        log.warning("enumerated %d orthogonality conditions, expected 36", n_orth)
    for i in range(N_PSI):
        out.append((f"norm psi{i + 1}", "N", i, i, 0))
    return out


def residual_labels(basis: ScalingBasis) -> list[str]:
    return [c[0] for c in _conditions(basis)]


def residuals(sol: WaveletSolution, basis: ScalingBasis) -> np.ndarray:
    """The 39 residuals: 36 orthogonality products and 3 norm defects."""
    psi = [assemble_psi(sol, basis, i) for i in range(N_PSI)]
    phi, phi_h = basis.phi, basis.phi_hidden
    out = []
    for _, kind, i, j, l in _conditions(basis):
        if kind == "A":
            out.append(psi[i][0].inner(phi[j].shift(l)))
        elif kind == "B":
            out.append(psi[i][0].inner(psi[j][0]))
        elif kind == "C":
            out.append(psi[i][1].inner(phi_h[j].shift(l)))
        elif kind == "D":
            out.append(psi[i][1].inner(phi[j].shift(l)))
        else:
            out.append(psi[i][0].inner(psi[i][0]) - 1.0)
    return np.array(out)


def _gauge_index(g) -> int:
    name, i, l = g
    return (0 if name == "A" else N_PSI * N_KNOT) + i * N_KNOT + l


def jacobian(sol: WaveletSolution, basis: ScalingBasis, step: float = 1e-7) -> np.ndarray:
    """Central-difference Jacobian of :func:`residuals` (39 x 42)."""
    v = sol.vector()
    cols = []
    for k in range(v.size):
        e = np.zeros_like(v)
        e[k] = step
        rp = residuals(WaveletSolution.from_vector(v + e), basis)
        rm = residuals(WaveletSolution.from_vector(v - e), basis)
        cols.append((rp - rm) / (2 * step))
    return np.column_stack(cols)


def null_space_dimension(sol: WaveletSolution, basis: ScalingBasis, rtol: float = 1e-7) -> int:
    J = jacobian(sol, basis)
    sv = np.linalg.svd(J, compute_uv=False)
    rank = int(np.sum(sv > rtol * sv[0]))
    return J.shape[1] - rank


def _random_seed(rng, gauge):
    v = rng.standard_normal(2 * N_PSI * N_KNOT)
    for g in gauge:
        v[_gauge_index(g)] = 0.0
    return WaveletSolution.from_vector(v, gauge)


def solve_wavelets(basis: ScalingBasis, seed="paper", gauge=DEFAULT_GAUGE, tol: float = 1e-9,
                   max_iter: int = 100, starts: int = 20, rng=None) -> WaveletSolution:
    """Levenberg-Marquardt solve of the residual system with pinned gauge variables.

    ``seed`` is a :class:`WaveletSolution`, ``"paper"`` (the published table)
    or ``"random"``; random seeding tries up to ``starts`` starting points.
    Gauge variables keep their seed value; ``max_iter`` caps the residual
    evaluations per start.  The conditions are solved against the normalised
    scaling functions; orthogonality does not depend on their scale, and the
    hidden scaling function is small enough to spoil the conditioning
    otherwise.
    """
    if basis.N != 2:
        raise ValueError("wavelets are built for N = 2 only")
    basis = basis.normalized_copy()
    gauge = tuple(tuple(g) for g in gauge)
    if isinstance(seed, WaveletSolution):
        seeds = [seed]
    elif seed == "paper":
        seeds = [WaveletSolution.published()]
    elif seed == "random":
        gen = np.random.default_rng(rng)
        seeds = [_random_seed(gen, gauge) for _ in range(starts)]
    else:
        raise ValueError(f"unknown seed {seed!r}")
    best = None
    for k, s in enumerate(seeds):
        v, res, it = _levenberg_marquardt(s.vector(), basis, gauge, tol, max_iter)
        log.debug("start %d: residual %.3e after %d iterations", k, res, it)
        sol = WaveletSolution.from_vector(v, gauge, {"residual": res, "iterations": it, "start": k})
        if best is None or res < best.report["residual"]:
            best = sol
        if res <= tol:
            if min(np.linalg.norm(sol.A[i]) for i in range(N_PSI)) == 0.0:
                continue
            return sol
    raise WaveletConvergenceError(
        f"no root below {tol:g}; best max residual {best.report['residual']:.3e}",
        best.report["residual"], best.report["iterations"], best,
    )


def _levenberg_marquardt(v0, basis, gauge, tol, max_iter, step=1e-7):
    """MINPACK Levenberg-Marquardt over the non-gauge variables."""
    free = np.ones(v0.size, bool)
    for g in gauge:
        free[_gauge_index(g)] = False

    def full(x):
        v = v0.copy()
        v[free] = x
        return v

    def F(x):
        return residuals(WaveletSolution.from_vector(full(x)), basis)

    def J(x):
        return jacobian(WaveletSolution.from_vector(full(x)), basis, step)[:, free]

    r0 = F(v0[free])
    if np.max(np.abs(r0)) <= tol:
        return v0.copy(), float(np.max(np.abs(r0))), 0
    out = least_squares(F, v0[free], jac=J, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                        max_nfev=max(max_iter, 1))
    return full(out.x), float(np.max(np.abs(out.fun))), int(out.nfev)


def psi_samples(sol: WaveletSolution, basis: ScalingBasis, depth: int = 8):
    """``(x, psi_1, psi_2, psi_3)`` on a common grid of ``[0, 2]``."""
    cols = []
    xs = None
    for i in range(N_PSI):
        x, f = assemble_psi(sol, basis, i)[0].sample(depth)
        xs = x if xs is None else xs
        cols.append(f)
    return xs, np.column_stack(cols)
