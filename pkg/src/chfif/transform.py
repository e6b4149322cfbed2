"""Projection, decomposition and reconstruction in the scaling/wavelet spaces.

Level ``k`` uses the functions ``N**(-k/2) f(N**-k x - l)`` with ``f`` a
normalised scaling function or wavelet, so level ``k = -1`` has cells of
width ``1/N``.  Coefficients always refer to an orthonormal family: the finite
set of translates involved is orthonormalised with the inverse square root of
its Gram matrix.  For the scaling functions that matrix is the identity up to
rounding; wavelet translates are not mutually orthogonal, so wavelet
coefficients belong to the orthonormalised translates.

A decomposition maps level ``k-1`` coefficients ``c`` to
``(v, w) = X c`` with ``X`` the matrix of inner products between the
orthonormal families; reconstruction applies ``X.T``.  Whenever the coarse
scaling and wavelet translates span the fine space, ``X`` has orthonormal
columns and the pair is lossless.  With a basis that is not nested the
roundtrip error equals the part of the fine space missed by the split.

Signals live on ``[lo, hi]``.  Families contain every translate whose support
overlaps the interval, so supports crossing the edges are kept whole rather
than cut, and the coefficient set grows by one or two shifts per level.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .mra_basis import ScalingBasis
from .piecewise import PiecewiseFunction
from .wavelet import WaveletSolution, assemble_psi

log = logging.getLogger(__name__)

__all__ = [
    "Family",
    "SignalCoefficients",
    "LevelMismatchError",
    "MissingWaveletsError",
    "scaling_family",
    "wavelet_family",
    "project",
    "decompose",
    "reconstruct",
    "wavedec",
    "waverec",
    "split_matrix",
    "level_families",
]


class LevelMismatchError(ValueError):
    pass


class MissingWaveletsError(ValueError):
    pass


def _level_function(f: PiecewiseFunction, N: int, level: int, shift: int) -> PiecewiseFunction:
    """``N**(-level/2) f(N**-level x - shift)``."""
    g = f.dilate(-level)
    return float(N) ** (-level / 2) * g.shift(shift * float(N) ** level)


@dataclass
class Family:
    """Translates ``(generator, shift)`` of a set of generators at one level."""

    kind: str
    level: int
    index: list
    functions: list

    def __post_init__(self):
        G = np.array([[a.inner(b) for b in self.functions] for a in self.functions])
        w, V = np.linalg.eigh(G)
        keep = w > 1e-10 * (w[-1] if w.size else 1.0)
        self.gram = G
        self.rank = int(keep.sum())
        if self.rank < len(w):
            log.info("%s family at level %d: %d of %d translates independent",
                     self.kind, self.level, self.rank, len(w))
        # Rows of S @ functions form a Parseval frame of the span (an orthonormal
        # basis when the translates are independent).
        Vk = V[:, keep]
        self.S = (Vk / np.sqrt(w[keep])) @ Vk.T if w.size else np.zeros((0, 0))

    def __len__(self):
        return len(self.index)

    def hull(self):
        lo = min(f.support()[0] for f in self.functions)
        hi = max(f.support()[1] for f in self.functions)
        return lo, hi

    def cross(self, other: "Family") -> np.ndarray:
        """``<e_a, e'_b>`` between the orthonormalised members of two families."""
        raw = np.array([[a.inner(b) for b in other.functions] for a in self.functions])
        return self.S @ raw @ other.S.T

    def synthesize(self, coeffs) -> PiecewiseFunction:
        weights = self.S.T @ np.asarray(coeffs, float)
        out = None
        for c, f in zip(weights, self.functions):
            out = c * f if out is None else out + c * f
        return out


def _translates(generators, N, level, lo, hi):
    scale = float(N) ** level
    out_index, out_funcs = [], []
    for i, g in enumerate(generators):
        glo, ghi = g.support()
        l_min = int(np.floor(lo / scale - ghi)) - 1
        l_max = int(np.ceil(hi / scale - glo)) + 1
        for l in range(l_min, l_max + 1):
            a, b = (glo + l) * scale, (ghi + l) * scale
            if a < hi - 1e-12 and b > lo + 1e-12:
                out_index.append((i, l))
                out_funcs.append(_level_function(g, N, level, l))
    order = sorted(range(len(out_index)), key=lambda k: (out_index[k][1], out_index[k][0]))
    return [out_index[k] for k in order], [out_funcs[k] for k in order]


def scaling_family(basis: ScalingBasis, level: int, lo: float, hi: float, inside: bool = False) -> Family:
    """Scaling translates at ``level`` overlapping ``(lo, hi)``.

    With ``inside=True`` only translates supported in ``[lo, hi]`` are kept.
    """
    basis = basis.normalized_copy()
    index, funcs = _translates(basis.phi, basis.N, level, lo, hi)
    if inside:
        keep = [k for k, f in enumerate(funcs) if f.support()[0] >= lo - 1e-12 and f.support()[1] <= hi + 1e-12]
        index = [index[k] for k in keep]
        funcs = [funcs[k] for k in keep]
    return Family("phi", level, index, funcs)


def wavelet_family(basis: ScalingBasis, wavelets: WaveletSolution, level: int, lo: float, hi: float) -> Family:
    if wavelets is None:
        raise MissingWaveletsError("a wavelet solution is required")
    gens = [assemble_psi(wavelets, basis, i)[0] for i in range(wavelets.A.shape[0])]
    norms = [g.norm() for g in gens]
    gens = [(1.0 / n) * g for g, n in zip(gens, norms)]
    index, funcs = _translates(gens, basis.N, level, lo, hi)
    return Family("psi", level, index, funcs)


@dataclass
class SignalCoefficients:
    """Coefficients of a function in an orthonormalised family."""

    family: Family
    values: np.ndarray

    @property
    def level(self) -> int:
        return self.family.level

    def energy(self) -> float:
        return float(self.values @ self.values)

    def to_function(self) -> PiecewiseFunction:
        return self.family.synthesize(self.values)

    def to_dict(self) -> dict:
        return {
            "kind": self.family.kind,
            "level": self.level,
            "index": [list(map(int, ix)) for ix in self.family.index],
            "values": self.values.tolist(),
        }


def project(x, values, basis: ScalingBasis, level: int, depth: int = 12, family: Family | None = None) -> SignalCoefficients:
    """Coefficients of a sampled signal by trapezoidal quadrature.

    The signal is treated as zero outside ``[x[0], x[-1]]``; each basis
    function is evaluated from its depth-``depth`` grid (exact at grid points,
    linear in between).
    """
    x = np.asarray(x, float)
    values = np.asarray(values, float)
    if x.ndim != 1 or x.shape != values.shape or x.size < 2:
        raise ValueError("x and values must be equal-length 1-d arrays")
    if family is None:
        family = scaling_family(basis, level, x[0], x[-1])
    cell = float(basis.N) ** level
    finest = cell * float(basis.N) ** (-(depth + 1))
    if np.max(np.diff(x)) > 64 * finest and np.max(np.diff(x)) > cell / 16:
        warnings.warn("sampling grid is coarse compared with the basis detail", stacklevel=2)
    raw = np.array([np.trapezoid(values * f.values_on(x, depth), x) for f in family.functions])
    return SignalCoefficients(family, family.S @ raw)


def split_matrix(fine: Family, coarse: Family, detail: Family) -> np.ndarray:
    """``X`` with ``(v, w) = X c``; rows are coarse then detail members."""
    return np.vstack([coarse.cross(fine), detail.cross(fine)])


def _coarse_families(coeffs: SignalCoefficients, basis, wavelets):
    if wavelets is None:
        raise MissingWaveletsError("a wavelet solution is required")
    lo, hi = coeffs.family.hull()
    k = coeffs.level + 1
    return scaling_family(basis, k, lo, hi), wavelet_family(basis, wavelets, k, lo, hi)


def decompose(coeffs: SignalCoefficients, basis: ScalingBasis, wavelets: WaveletSolution):
    """Split level ``k-1`` coefficients into level ``k`` scaling and wavelet parts."""
    coarse, detail = _coarse_families(coeffs, basis, wavelets)
    X = split_matrix(coeffs.family, coarse, detail)
    out = X @ coeffs.values
    n = len(coarse)
    return SignalCoefficients(coarse, out[:n]), SignalCoefficients(detail, out[n:])


def reconstruct(v: SignalCoefficients, w: SignalCoefficients, fine: Family) -> SignalCoefficients:
    """Level ``k-1`` coefficients (in ``fine``) of the function described by ``v`` and ``w``."""
    if v.level != w.level or v.level != fine.level + 1:
        raise LevelMismatchError(f"levels {v.level}, {w.level} do not sit above {fine.level}")
    X = split_matrix(fine, v.family, w.family)
    return SignalCoefficients(fine, X.T @ np.concatenate([v.values, w.values]))


def wavedec(coeffs: SignalCoefficients, basis, wavelets, levels: int):
    """Repeated :func:`decompose`; returns ``(approx, [detail_1, ..., detail_L], fines)``."""
    details, fines = [], []
    c = coeffs
    for _ in range(levels):
        fines.append(c.family)
        c, d = decompose(c, basis, wavelets)
        details.append(d)
    return c, details, fines


def waverec(approx: SignalCoefficients, details, fines) -> SignalCoefficients:
    c = approx
    for d, fine in zip(reversed(details), reversed(fines)):
        c = reconstruct(c, d, fine)
    return c


def level_families(basis, wavelets, level: int, lo: float, hi: float, levels: int):
    """Families used by :func:`wavedec` for a signal on ``[lo, hi]`` at ``level``.

    Returns ``(fines, coarsest, details)``; lets coefficients be reloaded
    without storing the functions themselves.
    """
    fine = scaling_family(basis, level, lo, hi)
    fines, details = [], []
    for _ in range(levels):
        fines.append(fine)
        dummy = SignalCoefficients(fine, np.zeros(len(fine)))
        fine, detail = _coarse_families(dummy, basis, wavelets)
        details.append(detail)
    return fines, fine, details
