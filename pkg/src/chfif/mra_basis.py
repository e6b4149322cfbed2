"""Scaling functions built from coalescence FIF templates.

Templates on ``[0, 1]`` (uniform knots, extended by zero):

* ``0``        y = (1, r_1, ..., r_{N-1}, 0),  z = 0
* ``i``        y = e_i (i = 1..N-1),           z = 0
* ``N``        y = (0, s_1, ..., s_{N-1}, 1),  z = 0
* ``N+1+i``    y = (0, u_i1, ..., u_i,N-1, 0), z = e_i (i = 0..N)

``r``, ``s`` and ``u`` make the interior templates orthogonal to templates 0
and N and the hidden templates orthogonal to the interior ones.  The hidden
templates for ``i = 0`` and ``i = N`` are built but never used downstream.

The scaling functions are the Gram-Schmidt orthogonalisation of templates
``1..N-1, N+2..2N`` followed by the two-cell function that is template N on
``[0, 1)`` and template 0 on ``[1, 2)``.  For N = 2 this yields ``phi[0]``
(interior), ``phi[1]`` (hidden) and ``phi[2]`` (two-cell).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .evaluator import refine
from .ifs_core import (
    CoalescenceSystem,
    ContractivityError,
    DataPoints,
    HiddenParams,
    build_system,
    uniform_knots,
)
from .inner_product import cross_inner
from .piecewise import PiecewiseFunction, local_space

log = logging.getLogger(__name__)

SQRT7 = float(np.sqrt(7.0))

__all__ = [
    "SQRT7",
    "BasisTemplate",
    "ScalingBasis",
    "ConstraintSearchError",
    "DegenerateParamsError",
    "published_params",
    "PUBLISHED_U11",
    "dimension_check",
    "solve_r_s",
    "solve_r_s_general",
    "rho",
    "inner_02_closed_form",
    "inner_02_rho_form",
    "random_params",
    "kernel_elements",
    "SearchConfig",
    "translate_gram",
    "two_scale_residual",
    "riesz_bounds",
    "frame_check",
    "constants_expansion",
    "constraint_residuals",
    "check_nondegenerate",
    "RankDeficiencyError",
    "solve_u_general",
    "unit_gram",
    "solve_u_zeta_eta",
    "zeta_eta",
    "build_templates",
    "solve_constraints",
    "gram_schmidt",
    "build_basis",
    "verify_mra",
]

PUBLISHED_U11 = (-371.0 - 40.0 * SQRT7) / 70245.0


class DegenerateParamsError(ValueError):
    """``alpha_j + beta_j == gamma_j`` for every j."""


class ConstraintSearchError(RuntimeError):
    def __init__(self, msg, best_residual, best_params=None):
        super().__init__(msg)
        self.best_residual = best_residual
        self.best_params = best_params


def published_params() -> HiddenParams:
    """The published N = 2 parameter point."""
    return HiddenParams(
        alpha=[0.0, SQRT7 - 3.0],
        beta=[1.0 / 20.0, (3.0 - SQRT7) / 20.0],
        gamma=[-9.0 / 10.0, (-67.0 + 29.0 * SQRT7) / 10.0],
    )


def check_nondegenerate(params: HiddenParams, tol: float = 0.0):
    if np.all(np.abs(params.alpha + params.beta - params.gamma) <= tol):
        raise DegenerateParamsError("alpha_j + beta_j == gamma_j for every j")


def _unit_systems(params: HiddenParams):
    N = params.N
    knots = uniform_knots(N)
    eye, zero = np.eye(N + 1), np.zeros(N + 1)
    F = [build_system(knots, params, DataPoints(eye[k], zero)) for k in range(N + 1)]
    H = [build_system(knots, params, DataPoints(zero, eye[k])) for k in range(N + 1)]
    return F, H


def _ip(a: CoalescenceSystem, b: CoalescenceSystem) -> float:
    return cross_inner(a, b).ip11


# ---------------------------------------------------------------- dimension


def dimension_check(N: int, params: HiddenParams | None = None, trials: int = 1,
                    depth: int = 6, rng=None, rtol: float = 1e-9):
    """Numerical dimension of the space of first components.

    The map from the ``2(N+1)`` data values ``(y, z)`` to the depth-``depth``
    samples of ``f1`` is sampled column by column; its numerical rank is the
    dimension and ``2(N+1) - rank`` the kernel dimension of the projection.
    With ``params=None`` random admissible parameters are drawn per trial and
    the list of results is returned.
    """
    if params is not None:
        return _dimension(params, depth, rtol)[0]
    rng = np.random.default_rng(rng)
    return [_dimension(random_params(N, rng), depth, rtol)[0] for _ in range(trials)]


def _dimension(params: HiddenParams, depth: int, rtol: float):
    N = params.N
    F, H = _unit_systems(params)
    cols = [refine(s, depth).f1 for s in F + H]
    M = np.column_stack(cols)
    sv = np.linalg.svd(M, compute_uv=False)
    rank = int(np.sum(sv > rtol * sv[0]))
    return rank, 2 * (N + 1) - rank


def kernel_elements(params: HiddenParams, depth: int = 6, rtol: float = 1e-9):
    """Data vectors ``(y, z)`` whose first component vanishes identically."""
    F, H = _unit_systems(params)
    M = np.column_stack([refine(s, depth).f1 for s in F + H])
    _, sv, vt = np.linalg.svd(M)
    rank = int(np.sum(sv > rtol * sv[0]))
    return vt[rank:]


def random_params(N: int, rng, margin: float = 0.05) -> HiddenParams:
    """Random admissible parameters, bounded away from the contractivity limits."""
    rng = np.random.default_rng(rng)
    while True:
        alpha = rng.uniform(-0.9, 0.9, N)
        gamma = rng.uniform(-0.9, 0.9, N)
        room = 1.0 - margin - np.abs(gamma)
        beta = rng.uniform(-1, 1, N) * room
        beta = np.where(np.abs(beta) < 0.02, np.sign(beta + 1e-300) * 0.02, beta)
        try:
            p = HiddenParams(alpha, beta, gamma)
            check_nondegenerate(p)
            return p
        except (ContractivityError, DegenerateParamsError):
            continue


# ------------------------------------------------------- N = 2 closed forms


def _den(a1, a2):
    return 4.0 * (-4.0 + a1**2 - a1 * a2 + a2**2)


def solve_r_s(alpha):
    """Closed-form ``(r_1, s_1)`` for N = 2."""
    a1, a2 = map(float, alpha)
    den = _den(a1, a2)
    r1 = (4 - 4 * a1**2 - 6 * a2 - 2 * a1 * a2 + 3 * a1**2 * a2 - 4 * a2**2 + 3 * a2**3) / den
    s1 = (4 - 6 * a1 - 4 * a1**2 + 3 * a1**3 - 2 * a1 * a2 - 4 * a2**2 + 3 * a1 * a2**2) / den
    return r1, s1


def rho(alpha) -> float:
    """Quartic whose zeros make templates 0 and 2 orthogonal (N = 2)."""
    a1, a2 = map(float, alpha)
    return (
        8 + 12 * a1 - 28 * a1**2 + 6 * a1**3 + 2 * a1**4 + 12 * a2 - 14 * a1 * a2
        + 18 * a1**2 * a2 - 7 * a1**3 * a2 - 28 * a2**2 + 18 * a1 * a2**2
        + 6 * a2**3 - 7 * a1 * a2**3 + 2 * a2**4
    )


def inner_02_closed_form(alpha, r1=None, s1=None) -> float:
    """``<template 0, template 2>`` for N = 2 as an explicit rational function."""
    a1, a2 = map(float, alpha)
    if r1 is None or s1 is None:
        r1, s1 = solve_r_s(alpha)
    num = (
        4 * (r1 + s1) * (2 - a1 * a2 - 2 * a1**2 - 2 * a2**2)
        + 8 * r1 * s1 * (4 + a1 * a2 - a1**2 - a2**2)
        - (a1**2 + a2**2) ** 2
        + (1 + a1**2 + a2**2) ** 3
        + 4 * (a1 + a2) ** 2
        + a1**3 * (2 - 2 * a2 + 6 * r1)
        + a2**3 * (2 - 2 * a1 + 6 * s1)
        - 6 * r1 * a1 * (2 - a2**2)
        - 6 * s1 * a2 * (2 - a1**2)
        - 2 * (a1 * a2 + 3 * a1 + 3 * a2)
    )
    den = 6 * (2 - a1 - a2) * (4 - a1 - a2) * (2 - a1**2 - a2**2)
    return num / den


def inner_02_rho_form(alpha) -> float:
    a1, a2 = map(float, alpha)
    den = 12 * (-4 + a1**2 - a1 * a2 + a2**2) * (8 - 6 * a1 + a1**2 - 6 * a2 + 2 * a1 * a2 + a2**2)
    return rho(alpha) / den


# ----------------------------------------------------- general N parameters


def unit_gram(params: HiddenParams) -> np.ndarray:
    """Gram matrix of first components over the ``2(N+1)`` unit data vectors.

    Index ``k <= N`` is ``y = e_k, z = 0``; index ``N+1+k`` is ``y = 0, z = e_k``.
    Every template product is a bilinear form in this matrix.
    """
    F, H = _unit_systems(params)
    S = F + H
    n = len(S)
    G = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            G[i, j] = G[j, i] = _ip(S[i], S[j])
    return G


def _rs_from_gram(G, N):
    interior = np.arange(1, N)
    Gi = G[np.ix_(interior, interior)]
    return np.linalg.solve(Gi, -G[interior, 0]), np.linalg.solve(Gi, -G[interior, N])


def _u_from_gram(G, N):
    interior = np.arange(1, N)
    Gi = G[np.ix_(interior, interior)]
    rhs = G[np.ix_(interior, N + 1 + np.arange(N + 1))]
    return np.linalg.solve(Gi, -rhs).T


def solve_r_s_general(params: HiddenParams, G: np.ndarray | None = None):
    """``r`` and ``s`` (length N-1) from the orthogonality of interior templates."""
    G = unit_gram(params) if G is None else G
    return _rs_from_gram(G, params.N)


def solve_u_general(params: HiddenParams, G: np.ndarray | None = None) -> np.ndarray:
    """``u[i, j]`` for hidden templates ``i = 0..N`` (row i, interior column j)."""
    G = unit_gram(params) if G is None else G
    return _u_from_gram(G, params.N)


def _template_data(N, r, s, u):
    """``{index: (y, z)}`` for all ``2N + 2`` templates."""
    out = {}
    eye = np.eye(N + 1)
    zero = np.zeros(N + 1)
    out[0] = (np.r_[1.0, r, 0.0], zero)
    for i in range(1, N):
        out[i] = (eye[i], zero)
    out[N] = (np.r_[0.0, s, 1.0], zero)
    for i in range(N + 1):
        out[N + 1 + i] = (np.r_[0.0, u[i], 0.0], eye[i])
    return out


def _template_vectors(G, N, u=None):
    r, s = _rs_from_gram(G, N)
    if u is None:
        u = _u_from_gram(G, N)
    return {k: np.r_[y, z] for k, (y, z) in _template_data(N, r, s, u).items()}


def zeta_eta(params: HiddenParams, u: np.ndarray | None = None, G: np.ndarray | None = None):
    """``zeta_i = <T_{N+1+i}, T_0>`` and ``eta_i = <T_{N+1+i}, T_N>`` for i = 1..N-1."""
    N = params.N
    G = unit_gram(params) if G is None else G
    v = _template_vectors(G, N, u)
    zeta = np.array([v[N + 1 + i] @ G @ v[0] for i in range(1, N)])
    eta = np.array([v[N + 1 + i] @ G @ v[N] for i in range(1, N)])
    return zeta, eta


def solve_u_zeta_eta(params: HiddenParams):
    """``(u_11, zeta, eta)`` for N = 2.

    ``u_11`` is the root of the linear equation ``<T_1, T_3(u)> = 0``; both
    inner products are taken from the exact engine.
    """
    if params.N != 2:
        raise ValueError("solve_u_zeta_eta is the N = 2 special case")
    G = unit_gram(params)
    slope = G[1, 1]
    if abs(slope) < 1e-300:
        raise ZeroDivisionError("degenerate linear coefficient for u_11")
    u11 = -G[1, 4] / slope
    zeta, eta = zeta_eta(params, u=np.array([[0.0], [u11], [0.0]]), G=G)
    return u11, float(zeta[0]), float(eta[0])


# ------------------------------------------------------------- templates


@dataclass(frozen=True)
class BasisTemplate:
    index: int
    y: np.ndarray
    z: np.ndarray
    system: CoalescenceSystem


def build_templates(params: HiddenParams, r=None, s=None, u=None) -> list[BasisTemplate]:
    N = params.N
    if r is None or s is None:
        r, s = solve_r_s_general(params)
    if u is None:
        u = solve_u_general(params)
    knots = uniform_knots(N)
    data = _template_data(N, np.atleast_1d(r), np.atleast_1d(s), np.atleast_2d(u))
    return [
        BasisTemplate(k, y, z, build_system(knots, params, DataPoints(y, z)))
        for k, (y, z) in sorted(data.items())
    ]


# ------------------------------------------------------- constraint search


def constraint_residuals(params: HiddenParams, translate: bool = False, nested: bool = False):
    """Residual vector ``[zeta, eta, (<T_0, T_N>), (nestedness)]``."""
    N = params.N
    G = unit_gram(params)
    zeta, eta = zeta_eta(params, G=G)
    parts = [zeta, eta]
    if translate:
        v = _template_vectors(G, N)
        parts.append([v[0] @ G @ v[N]])
    if nested:
        # (gamma_n - alpha_n) / beta_n equal for all n, cross-multiplied.
        g = params.gamma - params.alpha
        b = params.beta
        parts.append(g[1:] * b[0] - g[0] * b[1:])
    return np.concatenate([np.atleast_1d(p) for p in parts])


@dataclass
class SearchConfig:
    translate: bool = False
    nested: bool = False
    pinned: tuple = ("beta1",)
    tol: float = 1e-12
    max_iter: int = 200
    step: float = 1e-6
    starts: int = 20
    seed: int | None = 0
    margin: float = 1e-3


def _pack(p: HiddenParams):
    return np.concatenate([p.alpha, p.beta, p.gamma])


def _unpack(v, N):
    return HiddenParams(v[:N], v[N:2 * N], v[2 * N:])


def _pinned_index(name: str, N: int) -> int:
    kind, idx = name[:-1], int(name[-1]) - 1
    return {"alpha": 0, "beta": N, "gamma": 2 * N}[kind] + idx


def _admissible(v, N, margin):
    al, be, ga = v[:N], v[N:2 * N], v[2 * N:]
    return (
        np.all(np.abs(al) < 1 - margin)
        and np.all(np.abs(ga) < 1 - margin)
        and np.all(np.abs(be) + np.abs(ga) < 1 - margin)
    )


def _newton(v0, N, cfg: SearchConfig):
    free = np.ones(v0.size, bool)
    for name in cfg.pinned:
        free[_pinned_index(name, N)] = False

    def F(v):
        return constraint_residuals(_unpack(v, N), cfg.translate, cfg.nested)

    v = v0.copy()
    r = F(v)
    it = 0
    while it < cfg.max_iter and np.max(np.abs(r)) > cfg.tol:
        J = np.zeros((r.size, v.size))
        for k in np.flatnonzero(free):
            e = np.zeros_like(v)
            e[k] = cfg.step
            J[:, k] = (F(v + e) - F(v - e)) / (2 * cfg.step)
        # Minimum-norm Newton step on the free variables.
        dv = np.zeros_like(v)
        dv[free] = -np.linalg.lstsq(J[:, free], r, rcond=None)[0]
        lam = 1.0
        while lam > 1e-8:
            cand = v + lam * dv
            if _admissible(cand, N, cfg.margin):
                rc = F(cand)
                if np.linalg.norm(rc) < np.linalg.norm(r):
                    v, r = cand, rc
                    break
            lam *= 0.5
        else:
            break
        it += 1
    return v, float(np.max(np.abs(r))), it


def solve_constraints(N: int, config: SearchConfig | None = None, seed_params: HiddenParams | None = None):
    """Find admissible parameters with all ``zeta_i = eta_i = 0``.

    Optional extra conditions: ``translate`` adds orthogonality of the two-cell
    scaling function to its unit translate; ``nested`` adds equal ratios
    ``(gamma_n - alpha_n) / beta_n``, under which the dilated space contains
    the undilated one.  Parameters named in ``config.pinned`` are held fixed
    (``beta1`` by default, which excludes the trivial root ``beta = 0``).

    Returns ``(params, report)``.
    """
    cfg = config or SearchConfig()
    if N < 2:
        raise ValueError("N must be at least 2")
    rng = np.random.default_rng(cfg.seed)
    seeds = []
    if seed_params is not None:
        seeds.append(_pack(seed_params))
    seeds += [_pack(random_params(N, rng)) for _ in range(cfg.starts)]
    best = (np.inf, None, 0)
    for k, v0 in enumerate(seeds):
        try:
            check_nondegenerate(_unpack(v0, N))
        except DegenerateParamsError:
            continue
        v, res, it = _newton(v0, N, cfg)
        log.debug("start %d: residual %.3e after %d iterations", k, res, it)
        if res < best[0]:
            best = (res, v, it)
        if res <= cfg.tol:
            params = _unpack(v, N)
            try:
                check_nondegenerate(params, tol=1e-9)
                if np.max(np.abs(params.beta)) < 1e-6:
                    raise DegenerateParamsError("hidden coupling vanished")
            except DegenerateParamsError:
                continue
            return params, {"residual": res, "iterations": it, "start": k}
    raise ConstraintSearchError(
        f"no root found; best max residual {best[0]:.3e}",
        best[0],
        None if best[1] is None else _unpack(best[1], N),
    )


# ---------------------------------------------------------- scaling basis


@dataclass
class ScalingBasis:
    """Orthogonal scaling functions with their hidden companions.

    ``phi[k]`` and ``phi_hidden[k]`` are :class:`PiecewiseFunction` objects at
    resolution 0; ``gs_coeffs[k, j]`` is the weight of source template
    ``sources[j]`` in ``phi[k]`` (before normalisation).
    """

    N: int
    params: HiddenParams
    r: np.ndarray
    s: np.ndarray
    u: np.ndarray
    templates: list
    sources: list
    gs_coeffs: np.ndarray
    phi: list
    phi_hidden: list
    normalized: bool = False
    scales: np.ndarray = field(default=None)

    @property
    def space(self):
        return local_space(self.params)

    def template_function(self, index: int, hidden: bool = False) -> PiecewiseFunction:
        t = self.templates[index]
        return PiecewiseFunction.from_pair(self.space, 0, {0: (t.y, t.z)}, hidden=hidden)

    def normalized_copy(self) -> "ScalingBasis":
        if self.normalized:
            return self
        norms = np.array([f.norm() for f in self.phi])
        return ScalingBasis(
            self.N, self.params, self.r, self.s, self.u, self.templates, self.sources,
            self.gs_coeffs, [(1 / n) * f for f, n in zip(self.phi, norms)],
            [(1 / n) * f for f, n in zip(self.phi_hidden, norms)], True, 1 / norms,
        )

    def translates(self, shifts=range(-2, 3)):
        return [(i, l) for l in shifts for i in range(len(self.phi))]


class RankDeficiencyError(np.linalg.LinAlgError):
    pass


def gram_schmidt(templates: list[BasisTemplate], normalize: bool = False, rtol: float = 1e-12) -> ScalingBasis:
    """Orthogonalise the interior and hidden templates and append the two-cell function."""
    N = templates[0].system.N
    params = templates[0].system.params
    space = local_space(params)
    by_index = {t.index: t for t in templates}
    sources = list(range(1, N)) + list(range(N + 2, 2 * N + 1))
    src = [PiecewiseFunction.from_pair(space, 0, {0: (by_index[i].y, by_index[i].z)}) for i in sources]
    src_h = [PiecewiseFunction.from_pair(space, 0, {0: (by_index[i].y, by_index[i].z)}, hidden=True) for i in sources]
    m = len(src)
    L = np.zeros((m, m))
    phi, phi_h = [], []
    for k in range(m):
        coeff = np.zeros(m)
        coeff[k] = 1.0
        f = src[k]
        for j in range(k):
            c = src[k].inner(phi[j]) / phi[j].inner(phi[j])
            coeff -= c * L[j]
        f = sum((coeff[j] * src[j] for j in range(1, k + 1)), coeff[0] * src[0])
        fh = sum((coeff[j] * src_h[j] for j in range(1, k + 1)), coeff[0] * src_h[0])
        nrm2 = f.inner(f)
        if nrm2 <= rtol * src[k].inner(src[k]):
            raise RankDeficiencyError(f"template {sources[k]} is dependent on its predecessors")
        L[k] = coeff
        phi.append(f)
        phi_h.append(fh)
    tN, t0 = by_index[N], by_index[0]
    two_cell = PiecewiseFunction.from_pair(space, 0, {0: (tN.y, tN.z), 1: (t0.y, t0.z)})
    two_cell_h = PiecewiseFunction.from_pair(space, 0, {0: (tN.y, tN.z), 1: (t0.y, t0.z)}, hidden=True)
    phi.append(two_cell)
    phi_h.append(two_cell_h)
    r = by_index[0].y[1:N]
    s = by_index[N].y[1:N]
    u = np.array([by_index[N + 1 + i].y[1:N] for i in range(N + 1)])
    basis = ScalingBasis(N, params, r, s, u, templates, sources, L, phi, phi_h)
    return basis.normalized_copy() if normalize else basis


def build_basis(params: HiddenParams, normalize: bool = False, u=None) -> ScalingBasis:
    check_nondegenerate(params)
    return gram_schmidt(build_templates(params, u=u), normalize=normalize)


# ----------------------------------------------------------- verification


def translate_gram(basis: ScalingBasis, shifts=range(-2, 3)) -> np.ndarray:
    """``T[l, i, j] = <phi_i, phi_j(. - l)>`` for each shift ``l``."""
    shifts = list(shifts)
    n = len(basis.phi)
    T = np.zeros((len(shifts), n, n))
    for a, l in enumerate(shifts):
        for i in range(n):
            for j in range(n):
                T[a, i, j] = basis.phi[i].inner(basis.phi[j].shift(l))
    return T


def overlapping_translates(basis: ScalingBasis, f: PiecewiseFunction):
    lo, hi = f.support()
    out = []
    for i, p in enumerate(basis.phi):
        plo, phi_ = p.support()
        for l in range(int(np.floor(lo - phi_)) , int(np.ceil(hi - plo)) + 1):
            if plo + l < hi and phi_ + l > lo:
                out.append((i, l))
    return out


def two_scale_residual(basis: ScalingBasis, f: PiecewiseFunction) -> float:
    """Relative L2 distance from ``f`` to the span of overlapping scaling translates."""
    idx = overlapping_translates(basis, f)
    funcs = [basis.phi[i].shift(l) for i, l in idx]
    G = np.array([[a.inner(b) for b in funcs] for a in funcs])
    rhs = np.array([a.inner(f) for a in funcs])
    c = np.linalg.lstsq(G, rhs, rcond=None)[0]
    diff = f
    for ck, g in zip(c, funcs):
        diff = diff - ck * g
    return diff.norm() / f.norm()


def riesz_bounds(basis: ScalingBasis, depth: int = 12):
    """Frame constants for translates of the two-cell scaling function.

    Both readings of the 2x2 matrix are returned: the plain Gram-type entries
    and their square roots.  ``A`` uses the smallest eigenvalue of the plain
    matrix.
    """
    N = basis.N
    t0 = basis.templates[0].system
    tN = basis.templates[N].system
    s0, sN = refine(t0, depth), refine(tN, depth)
    a = cross_inner(t0, t0).ip11
    b = cross_inner(tN, tN).ip11
    m = float(np.trapezoid(np.abs(s0.f1) * np.abs(sN.f1), s0.xs))
    phiN = basis.phi[-1]
    n2 = phiN.inner(phiN)
    plain = np.array([[a, m], [m, b]]) / n2
    roots = np.sqrt(np.array([[a, m], [m, b]])) / n2
    tau_plain = float(np.linalg.eigvalsh(plain)[0])
    tau_root = float(np.linalg.eigvalsh(roots)[0])
    norm = np.sqrt(n2)
    return {
        "tau": tau_plain,
        "tau_sqrt_reading": tau_root,
        "A": float(np.sqrt(tau_plain) * norm),
        "A_sqrt_reading": float(np.sqrt(max(tau_root, 0.0)) * norm),
        "B": float(np.sqrt(3.0) * norm),
        "norm_phiN": float(norm),
    }


def frame_check(basis: ScalingBasis, bounds: dict, draws: int = 100, length: int = 8, rng=0):
    """Ratios ``||sum c_l phi_N(. - l)|| / ||c||`` for random unit vectors ``c``."""
    rng = np.random.default_rng(rng)
    phiN = basis.phi[-1]
    g0 = phiN.inner(phiN)
    g1 = phiN.inner(phiN.shift(1))
    T = np.diag(np.full(length, g0)) + np.diag(np.full(length - 1, g1), 1) + np.diag(np.full(length - 1, g1), -1)
    ratios = []
    for _ in range(draws):
        c = rng.standard_normal(length)
        c /= np.linalg.norm(c)
        ratios.append(float(np.sqrt(c @ T @ c)))
    ratios = np.array(ratios)
    ok = bool(np.all(bounds["A"] <= ratios + 1e-15) and np.all(ratios <= bounds["B"] + 1e-15))
    return ok, ratios


def constants_expansion(basis: ScalingBasis, z_hidden=None, cells: int = 4) -> dict:
    """Check that translates reproduce the constant function.

    With hidden data ``z_hidden`` (length N-1) the coefficients are
    ``C_i = 1 - r_i - s_i - sum_j u_ji z_j`` on the interior templates,
    ``D_i = z_i`` on the hidden templates and 1 on the two-cell function.
    Returns the coefficients and the L2 error on the interior cells.
    """
    N = basis.N
    z = np.zeros(N - 1) if z_hidden is None else np.asarray(z_hidden, float)
    u_int = basis.u[1:N]  # rows i = 1..N-1
    C = 1.0 - basis.r - basis.s - u_int.T @ z
    space = basis.space
    total = None
    for k in range(-1, cells + 1):
        parts = [basis.phi[-1].shift(k)]
        for i in range(1, N):
            parts.append(C[i - 1] * basis.template_function(i).shift(k))
            parts.append(z[i - 1] * basis.template_function(N + 1 + i).shift(k))
        for p in parts:
            total = p if total is None else total + p
    one = PiecewiseFunction(space, 0, {m: space.vector(poly=(1.0, 0.0)) for m in range(cells)})
    window = PiecewiseFunction(space, 0, {m: total.cells[m] for m in range(cells)})
    diff = window - one
    return {"C": C, "D": z, "error": diff.norm() / one.norm()}


def verify_mra(basis: ScalingBasis, quad_depth: int = 12, draws: int = 100) -> dict:
    """Diagnostics: translate Gram matrix, two-scale residuals, Riesz bounds, constants."""
    T = translate_gram(basis)
    n = len(basis.phi)
    off = T.copy()
    off[2] -= np.diag(np.diag(T[2]))
    norms = np.sqrt(np.diag(T[2]))
    rel = np.abs(off) / np.outer(norms, norms)[None]
    two_scale = [two_scale_residual(basis, p.dilate(-1)) for p in basis.phi]
    bounds = riesz_bounds(basis, quad_depth)
    ok, ratios = frame_check(basis, bounds, draws)
    const = constants_expansion(basis)
    return {
        "translate_gram": T,
        "max_offdiag": float(np.max(np.abs(off))),
        "max_offdiag_relative": float(np.max(rel)),
        "two_scale_residuals": two_scale,
        "riesz": bounds,
        "frame_ok": ok,
        "frame_ratio_range": (float(ratios.min()), float(ratios.max())),
        "constants": const,
        "nonzero": [float(x) for x in norms],
        "n_phi": n,
    }
