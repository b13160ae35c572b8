"""Pointwise curvature of geometry presets and its orthogonal decomposition.

Sign convention: ``R_ijij > 0`` on round spheres and ``R_ik = g^jl R_ijkl``.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

from . import warped
from .geometry import (ConstantCurvature, CoordinateChart, MilnorFrame3D, ProductOfSpheres,
                       WarpedProductSphere)
from .tensors import (AlgCurvTensor, DimensionError, MetricPoint, Sym2Tensor, curv_inner,
                      curv_norm, kn_product, kn_product_array, ricci_contraction,
                      scalar_contraction, sym_norm, symmetry_residual, traceless_part)

DECOMP_TOL = 1e-10


class DecompositionError(ArithmeticError):
    """Curvature parts fail an internal-consistency check."""


@dataclass(frozen=True, eq=False)
class CurvDecomp:
    """``Rm = scalar_part + einstein_part + W``."""

    R: float
    E: Sym2Tensor
    W: AlgCurvTensor
    scalar_part: AlgCurvTensor
    einstein_part: AlgCurvTensor
    norm_E: float
    norm_W: float
    norm_Rm: float
    ric: Sym2Tensor


@dataclass(frozen=True, eq=False)
class TwoFormOperator:
    """Symmetric matrix on the basis ``e_i ^ e_j`` (i < j), lexicographic order."""

    n: int
    matrix: np.ndarray

    def __post_init__(self):
        N = self.n * (self.n - 1) // 2
        M = np.asarray(self.matrix, dtype=float)
        if M.shape != (N, N):
            raise DimensionError(f"two-form operator must be {N}x{N}")
        if np.max(np.abs(M - M.T)) > 1e-12 * max(1.0, np.max(np.abs(M))):
            raise ValueError("two-form operator is not symmetric")
        M = 0.5 * (M + M.T)
        M.flags.writeable = False
        object.__setattr__(self, "matrix", M)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


# ---------------------------------------------------------------- presets

def from_sectional(K: np.ndarray) -> np.ndarray:
    """Curvature whose operator is diagonal on ``e_i ^ e_j`` with ``R_ijij = K[i, j]``."""
    n = K.shape[0]
    rm = np.zeros((n,) * 4)
    for i, j in itertools.combinations(range(n), 2):
        k = K[i, j]
        rm[i, j, i, j] = rm[j, i, j, i] = k
        rm[i, j, j, i] = rm[j, i, i, j] = -k
    return rm


def rm_from_ricci_3d(ric: np.ndarray, g: np.ndarray) -> np.ndarray:
    """In dimension 3 the curvature is ``Rc o g - (R/4) g o g``."""
    R = float(np.einsum("ij,ij->", np.linalg.inv(g), ric))
    return kn_product_array(ric, g) - 0.25 * R * kn_product_array(g, g)


def chart_curvature(chart: CoordinateChart, idx) -> np.ndarray:
    """Coordinate components ``R_ijkl`` at an interior node from central differences."""
    n = chart.n
    idx = tuple(int(i) for i in idx)
    shape = chart.grid_shape
    if len(idx) != n or any(not 1 <= i <= m - 2 for i, m in zip(idx, shape)):
        raise IndexError(f"node {idx} has no full central-difference stencil")
    v, h = chart.values, chart.h

    def at(*shifts):
        pos = list(idx)
        for axis, s in shifts:
            pos[axis] += s
        return v[tuple(pos)]

    g = v[idx]
    if np.min(np.linalg.eigvalsh(g)) <= 0:
        raise ValueError(f"metric at node {idx} is not positive definite")
    ginv = np.linalg.inv(g)
    dg = np.empty((n, n, n))  # dg[a, b, c] = d_c g_ab
    ddg = np.empty((n, n, n, n))  # ddg[a, b, c, d] = d_c d_d g_ab
    for c in range(n):
        dg[:, :, c] = (at((c, 1)) - at((c, -1))) / (2 * h)
        ddg[:, :, c, c] = (at((c, 1)) - 2 * g + at((c, -1))) / h**2
        for d in range(c + 1, n):
            m = (at((c, 1), (d, 1)) - at((c, 1), (d, -1)) - at((c, -1), (d, 1))
                 + at((c, -1), (d, -1))) / (4 * h * h)
            ddg[:, :, c, d] = ddg[:, :, d, c] = m
    # Gamma^a_bc = 1/2 g^ad (d_c g_db + d_b g_dc - d_d g_bc)
    gam_low = 0.5 * (dg.transpose(0, 1, 2) + dg.transpose(0, 2, 1) - dg.transpose(2, 0, 1))
    gam = np.einsum("ad,dbc->abc", ginv, gam_low)
    # R_ijkl = 1/2 (g_il,jk + g_jk,il - g_ik,jl - g_jl,ik) + g_ab (G^a_jk G^b_il - G^a_jl G^b_ik)
    second = 0.5 * (np.einsum("iljk->ijkl", ddg) + np.einsum("jkil->ijkl", ddg)
                    - np.einsum("ikjl->ijkl", ddg) - np.einsum("jlik->ijkl", ddg))
    quad = (np.einsum("ab,ajk,bil->ijkl", g, gam, gam)
            - np.einsum("ab,ajl,bik->ijkl", g, gam, gam))
    rm = second + quad
    # average over the exact symmetries to remove O(rounding) asymmetry
    rm = 0.5 * (rm - rm.transpose(1, 0, 2, 3))
    rm = 0.5 * (rm - rm.transpose(0, 1, 3, 2))
    rm = 0.5 * (rm + rm.transpose(2, 3, 0, 1))
    return rm


def _bianchi_project(rm: np.ndarray) -> np.ndarray:
    b = (rm + rm.transpose(0, 2, 3, 1) + rm.transpose(0, 3, 1, 2)) / 3.0
    return rm - b


def curvature_at(spec, point_index=0) -> tuple[MetricPoint, AlgCurvTensor]:
    """Metric and curvature at one point of a preset.

    Homogeneous and warped presets are reported in an orthonormal frame.
    Charts are reported in coordinates (``point_index`` is a grid multi-index).
    """
    if isinstance(spec, ConstantCurvature):
        g = np.eye(spec.n)
        return MetricPoint.euclidean(spec.n), AlgCurvTensor(0.5 * spec.kappa * kn_product_array(g, g))
    if isinstance(spec, ProductOfSpheres):
        k1, k2 = spec.sectional()
        n = spec.dim
        K = np.zeros((n, n))
        K[: spec.n1, : spec.n1] = k1
        K[spec.n1:, spec.n1:] = k2
        return MetricPoint.euclidean(n), AlgCurvTensor(from_sectional(K))
    if isinstance(spec, MilnorFrame3D):
        ric = np.diag(spec.ricci_eigenvalues())
        return MetricPoint.euclidean(3), AlgCurvTensor(rm_from_ricci_3d(ric, np.eye(3)))
    if isinstance(spec, WarpedProductSphere):
        i = int(point_index)
        if not 0 <= i < spec.n_points:
            raise IndexError(f"grid index {i} out of range")
        K0, K1 = warped.sectional_curvatures(spec)
        n = spec.dim
        K = np.full((n, n), K1[i])
        K[0, :] = K[:, 0] = K0[i]
        return MetricPoint.euclidean(n), AlgCurvTensor(from_sectional(K))
    if isinstance(spec, CoordinateChart):
        idx = tuple(point_index) if np.ndim(point_index) else np.unravel_index(point_index, spec.grid_shape)
        rm = chart_curvature(spec, idx)
        m = MetricPoint.from_matrix(spec.values[tuple(idx)])
        # second differences satisfy Bianchi only to O(h^2); project onto the exact subspace
        return m, AlgCurvTensor(_bianchi_project(rm), check=False)
    raise TypeError(f"unsupported geometry {type(spec).__name__}")


def interior_indices(chart: CoordinateChart):
    return list(itertools.product(*[range(1, m - 1) for m in chart.grid_shape]))


def conformal_rescale(chart: CoordinateChart, u) -> CoordinateChart:
    """Chart for ``e^u g``; ``u`` is a callable on coordinates or an array on the grid."""
    vals = u(chart.coords()) if callable(u) else np.asarray(u, dtype=float)
    vals = np.broadcast_to(vals, chart.grid_shape)
    if not np.all(np.isfinite(vals)):
        raise ValueError("conformal factor must be finite on the grid")
    return CoordinateChart(chart.n, np.exp(vals)[..., None, None] * chart.values, chart.h, chart.origin)


# ---------------------------------------------------------------- decomposition

def decompose(rm: AlgCurvTensor, m: MetricPoint, tol: float = DECOMP_TOL) -> CurvDecomp:
    n = rm.n
    ric = ricci_contraction(rm, m)
    R = scalar_contraction(ric, m)
    E = traceless_part(ric, m)
    g = m.g
    scalar_part = kn_product(g, g) * (R / (2 * n * (n - 1)))
    einstein_part = kn_product(E, g) * (1.0 / (n - 2))
    rest = rm.comps - scalar_part.comps - einstein_part.comps
    scale = max(1.0, float(np.max(np.abs(rm.comps))))
    if n == 3:
        if np.max(np.abs(rest)) > tol * scale:
            raise DecompositionError("3D curvature not determined by its Ricci tensor")
        W = AlgCurvTensor.zeros(3)
    else:
        W = AlgCurvTensor(rest, check=False)
    return CurvDecomp(
        R=R, E=E, W=W, scalar_part=scalar_part, einstein_part=einstein_part,
        norm_E=sym_norm(E, m), norm_W=curv_norm(W, m), norm_Rm=curv_norm(rm, m), ric=ric,
    )


def decomposition_residuals(rm: AlgCurvTensor, m: MetricPoint, d: CurvDecomp | None = None) -> dict[str, float]:
    """Relative reconstruction, orthogonality and Weyl-trace residuals."""
    d = decompose(rm, m) if d is None else d
    scale = max(d.norm_Rm, 1e-300)
    recon = d.scalar_part.comps + d.einstein_part.comps + d.W.comps - rm.comps
    parts = [d.scalar_part, d.einstein_part, d.W]
    norms = [curv_norm(p, m) for p in parts]
    ortho = 0.0
    for a, b in itertools.combinations(range(3), 2):
        denom = max(norms[a] * norms[b], 1e-300)
        if norms[a] > 0 and norms[b] > 0:
            ortho = max(ortho, abs(curv_inner(parts[a], parts[b], m)) / denom)
    wtrace = np.einsum("jl,ijkl->ik", m.g_inv, d.W.comps)
    return {
        "reconstruction": float(np.max(np.abs(recon))) / max(float(np.max(np.abs(rm.comps))), 1e-300),
        "orthogonality": ortho,
        "weyl_trace": float(np.max(np.abs(wtrace))) / scale if scale > 1e-300 else 0.0,
        "symmetry": symmetry_residual(d.W.comps) / scale if scale > 1e-300 else 0.0,
    }


def weyl_coordinate_formula(rm: AlgCurvTensor, ric: Sym2Tensor, R: float, m: MetricPoint) -> AlgCurvTensor:
    """Weyl tensor written out in components, independent of ``kn_product``."""
    n = rm.n
    if n < 4:
        raise DimensionError("coordinate Weyl formula needs n >= 4")
    g, r = m.g.comps, ric.comps
    ricci_terms = (np.einsum("ik,jl->ijkl", g, r) + np.einsum("jl,ik->ijkl", g, r)
                   - np.einsum("il,jk->ijkl", g, r) - np.einsum("jk,il->ijkl", g, r))
    metric_terms = np.einsum("ik,jl->ijkl", g, g) - np.einsum("il,jk->ijkl", g, g)
    W = rm.comps - ricci_terms / (n - 2) + R / ((n - 1) * (n - 2)) * metric_terms
    return AlgCurvTensor(W, check=False)


# ---------------------------------------------------------------- frames

def orthonormal_frame(m: MetricPoint) -> np.ndarray:
    """Columns form a g-orthonormal basis (``F.T @ g @ F = I``)."""
    L = np.linalg.cholesky(m.g.comps)
    return np.linalg.inv(L).T


def in_frame(rm: np.ndarray, F: np.ndarray) -> np.ndarray:
    return np.einsum("ijkl,ia,jb,kc,ld->abcd", rm, F, F, F, F, optimize=True)


def _orthonormal_comps(rm: AlgCurvTensor, m: MetricPoint) -> np.ndarray:
    if np.array_equal(m.g.comps, np.eye(m.n)):
        return rm.comps
    return in_frame(rm.comps, orthonormal_frame(m))


def weitzenbock(rm: AlgCurvTensor, ric: Sym2Tensor, m: MetricPoint) -> tuple[AlgCurvTensor, TwoFormOperator]:
    """``P = Rc o g - 2 Rm`` and its matrix on orthonormal 2-forms."""
    P = kn_product(ric, m.g) - 2.0 * rm
    n = rm.n
    Pon = _orthonormal_comps(P, m)
    i, j = np.triu_indices(n, 1)
    M = Pon[i[:, None], j[:, None], i[None, :], j[None, :]]
    return P, TwoFormOperator(n, M)


# ---------------------------------------------------------------- isotropic curvature

def haar_frames(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    """``count`` Haar-random orthonormal 4-frames, shape ``(count, n, 4)``."""
    Q, Rr = np.linalg.qr(rng.standard_normal((count, n, n)))
    Q = Q * np.sign(np.diagonal(Rr, axis1=1, axis2=2))[:, None, :]
    return Q[:, :, :4]


def axis_frames(n: int) -> np.ndarray:
    eye = np.eye(n)
    perms = list(itertools.permutations(range(n), 4))
    return np.stack([eye[:, list(p)] for p in perms])


def isotropic_values(rm_on: np.ndarray, frames: np.ndarray) -> np.ndarray:
    """``R1313 + R1414 + R2323 + R2424 - 2 R1234`` for every frame in the batch."""
    n = rm_on.shape[0]
    M = rm_on.reshape(n * n, n * n)
    count = frames.shape[0]

    def wedge(a, b):
        return (frames[:, :, a, None] * frames[:, None, :, b]).reshape(count, n * n)

    def q(x, y):
        return np.einsum("mi,ij,mj->m", x, M, y)

    u13, u14, u23, u24 = wedge(0, 2), wedge(0, 3), wedge(1, 2), wedge(1, 3)
    return q(u13, u13) + q(u14, u14) + q(u23, u23) + q(u24, u24) - 2 * q(wedge(0, 1), wedge(2, 3))


def _shard_min(rm_on: np.ndarray, seed_seq: np.random.SeedSequence, count: int):
    frames = haar_frames(np.random.default_rng(seed_seq), rm_on.shape[0], count)
    vals = isotropic_values(rm_on, frames)
    k = int(np.argmin(vals))
    return float(vals[k]), frames[k]


def isotropic_min(rm: AlgCurvTensor, m: MetricPoint, budget: int = 1000, seed: int = 0,
                  refine: bool = True, shards: int = 1, workers: int = 1) -> float:
    """Smallest isotropic curvature found over sampled orthonormal 4-frames.

    The sample is ``budget`` Haar frames (split into ``shards`` with spawned
    seeds) plus every ordered coordinate-axis 4-frame.  With ``refine`` the
    best frame is polished by BFGS over rotations, which can only lower the
    value, so the result stays an upper bound on the true minimum.
    """
    n = rm.n
    if n < 4:
        raise DimensionError("isotropic curvature needs n >= 4")
    if budget < 1000:
        raise ValueError("budget must be at least 1000 frames")
    rm_on = _orthonormal_comps(rm, m)
    ax = axis_frames(n)
    ax_vals = isotropic_values(rm_on, ax)
    k = int(np.argmin(ax_vals))
    best, best_frame = float(ax_vals[k]), ax[k]

    counts = [budget // shards + (1 if s < budget % shards else 0) for s in range(shards)]
    seqs = np.random.SeedSequence(seed).spawn(shards)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda a: _shard_min(rm_on, *a), zip(seqs, counts)))
    else:
        results = [_shard_min(rm_on, s, c) for s, c in zip(seqs, counts)]
    # ties broken by shard index so the reduction is order independent
    for val, frame in results:
        if val < best:
            best, best_frame = val, frame

    if refine:
        iu = np.triu_indices(n, 1)

        def fun(x):
            S = np.zeros((n, n))
            S[iu] = x
            return isotropic_values(rm_on, (expm(S - S.T) @ best_frame)[None])[0]

        res = minimize(fun, np.zeros(len(iu[0])), method="BFGS")
        best = min(best, float(res.fun))
    return best
