"""Exact algebra of symmetric 2-tensors and (4,0) algebraic curvature tensors.

Components are stored densely (``n x n`` and ``n x n x n x n`` arrays).
Symmetries are validated on construction, never assumed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_DIM = 3
MAX_DIM = 8
SYM_TOL = 1e-12


class DimensionError(ValueError):
    """Operands live in different dimensions, or outside 3 <= n <= 8."""


class SymmetryError(ValueError):
    """A tensor violates the index symmetries its type requires."""


def _check_dim(n: int) -> int:
    if not MIN_DIM <= n <= MAX_DIM:
        raise DimensionError(f"dimension {n} outside [{MIN_DIM}, {MAX_DIM}]")
    return n


def _scale(a: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0


@dataclass(frozen=True, eq=False)
class Sym2Tensor:
    """Symmetric bilinear form at a point (metric, Ricci, traceless Ricci)."""

    comps: np.ndarray

    def __post_init__(self):
        c = np.array(self.comps, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise DimensionError(f"expected square matrix, got shape {c.shape}")
        _check_dim(c.shape[0])
        if np.max(np.abs(c - c.T)) > SYM_TOL * _scale(c):
            raise SymmetryError("Sym2Tensor components are not symmetric")
        c = 0.5 * (c + c.T)
        c.flags.writeable = False
        object.__setattr__(self, "comps", c)

    @property
    def n(self) -> int:
        return self.comps.shape[0]

    def __add__(self, other: Sym2Tensor) -> Sym2Tensor:
        _same_dim(self, other)
        return Sym2Tensor(self.comps + other.comps)

    def __sub__(self, other: Sym2Tensor) -> Sym2Tensor:
        _same_dim(self, other)
        return Sym2Tensor(self.comps - other.comps)

    def __mul__(self, s: float) -> Sym2Tensor:
        return Sym2Tensor(s * self.comps)

    __rmul__ = __mul__

    @classmethod
    def identity(cls, n: int) -> Sym2Tensor:
        return cls(np.eye(n))

    @classmethod
    def zeros(cls, n: int) -> Sym2Tensor:
        return cls(np.zeros((n, n)))


@dataclass(frozen=True, eq=False)
class MetricPoint:
    """Metric at a point together with its inverse."""

    g: Sym2Tensor
    g_inv: np.ndarray

    def __post_init__(self):
        g = self.g.comps
        if np.min(np.linalg.eigvalsh(g)) <= 0.0:
            raise ValueError("metric is not positive definite")
        ginv = np.array(self.g_inv, dtype=float)
        if ginv.shape != g.shape:
            raise DimensionError("g_inv shape does not match g")
        if np.max(np.abs(ginv @ g - np.eye(g.shape[0]))) > 1e-12 * _scale(ginv) * _scale(g):
            raise ValueError("g_inv is not the inverse of g")
        ginv = 0.5 * (ginv + ginv.T)
        ginv.flags.writeable = False
        object.__setattr__(self, "g_inv", ginv)

    @property
    def n(self) -> int:
        return self.g.n

    @classmethod
    def from_matrix(cls, g) -> MetricPoint:
        g = np.asarray(g, dtype=float)
        return cls(Sym2Tensor(g), np.linalg.inv(0.5 * (g + g.T)))

    @classmethod
    def euclidean(cls, n: int) -> MetricPoint:
        return cls(Sym2Tensor.identity(n), np.eye(n))


@dataclass(frozen=True, eq=False)
class AlgCurvTensor:
    """(4,0) tensor with the symmetries of a Riemann curvature tensor.

    ``T[i,j,k,l] = -T[j,i,k,l] = -T[i,j,l,k] = T[k,l,i,j]`` and the first
    Bianchi identity ``T[i,j,k,l] + T[i,k,l,j] + T[i,l,j,k] = 0``.
    Use ``check=False`` only for intermediate results known to be exact.
    """

    comps: np.ndarray
    check: bool = True

    def __post_init__(self):
        c = np.array(self.comps, dtype=float)
        if c.ndim != 4 or len(set(c.shape)) != 1:
            raise DimensionError(f"expected n^4 array, got shape {c.shape}")
        _check_dim(c.shape[0])
        if self.check:
            residual = symmetry_residual(c)
            if residual > SYM_TOL * _scale(c):
                raise SymmetryError(f"curvature symmetries violated (residual {residual:.3e})")
        c.flags.writeable = False
        object.__setattr__(self, "comps", c)

    @property
    def n(self) -> int:
        return self.comps.shape[0]

    def __add__(self, other: AlgCurvTensor) -> AlgCurvTensor:
        _same_dim(self, other)
        return AlgCurvTensor(self.comps + other.comps, check=False)

    def __sub__(self, other: AlgCurvTensor) -> AlgCurvTensor:
        _same_dim(self, other)
        return AlgCurvTensor(self.comps - other.comps, check=False)

    def __mul__(self, s: float) -> AlgCurvTensor:
        return AlgCurvTensor(s * self.comps, check=False)

    __rmul__ = __mul__

    @classmethod
    def zeros(cls, n: int) -> AlgCurvTensor:
        return cls(np.zeros((n,) * 4), check=False)


def symmetry_residual(c: np.ndarray) -> float:
    """Largest violation of antisymmetry, pair symmetry or first Bianchi."""
    anti1 = c + c.transpose(1, 0, 2, 3)
    anti2 = c + c.transpose(0, 1, 3, 2)
    pair = c - c.transpose(2, 3, 0, 1)
    # T_ijkl + T_iklj + T_iljk
    bianchi = c + c.transpose(0, 2, 3, 1) + c.transpose(0, 3, 1, 2)
    return float(max(np.max(np.abs(a)) for a in (anti1, anti2, pair, bianchi)))


def _same_dim(a, b):
    if a.n != b.n:
        raise DimensionError(f"dimension mismatch: {a.n} vs {b.n}")


def _comps(x) -> np.ndarray:
    return x.comps if hasattr(x, "comps") else np.asarray(x, dtype=float)


def kn_product_array(h: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Kulkarni-Nomizu product on raw component arrays."""
    return (
        np.einsum("ik,jl->ijkl", h, k)
        + np.einsum("jl,ik->ijkl", h, k)
        - np.einsum("il,jk->ijkl", h, k)
        - np.einsum("jk,il->ijkl", h, k)
    )


def kn_product(h: Sym2Tensor, k: Sym2Tensor) -> AlgCurvTensor:
    """``(h o k)_ijkl = h_ik k_jl + h_jl k_ik - h_il k_jk - h_jk k_il``."""
    _same_dim(h, k)
    return AlgCurvTensor(kn_product_array(h.comps, k.comps), check=False)


def raise_all(a: np.ndarray, g_inv: np.ndarray) -> np.ndarray:
    """Raise every index of a (4,0) array with ``g_inv``."""
    return np.einsum("abcd,ai,bj,ck,dl->ijkl", a, g_inv, g_inv, g_inv, g_inv, optimize=True)


def curv_inner(a: AlgCurvTensor, b: AlgCurvTensor, m: MetricPoint) -> float:
    """Full contraction ``a_ijkl b^ijkl`` (no 1/4 normalisation)."""
    _same_dim(a, b)
    _same_dim(a, m)
    return float(np.einsum("ijkl,ijkl->", raise_all(a.comps, m.g_inv), b.comps))


def curv_norm(a: AlgCurvTensor, m: MetricPoint) -> float:
    return float(np.sqrt(max(curv_inner(a, a, m), 0.0)))


def sym_inner(h: Sym2Tensor, k: Sym2Tensor, m: MetricPoint) -> float:
    _same_dim(h, k)
    gi = m.g_inv
    return float(np.einsum("ij,kl,ik,jl->", h.comps, k.comps, gi, gi))


def sym_norm(h: Sym2Tensor, m: MetricPoint) -> float:
    return float(np.sqrt(max(sym_inner(h, h, m), 0.0)))


def ricci_contraction(T: AlgCurvTensor, m: MetricPoint) -> Sym2Tensor:
    """``R_ik = g^jl T_ijkl``."""
    _same_dim(T, m)
    ric = np.einsum("jl,ijkl->ik", m.g_inv, T.comps)
    # symmetric in exact arithmetic; ill-conditioned g leaves rounding-level asymmetry
    return Sym2Tensor(0.5 * (ric + ric.T))


def scalar_contraction(ric: Sym2Tensor, m: MetricPoint) -> float:
    _same_dim(ric, m)
    return float(np.einsum("ik,ik->", m.g_inv, ric.comps))


def traceless_part(ric: Sym2Tensor, m: MetricPoint) -> Sym2Tensor:
    """``E = Rc - (R/n) g``."""
    R = scalar_contraction(ric, m)
    return Sym2Tensor(ric.comps - (R / ric.n) * m.g.comps)


def cube_trace(h: Sym2Tensor, m: MetricPoint) -> float:
    """``h_ij h^j_k h^ki``, e.g. ``E^3`` or ``Rc^3``."""
    mixed = m.g_inv @ h.comps
    return float(np.trace(mixed @ mixed @ mixed))


def curv_apply(T: AlgCurvTensor, h: Sym2Tensor, k: Sym2Tensor, m: MetricPoint) -> float:
    """``T(h, k) = T_abcd h^ac k^bd``."""
    gi = m.g_inv
    hu = gi @ h.comps @ gi
    ku = gi @ k.comps @ gi
    return float(np.einsum("abcd,ac,bd->", T.comps, hu, ku))
