"""Geometry presets from which pointwise curvature can be computed.

Homogeneous presets (constant curvature, products of round spheres, Milnor
frames on 3D unimodular groups) carry a small parameter vector that the
Ricci flow evolves by an ODE.  The warped-product sphere and the coordinate
chart carry sampled fields.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Union

import numpy as np
from scipy.integrate import trapezoid

MILNOR_SIGNS = {"SU2": (1.0, 1.0, 1.0), "Nil": (1.0, 0.0, 0.0), "Sol": (1.0, -1.0, 0.0)}


def _positive(name: str, value: float):
    if not (np.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be finite and positive, got {value!r}")


@dataclass(frozen=True)
class ConstantCurvature:
    """Space form of dimension ``n`` with sectional curvature ``kappa``.

    ``kappa = 0`` is the flat torus.  The flow parameter is ``1/kappa``
    (the squared radius when ``kappa > 0``), which moves linearly in time.
    """

    n: int
    kappa: float

    def __post_init__(self):
        if not 3 <= self.n <= 8:
            raise ValueError(f"dimension {self.n} outside [3, 8]")
        if not np.isfinite(self.kappa):
            raise ValueError("kappa must be finite")

    @property
    def dim(self) -> int:
        return self.n

    @property
    def n_points(self) -> int:
        return 1

    def params(self) -> np.ndarray:
        return np.array([1.0 / self.kappa]) if self.kappa != 0 else np.zeros(0)

    def with_params(self, p) -> ConstantCurvature:
        return self if self.kappa == 0 else replace(self, kappa=1.0 / float(p[0]))

    def param_rhs(self, p) -> np.ndarray:
        # d(1/kappa)/dt = -2(n-1) for every kappa != 0
        return np.full(len(p), -2.0 * (self.n - 1))

    def params_valid(self, p) -> bool:
        return bool(np.all(np.isfinite(p))) and (self.kappa <= 0 or bool(np.all(p > 0)))

    def scaled(self, lam2: float) -> ConstantCurvature:
        return replace(self, kappa=self.kappa / lam2)


@dataclass(frozen=True)
class ProductOfSpheres:
    """Riemannian product ``S^n1(a) x S^n2(b)``; a factor with ``n_k = 1`` is a circle."""

    n1: int
    a: float
    n2: int
    b: float

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("factor dimensions must be >= 1")
        if not 3 <= self.n1 + self.n2 <= 8:
            raise ValueError(f"dimension {self.n1 + self.n2} outside [3, 8]")
        _positive("radius a", self.a)
        _positive("radius b", self.b)

    @property
    def dim(self) -> int:
        return self.n1 + self.n2

    @property
    def n_points(self) -> int:
        return 1

    def params(self) -> np.ndarray:
        return np.array([self.a**2, self.b**2])

    def with_params(self, p) -> ProductOfSpheres:
        return replace(self, a=float(np.sqrt(p[0])), b=float(np.sqrt(p[1])))

    def param_rhs(self, p) -> np.ndarray:
        return np.array([-2.0 * (self.n1 - 1), -2.0 * (self.n2 - 1)])

    def params_valid(self, p) -> bool:
        return bool(np.all(np.isfinite(p)) and np.all(p > 0))

    def scaled(self, lam2: float) -> ProductOfSpheres:
        s = float(np.sqrt(lam2))
        return replace(self, a=self.a * s, b=self.b * s)

    def sectional(self) -> tuple[float, float]:
        k1 = 1.0 / self.a**2 if self.n1 > 1 else 0.0
        k2 = 1.0 / self.b**2 if self.n2 > 1 else 0.0
        return k1, k2


@dataclass(frozen=True)
class MilnorFrame3D:
    """Left-invariant metric ``A w1^2 + B w2^2 + C w3^2`` on a unimodular 3D group.

    The fixed frame ``X_i`` satisfies ``[X2, X3] = 2 s1 X1`` (cyclically) with
    signs ``s`` = (1,1,1) for SU2, (1,0,0) for Nil and (1,-1,0) for Sol, so
    ``A = B = C = 1`` on SU2 is the unit round 3-sphere.
    """

    group: str
    A: float
    B: float
    C: float

    def __post_init__(self):
        if self.group not in MILNOR_SIGNS:
            raise ValueError(f"unknown Milnor group {self.group!r}")
        for name in "ABC":
            _positive(name, getattr(self, name))

    @property
    def dim(self) -> int:
        return 3

    @property
    def n_points(self) -> int:
        return 1

    def params(self) -> np.ndarray:
        return np.array([self.A, self.B, self.C])

    def with_params(self, p) -> MilnorFrame3D:
        return replace(self, A=float(p[0]), B=float(p[1]), C=float(p[2]))

    def ricci_eigenvalues(self, p=None) -> np.ndarray:
        """Ricci eigenvalues in the orthonormal frame ``X_i / sqrt(A_i)``."""
        p = self.params() if p is None else np.asarray(p, dtype=float)
        lam = 2.0 * np.array(MILNOR_SIGNS[self.group]) * p / np.sqrt(np.prod(p))
        mu = 0.5 * lam.sum() - lam
        return 2.0 * np.array([mu[1] * mu[2], mu[0] * mu[2], mu[0] * mu[1]])

    def param_rhs(self, p) -> np.ndarray:
        # d/dt g(X_i, X_i) = -2 Rc(X_i, X_i) = -2 A_i Ric_i
        return -2.0 * np.asarray(p) * self.ricci_eigenvalues(p)

    def params_valid(self, p) -> bool:
        return bool(np.all(np.isfinite(p)) and np.all(p > 0))

    def scaled(self, lam2: float) -> MilnorFrame3D:
        return replace(self, A=self.A * lam2, B=self.B * lam2, C=self.C * lam2)


@dataclass(frozen=True, eq=False)
class WarpedProductSphere:
    """Rotationally symmetric ``S^(n+1)``: ``phi(x)^2 dx^2 + psi(x)^2 g_{S^n}``.

    ``x`` is a uniform grid on ``[0, L]`` whose endpoints are the poles, where
    ``psi`` vanishes.  ``phi`` and ``psi`` are positive in the interior.
    """

    n_fiber: int
    x: np.ndarray
    phi: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        psi = np.asarray(self.psi, dtype=float)
        if self.n_fiber < 2 or self.n_fiber + 1 > 8:
            raise ValueError("n_fiber must be in [2, 7]")
        if x.ndim != 1 or len(x) < 16:
            raise ValueError("warped grid needs at least 16 points")
        if phi.shape != x.shape or psi.shape != x.shape:
            raise ValueError("phi, psi must be sampled on the grid")
        dx = np.diff(x)
        if np.any(dx <= 0):
            raise ValueError("warped grid must be strictly increasing")
        if np.max(np.abs(dx - dx[0])) > 1e-9 * dx[0]:
            raise ValueError("warped grid must be uniform")
        if np.any(phi <= 0) or np.any(psi[1:-1] <= 0):
            raise ValueError("phi and interior psi must be strictly positive")
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(psi))):
            raise ValueError("phi, psi must be finite")
        for name, arr in (("x", x), ("phi", phi), ("psi", psi)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return self.n_fiber + 1

    @property
    def n_points(self) -> int:
        return len(self.x)

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def length(self) -> float:
        return float(trapezoid(self.phi, self.x))

    @classmethod
    def dumbbell(cls, n_fiber: int = 3, n_grid: int = 513, scale: float = 2.0,
                 depth: float = 0.7, power: int = 2) -> WarpedProductSphere:
        """Symmetric dumbbell ``psi = scale sin(x) (1 - depth sin(x)^(2 power))``.

        ``x`` is arclength divided by ``scale`` so the poles are smooth.
        """
        x = np.linspace(0.0, np.pi, n_grid)
        psi = scale * np.sin(x) * (1.0 - depth * np.sin(x) ** (2 * power))
        psi[0] = psi[-1] = 0.0
        return cls(n_fiber, x, np.full_like(x, scale), psi)

    @classmethod
    def round(cls, n_fiber: int = 3, n_grid: int = 257, radius: float = 1.0) -> WarpedProductSphere:
        x = np.linspace(0.0, np.pi, n_grid)
        psi = radius * np.sin(x)
        psi[0] = psi[-1] = 0.0
        return cls(n_fiber, x, np.full_like(x, radius), psi)


@dataclass(frozen=True, eq=False)
class CoordinateChart:
    """Metric components sampled on a uniform ``n``-dimensional grid.

    ``values`` has shape ``grid_shape + (n, n)``; grid node ``idx`` sits at
    coordinates ``origin + h * idx``.
    """

    n: int
    values: np.ndarray
    h: float
    origin: np.ndarray = field(default=None)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != self.n + 2 or v.shape[-2:] != (self.n, self.n):
            raise ValueError(f"values must have shape grid + ({self.n}, {self.n})")
        if not 3 <= self.n <= 8:
            raise ValueError(f"dimension {self.n} outside [3, 8]")
        _positive("grid spacing h", self.h)
        if not np.all(np.isfinite(v)):
            raise ValueError("metric samples must be finite")
        origin = np.zeros(self.n) if self.origin is None else np.asarray(self.origin, dtype=float)
        v = 0.5 * (v + np.swapaxes(v, -1, -2))
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "origin", origin)

    @property
    def dim(self) -> int:
        return self.n

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return self.values.shape[:-2]

    @property
    def n_points(self) -> int:
        return int(np.prod(self.grid_shape))

    def coords(self) -> np.ndarray:
        """Coordinates of every node, shape ``grid_shape + (n,)``."""
        axes = [self.origin[k] + self.h * np.arange(m) for k, m in enumerate(self.grid_shape)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    @classmethod
    def from_function(cls, metric: Callable[[np.ndarray], np.ndarray], n: int, center,
                      h: float, half_width: int = 1) -> CoordinateChart:
        """Sample ``metric(coords) -> (n, n)`` on a cube of ``2*half_width+1`` nodes per axis."""
        center = np.asarray(center, dtype=float)
        m = 2 * half_width + 1
        origin = center - half_width * h
        axes = [origin[k] + h * np.arange(m) for k in range(n)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        vals = np.array([metric(p) for p in pts]).reshape((m,) * n + (n, n))
        return cls(n, vals, h, origin)


GeometrySpec = Union[ConstantCurvature, ProductOfSpheres, MilnorFrame3D, WarpedProductSphere, CoordinateChart]
HOMOGENEOUS = (ConstantCurvature, ProductOfSpheres, MilnorFrame3D)


def is_homogeneous(spec) -> bool:
    return isinstance(spec, HOMOGENEOUS)
