"""Seeded random generators for symmetric and curvature-type tensors."""
from __future__ import annotations

import numpy as np
from scipy.stats import special_ortho_group

from .tensors import kn_product_array


def random_sym(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n))
    return 0.5 * (a + a.T)


def random_traceless(rng: np.random.Generator, n: int) -> np.ndarray:
    h = random_sym(rng, n)
    return h - np.trace(h) / n * np.eye(n)


def random_traceless_heavy(rng: np.random.Generator, n: int, df: float = 2.0) -> np.ndarray:
    """Trace-free symmetric matrix with Student-t eigenvalues in a Haar-random basis.

    Heavy tails put mass near the extremal spectra ``(1, ..., 1, -(n-1))``
    that a Gaussian matrix reaches only rarely.
    """
    e = rng.standard_t(df, n)
    e -= e.mean()
    Q = special_ortho_group.rvs(n, random_state=rng)
    return (Q * e) @ Q.T


def random_curvature(rng: np.random.Generator, n: int, terms: int = 4, scale: float = 0.3,
                     shift: tuple[float, float] = (0.0, 3.0)) -> np.ndarray:
    """Random algebraic curvature tensor ``scale * sum(+-h o h) + c/2 g o g``.

    Sums of signed KN squares span the space of algebraic curvature tensors;
    the uniform constant-curvature shift mixes PIC and non-PIC samples.
    """
    g = np.eye(n)
    T = np.zeros((n,) * 4)
    for _ in range(terms):
        h = random_sym(rng, n)
        T += rng.choice((-1.0, 1.0)) * kn_product_array(h, h)
    return scale * T + rng.uniform(*shift) * 0.5 * kn_product_array(g, g)


def weyl_part(rm: np.ndarray) -> np.ndarray:
    """Weyl projection in an orthonormal frame (raw arrays, no validation)."""
    n = rm.shape[0]
    g = np.eye(n)
    ric = np.einsum("ijkj->ik", rm)
    R = np.trace(ric)
    E = ric - R / n * g
    return rm - R / (2 * n * (n - 1)) * kn_product_array(g, g) - kn_product_array(E, g) / (n - 2)


def random_weyl(rng: np.random.Generator, n: int) -> np.ndarray:
    return weyl_part(random_curvature(rng, n, shift=(0.0, 0.0)))


def random_einstein(rng: np.random.Generator, n: int, lam: float | None = None) -> np.ndarray:
    """Curvature with ``Rc = lam g``: a constant-curvature part plus a random Weyl tensor."""
    g = np.eye(n)
    lam = rng.uniform(0.1, 5.0) if lam is None else lam
    rm = lam / (2 * (n - 1)) * kn_product_array(g, g)
    if n >= 4:
        rm = rm + random_weyl(rng, n)
    return rm
