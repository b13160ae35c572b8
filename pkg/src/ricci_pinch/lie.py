"""Left-invariant geometry on a Lie group from orthonormal structure constants.

With ``[e_i, e_j] = C[i, j, k] e_k`` for a left-invariant orthonormal frame
the Levi-Civita connection is algebraic, so covariant derivatives of
left-invariant tensors need no spatial discretisation.  Used for the
Milnor-frame presets, where ``Rc`` is constant in the frame but generally
not parallel.
"""
from __future__ import annotations

import numpy as np

from .geometry import MILNOR_SIGNS, MilnorFrame3D


def milnor_structure(spec: MilnorFrame3D, p=None) -> np.ndarray:
    """Structure constants in the orthonormal frame ``X_i / sqrt(A_i)``."""
    p = spec.params() if p is None else np.asarray(p, dtype=float)
    lam = 2.0 * np.array(MILNOR_SIGNS[spec.group]) * p / np.sqrt(np.prod(p))
    C = np.zeros((3, 3, 3))
    for i, j, k in ((1, 2, 0), (2, 0, 1), (0, 1, 2)):
        C[i, j, k] = lam[k]
        C[j, i, k] = -lam[k]
    return C


def connection(C: np.ndarray) -> np.ndarray:
    """``G[i, j, k] = <nabla_{e_i} e_j, e_k>`` by the Koszul formula."""
    return 0.5 * (C - C.transpose(2, 0, 1) + C.transpose(1, 2, 0))


def curvature(C: np.ndarray) -> np.ndarray:
    """``R_ijkl = <R(e_i, e_j) e_l, e_k>``, positive sectional curvature on spheres."""
    G = connection(C)
    # nabla_i nabla_j e_l = G[j, l, m] G[i, m, p] e_p
    nn = np.einsum("jlm,imp->ijlp", G, G)
    # R(e_i, e_j) e_l = nabla_i nabla_j e_l - nabla_j nabla_i e_l - nabla_[e_i, e_j] e_l
    br = np.einsum("ijm,mlp->ijlp", C, G)
    Rv = nn - nn.transpose(1, 0, 2, 3) - br
    return Rv.transpose(0, 1, 3, 2)


def cov_derivative(G: np.ndarray, T: np.ndarray) -> np.ndarray:
    """``(nabla_i T)_jk`` for a left-invariant 2-tensor."""
    return -np.einsum("ijm,mk->ijk", G, T) - np.einsum("ikm,jm->ijk", G, T)


def laplacian(G: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Rough Laplacian ``sum_i (nabla^2 T)(e_i, e_i)`` of a left-invariant 2-tensor."""
    S = cov_derivative(G, T)
    nS = (-np.einsum("abm,mcd->abcd", G, S) - np.einsum("acm,bmd->abcd", G, S)
          - np.einsum("adm,bcm->abcd", G, S))
    return np.einsum("iijk->jk", nS)


def ricci(C: np.ndarray) -> np.ndarray:
    return np.einsum("ijkj->ik", curvature(C))


def gradient_terms(C: np.ndarray) -> dict[str, np.ndarray | float]:
    """``Rc``, ``Lap Rc`` and ``|nabla Rc|^2`` for the group with structure constants ``C``."""
    G = connection(C)
    ric = ricci(C)
    return {
        "ric": ric,
        "lap_ric": laplacian(G, ric),
        "grad_ric2": float(np.sum(cov_derivative(G, ric) ** 2)),
    }
