import numpy as np
import pytest

from ricci_pinch import lie
from ricci_pinch.geometry import MilnorFrame3D


@pytest.mark.parametrize("spec", [MilnorFrame3D("SU2", 1.2, 1.0, 0.7), MilnorFrame3D("Nil", 1.0, 2.0, 0.5),
                                  MilnorFrame3D("Sol", 1.5, 1.0, 1.0)])
def test_connection_is_metric_and_torsion_free(spec):
    C = lie.milnor_structure(spec)
    G = lie.connection(C)
    # G[i,j,k] = <nabla_i e_j, e_k>: metric means antisymmetry in (j, k)
    assert np.allclose(G, -G.transpose(0, 2, 1), atol=1e-14)
    # torsion free: nabla_i e_j - nabla_j e_i = [e_i, e_j]
    assert np.allclose(G - G.transpose(1, 0, 2), C, atol=1e-14)


def test_ricci_matches_closed_form():
    spec = MilnorFrame3D("SU2", 2.0, 1.0, 1.0)
    assert np.allclose(np.diag(lie.ricci(lie.milnor_structure(spec))), spec.ricci_eigenvalues(), atol=1e-13)


def test_gradient_terms_vanish_on_round_sphere():
    gt = lie.gradient_terms(lie.milnor_structure(MilnorFrame3D("SU2", 1.0, 1.0, 1.0)))
    assert np.abs(gt["lap_ric"]).max() <= 1e-13
    assert gt["grad_ric2"] <= 1e-13


def test_laplacian_trace_is_zero():
    # Lap R = tr(Lap Rc) vanishes because R is constant on a homogeneous space
    gt = lie.gradient_terms(lie.milnor_structure(MilnorFrame3D("SU2", 3.0, 1.0, 0.5)))
    assert abs(np.trace(gt["lap_ric"])) <= 1e-12
