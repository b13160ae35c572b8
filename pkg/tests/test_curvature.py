import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ricci_pinch import lie
from ricci_pinch.curvature import (chart_curvature, conformal_rescale, curvature_at, decompose,
                                   decomposition_residuals, isotropic_min, weitzenbock,
                                   weyl_coordinate_formula)
from ricci_pinch.geometry import (ConstantCurvature, CoordinateChart, MilnorFrame3D, ProductOfSpheres,
                                  WarpedProductSphere)
from ricci_pinch.sampling import random_curvature
from ricci_pinch.tensors import AlgCurvTensor, MetricPoint, curv_norm

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_s2xs2_norms():
    m, rm = curvature_at(ProductOfSpheres(2, 1.0, 2, 1.0))
    d = decompose(rm, m)
    assert d.R == pytest.approx(4.0)
    assert d.norm_Rm ** 2 == pytest.approx(8.0, abs=1e-12)
    assert d.norm_W ** 2 == pytest.approx(16 / 3, abs=1e-12)
    assert d.norm_E == pytest.approx(0.0, abs=1e-12)


def test_s3xs1_is_conformally_flat():
    m, rm = curvature_at(ProductOfSpheres(3, 1.0, 1, 1.0))
    d = decompose(rm, m)
    assert d.R == pytest.approx(6.0)
    assert d.norm_E ** 2 == pytest.approx(3.0, abs=1e-12)
    assert d.norm_W == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_space_form_pure_scalar(n):
    m, rm = curvature_at(ConstantCurvature(n, 0.5))
    d = decompose(rm, m)
    assert d.R == pytest.approx(0.5 * n * (n - 1))
    assert d.norm_E <= 1e-12 and d.norm_W <= 1e-12


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(min_value=3, max_value=6))
def test_decomposition_properties(seed, n):
    rm = AlgCurvTensor(random_curvature(np.random.default_rng(seed), n))
    m = MetricPoint.euclidean(n)
    d = decompose(rm, m)
    res = decomposition_residuals(rm, m, d)
    assert max(res.values()) <= 1e-10
    # the parts are orthogonal, so squared norms add
    assert d.norm_Rm ** 2 == pytest.approx(
        curv_norm(d.scalar_part, m) ** 2 + curv_norm(d.einstein_part, m) ** 2 + d.norm_W ** 2, rel=1e-10)
    if n == 3:
        assert d.norm_W <= 1e-12
    else:
        Wc = weyl_coordinate_formula(rm, d.ric, d.R, m)
        assert np.max(np.abs(Wc.comps - d.W.comps)) <= 1e-10 * max(1.0, np.abs(rm.comps).max())


def test_decomposition_in_coordinates(rng):
    # non-orthonormal coordinates: Weyl stays totally trace-free with respect to g
    n = 4
    A = np.eye(n) + 0.2 * rng.standard_normal((n, n))
    rm = np.einsum("ia,jb,kc,ld,abcd->ijkl", A, A, A, A, random_curvature(rng, n))
    m = MetricPoint.from_matrix(A @ A.T)
    d = decompose(AlgCurvTensor(rm), m)
    assert abs(np.einsum("ik,ijkl->jl", m.g_inv, d.W.comps)).max() <= 1e-10


def _stereo_sphere(x):
    return 4.0 / (1.0 + x @ x) ** 2 * np.eye(len(x))


def test_chart_curvature_second_order():
    errs = []
    for h in (0.02, 0.01):
        chart = CoordinateChart.from_function(_stereo_sphere, 3, [0.3, -0.2, 0.1], h)
        m, rm = curvature_at(chart, (1, 1, 1))
        errs.append(abs(decompose(rm, m).R - 6.0))
    assert errs[0] / 6.0 < 1e-3
    assert math.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.3)


def test_chart_matches_closed_form_components():
    # unit round S^3 in stereographic coordinates: R_ijkl = g_ik g_jl - g_il g_jk
    chart = CoordinateChart.from_function(_stereo_sphere, 3, [0.1, 0.2, 0.3], 1e-3)
    raw = chart_curvature(chart, (1, 1, 1))
    g = _stereo_sphere(np.array([0.1, 0.2, 0.3]))
    exact = np.einsum("ik,jl->ijkl", g, g) - np.einsum("il,jk->ijkl", g, g)
    assert np.max(np.abs(raw - exact)) <= 1e-5 * np.abs(exact).max()


def test_weyl_conformal_covariance():
    # W(e^u g) = e^u W(g) with all indices down
    def metric(x):
        return np.diag([1 + 0.3 * x[1] ** 2, 1 + 0.2 * x[0] * x[2], 1.0 + 0.1 * x[3], 1 + 0.25 * x[0] ** 2])

    def u(c):
        return 0.4 * c[..., 0] - 0.3 * c[..., 1] * c[..., 2] + 0.2 * c[..., 3] ** 2

    center = np.array([0.2, -0.1, 0.3, 0.15])
    errs = []
    for h in (0.02, 0.01):
        chart = CoordinateChart.from_function(metric, 4, center, h)
        m0, rm0 = curvature_at(chart, (1, 1, 1, 1))
        m1, rm1 = curvature_at(conformal_rescale(chart, u), (1, 1, 1, 1))
        W0, W1 = decompose(rm0, m0).W.comps, decompose(rm1, m1).W.comps
        errs.append(np.max(np.abs(W1 - math.exp(u(center)) * W0)))
        scale = np.abs(W0).max()
    assert scale > 1e-2
    assert errs[1] < 1e-4 and errs[1] < errs[0] / 3


def test_milnor_curvature_from_structure_constants():
    spec = MilnorFrame3D("SU2", 2.0, 1.5, 1.0)
    _, rm = curvature_at(spec)
    C = lie.milnor_structure(spec)
    assert np.max(np.abs(lie.curvature(C) - rm.comps)) <= 1e-12
    assert np.allclose(np.diag(lie.ricci(C)), spec.ricci_eigenvalues(), atol=1e-12)


def test_round_su2_is_unit_sphere():
    ev = MilnorFrame3D("SU2", 1.0, 1.0, 1.0).ricci_eigenvalues()
    assert np.allclose(ev, 2.0)


def test_warped_round_matches_space_form():
    spec = WarpedProductSphere.round(n_fiber=3, n_grid=257, radius=1.0)
    m, rm = curvature_at(spec, 100)
    d = decompose(rm, m)
    assert d.R == pytest.approx(12.0, rel=1e-6)
    assert d.norm_E <= 1e-5 * d.R


def test_isotropic_and_weitzenbock_oracles():
    # unit S^4: every isotropic combination equals 4 and P = 2 g o g
    m, rm = curvature_at(ConstantCurvature(4, 1.0))
    d = decompose(rm, m)
    assert isotropic_min(rm, m, budget=1000, seed=1) == pytest.approx(4.0, abs=1e-10)
    P, op = weitzenbock(rm, d.ric, m)
    assert np.allclose(op.eigenvalues(), op.eigenvalues()[0])
    assert op.eigenvalues()[0] > 0
    # flat torus: exactly zero
    m, rm = curvature_at(ConstantCurvature(4, 0.0))
    _, op = weitzenbock(rm, decompose(rm, m).ric, m)
    assert isotropic_min(rm, m, budget=1000, seed=0) == 0.0
    assert np.all(op.eigenvalues() == 0.0)


def test_s3xs1_weakly_pic():
    m, rm = curvature_at(ProductOfSpheres(3, 1.0, 1, 1.0))
    d = decompose(rm, m)
    _, op = weitzenbock(rm, d.ric, m)
    assert isotropic_min(rm, m, budget=1000, seed=3) > 0
    assert op.eigenvalues()[0] >= -1e-12


def test_s2xs2_not_strictly_pic():
    m, rm = curvature_at(ProductOfSpheres(2, 1.0, 2, 1.0))
    assert isotropic_min(rm, m, budget=1000, seed=0) == pytest.approx(0.0, abs=1e-9)


def test_isotropic_min_is_seeded(rng):
    rm = AlgCurvTensor(random_curvature(rng, 5))
    m = MetricPoint.euclidean(5)
    a = isotropic_min(rm, m, budget=1000, seed=7)
    assert a == isotropic_min(rm, m, budget=1000, seed=7)
