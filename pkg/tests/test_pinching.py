import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize

from ricci_pinch import flow, pinching
from ricci_pinch.curvature import curvature_at, decompose, weitzenbock
from ricci_pinch.flow import convergence_order, integrate
from ricci_pinch.geometry import ConstantCurvature, MilnorFrame3D, ProductOfSpheres
from ricci_pinch.pinching import (C2_SHARP, PinchConfig, PositiveScalarError, build_trace,
                                  check_pinching_estimate, f_gamma, phi_bound)
from ricci_pinch.sampling import random_curvature, random_einstein
from ricci_pinch.tensors import AlgCurvTensor, MetricPoint

seeds = st.integers(min_value=0, max_value=2**32 - 1)


# ---- independent Weyl projection for the constant oracles

def _kn(h, k):
    return (np.einsum("ik,jl->ijkl", h, k) + np.einsum("jl,ik->ijkl", h, k)
            - np.einsum("il,jk->ijkl", h, k) - np.einsum("jk,il->ijkl", h, k))


def _weyl(T):
    n = T.shape[0]
    g = np.eye(n)
    ric = np.einsum("ijkj->ik", T)
    R = np.trace(ric)
    E = ric - R / n * g
    return T - _kn(E, g) / (n - 2) - R / (2 * n * (n - 1)) * _kn(g, g)


def _c2_oracle(n, starts=15):
    def neg(x):
        e = x - x.mean()
        E = np.diag(e / np.linalg.norm(e))
        return -0.25 * np.linalg.norm(_weyl(_kn(E, E)))

    rng = np.random.default_rng(n)
    best = 0.0
    for _ in range(starts):
        res = minimize(neg, rng.standard_normal(n), method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 20000})
        best = max(best, -res.fun)
    return best


@pytest.mark.parametrize("n", [4, 5, 6])
def test_c2_table_matches_independent_search(n):
    assert C2_SHARP[n] == pytest.approx(_c2_oracle(n), abs=1e-8)


def test_c2_table_frozen_values():
    assert C2_SHARP[3] == 0.0
    assert C2_SHARP[4] == pytest.approx(0.5773502691896258)
    assert C2_SHARP[5] == pytest.approx(0.5892556509887896)
    assert C2_SHARP[6] == pytest.approx(0.6324555320336759)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_cubic_constant_extremal(n):
    r, _ = pinching.cubic_ratios([pinching.extremal_E(n)])
    assert r[0] == pytest.approx(2 / math.sqrt(n * (n - 1)), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(min_value=3, max_value=6))
def test_cubic_ratio_never_exceeds_sharp(seed, n):
    Es, Ws = pinching.sample_cubic_inputs(n, 20, seed)
    c1_emp, c2_emp = pinching.cubic_bounds(Es, Ws, n)
    assert c1_emp <= pinching.c1_sharp(n) + 1e-12
    assert c2_emp <= C2_SHARP[n] + 1e-12


def test_f_oracles_product():
    # S^2(1) x S^2(sqrt 2): Rc = diag(1, 1, 1/2, 1/2), R = 3, |E|^2 = 1/4
    m, rm = curvature_at(ProductOfSpheres(2, 1.0, 2, math.sqrt(2)))
    d = decompose(rm, m)
    assert d.R == pytest.approx(3.0)
    assert f_gamma(d.norm_E ** 2, d.R, 2.0) == pytest.approx(1 / 36)
    assert f_gamma(d.norm_E ** 2, d.R, 1.0) == pytest.approx(1 / 12)
    Rc2 = float(np.sum(d.ric.comps ** 2))
    f_gamma(d.norm_E ** 2, d.R, 1.5, Rc2=Rc2, n=4)


def test_f_requires_positive_scalar():
    with pytest.raises(PositiveScalarError):
        f_gamma(1.0, 0.0, 2.0)
    with pytest.raises(PositiveScalarError):
        f_gamma(1.0, -1.0, 1.0)


def test_phi_oracle():
    assert phi_bound(1.0, 0.5, 4, 0.25) == pytest.approx(0.5 + math.sqrt(7 / 24), rel=1e-15)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_phi_at_sharp_c1(n):
    c1 = pinching.c1_sharp(n)
    # the radicand is zero up to rounding, which the square root amplifies to ~1e-8
    assert phi_bound(c1, C2_SHARP[n], n, 0.0) == pytest.approx(c1 / 2, abs=1e-7)


def test_phi_below_additive_bound():
    for M in (0.0, 0.1, 1.0, 10.0):
        C1, c2 = 0.7, 0.6
        assert phi_bound(C1, c2, 4, M) <= C1 + math.sqrt(c2 * M) + 1e-15


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(min_value=3, max_value=6))
def test_q_vanishes_on_einstein(seed, n):
    rng = np.random.default_rng(seed)
    m = MetricPoint.euclidean(n)
    rm = AlgCurvTensor(random_einstein(rng, n), check=False)
    d = decompose(rm, m)
    assert abs(pinching.q_quantity(d.ric, d.R, m)) <= 1e-10 * d.R ** 4


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(min_value=4, max_value=6))
def test_rm_rcrc_identity(seed, n):
    rm = AlgCurvTensor(random_curvature(np.random.default_rng(seed), n))
    m = MetricPoint.euclidean(n)
    assert pinching.rm_rcrc_identity(decompose(rm, m), rm, m) <= 1e-10


@pytest.mark.parametrize("spec", [ProductOfSpheres(2, 1.0, 2, 1.4), MilnorFrame3D("SU2", 2.0, 1.0, 1.0),
                                  ProductOfSpheres(3, 1.0, 1, 1.0)])
def test_reaction_forms_agree_without_gradients(spec):
    pw = flow.pointwise(spec)
    n = spec.dim
    s = pinching.samples_from_pointwise(pw, 0.0, n, 2.0)[0]
    a = pinching.reaction_terms_gamma2(s, n)
    b = pinching.reaction_general(s, n, 2.0, float(pw["Rc2"][0]))
    assert a == pytest.approx(b, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("gamma", [1.0, 2.0])
@pytest.mark.parametrize("spec", [MilnorFrame3D("SU2", 2.0, 1.5, 1.0), ProductOfSpheres(2, 1.0, 2, 1.4)])
def test_f_evolution_second_order(spec, gamma):
    traj = integrate(spec, 10.0)
    hs = [1e-3, 5e-4, 2.5e-4]
    res = [pinching.verify_evolution_identity(traj, gamma, h, 6, h_ref=hs[0]) for h in hs]
    assert convergence_order(res, hs)[-1] == pytest.approx(2.0, abs=0.5)


def test_gamma_range():
    with pytest.raises(ValueError):
        PinchConfig(gamma=2.5)
    with pytest.raises(ValueError):
        PinchConfig(gamma=0.0)


def test_c1_below_initial_pinching_rejected():
    with pytest.raises(ValueError):
        PinchConfig(C1=0.1).resolved(4, 0.25)
    cfg = PinchConfig().resolved(4, 0.25)
    assert cfg.C1 == pytest.approx(1.0)
    assert cfg.provenance["c2"] == "calibrated"


def test_product_trace_holds():
    traj = integrate(ProductOfSpheres(2, 1.0, 2, math.sqrt(2)), 10.0)
    trace = build_trace(traj)
    rep = check_pinching_estimate(trace)
    assert rep.violations == []
    assert np.all(np.diff(trace.running_max_W_over_R) >= 0)
    # the analytic f along this flow
    t = trace.t[trace.t <= 0.495]
    assert np.allclose(trace.f_max[: len(t)], (1 / (2 * (3 - 4 * t))) ** 2, rtol=1e-6)


def test_s3xs1_saturates_barrier():
    # |E|/R stays at its initial value, equal to Phi when C1 = 2 sqrt(f(0)) and W = 0
    traj = integrate(ProductOfSpheres(3, 1.0, 1, 1.0), 10.0)
    rep = check_pinching_estimate(build_trace(traj))
    assert rep.violations == []
    assert rep.flagged_samples > 0
    assert rep.max_principle_ok


def test_nonpositive_scalar_rejected():
    traj = integrate(MilnorFrame3D("Nil", 1.0, 1.0, 1.0), 0.1)
    with pytest.raises(PositiveScalarError):
        build_trace(traj)


def test_pic_constants_bound_random_psd(rng):
    n = 4
    c3, c4 = pinching.pic_constants(n)
    assert c3 == 0.0
    m = MetricPoint.euclidean(n)
    kept = 0
    for _ in range(400):
        rm = AlgCurvTensor(random_curvature(rng, n))
        d = decompose(rm, m)
        _, op = weitzenbock(rm, d.ric, m)
        if d.R > 0 and op.eigenvalues()[0] >= 0:
            kept += 1
            assert d.norm_W <= c4 * d.R * (1 + 1e-12)
    assert kept > 20


def test_pic_chain_product():
    m, rm = curvature_at(ProductOfSpheres(2, 1.0, 2, 1.0))
    d = decompose(rm, m)
    _, op = weitzenbock(rm, d.ric, m)
    rep = pinching.pic_chain_check(d, op, PinchConfig())
    assert rep.precondition and rep.holds
    m, rm = curvature_at(ConstantCurvature(4, 1.0))
    d = decompose(rm, m)
    _, op = weitzenbock(rm, d.ric, m)
    assert pinching.pic_chain_check(d, op, PinchConfig()).lhs == pytest.approx(0.0, abs=1e-12)


def test_dilation_ratios_unequal_product():
    traj = integrate(ProductOfSpheres(2, 1.0, 2, math.sqrt(2)), 10.0)
    trace = build_trace(traj)
    rep = pinching.dilation_ratios(flow.dilate(traj), trace)
    assert rep.applicable and rep.all_hold
    assert rep.C2 >= math.sqrt(C2_SHARP[4])
