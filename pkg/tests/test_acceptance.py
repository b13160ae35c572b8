"""Acceptance criteria 1-11, each at its stated tolerance and runtime budget."""
import math
import time

import numpy as np
import pytest

from ricci_pinch import flow, pinching, suites
from ricci_pinch.cli import builtin_config
from ricci_pinch.curvature import curvature_at, decompose, isotropic_min, weitzenbock
from ricci_pinch.flow import convergence_order, integrate
from ricci_pinch.geometry import ConstantCurvature, MilnorFrame3D, ProductOfSpheres
from ricci_pinch.runner import run_scenario

POSITIVE_BUILTINS = ["round_s4", "sphere_n3", "sphere_n5", "sphere_n6", "product_s2s2_equal",
                     "product_s2s2_unequal", "product_s3s1", "su2_a", "su2_b", "su2_c", "neckpinch"]


def test_c01_decomposition(criterion):
    start = time.perf_counter()
    worst = {}
    for n in (4, 5, 6):
        for k, v in suites.decomposition_suite(n, 1000, seed=100 + n).items():
            worst[k] = max(worst.get(k, 0.0), v)
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) <= 1e-10 and elapsed < 30
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    assert criterion(1, ok, f"{detail}; {elapsed:.1f}s")


def test_c02_kn_norm(criterion):
    start = time.perf_counter()
    err = suites.kn_norm_suite(range(3, 7))
    elapsed = time.perf_counter() - start
    ok = max(err.values()) <= 1e-12 and elapsed < 1
    assert criterion(2, ok, f"max |<gg,gg> - 8n(n-1)| = {max(err.values()):.1e}; {elapsed:.3f}s")


def test_c03_closed_form_oracles(criterion):
    t0 = time.perf_counter()
    traj = integrate(ConstantCurvature(4, 1.0), 0.15)
    s4_err = abs(traj.states[-1].spec.params()[0] - (1 - 6 * 0.15)) / (1 - 6 * 0.15)
    t_s4 = time.perf_counter() - t0

    t0 = time.perf_counter()
    traj = integrate(ProductOfSpheres(2, 1.0, 2, math.sqrt(2)), 0.495)
    trace = pinching.build_trace(traj)
    a_err = f_err = 0.0
    for st, f in zip(traj.states, trace.f_max):
        a2 = st.spec.params()[0]
        a_err = max(a_err, abs(a2 - (1 - 2 * st.t)) / (1 - 2 * st.t))
        f_ref = (1 / (2 * (3 - 4 * st.t))) ** 2
        f_err = max(f_err, abs(f - f_ref) / f_ref)
    t_prod = time.perf_counter() - t0
    reached = traj.states[-1].t
    ok = s4_err <= 1e-6 and a_err <= 1e-6 and f_err <= 1e-6 and reached >= 0.495 * (1 - 1e-12) \
        and t_s4 < 5 and t_prod < 5
    assert criterion(3, ok, f"S4 r^2 rel {s4_err:.1e}; product a^2 rel {a_err:.1e}, f rel {f_err:.1e} "
                            f"to t={reached:.3f}; {t_s4:.2f}s / {t_prod:.2f}s")


def test_c04_evolution_convergence(criterion):
    start = time.perf_counter()
    hs = [1e-3, 5e-4, 2.5e-4]
    orders = {}
    for label, spec in (("su2", MilnorFrame3D("SU2", 2.0, 1.5, 1.0)),
                        ("product", ProductOfSpheres(2, 1.0, 2, math.sqrt(2)))):
        traj = integrate(spec, 10.0)
        checks = {
            "scalar": lambda h: flow.verify_scalar_evolution(traj, h, 6, h_ref=hs[0]),
            "ricci": lambda h: flow.verify_ricci_evolution(traj, h, 6, h_ref=hs[0]),
            "f1": lambda h: pinching.verify_evolution_identity(traj, 1.0, h, 6, h_ref=hs[0]),
            "f2": lambda h: pinching.verify_evolution_identity(traj, 2.0, h, 6, h_ref=hs[0]),
        }
        for name, fn in checks.items():
            orders[f"{label}/{name}"] = convergence_order([fn(h) for h in hs], hs)[-1]
    elapsed = time.perf_counter() - start
    ok = all(abs(p - 2.0) <= 0.5 for p in orders.values()) and elapsed < 60
    detail = ", ".join(f"{k} {v:.3f}" for k, v in orders.items())
    assert criterion(4, ok, f"orders {detail}; {elapsed:.1f}s")


def test_c05_q_vanishing(criterion):
    start = time.perf_counter()
    worst = suites.q_vanishing_suite(range(3, 7), 200, seed=5)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 5
    assert criterion(5, ok, f"max |Q|/R^4 = {worst:.1e}; {elapsed:.2f}s")


def test_c06_pinching_estimate(criterion, run_builtin):
    start = time.perf_counter()
    rows, ok = [], True
    for name in POSITIVE_BUILTINS:
        cfg, traj = run_builtin(name)
        trace = pinching.build_trace(traj, cfg.pinch)
        rep = pinching.check_pinching_estimate(trace)
        ok &= not rep.violations and rep.max_principle_ok and not traj.positivity_lost
        rows.append(f"{name} v={len(rep.violations)} flagged={rep.flagged_samples}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 300
    assert criterion(6, ok, f"{len(rows)} trajectories, zero violations; {'; '.join(rows)}; {elapsed:.1f}s")


def test_c07_cubic_constants(criterion):
    start = time.perf_counter()
    ok, parts = True, []
    for n in range(3, 7):
        r = suites.cubic_suite(n, 10_000, seed=70 + n)
        ok &= 0.99 <= r["fraction"] <= 1.0 and r["extremal_error"] <= 1e-9
        parts.append(f"n={n} {r['fraction']:.5f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 30
    assert criterion(7, ok, f"empirical/sharp {', '.join(parts)}; {elapsed:.1f}s")


def test_c08_pic_weitzenbock(criterion):
    start = time.perf_counter()
    r = suites.pic_equivalence_suite(1000, seed=8)
    m, rm = curvature_at(ProductOfSpheres(3, 1.0, 1, 1.0))
    _, op = weitzenbock(rm, decompose(rm, m).ric, m)
    s3s1 = (isotropic_min(rm, m, budget=1000, seed=8), float(op.eigenvalues()[0]))
    m, rm = curvature_at(ConstantCurvature(4, 0.0))
    _, op = weitzenbock(rm, decompose(rm, m).ric, m)
    flat = (isotropic_min(rm, m, budget=1000, seed=8), float(op.eigenvalues()[0]))
    elapsed = time.perf_counter() - start
    ok = (r["disagree"] == 0 and r["agree"] > 0 and s3s1[0] > 0 and s3s1[1] >= 0
          and flat == (0.0, 0.0) and elapsed < 120)
    assert criterion(8, ok, f"{r['agree']} agree / {r['disagree']} disagree / {r['inconclusive']} "
                            f"inconclusive ({r['positive']} PIC); S3xS1 iso {s3s1[0]:.3f} P_min "
                            f"{s3s1[1]:.1e}; T4 {flat}; {elapsed:.1f}s")


def test_c09_type_one(criterion):
    start = time.perf_counter()
    parts, ok = [], True
    for spec, T in ((ConstantCurvature(4, 1.0), 1 / 6), (ProductOfSpheres(2, 1.0, 2, math.sqrt(2)), 0.5)):
        traj = integrate(spec, 10.0)
        rep = flow.classify(traj)
        Rm = traj.column("Rm_max")
        window = Rm >= Rm[-1] / 100
        run = np.maximum.accumulate(((rep.T_est - traj.times) * Rm)[window])
        drift = run[-1] / run[0] - 1
        ok &= rep.type == "TypeI" and drift <= 0.2 and abs(rep.T_est - T) <= 0.01 * T
        parts.append(f"{type(spec).__name__} T_est {rep.T_est:.6f} (T={T:.6f}) drift {drift:.1e}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 10
    assert criterion(9, ok, f"{'; '.join(parts)}; {elapsed:.2f}s")


def test_c10_dilation_ratios(criterion, run_builtin):
    singular = []
    for name in POSITIVE_BUILTINS:
        cfg, traj = run_builtin(name)
        if traj.status == flow.SINGULAR:
            singular.append((name, cfg, traj, pinching.build_trace(traj, cfg.pinch)))
    start = time.perf_counter()
    ok, checked, anchor_err = True, [], 0.0
    for name, cfg, traj, trace in singular:
        seq = flow.dilate(traj)
        for samples in seq.rescaled_samples:
            anchor_err = max(anchor_err, max(abs(s.Rm_max - 1.0) for sv, s in samples if sv == 0.0))
        rep = pinching.dilation_ratios(seq, trace)
        if rep.applicable:
            ok &= rep.all_hold
            checked.append(f"{name} ({len(rep.rows)} anchors)")
    elapsed = time.perf_counter() - start
    ok &= anchor_err <= 1e-9 and len(checked) > 0 and elapsed < 10
    assert criterion(10, ok, f"{len(singular)} singular flows, ratios hold on {', '.join(checked)}; "
                             f"anchor |Rm| error {anchor_err:.1e}; {elapsed:.2f}s")


@pytest.mark.parametrize("name", ["product_s2s2_unequal", "su2_b", "neckpinch"])
def test_c11_determinism(criterion, tmp_path, name):
    cfg = builtin_config(name)
    run_scenario(cfg, tmp_path / "a")
    run_scenario(cfg, tmp_path / "b")
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
               for f in (cfg.csv_path, cfg.summary_path))
    prev = getattr(test_c11_determinism, "seen", [])
    prev.append(f"{name} {'identical' if same else 'DIFFERENT'}")
    test_c11_determinism.seen = prev
    assert criterion(11, same and "DIFFERENT" not in " ".join(prev), "byte-identical reruns: " + ", ".join(prev))
