"""Scenario execution and deterministic CSV / JSON output."""
from __future__ import annotations

import json
import math
import os
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import flow, pinching
from .config import FORMAT_VERSION, ScenarioConfig, controls_dict
from .curvature import curvature_at, decompose, isotropic_min, weitzenbock
from .geometry import WarpedProductSphere, is_homogeneous

CSV_HEADER = ("t", "R_min", "R_max", "E_max", "W_max", "Rm_max", "f_max", "phi",
              "ratio_TminusT_times_Rm", "W_over_R_runmax")


@dataclass(eq=True)
class RunReport:
    scenario: str
    seed: int
    status: str
    T_est: float | None
    singularity_type: str
    sup_ratio: float | None
    blown_up: dict
    pinch_status: str
    violations_count: int
    violations: list
    max_principle: dict
    identity_residuals: dict
    constants: dict
    dilation: dict
    pic: dict
    invariant_failures: list
    warnings: list
    steps: int
    stored_states: int
    format_version: int = FORMAT_VERSION
    # excluded from the summary file so that reruns are byte identical
    wall_time: float = field(default=0.0, compare=False)

    @property
    def ok(self) -> bool:
        return self.violations_count == 0 and not self.invariant_failures


def _clean(x):
    """Replace non-finite floats by None and numpy scalars by Python numbers."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


# ---------------------------------------------------------------- pipeline

def _identity_residuals(traj: flow.Trajectory, cfg: ScenarioConfig) -> dict:
    spec = traj.states[0].spec
    h = cfg.pinch.fd_step
    out = {}
    if isinstance(spec, WarpedProductSphere):
        hw = min(h, 0.005 / traj.states[0].summary.Rm_max)
        # relative residual, limited by the O(ds^2) spatial error rather than by hw
        out["scalar_evolution"] = {"h": [hw], "max": flow.verify_scalar_evolution(traj, hw, max_samples=4),
                                   "order": None, "relative": True}
        return out
    if not is_homogeneous(spec) or len(spec.params()) == 0 or len(traj.states) < 3:
        return out
    hs = [h, h / 2, h / 4]
    checks = {
        "scalar_evolution": lambda hh: flow.verify_scalar_evolution(traj, hh, 6, h_ref=h),
        "ricci_evolution": lambda hh: flow.verify_ricci_evolution(traj, hh, 6, h_ref=h),
    }
    if traj.states[0].summary.R_min > 0:
        checks[f"f_evolution_gamma{cfg.pinch.gamma:g}"] = lambda hh: pinching.verify_evolution_identity(
            traj, cfg.pinch.gamma, hh, 6, h_ref=h)
    for name, fn in checks.items():
        res = [fn(hh) for hh in hs]
        # below 1e-11 the residual is rounding: the identity holds exactly on this flow
        orders = flow.convergence_order(res, hs) if min(res) > 1e-11 else None
        out[name] = {"h": hs, "residuals": res, "max": max(res),
                     "order": None if orders is None else orders[-1]}
    return out


def _pic_block(spec, cfg: ScenarioConfig, traj, report_blown) -> tuple[dict, list]:
    failures = []
    if not is_homogeneous(spec) or spec.dim < 4:
        return {"applicable": False}, failures
    m, rm = curvature_at(spec)
    d = decompose(rm, m)
    _, op = weitzenbock(rm, d.ric, m)
    iso = isotropic_min(rm, m, budget=1000, seed=cfg.seed)
    block = {"applicable": True, "isotropic_min_t0": iso, "weitzenbock_min_t0": float(op.eigenvalues()[0])}
    if spec.dim % 2 == 0:
        rep = pinching.pic_chain_check(d, op, cfg.pinch)
        block.update(precondition=rep.precondition, lhs=rep.lhs, rhs=rep.rhs, holds=rep.holds)
        if rep.holds is False:
            failures.append("pic chain inequality failed at t=0")
        if rep.precondition and iso > 1e-6 and traj.status == flow.SINGULAR:
            block["singular_pic_R_blowup"] = bool(report_blown["R"])
            if not report_blown["R"]:
                failures.append("singular PIC flow without scalar curvature blow-up")
    return block, failures


def run_scenario(cfg: ScenarioConfig, out_dir: str | os.PathLike | None = None, write: bool = True):
    """Integrate, classify, check pinching and dilation ratios, and emit outputs.

    Returns ``(report, traj, trace)``; ``trace`` is None when the scalar
    curvature is not positive.
    """
    start = time.perf_counter()
    traj = flow.integrate(cfg.geometry, cfg.t_end, cfg.controls)
    if not traj.states:
        raise ValueError(f"scenario {cfg.name}: initial data is degenerate")
    sing = flow.classify(traj)
    failures, warnings = [], list(traj.warnings)
    if traj.positivity_lost:
        failures.append("positive scalar curvature was not preserved")
    spec0 = traj.states[0].spec

    trace = None
    violations, max_principle, constants, dil = [], {}, {}, {"applicable": False}
    if traj.states[0].summary.R_min > 0:
        trace = pinching.build_trace(traj, cfg.pinch)
        prep = pinching.check_pinching_estimate(trace)
        violations = [{"t": v.t, "margin": v.margin, "form": v.form} for v in prep.violations]
        max_principle = {"flagged_samples": prep.flagged_samples, "ok": prep.max_principle_ok,
                         "worst_slope": prep.max_principle_worst, "worst_margin": prep.worst_margin}
        if not prep.max_principle_ok:
            failures.append("discrete maximum-principle signature failed")
        pc = trace.config
        constants = {k: {"value": getattr(pc, attr), "provenance": pc.provenance.get(k, "default")}
                     for k, attr in (("C1", "C1"), ("c1", "c1_cubic"), ("c2", "c2"), ("c3", "c3"), ("c4", "c4"))}
        constants["c1_remark"] = {"value": pinching.c1_remark(trace.n), "provenance": "metadata"}
        constants["c_shift"] = {"value": pc.c_shift, "provenance": "user" if pc.c_shift else "default"}
        pinch_status = "checked"
        if traj.status == flow.SINGULAR:
            seq = flow.dilate(traj)
            dr = pinching.dilation_ratios(seq, trace)
            anchor_err = max(abs(s.Rm_max - 1.0) for samples in seq.rescaled_samples
                             for sv, s in samples if sv == 0.0)
            dil = {"applicable": dr.applicable, "anchors": len(seq.anchors), "anchor_rm_error": anchor_err,
                   "C2": dr.C2, "all_hold": dr.all_hold, "trend_to_zero": dr.trend_to_zero,
                   "rows": [asdict(r) for r in dr.rows]}
            if not dr.all_hold:
                violations.extend({"t": r.t, "margin": r.rhs - r.E_over_W, "form": "dilation_ratio"}
                                  for r in dr.rows if not r.holds)
            if anchor_err > 1e-9:
                failures.append("anchor-normalised |Rm| differs from 1")
    else:
        pinch_status = "skipped_nonpositive_R"

    residuals = _identity_residuals(traj, cfg) if traj.status != flow.DEGENERATE else {}
    pic, pic_fail = _pic_block(spec0, cfg, traj, sing.blown_up)
    failures.extend(pic_fail)

    report = RunReport(
        scenario=cfg.name, seed=cfg.seed, status=traj.status, T_est=traj.T_est,
        singularity_type=sing.type, sup_ratio=sing.sup_ratio, blown_up=dict(sing.blown_up),
        pinch_status=pinch_status, violations_count=len(violations), violations=violations,
        max_principle=max_principle, identity_residuals=residuals, constants=constants,
        dilation=dil, pic=pic, invariant_failures=failures, warnings=warnings, steps=traj.steps,
        stored_states=len(traj.states), wall_time=0.0,
    )
    report = RunReport(**{f.name: _clean(getattr(report, f.name)) for f in fields(RunReport)})
    report.wall_time = time.perf_counter() - start
    if write:
        out_dir = out_dir or "."
        os.makedirs(out_dir, exist_ok=True)
        emit_csv(traj, trace, os.path.join(out_dir, cfg.csv_path))
        emit_summary(report, os.path.join(out_dir, cfg.summary_path), cfg)
    return report, traj, trace


# ---------------------------------------------------------------- output files

def _fmt(x) -> str:
    x = float(x)
    return repr(x) if math.isfinite(x) else "nan"


def emit_csv(traj: flow.Trajectory, trace, path) -> None:
    """One row per stored state; numbers in shortest round-trip form."""
    T = traj.T_est
    lines = [",".join(CSV_HEADER)]
    for k, st in enumerate(traj.states):
        s = st.summary
        f_max = trace.f_max[k] if trace is not None else math.nan
        phi = trace.phi[k] if trace is not None else math.nan
        wr = trace.running_max_W_over_R[k] if trace is not None else math.nan
        ratio = (T - st.t) * s.Rm_max if T is not None else math.nan
        lines.append(",".join(_fmt(v) for v in (st.t, s.R_min, s.R_max, s.E_max, s.W_max, s.Rm_max,
                                                f_max, phi, ratio, wr)))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def report_dict(report: RunReport) -> dict:
    return {f.name: getattr(report, f.name) for f in fields(RunReport) if f.name != "wall_time"}


def emit_summary(report: RunReport, path, cfg: ScenarioConfig | None = None) -> None:
    doc = report_dict(report)
    if cfg is not None:
        doc["controls"] = _clean(controls_dict(cfg.controls))
        doc["geometry"] = _clean(cfg.geometry_table)
        doc["t_end"] = cfg.t_end
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2, allow_nan=False)
        fh.write("\n")


def load_summary(path) -> RunReport:
    with open(path) as fh:
        doc = json.load(fh)
    names = {f.name for f in fields(RunReport)}
    return RunReport(**{k: v for k, v in doc.items() if k in names})


def write_index(entries: list[dict], path) -> None:
    """Aggregate index of a batch: one entry per scenario, in argument order."""
    doc = {"format_version": FORMAT_VERSION, "scenarios": entries,
           "all_ok": all(e["ok"] for e in entries)}
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2, allow_nan=False)
        fh.write("\n")
