"""Command-line front end: ``ricci-pinch {run,verify,decompose,calibrate}``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from importlib import resources

import numpy as np

from . import pinching, suites
from .config import ConfigError, load_config, parse_config
from .curvature import curvature_at, decompose, isotropic_min, weitzenbock
from .runner import run_scenario, write_index


def builtin_names() -> list[str]:
    files = resources.files("ricci_pinch").joinpath("scenarios")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".toml"))


def builtin_config(name: str):
    path = resources.files("ricci_pinch").joinpath("scenarios", f"{name}.toml")
    return parse_config(path.read_bytes(), source=f"builtin:{name}")


def _resolve(arg: str):
    if arg.startswith("builtin:"):
        return builtin_config(arg.split(":", 1)[1])
    return load_config(arg)


def _run_one(job):
    cfg, out_dir, strict = job
    report, _, _ = run_scenario(cfg, out_dir)
    ok = report.ok and not (strict and report.warnings)
    return {"scenario": report.scenario, "summary": cfg.summary_path, "csv": cfg.csv_path,
            "status": report.status, "type": report.singularity_type,
            "violations": report.violations_count, "invariant_failures": len(report.invariant_failures),
            "warnings": len(report.warnings), "ok": ok}


def cmd_run(args) -> int:
    targets = args.configs
    if targets == ["all"]:
        targets = [f"builtin:{n}" for n in builtin_names()]
    cfgs = []
    for t in targets:
        try:
            cfg = _resolve(t)
        except ConfigError as exc:
            print(f"{t}: {exc}", file=sys.stderr)
            return 2
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        cfgs.append(cfg)
    os.makedirs(args.out_dir, exist_ok=True)
    jobs = [(c, args.out_dir, args.strict) for c in cfgs]
    if args.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.threads) as pool:
            entries = list(pool.map(_run_one, jobs))
    else:
        entries = [_run_one(j) for j in jobs]
    for e in entries:
        flag = "ok" if e["ok"] else "FAIL"
        print(f"{e['scenario']:24s} {e['status']:15s} {e['type']:14s} violations={e['violations']} {flag}")
    write_index(entries, os.path.join(args.out_dir, "index.json"))
    return 0 if all(e["ok"] for e in entries) else 1


def cmd_verify(args) -> int:
    seed = 0 if args.seed is None else args.seed
    count = 100 if args.quick else 1000
    results, ok = {}, True

    def line(name, passed, detail):
        nonlocal ok
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")

    for n in (4, 5, 6):
        r = suites.decomposition_suite(n, count, seed + n)
        results[f"decomposition_n{n}"] = r
        line(f"decomposition n={n}", max(r.values()) <= 1e-10, f"max residual {max(r.values()):.2e}")
    kn = suites.kn_norm_suite()
    results["kn_norm"] = kn
    line("<g o g, g o g> = 8n(n-1)", max(kn.values()) <= 1e-12, f"max error {max(kn.values()):.1e}")
    q = suites.q_vanishing_suite(range(3, 7), count // 10, seed)
    results["q_vanishing"] = q
    line("Q = 0 on Einstein inputs", q <= 1e-10, f"max |Q|/R^4 {q:.1e}")
    for n in (4, 5, 6):
        r = suites.rm_rcrc_suite(n, count, seed + 10 + n)
        results[f"rm_rcrc_n{n}"] = r
        line(f"Rm(Rc,Rc) identity n={n}", r <= 1e-9, f"max residual {r:.1e}")
    for n in range(3, 7):
        r = suites.cubic_suite(n, 10 * count, seed + 20 + n)
        results[f"cubic_n{n}"] = r
        line(f"cubic constant n={n}", 0.99 <= r["fraction"] <= 1.0 and r["extremal_error"] <= 1e-9,
             f"c1_emp/c1 = {r['fraction']:.5f}")
    r = suites.pic_equivalence_suite(count, seed + 30)
    results["pic_equivalence"] = r
    line("PIC <-> Weitzenbock (n=4)", r["disagree"] == 0,
         f"{r['agree']} agree, {r['disagree']} disagree, {r['inconclusive']} inconclusive")
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "verify.json"), "w") as fh:
        json.dump(results, fh, indent=2, default=float)
        fh.write("\n")
    return 0 if ok else 1


def cmd_decompose(args) -> int:
    try:
        cfg = _resolve(args.config)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    spec = cfg.geometry
    point = args.point if args.point is not None else 0
    m, rm = curvature_at(spec, point)
    d = decompose(rm, m)
    _, op = weitzenbock(rm, d.ric, m)
    out = {"scenario": cfg.name, "dim": rm.n, "point": point, "R": d.R, "E_norm": d.norm_E,
           "W_norm": d.norm_W, "Rm_norm": d.norm_Rm,
           "ricci_eigenvalues": np.linalg.eigvalsh(d.ric.comps).tolist(),
           "weitzenbock_eigenvalues": op.eigenvalues().tolist()}
    if rm.n >= 4:
        seed = cfg.seed if args.seed is None else args.seed
        out["isotropic_min"] = isotropic_min(rm, m, budget=1000, seed=seed)
        out["seed"] = seed
    print(json.dumps(out, indent=2))
    return 0


def cmd_calibrate(args) -> int:
    seed = 0 if args.seed is None else args.seed
    table = {}
    for n in args.dims:
        c2 = pinching.calibrate_c2(n, samples=args.samples, seed=seed + n)
        entry = {"c1_sharp": pinching.c1_sharp(n), "c2_calibrated": c2, "c2_frozen": pinching.C2_SHARP[n],
                 "c2_order": pinching.c2_order(n), "samples": args.samples}
        if n % 2 == 0 and n >= 4:
            entry["pic"] = pinching.calibrate_pic(n, args.pic_samples, seed + 100 + n)
        table[n] = entry
        print(f"n={n}: c2 calibrated {c2:.10f} (frozen {pinching.C2_SHARP[n]:.10f})")
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "calibration.json"), "w") as fh:
        json.dump(table, fh, indent=2)
        fh.write("\n")
    worst = max(abs(e["c2_calibrated"] - e["c2_frozen"]) for e in table.values())
    return 0 if worst <= 1e-6 else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--out-dir", default="out", help="directory for output files")
    common.add_argument("--threads", type=int, default=1, help="worker processes for batches")
    common.add_argument("--strict", action="store_true", help="treat warnings as failures")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="ricci-pinch", description="Ricci-flow curvature pinching laboratory")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="run scenario configs (or 'all' built-ins)")
    r.add_argument("configs", nargs="+", help="config files, builtin:NAME, or 'all'")
    r.set_defaults(func=cmd_run)
    v = sub.add_parser("verify", parents=[common], help="identity and property suites (no flow)")
    v.add_argument("--quick", action="store_true", help="10x fewer random samples")
    v.set_defaults(func=cmd_verify)
    d = sub.add_parser("decompose", parents=[common], help="curvature report for one geometry")
    d.add_argument("config")
    d.add_argument("--point", type=int, default=None, help="grid index for warped presets")
    d.set_defaults(func=cmd_decompose)
    c = sub.add_parser("calibrate", parents=[common], help="recompute the pinching constants")
    c.add_argument("--dims", type=int, nargs="+", default=[3, 4, 5, 6])
    c.add_argument("--samples", type=int, default=100_000)
    c.add_argument("--pic-samples", type=int, default=20_000)
    c.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
