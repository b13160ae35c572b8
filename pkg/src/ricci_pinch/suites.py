"""Randomised identity and property suites behind ``ricci-pinch verify``."""
from __future__ import annotations

import numpy as np

from . import pinching
from .curvature import decompose, decomposition_residuals, isotropic_min, weitzenbock, weyl_coordinate_formula
from .sampling import random_curvature, random_einstein
from .tensors import AlgCurvTensor, MetricPoint, Sym2Tensor, curv_inner, kn_product


def decomposition_suite(n: int, count: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    m = MetricPoint.euclidean(n)
    worst = {"reconstruction": 0.0, "orthogonality": 0.0, "weyl_trace": 0.0, "coordinate_weyl": 0.0}
    for _ in range(count):
        rm = AlgCurvTensor(random_curvature(rng, n))
        d = decompose(rm, m)
        res = decomposition_residuals(rm, m, d)
        for k in ("reconstruction", "orthogonality", "weyl_trace"):
            worst[k] = max(worst[k], res[k])
        Wc = weyl_coordinate_formula(rm, d.ric, d.R, m)
        scale = max(1.0, float(np.max(np.abs(rm.comps))))
        worst["coordinate_weyl"] = max(worst["coordinate_weyl"],
                                       float(np.max(np.abs(Wc.comps - d.W.comps))) / scale)
    return worst


def kn_norm_suite(dims=range(3, 7)) -> dict:
    out = {}
    for n in dims:
        m = MetricPoint.euclidean(n)
        g = Sym2Tensor.identity(n)
        gg = kn_product(g, g)
        out[n] = abs(curv_inner(gg, gg, m) - 8 * n * (n - 1))
    return out


def q_vanishing_suite(dims, count: int, seed: int) -> float:
    """Largest ``|Q| / R^4`` over random Einstein curvature tensors."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in dims:
        m = MetricPoint.euclidean(n)
        for _ in range(count):
            rm = AlgCurvTensor(random_einstein(rng, n), check=False)
            d = decompose(rm, m)
            worst = max(worst, abs(pinching.q_quantity(d.ric, d.R, m)) / d.R**4)
    return worst


def rm_rcrc_suite(n: int, count: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    m = MetricPoint.euclidean(n)
    worst = 0.0
    for _ in range(count):
        rm = AlgCurvTensor(random_curvature(rng, n))
        worst = max(worst, pinching.rm_rcrc_identity(decompose(rm, m), rm, m))
    return worst


def cubic_suite(n: int, count: int, seed: int) -> dict:
    Es, Ws = pinching.sample_cubic_inputs(n, count, seed)
    c1_emp, c2_emp = pinching.cubic_bounds(Es, Ws, n)
    sharp = pinching.c1_sharp(n)
    ext, _ = pinching.cubic_ratios([pinching.extremal_E(n)])
    return {"c1_emp": c1_emp, "c1_sharp": sharp, "fraction": c1_emp / sharp,
            "extremal_error": abs(float(ext[0]) - sharp), "c2_emp": c2_emp, "c2": pinching.C2_SHARP[n]}


def pic_equivalence_suite(count: int, seed: int, budget: int = 1000, conclusive: float = 1e-6) -> dict:
    """Sign agreement of the isotropic minimum and the smallest Weitzenbock eigenvalue (n = 4)."""
    rng = np.random.default_rng(seed)
    m = MetricPoint.euclidean(4)
    agree = disagree = inconclusive = positive = 0
    cases = []
    for k in range(count):
        rm = AlgCurvTensor(random_curvature(rng, 4))
        d = decompose(rm, m)
        _, op = weitzenbock(rm, d.ric, m)
        lam = float(op.eigenvalues()[0])
        iso = isotropic_min(rm, m, budget=budget, seed=seed * 100_003 + k)
        if abs(iso) <= conclusive:
            inconclusive += 1
            continue
        if (iso > 0) == (lam > 0):
            agree += 1
        else:
            disagree += 1
            cases.append({"index": k, "isotropic_min": iso, "weitzenbock_min": lam})
        positive += iso > 0
    return {"agree": agree, "disagree": disagree, "inconclusive": inconclusive, "positive": positive,
            "discrepancies": cases}
