"""Pinching of the traceless Ricci tensor against scalar curvature and Weyl.

With ``f = |E|^2 / R^gamma`` the quantities tracked along a flow are ``f``,
the running maximum ``M(t) = max |W|/R`` and the barrier

    Phi(t) = C1/2 + sqrt(C1^2/4 - (1/(n(n-1)) - c2 M(t)))

which bounds ``sqrt(f)`` for ``gamma = 2`` by the maximum principle.  Since
``Phi <= C1 + sqrt(c2 M)`` the same run also checks
``|E|/R <= C1 + sqrt(c2) sqrt(M)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .curvature import CurvDecomp, TwoFormOperator, decompose, weitzenbock
from .flow import (DilationSequence, Trajectory, _check_samples, _shifted, pointwise,
                   ricci_gradient_terms)
from .sampling import random_curvature, random_traceless_heavy, random_weyl, weyl_part
from .tensors import (AlgCurvTensor, MetricPoint, Sym2Tensor, cube_trace, curv_apply,
                      kn_product_array, sym_inner)

GAMMA_MAX = 2.0

# sharp constant in |W(E, E)| <= c2 |W| |E|^2: max over unit trace-free diagonal E
# of |Weyl(E o E)| / 4, from a 2e4-spectrum search per n polished by Nelder-Mead
C2_SHARP = {
    3: 0.0,
    4: math.sqrt(1 / 3),
    5: math.sqrt(25 / 72),
    6: math.sqrt(2 / 5),
    7: math.sqrt(49 / 120),
    8: math.sqrt(3 / 7),
}


class PositiveScalarError(ValueError):
    """Scalar curvature is not strictly positive where a formula divides by it."""


def c1_sharp(n: int) -> float:
    """Sharp constant in ``|2 E^3/(n-2)| <= c1 |E|^3`` for trace-free ``E``."""
    return 2.0 / math.sqrt(n * (n - 1))


def c1_remark(n: int) -> float:
    """Asymptotic order of c1 quoted in the literature; metadata only."""
    return 2.0 / (n * (n - 2))


def c2_order(n: int) -> float:
    return float(n * (n - 1) * (n - 2) * (n - 3))


def pic_constants(n: int) -> tuple[float, float]:
    """``(c3, c4)`` with ``|W| <= c3 |E| + c4 R`` whenever the Weitzenbock operator is >= 0.

    ``P = R(n-2)/(n(n-1)) g o g + (n-4)/(n-2) E o g - 2W`` acts on the
    ``N = n(n-1)/2`` dimensional space of 2-forms with trace ``(n-2) R``.
    A positive semidefinite matrix with trace tau has Frobenius norm at most
    tau, so its trace-free part has norm at most ``tau sqrt(1 - 1/N)``.  That
    part is the orthogonal sum of the E and W pieces and has squared norm
    ``(n-4)^2/(n-2) |E|^2 + |W|^2``, which gives ``c3 = 0``.
    """
    N = n * (n - 1) // 2
    return 0.0, (n - 2) * math.sqrt(1.0 - 1.0 / N)


@dataclass(frozen=True)
class PinchConfig:
    gamma: float = 2.0
    c_shift: float = 0.0
    C1: float | None = None
    c2: float | None = None
    c1_cubic: float | None = None
    c3: float | None = None
    c4: float | None = None
    fd_step: float = 1e-3
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (0 < self.gamma <= GAMMA_MAX):
            raise ValueError(f"gamma must lie in (0, {GAMMA_MAX}]")
        if not (math.isfinite(self.c_shift) and self.c_shift >= 0):
            raise ValueError("c_shift must be finite and >= 0")
        if not (math.isfinite(self.fd_step) and self.fd_step > 0):
            raise ValueError("fd_step must be positive")
        for name in ("C1", "c1_cubic"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive")
        for name in ("c2", "c3", "c4"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be >= 0")

    def resolved(self, n: int, f0_max: float) -> PinchConfig:
        """Fill unset constants with defaults for dimension ``n``.

        ``f0_max`` is the initial maximum of ``|E|^2/R^2``; the result satisfies
        ``C1 >= c1`` and ``C1^2 >= 4 f0_max``.
        """
        prov = dict(self.provenance)
        c1 = self.c1_cubic if self.c1_cubic is not None else c1_sharp(n)
        prov.setdefault("c1", "user" if self.c1_cubic is not None else "default")
        c2 = self.c2 if self.c2 is not None else C2_SHARP[n]
        prov.setdefault("c2", "user" if self.c2 is not None else "calibrated")
        dc3, dc4 = pic_constants(n)
        c3 = self.c3 if self.c3 is not None else dc3
        c4 = self.c4 if self.c4 is not None else dc4
        prov.setdefault("c3", "user" if self.c3 is not None else "default")
        prov.setdefault("c4", "user" if self.c4 is not None else "default")
        if self.C1 is None:
            C1 = max(c1, 2.0 * math.sqrt(max(f0_max, 0.0)))
            prov.setdefault("C1", "default")
        else:
            C1 = self.C1
            prov.setdefault("C1", "user")
        if C1 < c1 or C1 * C1 < 4.0 * f0_max * (1 - 1e-12):
            raise ValueError(f"C1 = {C1} violates C1 >= c1 = {c1} or C1^2 >= 4 max f(0) = {4 * f0_max}")
        return replace(self, C1=C1, c2=c2, c1_cubic=c1, c3=c3, c4=c4, provenance=prov)


@dataclass(frozen=True)
class PinchSample:
    t: float
    R: float
    E: float
    W: float
    f: float
    E_cubed: float
    W_EE: float
    Q: float
    rm_rcrc: float
    W_RcRc: float


@dataclass(eq=False)
class PinchTrace:
    n: int
    samples: list
    t: np.ndarray
    f_max: np.ndarray
    ratio_max: np.ndarray  # max |E|/R
    W_over_R_max: np.ndarray
    running_max_W_over_R: np.ndarray
    phi: np.ndarray
    phi_flagged: np.ndarray
    config: PinchConfig
    violations: list = field(default_factory=list)


# ---------------------------------------------------------------- scalar formulas

def _require_positive(R):
    if np.any(np.asarray(R) <= 0):
        raise PositiveScalarError("scalar curvature must be positive")


def f_gamma(E2: float, R: float, gamma: float, Rc2: float | None = None, n: int | None = None) -> float:
    """``|E|^2 / R^gamma``; with ``Rc2`` and ``n`` also checks ``|Rc|^2/R^g - R^(2-g)/n``."""
    _require_positive(R)
    f = E2 / R**gamma
    if Rc2 is not None:
        alt = Rc2 / R**gamma - R ** (2 - gamma) / n
        if abs(alt - f) > 1e-12 * max(1.0, abs(Rc2 / R**gamma)):
            raise ArithmeticError(f"f identity mismatch: {f} vs {alt}")
    return f


def q_from_scalars(Rc2: float, Rc3: float, R: float, n: int) -> float:
    return Rc2**2 - R / (n - 2) * ((2 * n - 1) / (n - 1) * R * Rc2 - 2 * Rc3 - R**3 / (n - 1))


def q_quantity(ric: Sym2Tensor, R: float, m: MetricPoint) -> float:
    """``Q = |Rc|^4 - R/(n-2) ((2n-1)/(n-1) R |Rc|^2 - 2 Rc^3 - R^3/(n-1))``."""
    return q_from_scalars(sym_inner(ric, ric, m), cube_trace(ric, m), R, ric.n)


def rm_rcrc_identity(decomp: CurvDecomp, rm: AlgCurvTensor, m: MetricPoint) -> float:
    """Residual of ``Rm(Rc,Rc) = ((2n-1)/(n-1) |Rc|^2 R - 2 Rc^3 - R^3/(n-1))/(n-2) + W(Rc,Rc)``."""
    n = rm.n
    ric, R = decomp.ric, decomp.R
    lhs = curv_apply(rm, ric, ric, m)
    Rc2, Rc3 = sym_inner(ric, ric, m), cube_trace(ric, m)
    rhs = ((2 * n - 1) / (n - 1) * Rc2 * R - 2 * Rc3 - R**3 / (n - 1)) / (n - 2) \
        + curv_apply(decomp.W, ric, ric, m)
    return abs(lhs - rhs) / (1.0 + abs(lhs))


def reaction_terms_gamma2(s: PinchSample, n: int) -> float:
    """``4R [-f^2 - f/(n(n-1)) - 2/(n-2) E^3/R^3 + W(E,E)/R^3]`` for ``f = |E|^2/R^2``."""
    if n < 3:
        raise ValueError("n must be >= 3")
    _require_positive(s.R)
    f = s.E**2 / s.R**2
    R3 = s.R**3
    return 4 * s.R * (-f * f - f / (n * (n - 1)) - 2 / (n - 2) * s.E_cubed / R3 + s.W_EE / R3)


def reaction_general(s: PinchSample, n: int, gamma: float, Rc2: float, grad_ric2: float = 0.0) -> float:
    """Time derivative of ``f = |E|^2/R^gamma`` at a point where ``R`` is locally constant.

    ``2 R^(-1-g) [(2-g)|Rc|^2 |E|^2 - 2Q + 2R W(Rc,Rc)] - 2|nabla Rc|^2 / R^g``.
    The last term is what remains of the gradient terms when ``nabla R = 0``.
    """
    _require_positive(s.R)
    R = s.R
    bracket = (2 - gamma) * Rc2 * s.E**2 - 2 * s.Q + 2 * R * s.W_RcRc
    return 2 * R ** (-1 - gamma) * bracket - 2 * grad_ric2 / R**gamma


def samples_from_pointwise(pw: dict, t: float, n: int, gamma: float) -> list[PinchSample]:
    out = []
    for k in range(len(pw["R"])):
        R = float(pw["R"][k])
        E = float(pw["E"][k])
        out.append(PinchSample(
            t=t, R=R, E=E, W=float(pw["W"][k]), f=E * E / R**gamma if R > 0 else float("nan"),
            E_cubed=float(pw["E3"][k]), W_EE=float(pw["W_EE"][k]),
            Q=q_from_scalars(float(pw["Rc2"][k]), float(pw["Rc3"][k]), R, n),
            rm_rcrc=float(pw["rm_rcrc"][k]), W_RcRc=float(pw["W_EE"][k]),
        ))
    return out


def verify_evolution_identity(traj: Trajectory, gamma: float, h: float, max_samples: int = 12,
                              h_ref: float | None = None) -> float:
    """Max ``|FD_t f - reaction(gamma)|`` over stored samples of a homogeneous flow."""
    if not (0 < gamma <= GAMMA_MAX):
        raise ValueError(f"gamma must lie in (0, {GAMMA_MAX}]")
    worst = 0.0
    for st in _check_samples(traj, h_ref or h, max_samples):
        if len(st.spec.params()) == 0:
            continue
        n = st.spec.dim
        fp = _f_of(pointwise(_shifted(st, h)), gamma)
        fn = _f_of(pointwise(_shifted(st, -h)), gamma)
        pw = pointwise(st.spec)
        s = samples_from_pointwise(pw, st.t, n, gamma)[0]
        _, grad2 = ricci_gradient_terms(st.spec)
        rhs = reaction_general(s, n, gamma, float(pw["Rc2"][0]), grad2)
        worst = max(worst, abs((fp - fn) / (2 * h) - rhs))
    return worst


def _f_of(pw, gamma):
    R = float(pw["R"][0])
    _require_positive(R)
    return float(pw["E"][0]) ** 2 / R**gamma


# ---------------------------------------------------------------- barrier

def phi_radicand(C1: float, c2: float, n: int, max_W_over_R: float) -> float:
    return C1 * C1 / 4 - (1.0 / (n * (n - 1)) - c2 * max_W_over_R)


def phi_bound(C1: float, c2: float, n: int, max_W_over_R: float) -> float:
    """Barrier ``C1/2 + sqrt(C1^2/4 - (1/(n(n-1)) - c2 M))``.

    A negative radicand can only come from ``C1 < c1``; then ``C1/2`` is
    returned (see :func:`phi_radicand` to detect it).
    """
    if not C1 > 0:
        raise ValueError("C1 must be positive")
    rad = phi_radicand(C1, c2, n, max_W_over_R)
    return C1 / 2 + math.sqrt(rad) if rad >= 0 else C1 / 2


def build_trace(traj: Trajectory, config: PinchConfig | None = None) -> PinchTrace:
    """Evaluate ``f = |E|^2/R^2``, ``|W|/R`` and the barrier at every stored state."""
    config = config or PinchConfig()
    if not traj.states:
        raise ValueError("empty trajectory")
    n = traj.states[0].spec.dim
    rows = []
    for st in traj.states:
        pw = pointwise(st.spec)
        R = pw["R"]
        _require_positive(R)
        f = pw["E"] ** 2 / R**2
        k = int(np.argmax(f))
        sample = samples_from_pointwise({key: v[k:k + 1] for key, v in pw.items()}, st.t, n, config.gamma)[0]
        rows.append((st.t, float(f[k]), float(np.max(pw["E"] / R)), float(np.max(pw["W"] / R)), sample))
    t = np.array([r[0] for r in rows])
    f_max = np.array([r[1] for r in rows])
    cfg = config.resolved(n, float(f_max[0]))
    wr = np.array([r[3] for r in rows])
    run = np.maximum.accumulate(wr)
    phi = np.array([phi_bound(cfg.C1, cfg.c2, n, m) for m in run])
    flagged = np.array([phi_radicand(cfg.C1, cfg.c2, n, m) < 0 for m in run])
    return PinchTrace(n, [r[4] for r in rows], t, f_max, np.array([r[2] for r in rows]), wr, run, phi,
                      flagged, cfg)


@dataclass(frozen=True)
class Violation:
    t: float
    margin: float
    form: str


@dataclass(frozen=True)
class PinchReport:
    violations: list
    flagged_samples: int
    max_principle_ok: bool
    max_principle_worst: float
    worst_margin: float


def check_pinching_estimate(trace: PinchTrace, rel_tol: float = 1e-12, near: float = 0.999999,
                            slope_tol: float = 1e-6) -> PinchReport:
    """Check ``sqrt(f) <= Phi`` and ``|E|/R <= C1 + sqrt(c2 max |W|/R)`` at every sample.

    Samples with ``sqrt(f) >= near * Phi`` must also show a forward
    difference of ``max f`` no larger than ``slope_tol``.
    """
    if len(trace.t) == 0:
        raise ValueError("empty trace")
    cfg = trace.config
    sq = np.sqrt(trace.f_max)
    bound_rhs = cfg.C1 + np.sqrt(cfg.c2 * trace.running_max_W_over_R)
    violations = []
    for k in range(len(trace.t)):
        m1 = trace.phi[k] - sq[k]
        if m1 < -rel_tol * max(1.0, trace.phi[k]):
            violations.append(Violation(float(trace.t[k]), float(m1), "sqrt_f_le_phi"))
        m2 = bound_rhs[k] - trace.ratio_max[k]
        if m2 < -rel_tol * max(1.0, bound_rhs[k]):
            violations.append(Violation(float(trace.t[k]), float(m2), "E_over_R"))
    near_idx = np.nonzero(sq >= near * trace.phi)[0]
    worst_slope = -math.inf
    for k in near_idx:
        if k + 1 < len(trace.t):
            slope = (trace.f_max[k + 1] - trace.f_max[k]) / (trace.t[k + 1] - trace.t[k])
            worst_slope = max(worst_slope, slope)
    ok = worst_slope <= slope_tol
    trace.violations = [(v.t, v.margin) for v in violations]
    return PinchReport(violations, int(len(near_idx)), bool(ok), float(worst_slope),
                       float(np.min(trace.phi - sq)))


# ---------------------------------------------------------------- cubic constants

def cubic_ratios(Es, Ws=None, n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Ratios ``|2E^3/(n-2)|/|E|^3`` and ``|W(E,E)|/(|W||E|^2)`` (orthonormal frame)."""
    r1, r2 = [], []
    for k, E in enumerate(Es):
        n = E.shape[0]
        nE = np.linalg.norm(E)
        if nE <= 1e-300:
            continue
        r1.append(abs(2 * np.trace(E @ E @ E) / (n - 2)) / nE**3)
        if Ws is not None:
            W = Ws[k]
            nW = np.linalg.norm(W)
            if nW > 1e-300:
                r2.append(abs(np.einsum("ijkl,ik,jl->", W, E, E)) / (nW * nE**2))
    return np.array(r1), np.array(r2)


def cubic_bounds(Es, Ws, n: int, c2: float | None = None) -> tuple[float, float]:
    """Empirical ``(c1, c2)`` over the samples; asserts they respect the sharp constants."""
    r1, r2 = cubic_ratios(Es, Ws, n)
    c1_emp = float(r1.max()) if len(r1) else 0.0
    c2_emp = float(r2.max()) if len(r2) else 0.0
    c2_cfg = C2_SHARP[n] if c2 is None else c2
    if c1_emp > c1_sharp(n) + 1e-9:
        raise AssertionError(f"cubic ratio {c1_emp} exceeds sharp bound {c1_sharp(n)}")
    if c2_emp > c2_cfg + 1e-9:
        raise AssertionError(f"Weyl ratio {c2_emp} exceeds configured c2 {c2_cfg}")
    return c1_emp, c2_emp


def sample_cubic_inputs(n: int, count: int, seed: int):
    rng = np.random.default_rng(seed)
    Es = [random_traceless_heavy(rng, n) for _ in range(count)]
    Ws = [random_weyl(rng, n) for _ in range(count)] if n >= 4 else None
    return Es, Ws


def extremal_E(n: int) -> np.ndarray:
    """``diag(1, ..., 1, -(n-1))``: attains the sharp cubic bound."""
    e = np.ones(n)
    e[-1] = -(n - 1)
    return np.diag(e)


def weyl_ee_ratio(e: np.ndarray) -> float:
    """``max_W |W(E,E)|/(|W||E|^2) = |Weyl(E o E)|/4`` for ``E = diag(e)`` trace-free."""
    e = np.asarray(e, dtype=float)
    e = e - e.mean()
    nr = np.linalg.norm(e)
    if nr == 0:
        return 0.0
    E = np.diag(e / nr)
    return 0.25 * float(np.linalg.norm(weyl_part(kn_product_array(E, E))))


def calibrate_c2(n: int, samples: int = 100_000, seed: int = 0, polish: int = 10) -> float:
    """Search for the sharp Weyl constant: random spectra then Nelder-Mead polish."""
    if n == 3:
        return 0.0
    rng = np.random.default_rng(seed)
    X = rng.standard_t(2, (samples, n))
    vals = np.array([weyl_ee_ratio(x) for x in X])
    best = float(vals.max())
    for i in np.argsort(vals)[-polish:]:
        res = minimize(lambda x: -weyl_ee_ratio(x), X[i], method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 20000})
        best = max(best, float(-res.fun))
    return best


def calibrate_pic(n: int, samples: int, seed: int) -> dict:
    """Empirical max of ``|W|/R`` over random curvature tensors with ``P >= 0`` and ``R > 0``."""
    rng = np.random.default_rng(seed)
    m = MetricPoint.euclidean(n)
    best, kept = 0.0, 0
    for _ in range(samples):
        rm = AlgCurvTensor(random_curvature(rng, n), check=False)
        d = decompose(rm, m)
        _, op = weitzenbock(rm, d.ric, m)
        if d.R <= 0 or op.eigenvalues()[0] < 0:
            continue
        kept += 1
        best = max(best, d.norm_W / d.R)
    return {"kept": kept, "c4_emp": best, "c4_analytic": pic_constants(n)[1]}


# ---------------------------------------------------------------- PIC chain

@dataclass(frozen=True)
class PicReport:
    precondition: bool
    lhs: float
    rhs: float
    holds: bool | None


def pic_chain_check(decomp: CurvDecomp, op: TwoFormOperator, config: PinchConfig,
                    tol: float = 1e-10) -> PicReport:
    """``|W|/R <= c3 |E|/R + c4`` for curvature with positive semidefinite Weitzenbock operator."""
    n = op.n
    if n < 4 or n % 2:
        raise ValueError("the PIC chain needs even n >= 4")
    c3, c4 = pic_constants(n)
    c3 = config.c3 if config.c3 is not None else c3
    c4 = config.c4 if config.c4 is not None else c4
    scale = max(1.0, float(np.max(np.abs(op.matrix))))
    pre = bool(op.eigenvalues()[0] >= -tol * scale) and decomp.R > 0
    if not pre:
        return PicReport(False, float("nan"), float("nan"), None)
    lhs = decomp.norm_W / decomp.R
    rhs = c3 * decomp.norm_E / decomp.R + c4
    return PicReport(True, lhs, rhs, bool(lhs <= rhs * (1 + tol)))


# ---------------------------------------------------------------- dilation ratios

@dataclass(frozen=True)
class DilationRatio:
    t: float
    E_over_W: float
    R_over_W: float
    rhs: float
    holds: bool


@dataclass(frozen=True)
class DilationRatioReport:
    applicable: bool
    C2: float
    rows: list
    all_hold: bool
    trend_to_zero: bool | None


def dilation_ratios(seq: DilationSequence, trace: PinchTrace) -> DilationRatioReport:
    """Check ``|E|/|W|_max <= C1 R/|W|_max + C2 sqrt(R/|W|_max)`` at every anchor.

    ``C2 = sqrt(c2) max(1, sup_i sqrt(M_i R_i/|W|_max,i))`` with ``M_i`` the
    running maximum of ``|W|/R`` at the anchor time.  Ratios are scale
    invariant, so they hold equally for the rescaled flows.
    """
    cfg = trace.config
    idx = [(a, r) for a, r in zip(seq.anchors, seq.ratios) if r is not None]
    if not idx:
        return DilationRatioReport(False, float("nan"), [], True, None)
    ks = [int(np.searchsorted(trace.t, a.t)) for a, _ in idx]
    sup = max(math.sqrt(trace.running_max_W_over_R[k] * r[1]) for k, (_, r) in zip(ks, idx))
    C2 = math.sqrt(cfg.c2) * max(1.0, sup)
    rows = []
    for (a, (ew, rw)) in idx:
        rhs = cfg.C1 * rw + C2 * math.sqrt(rw)
        rows.append(DilationRatio(a.t, ew, rw, rhs, bool(ew <= rhs * (1 + 1e-12))))
    first, last = rows[0], rows[-1]
    trend = bool(last.E_over_W < 0.5 * first.E_over_W and last.R_over_W < 0.5 * first.R_over_W) \
        if len(rows) > 1 else None
    return DilationRatioReport(True, C2, rows, all(r.holds for r in rows), trend)
