"""Ricci flow ``dg/dt = -2 Rc`` on geometry presets.

Homogeneous presets reduce to ODEs for a parameter vector and are
integrated with step-doubling RK4.  The warped sphere is a 1D PDE stepped by
forward Euler in the arclength gauge (see :mod:`ricci_pinch.warped`).
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from . import lie, warped
from .curvature import curvature_at, decompose, interior_indices
from .geometry import CoordinateChart, MilnorFrame3D, WarpedProductSphere, is_homogeneous
from .tensors import cube_trace, curv_apply, ricci_contraction, sym_inner

log = logging.getLogger(__name__)

SINGULAR = "Singular"
HORIZON = "HorizonReached"
DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class FlowControls:
    dt_init: float = 1e-3
    safety: float = 0.05
    dt_min: float = 1e-12
    max_steps: int = 200_000
    rtol: float = 1e-8
    # stop once |Rm|_max has grown by this factor
    blowup_ratio: float = 1e4
    # forward-Euler diffusion limit dt <= cfl * ds^2 for the warped preset
    cfl: float = 0.05
    max_states: int = 10_000
    keep_tail: int = 100

    def __post_init__(self):
        for name in ("dt_init", "safety", "dt_min", "rtol", "blowup_ratio", "cfl"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and positive")
        if self.max_steps < 1 or self.max_states < self.keep_tail + 2:
            raise ValueError("max_steps must be >= 1 and max_states > keep_tail + 1")


@dataclass(frozen=True)
class Summary:
    R_min: float
    R_max: float
    E_max: float
    W_max: float
    Rm_max: float
    argmax: int
    # values at the point where |Rm| is largest
    R_at: float
    E_at: float
    W_at: float


@dataclass(frozen=True, eq=False)
class FlowState:
    t: float
    spec: object
    summary: Summary

    @property
    def positive(self) -> bool:
        return self.summary.R_min > 0


@dataclass(eq=False)
class Trajectory:
    states: list
    status: str
    T_est: float | None = None
    steps: int = 0
    warnings: list = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s.summary, name) for s in self.states])

    @property
    def positivity_lost(self) -> bool:
        return bool(self.states) and self.states[0].positive and not all(s.positive for s in self.states)


@dataclass(frozen=True)
class SingularityReport:
    T_est: float | None
    type: str
    sup_ratio: float
    blown_up: dict
    decades: float


@dataclass(frozen=True)
class Anchor:
    t: float
    point_index: int
    K: float
    state_index: int


@dataclass(eq=False)
class DilationSequence:
    anchors: list
    # per anchor: list of (s, rescaled Summary)
    rescaled_samples: list
    # per anchor: (|E|/|W|_max, R/|W|_max), or None when |W|_max = 0
    ratios: list

    @property
    def applicable(self) -> bool:
        return any(r is not None for r in self.ratios)


# ---------------------------------------------------------------- pointwise data

def pointwise(spec) -> dict[str, np.ndarray]:
    """Curvature scalars at every sample point of a preset.

    Keys: R, E, W, Rm (norms), Rc2 = |Rc|^2, Rc3, E3, W_EE = W(E, E),
    rm_rcrc = Rm(Rc, Rc).  ``W(Rc, Rc) = W(E, E)`` since W is trace free.
    """
    if isinstance(spec, WarpedProductSphere):
        return warped.point_invariants(spec)
    if isinstance(spec, CoordinateChart):
        points = interior_indices(spec)
    else:
        points = [0]
    rows = []
    for p in points:
        m, rm = curvature_at(spec, p)
        d = decompose(rm, m)
        rows.append((
            d.R, d.norm_E, d.norm_W, d.norm_Rm, sym_inner(d.ric, d.ric, m), cube_trace(d.ric, m),
            cube_trace(d.E, m), curv_apply(d.W, d.E, d.E, m), curv_apply(rm, d.ric, d.ric, m),
        ))
    cols = np.array(rows).T
    keys = ("R", "E", "W", "Rm", "Rc2", "Rc3", "E3", "W_EE", "rm_rcrc")
    return dict(zip(keys, cols))


def summarize(spec) -> Summary:
    return _summary_from(pointwise(spec))


def _summary_from(pw) -> Summary:
    k = int(np.argmax(pw["Rm"]))
    return Summary(
        R_min=float(np.min(pw["R"])), R_max=float(np.max(pw["R"])), E_max=float(np.max(pw["E"])),
        W_max=float(np.max(pw["W"])), Rm_max=float(pw["Rm"][k]), argmax=k,
        R_at=float(pw["R"][k]), E_at=float(pw["E"][k]), W_at=float(pw["W"][k]),
    )


# ---------------------------------------------------------------- right-hand side

def ricci_flow_rhs(state):
    """Time derivative of the preset's metric data under ``dg/dt = -2 Rc``.

    Homogeneous presets: derivative of the parameter vector.  Warped sphere:
    ``(d(phi^2)/dt, d(psi^2)/dt)`` at fixed ``x``.  Chart: ``-2 Rc`` at every
    interior node, shape ``(points, n, n)``.
    """
    spec = state.spec if isinstance(state, FlowState) else state
    if is_homogeneous(spec):
        return spec.param_rhs(spec.params())
    if isinstance(spec, WarpedProductSphere):
        return warped.ricci_rhs(spec)
    if isinstance(spec, CoordinateChart):
        out = []
        for p in interior_indices(spec):
            m, rm = curvature_at(spec, p)
            out.append(-2.0 * ricci_contraction(rm, m).comps)
        return np.array(out)
    raise TypeError(f"unsupported geometry {type(spec).__name__}")


def _rk4(f, y, dt):
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def advance_params(spec, p, dt: float, substeps: int = 16) -> np.ndarray:
    """Integrate the parameter ODE over ``dt`` (either sign) with fixed RK4 substeps."""
    h = dt / substeps
    for _ in range(substeps):
        p = _rk4(spec.param_rhs, p, h)
    return p


# ---------------------------------------------------------------- integration

class _Store:
    """Online decimation: at most ``max_states`` states, the last ``tail`` always kept."""

    def __init__(self, max_states: int, tail: int):
        self.head: list = []
        self.tail: deque = deque(maxlen=tail)
        self.cap = max_states - tail
        self.stride = 1
        self.count = 0

    def add(self, state: FlowState):
        if len(self.tail) == self.tail.maxlen:
            old = self.tail[0]
            if self._idx(old) % self.stride == 0:
                self.head.append(old)
                if len(self.head) > self.cap:
                    self.stride *= 2
                    self.head = [s for s in self.head if self._idx(s) % self.stride == 0]
        self.tail.append((self.count, state))
        self.count += 1

    @staticmethod
    def _idx(item):
        return item[0]

    def states(self) -> list:
        return [s for _, s in self.head] + [s for _, s in self.tail]


def integrate(spec, t_end: float, controls: FlowControls | None = None) -> Trajectory:
    """Ricci flow from ``spec`` until ``t_end`` or a curvature blow-up."""
    controls = controls or FlowControls()
    if not (math.isfinite(t_end) and t_end > 0):
        raise ValueError("t_end must be finite and positive")
    if is_homogeneous(spec):
        return _integrate_ode(spec, t_end, controls)
    if isinstance(spec, WarpedProductSphere):
        return _integrate_warped(spec, t_end, controls)
    raise TypeError(f"flow is not implemented for {type(spec).__name__}")


def _blown_up(Rm, Rm0, c: FlowControls) -> bool:
    if Rm0 > 0 and Rm >= c.blowup_ratio * Rm0:
        return True
    return Rm > 0 and c.safety / Rm < c.dt_min


def _integrate_ode(spec, t_end: float, c: FlowControls) -> Trajectory:
    p = spec.params()
    store = _Store(c.max_states, c.keep_tail)
    if not spec.params_valid(p):
        return Trajectory([], DEGENERATE)
    summ = summarize(spec)
    store.add(FlowState(0.0, spec, summ))
    Rm0 = summ.Rm_max
    t, dt = 0.0, c.dt_init
    f = spec.param_rhs
    status, steps, warnings = HORIZON, 0, []
    if len(p) == 0:
        # no free parameters (flat): the metric is a fixed point
        store.add(FlowState(t_end, spec, summ))
        return Trajectory(store.states(), HORIZON, None, 1)
    while True:
        if t >= t_end * (1 - 1e-15):
            break
        if steps >= c.max_steps:
            warnings.append("max_steps exceeded")
            log.warning("max_steps exceeded at t=%g", t)
            break
        cap = c.safety / summ.Rm_max if summ.Rm_max > 0 else np.inf
        dt = min(dt, cap, t_end - t)
        if dt < c.dt_min:
            status = SINGULAR
            break
        y1 = _rk4(f, p, dt)
        y2 = _rk4(f, _rk4(f, p, 0.5 * dt), 0.5 * dt)
        ok = spec.params_valid(y1) and spec.params_valid(y2)
        if ok:
            scale = np.maximum(np.abs(p), np.abs(y2))
            err = float(np.max(np.abs(y2 - y1) / (15.0 * c.rtol * np.maximum(scale, 1e-300))))
        else:
            err = np.inf
        if err > 1.0:
            dt *= 0.5 if not np.isfinite(err) else max(0.1, 0.9 * err ** -0.2)
            continue
        p_new = y2 + (y2 - y1) / 15.0
        if not spec.params_valid(p_new):
            p_new = y2
        t += dt
        p = p_new
        steps += 1
        spec = spec.with_params(p)
        summ = summarize(spec)
        if not all(math.isfinite(v) for v in (summ.R_min, summ.Rm_max)):
            status = DEGENERATE
            break
        store.add(FlowState(t, spec, summ))
        if _blown_up(summ.Rm_max, Rm0, c):
            status = SINGULAR
            break
        dt = dt * (4.0 if err == 0 else min(4.0, 0.9 * err ** -0.2))
    traj = Trajectory(store.states(), status, None, steps, warnings)
    if status == SINGULAR:
        traj.T_est = estimate_T(traj)
    return traj


def _integrate_warped(spec: WarpedProductSphere, t_end: float, c: FlowControls) -> Trajectory:
    spec = warped.to_arclength(spec)
    store = _Store(c.max_states, c.keep_tail)
    summ = _summary_from(warped.point_invariants(spec))
    store.add(FlowState(0.0, spec, summ))
    Rm0 = summ.Rm_max
    t = 0.0
    status, steps, warnings = HORIZON, 0, []
    while t < t_end * (1 - 1e-15):
        if steps >= c.max_steps:
            warnings.append("max_steps exceeded")
            log.warning("max_steps exceeded at t=%g", t)
            break
        dt = min(warped.diffusion_dt(spec, c.cfl), c.safety / summ.Rm_max, t_end - t)
        if dt < c.dt_min:
            status = SINGULAR
            break
        try:
            spec = warped.euler_step(spec, dt)
        except (ValueError, FloatingPointError) as exc:
            # psi reached zero at an interior node or the profile became non-finite
            status = SINGULAR if summ.Rm_max > 10 * Rm0 else DEGENERATE
            warnings.append(f"stopped: {exc}")
            break
        t += dt
        steps += 1
        summ = _summary_from(warped.point_invariants(spec))
        store.add(FlowState(t, spec, summ))
        if _blown_up(summ.Rm_max, Rm0, c):
            status = SINGULAR
            break
    traj = Trajectory(store.states(), status, None, steps, warnings)
    if status == SINGULAR:
        traj.T_est = estimate_T(traj)
    return traj


# ---------------------------------------------------------------- evolution checks

def _check_samples(traj: Trajectory, h: float, max_samples: int, margin: float = 0.01):
    if len(traj.states) < 3:
        raise ValueError("need at least 3 stored samples")
    spec0 = traj.states[0].spec
    if not is_homogeneous(spec0):
        raise TypeError("finite-difference checks need a homogeneous preset")
    ok = [s for s in traj.states if s.summary.Rm_max * h <= margin]
    if len(ok) > max_samples:
        ok = [ok[i] for i in np.linspace(0, len(ok) - 1, max_samples).round().astype(int)]
    return ok


def _shifted(state: FlowState, dt: float):
    spec = state.spec
    p = advance_params(spec, spec.params(), dt)
    return spec.with_params(p)


def verify_scalar_evolution(traj: Trajectory, h: float, max_samples: int = 12,
                            h_ref: float | None = None) -> float:
    """Max over samples of ``|dR/dt - (Lap R + 2|Rc|^2)|`` with central differences.

    ``h_ref`` fixes the sample set (default ``h``) so that residuals for
    several ``h`` are comparable.  Homogeneous presets have ``Lap R = 0``.
    Warped presets return the residual relative to ``max |rhs|``, excluding a
    pole layer; it is bounded below by the spatial truncation error.
    """
    spec0 = traj.states[0].spec if traj.states else None
    if isinstance(spec0, WarpedProductSphere):
        return _verify_scalar_warped(traj, h, max_samples)
    worst = 0.0
    for st in _check_samples(traj, h_ref or h, max_samples):
        if len(st.spec.params()) == 0:
            continue
        Rp = pointwise(_shifted(st, h))["R"][0]
        Rm_ = pointwise(_shifted(st, -h))["R"][0]
        pw = pointwise(st.spec)
        worst = max(worst, abs((Rp - Rm_) / (2 * h) - 2 * pw["Rc2"][0]))
    return worst


def _warped_advance(spec: WarpedProductSphere, dt: float, cfl: float) -> WarpedProductSphere:
    # RK4 substeps of the gauged method of lines, either time direction
    n_sub = max(1, int(math.ceil(abs(dt) / warped.diffusion_dt(spec, cfl))))
    h = dt / n_sub
    L = spec.x[-1] - spec.x[0]

    def spec_of(y):
        ell = y[0]
        psi = warped.impose_poles(y[1:], ell / (len(spec.x) - 1))
        return WarpedProductSphere(spec.n_fiber, spec.x, np.full_like(spec.x, ell / L), psi)

    def f(y):
        dell, psi_t, _, _ = warped.gauge_rhs(spec_of(y))
        return np.concatenate([[dell], psi_t])

    y = np.concatenate([[spec.length], spec.psi])
    for _ in range(n_sub):
        y = _rk4(f, y, h)
    return spec_of(y)


def _verify_scalar_warped(traj: Trajectory, h: float, max_samples: int, cfl: float = 0.02,
                          margin: float = 0.01) -> float:
    # in the arclength gauge R_t = Lap R + 2|Rc|^2 + xi R_s; backward steps of a
    # parabolic system amplify grid modes, so the stencil is one-sided forward
    states = [s for s in traj.states if s.summary.Rm_max * h <= margin]
    if not states:
        raise ValueError("no stored sample satisfies Rm * h <= margin; reduce h")
    idx = np.linspace(0, len(states) - 1, min(max_samples, len(states))).round().astype(int)
    worst = 0.0
    for i in idx:
        spec = states[i].spec
        s1 = _warped_advance(spec, h, cfl)
        s2 = _warped_advance(s1, h, cfl)
        pw = warped.point_invariants(spec)
        R1 = warped.point_invariants(s1)["R"]
        R2 = warped.point_invariants(s2)["R"]
        _, xi = warped.gauge_field(spec)
        ds = spec.phi[0] * spec.dx
        rhs = warped.laplacian(spec, pw["R"]) + 2 * pw["Rc2"] + xi * warped.d1(pw["R"], ds, odd=False)
        res = np.abs((-3 * pw["R"] + 4 * R1 - R2) / (2 * h) - rhs)
        # the pole rows carry an O(ds^2) boundary layer from the reflection stencils
        k = max(2, len(res) // 20)
        scale = max(1.0, float(np.max(np.abs(rhs))))
        worst = max(worst, float(np.max(res[k:-k])) / scale)
    return worst


def ricci_gradient_terms(spec) -> tuple[np.ndarray, float]:
    """``Lap Rc`` (orthonormal frame) and ``|nabla Rc|^2`` at a homogeneous point.

    Space forms and products of round spheres are locally symmetric, so both
    vanish.  Left-invariant metrics on 3D groups have constant but generally
    non-parallel Ricci tensors; the terms come from the structure constants.
    """
    if isinstance(spec, MilnorFrame3D):
        gt = lie.gradient_terms(lie.milnor_structure(spec))
        return gt["lap_ric"], gt["grad_ric2"]
    if is_homogeneous(spec):
        return np.zeros((spec.dim, spec.dim)), 0.0
    raise TypeError("gradient terms are only available for homogeneous presets")


def ricci_reaction(spec) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal Ricci and ``Lap Rc + 2 Rm(Rc, .) - 2 Rc^2`` at a homogeneous point."""
    m, rm = curvature_at(spec)
    ric = ricci_contraction(rm, m).comps
    rm_rc = np.einsum("ikjl,kl->ij", rm.comps, ric)
    lap, _ = ricci_gradient_terms(spec)
    return ric, lap + 2 * rm_rc - 2 * ric @ ric


def verify_ricci_evolution(traj: Trajectory, h: float, max_samples: int = 12,
                           h_ref: float | None = None) -> float:
    """Componentwise residual of ``dRc/dt`` against ``Lap Rc + 2 Rm(Rc, .) - 2 Rc^2``.

    Components are taken in the orthonormal frame carried along by the flow
    (``de_a/dt = Rc(e_a)``), which adds ``+2 Rc^2`` to the time derivative.
    """
    worst = 0.0
    for st in _check_samples(traj, h_ref or h, max_samples):
        if len(st.spec.params()) == 0:
            continue
        rp, _ = ricci_reaction(_shifted(st, h))
        rn, _ = ricci_reaction(_shifted(st, -h))
        ric, reaction = ricci_reaction(st.spec)
        fd = (rp - rn) / (2 * h)
        worst = max(worst, float(np.max(np.abs(fd - (reaction + 2 * ric @ ric)))))
    return worst


def convergence_order(residuals, hs) -> list[float]:
    """Observed orders ``log(r_k / r_{k+1}) / log(h_k / h_{k+1})``."""
    return [math.log(residuals[k] / residuals[k + 1]) / math.log(hs[k] / hs[k + 1])
            for k in range(len(hs) - 1)]


# ---------------------------------------------------------------- classification

@dataclass(frozen=True)
class ClassifyThresholds:
    stable_tol: float = 0.2
    growth_factor: float = 5.0
    decades: float = 2.0


def estimate_T(traj: Trajectory) -> float | None:
    """Extrapolate ``1/|Rm|_max -> 0`` by a linear fit over the last decade of growth."""
    t = traj.times
    Rm = traj.column("Rm_max")
    if len(t) < 3 or Rm[-1] <= 0:
        return None
    sel = Rm >= Rm[-1] / 10.0
    if sel.sum() < 3:
        sel = np.zeros_like(sel)
        sel[-3:] = True
    b, a = np.polyfit(t[sel], 1.0 / Rm[sel], 1)
    if b >= 0:
        return None
    return float(-a / b)


def classify(traj: Trajectory, thresholds: ClassifyThresholds | None = None) -> SingularityReport:
    th = thresholds or ClassifyThresholds()
    if traj.status != SINGULAR or len(traj.states) < 3:
        return SingularityReport(None, "NoSingularity" if traj.status == HORIZON else "Inconclusive",
                                 float("nan"), {"R": False, "W_over_R": False}, 0.0)
    t = traj.times
    Rm = traj.column("Rm_max")
    T = traj.T_est if traj.T_est is not None else estimate_T(traj)
    decades = float(np.log10(Rm[-1] / Rm[0])) if Rm[0] > 0 else float("inf")
    R_max = traj.column("R_max")
    W_max = traj.column("W_max")
    with np.errstate(divide="ignore", invalid="ignore"):
        w_over_r = np.where(R_max > 0, W_max / R_max, np.nan)
    blown = {
        "R": bool(R_max[-1] >= 10 * max(R_max[0], 1e-300)),
        "W_over_R": bool(np.nanmax(w_over_r) > 0 and w_over_r[-1] >= 10 * max(w_over_r[0], 1e-300)),
    }
    if T is None:
        return SingularityReport(None, "Inconclusive", float("nan"), blown, decades)
    ratio = (T - t) * Rm
    sup_ratio = float(np.max(ratio))
    if decades < th.decades:
        return SingularityReport(T, "Inconclusive", sup_ratio, blown, decades)
    window = Rm >= Rm[-1] / 10 ** th.decades
    run = np.maximum.accumulate(ratio[window])
    if run[0] <= 0:
        kind = "Inconclusive"
    elif run[-1] / run[0] - 1.0 < th.stable_tol:
        kind = "TypeI"
    elif run[-1] / run[0] > th.growth_factor:
        kind = "TypeII"
    else:
        kind = "Inconclusive"
    return SingularityReport(T, kind, sup_ratio, blown, decades)


# ---------------------------------------------------------------- dilation

def dilate(traj: Trajectory, anchor_count: int = 8, comparable: float = 0.5,
           s_back: float = 1.0, w_floor: float = 1e-10) -> DilationSequence:
    """Rescale the flow around anchors where ``|Rm|_max`` is near its running max.

    The anchors are spread geometrically in ``|Rm|_max``.  Around anchor i the
    rescaled flow is ``K_i g(t_i + s/K_i)``, so rescaled curvature scalars are
    divided by ``K_i`` and ``s = (t - t_i) K_i``.
    """
    if traj.status != SINGULAR:
        raise ValueError("dilation needs a singular trajectory")
    Rm = traj.column("Rm_max")
    runmax = np.maximum.accumulate(Rm)
    cand = np.nonzero(Rm >= comparable * runmax)[0]
    targets = np.geomspace(Rm[0], Rm[-1], anchor_count)
    chosen: list[int] = []
    for target in targets:
        hit = cand[Rm[cand] >= target * (1 - 1e-12)]
        if len(hit) and (not chosen or hit[0] > chosen[-1]):
            chosen.append(int(hit[0]))
    anchors, samples, ratios = [], [], []
    for i in chosen:
        st = traj.states[i]
        K = st.summary.Rm_max
        anchors.append(Anchor(st.t, st.summary.argmax, K, i))
        seq = []
        for other in traj.states:
            s = (other.t - st.t) * K
            if s < -s_back:
                continue
            o = other.summary
            seq.append((s, replace(o, R_min=o.R_min / K, R_max=o.R_max / K, E_max=o.E_max / K,
                                   W_max=o.W_max / K, Rm_max=o.Rm_max / K, R_at=o.R_at / K,
                                   E_at=o.E_at / K, W_at=o.W_at / K)))
        samples.append(seq)
        W = st.summary.W_max
        # rounding-level Weyl on conformally flat flows counts as zero
        ratios.append(None if W <= w_floor * K else (st.summary.E_at / W, st.summary.R_at / W))
    return DilationSequence(anchors, samples, ratios)
