"""Policy engine: timed fiscal and monetary interventions, and the
stabilization controller that shifts the LM curve to pre-empt fold jumps.

Fiscal policy appears in two equivalent guises: driving income directly
(natural in the singular limit, where income is the driven parameter) and
shifting the goods-market excess additively (natural in the full system).
Monetary steps change the expected inflation rate or the money stock at an
instant; the state stays continuous while the isocline moves under it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import (
    CORNER_DT,
    FULL_MODE,
    REDUCED_MODE,
    IntegrationError,
    JumpEvent,
    Trajectory,
    _append_jump,
    _fold_exit_jump,
    advance_reduced,
    attach_to_branch,
    detect_jumps,
    detect_cycle,
    integrate,
)
from .geometry import Branch, FoldPoint, LMIsocline, is_curve, lm_roots, shift_lm, trace_lm_isocline
from .model import ISBlock, ModelSpec, excess_money, validate_properties

__all__ = [
    "ScenarioError",
    "FiscalDrive",
    "FiscalShift",
    "MonetaryStep",
    "Scenario",
    "ScenarioResult",
    "StabilizationPlan",
    "ControllerReport",
    "apply_scenario",
    "is_shift_equivalence_check",
    "plan_stabilization",
    "run_with_controller",
    "negative_rate_probe",
]


class ScenarioError(ValueError):
    """A scenario is malformed or produced an invalid intermediate model."""


@dataclass(frozen=True)
class FiscalDrive:
    """Drive income along a linear ramp between two instants."""

    t_start: float
    t_end: float
    y_to: float
    y_from: float | None = None  # defaults to the state's income at t_start

    def __post_init__(self):
        if self.t_end <= self.t_start:
            raise ScenarioError("drive interval must have positive length")


@dataclass(frozen=True)
class FiscalShift:
    """Additive shift g to the goods excess I - S, moving the IS curve."""

    time: float
    g: float


@dataclass(frozen=True)
class MonetaryStep:
    """Instantaneous change of expected inflation and/or money stock."""

    time: float
    d_pi: float = 0.0
    d_ms: float = 0.0


@dataclass(frozen=True)
class Scenario:
    steps: tuple = ()
    horizon: float = 10.0

    def __post_init__(self):
        if self.horizon <= 0.0:
            raise ScenarioError("horizon must be positive")
        times = []
        drives = []
        for s in self.steps:
            if isinstance(s, FiscalDrive):
                if not (0.0 <= s.t_start and s.t_end <= self.horizon):
                    raise ScenarioError("drive interval must lie within the horizon")
                drives.append((s.t_start, s.t_end))
            else:
                if not 0.0 <= s.time <= self.horizon:
                    raise ScenarioError("step time must lie within the horizon")
                times.append(s.time)
        if any(t2 <= t1 for t1, t2 in zip(sorted(times), sorted(times)[1:])):
            raise ScenarioError("instantaneous step times must be strictly increasing")
        drives.sort()
        for (a1, b1), (a2, b2) in zip(drives, drives[1:]):
            if a2 < b1:
                raise ScenarioError("drive intervals must not overlap")

    def instantaneous(self):
        return sorted((s for s in self.steps if not isinstance(s, FiscalDrive)),
                      key=lambda s: s.time)

    def drives(self):
        return sorted((s for s in self.steps if isinstance(s, FiscalDrive)),
                      key=lambda s: s.t_start)


@dataclass
class ScenarioResult:
    trajectory: Trajectory
    events: list[dict]
    final_spec: ModelSpec

    @property
    def jumps(self) -> tuple[JumpEvent, ...]:
        return self.trajectory.jumps


def _with_fiscal_shift(spec: ModelSpec, g: float) -> ModelSpec:
    b = spec.is_block
    shifted = ISBlock(i0=b.i0 + g, i_y=b.i_y, i_r=b.i_r, s0=b.s0, s_y=b.s_y, s_r=b.s_r)
    return ModelSpec(params=spec.params, is_block=shifted, money=spec.money)


def _drive_slope(drive: FiscalDrive, y_now: float) -> float:
    y_from = drive.y_from if drive.y_from is not None else y_now
    return (drive.y_to - y_from) / (drive.t_end - drive.t_start)


def _advance_driven_reduced(spec: ModelSpec, isocline: LMIsocline, branch: Branch,
                            y: float, t: float, t_stop: float, slope: float,
                            stride: float, ts: list, ys: list, rs: list,
                            jumps: list) -> tuple[Branch, float, float, str]:
    """Driven singular-limit motion: income follows the ramp, the rate is
    slaved to the current branch and jumps at fold crossings."""
    while t < t_stop - 1e-15:
        if slope > 0.0:
            y_end, end = branch.y_hi, branch.hi_end
            t_cross = t + (y_end - y) / slope
        elif slope < 0.0:
            y_end, end = branch.y_lo, branch.lo_end
            t_cross = t + (y_end - y) / slope
        else:
            y_end, end, t_cross = math.nan, ("none", ""), math.inf
        t_next = min(t_stop, t_cross)
        for tt in np.arange(ts[-1] + stride, t_next, stride):
            yv = y + slope * (tt - t)
            y_c = min(max(yv, branch.y_lo), branch.y_hi)
            ts.append(float(tt))
            ys.append(float(yv))
            rs.append(branch.r_at(y_c))
        if t_cross >= t_stop:
            y = y + slope * (t_stop - t)
            if ts[-1] < t_stop - 1e-15:
                ts.append(t_stop)
                ys.append(y)
                rs.append(branch.r_at(min(max(y, branch.y_lo), branch.y_hi)))
            return branch, y, t_stop, "horizon"
        if end[0] != "fold":
            if t_cross > ts[-1]:
                ts.append(t_cross)
                ys.append(y_end)
                rs.append(branch.r_at(y_end))
            return branch, y_end, t_cross, "domain-exit"
        travel = 1.0 if slope > 0 else -1.0
        jump, branch = _fold_exit_jump(spec, isocline, branch, end, travel, t_cross)
        _append_jump(ts, ys, rs, jumps, jump)
        t = t_cross
        y = jump.y_at_jump
    return branch, y, t, "horizon"


def _integrate_driven_full(spec: ModelSpec, y0: float, r0: float, slope: float,
                           t0: float, t1: float, stride: float,
                           rtol: float = 1e-8, atol: float = 1e-10) -> Trajectory:
    """Full-mode segment with income prescribed by the ramp slope."""
    beta = spec.params.beta

    def rhs(_t, s):
        return (slope, beta * excess_money(max(s[0], 0.0), s[1], spec))

    n_eval = max(2, int(round((t1 - t0) / stride)) + 1)
    sol = solve_ivp(rhs, (t0, t1), (y0, r0), method="RK45", rtol=rtol, atol=atol,
                    t_eval=np.linspace(t0, t1, n_eval))
    if not sol.success:
        raise IntegrationError(f"driven integration failed: {sol.message}")
    return Trajectory(sol.t, sol.y[0], sol.y[1], FULL_MODE, spec.spec_id)


def _concat(parts: list[Trajectory], mode: str, spec_id: str,
            jumps: tuple[JumpEvent, ...] = ()) -> Trajectory:
    ts = [parts[0].t]
    ys = [parts[0].y]
    rs = [parts[0].r]
    for p in parts[1:]:
        skip = 1 if len(p.t) and len(ts[-1]) and p.t[0] <= ts[-1][-1] else 0
        ts.append(p.t[skip:])
        ys.append(p.y[skip:])
        rs.append(p.r[skip:])
    return Trajectory(np.concatenate(ts), np.concatenate(ys), np.concatenate(rs),
                      mode, spec_id, jumps)


def _detect_jumps_segmented(parts: list[tuple[Trajectory, ModelSpec]],
                            stride: float, jump_min: float | None = None
                            ) -> tuple[JumpEvent, ...]:
    """Jump detection across spec changes: each epoch is scanned against its
    own model so threshold estimates are not polluted, then events that a
    segment boundary split in two are merged."""
    if jump_min is None:
        spec0 = parts[0][1]
        if spec0.money.windows:
            jump_min = 0.25 * min(w.q - w.p for w in spec0.money.windows)
    # verticality tolerance scales with the whole run, not single epochs, and
    # stays loose enough for driven ramps where income moves during the layer
    span = max(float(max(p.y.max() for p, _ in parts)
                     - min(p.y.min() for p, _ in parts)), 1e-12)
    y_slip = 0.1 * span + 1e-9
    raw: list[JumpEvent] = []
    for part, spec in parts:
        raw.extend(detect_jumps(part, spec, jump_min=jump_min, y_slip=y_slip))
    raw.sort(key=lambda j: j.t_start)
    merged: list[JumpEvent] = []
    for j in raw:
        if merged and j.direction == merged[-1].direction \
                and j.t_start - merged[-1].t_end <= 2.0 * stride:
            prev = merged[-1]
            merged[-1] = JumpEvent(prev.t_start, j.t_end, prev.y_at_jump,
                                   prev.r_from, j.r_to, prev.direction)
        else:
            merged.append(j)
    return tuple(merged)


def apply_scenario(spec: ModelSpec, scenario: Scenario, y0: float, r0: float,
                   mode: str = REDUCED_MODE, *,
                   y_range: tuple[float, float], r_range: tuple[float, float],
                   y_steps: int = 700, scan_n: int = 500,
                   stride: float | None = None, validate: bool = True,
                   grid_n: int = 100, rtol: float = 1e-8, atol: float = 1e-10
                   ) -> ScenarioResult:
    """Piecewise simulation of a timed intervention schedule.

    The state (income, rate) is continuous across every step; only the model
    changes discontinuously.  Every intermediate model must pass property
    validation, and failures name the offending step.
    """
    if mode not in (REDUCED_MODE, FULL_MODE):
        raise ValueError(f"unknown mode {mode!r}")
    if stride is None:
        stride = scenario.horizon / 2000.0
    events: list[dict] = []
    jumps: list[JumpEvent] = []

    if validate:
        rep = validate_properties(spec, y_range, r_range, grid_n)
        if not rep.passed:
            raise ScenarioError(f"initial model fails validation: "
                                f"{[c.condition for c in rep.failures()]}")

    # timeline boundaries: step instants plus drive starts/ends
    instants = scenario.instantaneous()
    drives = scenario.drives()
    cuts = {0.0, scenario.horizon}
    cuts.update(s.time for s in instants)
    for d in drives:
        cuts.add(d.t_start)
        cuts.add(d.t_end)
    timeline = sorted(cuts)

    cur_spec = spec
    cur_r_range = tuple(r_range)  # widened as inflation steps shift the branches
    t, y, r = 0.0, y0, r0
    reduced = mode == REDUCED_MODE

    if reduced:
        isocline = trace_lm_isocline(cur_spec, y_range, y_steps, cur_r_range, scan_n)
        branch, r = _attach_with_event(cur_spec, isocline, y, r, t, events,
                                       None, initial=True)
        ts, ys_, rs_ = [t], [y], [r]
    else:
        parts: list[Trajectory] = []
        ts, ys_, rs_ = [], [], []  # unused in full mode

    def active_drive(t_seg):
        for d in drives:
            if d.t_start <= t_seg < d.t_end:
                return d
        return None

    for idx, (t_a, t_b) in enumerate(zip(timeline[:-1], timeline[1:])):
        # apply instantaneous steps scheduled at t_a
        for step_i, s in enumerate(instants):
            if s.time != t_a:
                continue
            if isinstance(s, FiscalShift):
                cur_spec = _with_fiscal_shift(cur_spec, s.g)
                events.append({"t": t_a, "kind": "fiscal-shift", "g": s.g})
            else:
                try:
                    cur_spec = shift_lm(cur_spec, d_pi=s.d_pi, d_ms=s.d_ms)
                except ValueError as exc:
                    raise ScenarioError(f"step {step_i}: {exc}") from exc
                # the pure-inflation part moves every branch by exactly -d_pi
                cur_r_range = (min(cur_r_range[0], cur_r_range[0] - s.d_pi),
                               max(cur_r_range[1], cur_r_range[1] - s.d_pi))
                events.append({"t": t_a, "kind": "monetary-step",
                               "d_pi": s.d_pi, "d_ms": s.d_ms})
            if validate:
                rep = validate_properties(cur_spec, y_range, cur_r_range, grid_n)
                if not rep.passed:
                    raise ScenarioError(
                        f"step {step_i} at t={t_a} produced an invalid model: "
                        f"{[c.condition for c in rep.failures()]}")
            if reduced:
                isocline = trace_lm_isocline(cur_spec, y_range, y_steps, cur_r_range, scan_n)
                branch, r = _attach_with_event(cur_spec, isocline, y, r, t_a,
                                               events, (ts, ys_, rs_))

        if t_b <= t_a:
            continue
        drive = active_drive(t_a)
        if reduced:
            if drive is not None:
                slope = _drive_slope(drive, y)
                branch, y, t, status = _advance_driven_reduced(
                    cur_spec, isocline, branch, y, t_a, t_b, slope, stride,
                    ts, ys_, rs_, jumps)
            else:
                branch, y, t, status = advance_reduced(
                    cur_spec, isocline, branch, y, t_a, t_b, stride,
                    ts, ys_, rs_, jumps)
            r = branch.r_at(min(max(y, branch.y_lo), branch.y_hi))
            if status == "domain-exit":
                events.append({"t": t, "kind": "domain-exit", "y": y})
                break
        else:
            if drive is not None:
                slope = _drive_slope(drive, y)
                part = _integrate_driven_full(cur_spec, y, r, slope, t_a, t_b,
                                              stride, rtol, atol)
            else:
                part = integrate(cur_spec, y, r, t_b, rtol=rtol, atol=atol,
                                 stride=stride, t_start=t_a)
            parts.append((part, cur_spec))
            y, r, t = float(part.y[-1]), float(part.r[-1]), float(part.t[-1])

    if reduced:
        traj = Trajectory(np.asarray(ts), np.asarray(ys_), np.asarray(rs_),
                          REDUCED_MODE, spec.spec_id, tuple(jumps))
    else:
        traj = _concat([p for p, _ in parts], FULL_MODE, spec.spec_id)
        traj.jumps = _detect_jumps_segmented(parts, stride)
    for j in traj.jumps:
        events.append({"t": j.t_start, "kind": "jump", "y": j.y_at_jump,
                       "r_from": j.r_from, "r_to": j.r_to,
                       "direction": j.direction})
    events.sort(key=lambda e: e["t"])
    return ScenarioResult(traj, events, cur_spec)


def _attach_with_event(spec: ModelSpec, isocline: LMIsocline, y: float, r: float,
                       t: float, events: list,
                       sample_sink: tuple | None, initial: bool = False
                       ) -> tuple[Branch, float]:
    branch, r_new = attach_to_branch(spec, isocline, y, r)
    if not initial and abs(r_new - r) > 1e-12:
        events.append({"t": t, "kind": "reattach", "y": y,
                       "r_from": r, "r_to": r_new})
        if sample_sink is not None:
            ts, ys_, rs_ = sample_sink
            corner_t = t - CORNER_DT * max(1.0, abs(t))
            if ts and corner_t > ts[-1]:
                ts.append(corner_t)
                ys_.append(y)
                rs_.append(r)
            if not ts or t > ts[-1]:
                ts.append(t)
                ys_.append(y)
                rs_.append(r_new)
            else:
                rs_[-1] = r_new
    return branch, r_new


# ---------------------------------------------------------------------------

def is_shift_equivalence_check(spec: ModelSpec, g: float,
                               y_probe: tuple[float, ...] = (0.0, 1.0, 2.0, 4.0)
                               ) -> dict:
    """Verify that the additive goods shift moves the IS curve by g/(i_r+s_r)."""
    base = is_curve(spec)
    shifted = is_curve(_with_fiscal_shift(spec, g))
    predicted = g / (spec.is_block.i_r + spec.is_block.s_r)
    measured = [float(shifted.r_at(y) - base.r_at(y)) for y in y_probe]
    max_err = max(abs(m - predicted) for m in measured)
    return {
        "g": g,
        "predicted_shift": predicted,
        "measured_shift": measured[0],
        "max_error": max_err,
        "consistent": max_err < 1e-12 * max(1.0, abs(predicted)),
    }


@dataclass
class StabilizationPlan:
    fold: FoldPoint
    instrument: str               # "inflation" | "money-stock"
    delta: float
    matched: bool                 # True when the exact branch match was achieved
    mode: str                     # "branch-match" | "fold-relocation"
    jump_direction: str
    r_target: float               # rate the uncontrolled jump would land on
    residual: float               # |shifted branch value at the fold - fold rate|
    diagnosis: str = ""
    fired: list = field(default_factory=list)


def _fold_jump_target(spec: ModelSpec, isocline: LMIsocline, fold: FoldPoint
                      ) -> tuple[str, float]:
    """Direction and landing rate of the jump released at a fold."""
    travel = 1.0 if fold.kind == "lower-knee" else -1.0
    probe_y = max(fold.y + math.copysign(1e-9 * max(1.0, abs(fold.y)), travel), 0.0)
    e = excess_money(probe_y, fold.r, spec)
    direction = "up" if e > 0.0 else "down"
    roots = lm_roots(fold.y, spec, isocline.r_range, warn=False)
    pad = 1e-4  # skip the fold's own (quartically flat) double root
    if direction == "up":
        cands = [x for x in roots if x > fold.r + pad]
        if not cands:
            raise ValueError("no branch above the fold to land on")
        return direction, min(cands)
    cands = [x for x in roots if x < fold.r - pad]
    if not cands:
        raise ValueError("no branch below the fold to land on")
    return direction, max(cands)


def _shifted_branch_value(spec: ModelSpec, fold: FoldPoint, direction: str,
                          r_range: tuple[float, float], d_pi: float, d_ms: float
                          ) -> float | None:
    """Value at the fold income of the shifted isocline's post-jump branch.

    The post-jump branch is the attracting branch on the jump side of the
    fold; a small tolerance keeps it identifiable when it passes exactly
    through the fold point (the stabilization target).
    """
    from .model import excess_money_slope

    shifted = shift_lm(spec, d_pi=d_pi, d_ms=d_ms)
    lo, hi = r_range
    pad_range = (lo - abs(d_pi) - 0.2 * (hi - lo), hi + abs(d_pi) + 0.2 * (hi - lo))
    roots = lm_roots(fold.y, shifted, pad_range, warn=False)
    stable = [x for x in roots if excess_money_slope(x, shifted) < 0.0]
    atol = 1e-6
    if direction == "up":
        cands = [x for x in stable if x >= fold.r - atol]
        return min(cands) if cands else None
    cands = [x for x in stable if x <= fold.r + atol]
    return max(cands) if cands else None


def plan_stabilization(spec: ModelSpec, fold: FoldPoint, instrument: str,
                       isocline: LMIsocline, *, search_hi_factor: float = 10.0,
                       n_scan: int = 64, match_tol: float = 1e-8,
                       protect_to_y: float | None = None) -> StabilizationPlan:
    """Compute the monetary shift that defuses the jump at a fold.

    The target is the shift after which the post-jump stable branch passes
    through the pre-jump point, so the state has nowhere to jump to.  The
    inflation instrument achieves this in closed form via the exact vertical
    shift law.  The money-stock instrument is searched by bisection; when no
    stock change can close the match (the post-jump branch's rate floor sits
    structurally above the fold rate), the plan reports no-solution and falls
    back to relocating the fold beyond a protected income instead.
    """
    if instrument not in ("inflation", "money-stock"):
        raise ValueError(f"unknown instrument {instrument!r}")
    direction, r_target = _fold_jump_target(spec, isocline, fold)
    if abs(r_target - fold.r) <= match_tol:
        # the pre-jump point already lies on the target branch
        return StabilizationPlan(fold, instrument, 0.0, True, "branch-match",
                                 direction, r_target, abs(r_target - fold.r))

    if instrument == "inflation":
        delta = r_target - fold.r
        check = _shifted_branch_value(spec, fold, direction, isocline.r_range,
                                      delta, 0.0)
        residual = abs(check - fold.r) if check is not None else math.inf
        return StabilizationPlan(fold, instrument, delta, residual <= match_tol,
                                 "branch-match", direction, r_target, residual)

    # money stock: bisection on the branch-match objective over [0, hi]
    sign = 1.0 if direction == "up" else -1.0
    hi = search_hi_factor * spec.params.m_stock
    if sign < 0:
        hi = min(hi, 0.999 * spec.params.m_stock)  # keep the stock positive

    def objective(d: float) -> float | None:
        v = _shifted_branch_value(spec, fold, direction, isocline.r_range, 0.0,
                                  sign * d)
        return None if v is None else v - fold.r

    f0 = objective(0.0)
    best = abs(f0) if f0 is not None else math.inf
    bracket = None
    prev_d, prev_f = 0.0, f0
    for k in range(1, n_scan + 1):
        d = hi * k / n_scan
        f = objective(d)
        if f is None:
            break
        best = min(best, abs(f))
        if prev_f is not None and (f > 0) != (prev_f > 0):
            bracket = (prev_d, d)
            break
        prev_d, prev_f = d, f

    if bracket is not None:
        a, b = bracket
        fa = objective(a)
        for _ in range(200):
            if b - a <= match_tol * 0.5:
                break
            mid = 0.5 * (a + b)
            fm = objective(mid)
            if fm is None:
                b = mid
                continue
            if fm == 0.0:
                a = b = mid
                break
            if (fa > 0) != (fm > 0):
                b = mid
            else:
                a, fa = mid, fm
        delta = sign * 0.5 * (a + b)
        check = _shifted_branch_value(spec, fold, direction, isocline.r_range,
                                      0.0, delta)
        residual = abs(check - fold.r) if check is not None else math.inf
        return StabilizationPlan(fold, instrument, delta, residual <= match_tol,
                                 "branch-match", direction, r_target, residual)

    # No-solution: the post-jump branch cannot reach the fold rate for any
    # admissible stock change.  Relocate the fold beyond the protected income:
    # the stock change that places the fold exactly at income y* equals the
    # money-market excess at (y*, fold rate) under the current model.
    if protect_to_y is None:
        protect_to_y = fold.y * (1.10 if direction == "up" else 0.90)
    delta = excess_money(protect_to_y, fold.r, spec)
    diagnosis = (
        f"no stock change in [0, {hi:g}] puts the post-jump branch through the "
        f"fold point; closest approach {best:g} above the fold rate (the branch "
        "rate floor is structural); falling back to relocating the fold to "
        f"income {protect_to_y:g}")
    return StabilizationPlan(fold, instrument, delta, False, "fold-relocation",
                             direction, r_target, best, diagnosis)


@dataclass
class ControllerReport:
    uncontrolled: ScenarioResult
    controlled: ScenarioResult
    plan: StabilizationPlan
    t_fired: float | None
    y_fired: float | None
    jumps_uncontrolled: int
    jumps_controlled: int
    max_rate_uncontrolled: float
    max_rate_controlled: float
    r_band_controlled: float      # max |R - R at trigger| after the trigger
    controller_late: bool

    def to_dict(self) -> dict:
        return {
            "instrument": self.plan.instrument,
            "delta": self.plan.delta,
            "plan_mode": self.plan.mode,
            "t_fired": self.t_fired,
            "y_fired": self.y_fired,
            "jumps_uncontrolled": self.jumps_uncontrolled,
            "jumps_controlled": self.jumps_controlled,
            "max_rate_uncontrolled": self.max_rate_uncontrolled,
            "max_rate_controlled": self.max_rate_controlled,
            "r_band_controlled": self.r_band_controlled,
            "controller_late": self.controller_late,
        }


def _max_rate(traj: Trajectory) -> float:
    if len(traj) < 2:
        return 0.0
    dt = np.diff(traj.t)
    return float(np.max(np.abs(np.diff(traj.r)) / np.maximum(dt, 1e-300)))


def _first_crossing_time(traj: Trajectory, level: float, upward: bool) -> float | None:
    y, t = traj.y, traj.t
    if upward:
        hits = np.nonzero((y[:-1] < level) & (y[1:] >= level))[0]
    else:
        hits = np.nonzero((y[:-1] > level) & (y[1:] <= level))[0]
    if len(hits) == 0:
        if len(y) and ((y[0] >= level) if upward else (y[0] <= level)):
            return float(t[0])
        return None
    k = int(hits[0])
    frac = (level - y[k]) / (y[k + 1] - y[k])
    return float(t[k] + frac * (t[k + 1] - t[k]))


def run_with_controller(spec: ModelSpec, ramp: FiscalDrive, plan: StabilizationPlan,
                        y0: float, r0: float, *,
                        y_range: tuple[float, float], r_range: tuple[float, float],
                        mode: str = REDUCED_MODE, margin_frac: float = 0.05,
                        stride: float | None = None, monitor_stride: float | None = None,
                        horizon: float | None = None, y_steps: int = 700,
                        scan_n: int = 500) -> ControllerReport:
    """Run the fiscal ramp with and without the planned monetary response.

    The controller monitors income and fires the plan's step when the state
    comes within the trigger margin of the watched fold.  In the singular
    limit the trigger time is exact; in the full system monitoring is sampled
    at `monitor_stride`, so a late trigger is possible and is reported.
    """
    if horizon is None:
        horizon = ramp.t_end
    if stride is None:
        stride = horizon / 2000.0
    fold = plan.fold
    margin = margin_frac * abs(fold.y)
    kwargs = dict(y_range=y_range, r_range=r_range, y_steps=y_steps,
                  scan_n=scan_n, stride=stride, validate=False)

    base = apply_scenario(spec, Scenario((ramp,), horizon), y0, r0, mode, **kwargs)

    slope = _drive_slope(ramp, y0)
    approaching_up = slope > 0
    trigger_y = fold.y - margin if approaching_up else fold.y + margin

    t_fired = y_fired = None
    if mode == REDUCED_MODE:
        # the controller watches income: fire when the uncontrolled path first
        # crosses the trigger level moving toward the fold
        t_fired = _first_crossing_time(base.trajectory, trigger_y, approaching_up)
        if t_fired is not None:
            y_fired = trigger_y
        steps: tuple = (ramp,)
        if t_fired is not None:
            step = MonetaryStep(t_fired,
                                d_pi=plan.delta if plan.instrument == "inflation" else 0.0,
                                d_ms=plan.delta if plan.instrument == "money-stock" else 0.0)
            steps = (ramp, step)
        controlled = apply_scenario(spec, Scenario(steps, horizon), y0, r0, mode,
                                    **kwargs)
    else:
        controlled, t_fired, y_fired = _controlled_full(
            spec, ramp, plan, y0, r0, trigger_y, approaching_up, horizon,
            stride, monitor_stride or stride * 10.0)

    if t_fired is not None:
        plan.fired.append({"t": t_fired, "y": y_fired, "delta": plan.delta,
                           "instrument": plan.instrument, "mode": mode})

    jumps_base = list(base.jumps)
    jumps_ctrl = list(controlled.jumps)
    if t_fired is None:
        late = bool(jumps_ctrl)
    else:
        late = any(j.t_start <= t_fired for j in jumps_ctrl)

    r_band = 0.0
    if t_fired is not None:
        tr = controlled.trajectory
        after = tr.t >= t_fired
        if after.any():
            k0 = int(np.argmax(after))
            r_ref = float(tr.r[max(k0 - 1, 0)])
            r_band = float(np.max(np.abs(tr.r[after] - r_ref)))

    return ControllerReport(
        uncontrolled=base, controlled=controlled, plan=plan,
        t_fired=t_fired, y_fired=y_fired,
        jumps_uncontrolled=len(jumps_base), jumps_controlled=len(jumps_ctrl),
        max_rate_uncontrolled=_max_rate(base.trajectory),
        max_rate_controlled=_max_rate(controlled.trajectory),
        r_band_controlled=r_band,
        controller_late=late,
    )


def _controlled_full(spec: ModelSpec, ramp: FiscalDrive, plan: StabilizationPlan,
                     y0: float, r0: float, trigger_y: float, approaching_up: bool,
                     horizon: float, stride: float, monitor_stride: float
                     ) -> tuple[ScenarioResult, float | None, float | None]:
    """Full-mode controlled run with sampled monitoring of the trigger."""
    slope = _drive_slope(ramp, y0)
    parts: list[tuple[Trajectory, ModelSpec]] = []
    events: list[dict] = []
    t, y, r = 0.0, y0, r0
    cur_spec = spec
    t_fired = y_fired = None
    while t < horizon - 1e-12:
        t_next = min(t + monitor_stride, horizon)
        seg_slope = slope if ramp.t_start <= t < ramp.t_end else 0.0
        if seg_slope != 0.0:
            part = _integrate_driven_full(cur_spec, y, r, seg_slope, t, t_next, stride)
        else:
            part = integrate(cur_spec, y, r, t_next, stride=stride, t_start=t)
        parts.append((part, cur_spec))
        y, r, t = float(part.y[-1]), float(part.r[-1]), float(part.t[-1])
        if t_fired is None:
            crossed = y >= trigger_y if approaching_up else y <= trigger_y
            if crossed:
                cur_spec = shift_lm(
                    cur_spec,
                    d_pi=plan.delta if plan.instrument == "inflation" else 0.0,
                    d_ms=plan.delta if plan.instrument == "money-stock" else 0.0)
                t_fired, y_fired = t, y
                events.append({"t": t, "kind": "monetary-step", "y": y,
                               "delta": plan.delta})
    traj = _concat([p for p, _ in parts], FULL_MODE, spec.spec_id)
    traj.jumps = _detect_jumps_segmented(parts, stride)
    return ScenarioResult(traj, events, cur_spec), t_fired, y_fired


def negative_rate_probe(spec: ModelSpec, scenario: Scenario | None,
                        y0: float, r0: float, *,
                        y_range: tuple[float, float], r_range: tuple[float, float],
                        mode: str = REDUCED_MODE, horizon: float = 40.0,
                        touch_tol: float = 1e-6, stride: float | None = None,
                        y_steps: int = 700, scan_n: int = 500) -> dict:
    """Report whether the run's cycle or any jump crosses the zero rate."""
    if scenario is None:
        scenario = Scenario((), horizon)
    result = apply_scenario(spec, scenario, y0, r0, mode, y_range=y_range,
                            r_range=r_range, y_steps=y_steps, scan_n=scan_n,
                            stride=stride, validate=False)
    traj = result.trajectory
    crossings: list[dict] = []
    for j in traj.jumps:
        if (j.r_from > 0.0 > j.r_to) or (j.r_from < 0.0 < j.r_to):
            crossings.append({"t": j.t_start, "kind": "jump-crossing",
                              "level_from": j.r_from, "level_to": j.r_to})
    in_jump = np.zeros(len(traj), dtype=bool)
    for j in traj.jumps:
        in_jump |= (traj.t >= j.t_start - 1e-9) & (traj.t <= j.t_end + 1e-9)
    r = traj.r
    for k in np.nonzero(np.sign(r[:-1]) * np.sign(r[1:]) < 0)[0]:
        if in_jump[k] or in_jump[k + 1]:
            continue
        frac = r[k] / (r[k] - r[k + 1])
        crossings.append({"t": float(traj.t[k] + frac * (traj.t[k + 1] - traj.t[k])),
                          "kind": "drift-crossing",
                          "level_from": float(r[k]), "level_to": float(r[k + 1])})
    crossings.sort(key=lambda c: c["t"])

    cycle = detect_cycle(traj, result.final_spec)
    if cycle is not None:
        min_r = cycle.r_extent[0]
    else:
        tail = r[int(0.2 * len(r)):]
        min_r = float(np.min(tail)) if len(tail) else float(np.min(r))
    touching = abs(min_r) <= touch_tol
    status = "touching" if touching else ("crossing" if crossings else
                                          ("above-zero" if min_r > 0 else "below-zero"))
    return {
        "crossings": crossings,
        "min_rate": min_r,
        "touching": touching,
        "status": status,
        "cycle_period": None if cycle is None else cycle.period,
    }
