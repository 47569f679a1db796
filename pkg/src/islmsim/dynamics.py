"""Slow-fast dynamics: the full two-speed system, its singular limit, and
jump/cycle detection.

The full system integrates income on the slow timescale (scaled by epsilon)
against the fast rate adjustment.  The singular limit slaves the rate to a
stable isocline branch, moves income by the slow flow alone, and transfers
the rate vertically (in zero slow time) whenever the branch ends in a fold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .geometry import Branch, LMIsocline, lm_roots
from .model import ModelSpec, excess_goods, excess_money, excess_money_many, excess_money_slope

__all__ = [
    "IntegrationError",
    "FoldStallError",
    "Trajectory",
    "JumpEvent",
    "CycleSummary",
    "integrate",
    "reduced_simulate",
    "detect_jumps",
    "detect_cycle",
    "attach_to_branch",
    "hausdorff_distance",
    "cycle_points",
    "densify_polyline",
    "excess_money_scale",
]

# Time offset used to keep the pre-jump corner sample strictly before the
# post-jump sample in singular-limit trajectories.
CORNER_DT = 1e-9

FULL_MODE = "full-epsilon"
REDUCED_MODE = "singular-limit"


class IntegrationError(RuntimeError):
    """The integrator failed (step underflow or non-finite state)."""


class FoldStallError(RuntimeError):
    """The slow flow vanished exactly at a fold; the jump is undefined."""


@dataclass(frozen=True)
class JumpEvent:
    t_start: float
    t_end: float
    y_at_jump: float
    r_from: float
    r_to: float
    direction: str  # "up" | "down"

    @property
    def height(self) -> float:
        return abs(self.r_to - self.r_from)


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    r: np.ndarray
    mode: str
    spec_id: str
    jumps: tuple[JumpEvent, ...] = ()

    def __post_init__(self):
        if len(self.t) and np.any(np.diff(self.t) <= 0.0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)

    def slice(self, t0: float, t1: float) -> "Trajectory":
        m = (self.t >= t0) & (self.t <= t1)
        jumps = tuple(j for j in self.jumps if t0 <= j.t_start <= t1)
        return Trajectory(self.t[m], self.y[m], self.r[m], self.mode, self.spec_id, jumps)

    def points(self) -> np.ndarray:
        return np.column_stack([self.y, self.r])


@dataclass(frozen=True)
class CycleSummary:
    period: float
    orientation: str  # "counterclockwise" | "clockwise"
    jumps: tuple[JumpEvent, ...]
    y_turning: tuple[float, ...]
    r_extent: tuple[float, float]
    t_start: float


# ---------------------------------------------------------------------------
# full-system integration

def integrate(spec: ModelSpec, y0: float, r0: float, t_end: float,
              rtol: float = 1e-8, atol: float = 1e-10,
              stride: float | None = None, max_step: float = math.inf,
              t_start: float = 0.0) -> Trajectory:
    """Integrate the two-speed system with an adaptive embedded RK pair.

    Local error control shrinks steps automatically through the fast layers,
    so jumps are resolved without any special handling.  Dense output is
    sampled every `stride` time units (default: horizon / 2000).
    """
    if t_end <= t_start:
        raise ValueError("t_end must exceed t_start")
    if y0 < 0.0:
        raise ValueError("income must start non-negative")
    p = spec.params
    sl = p.epsilon * p.alpha
    fa = p.beta

    def rhs(_t, state):
        y, r = state
        y_eval = y if y > 0.0 else 0.0
        return (sl * excess_goods(y_eval, r, spec),
                fa * excess_money(y_eval, r, spec))

    if stride is None:
        stride = (t_end - t_start) / 2000.0
    n_eval = max(2, int(round((t_end - t_start) / stride)) + 1)
    t_eval = np.linspace(t_start, t_end, n_eval)

    sol = solve_ivp(rhs, (t_start, t_end), (y0, r0), method="RK45",
                    rtol=rtol, atol=atol, t_eval=t_eval, max_step=max_step)
    if not sol.success:
        t_last = sol.t[-1] if len(sol.t) else t_start
        state = sol.y[:, -1] if sol.y.size else (y0, r0)
        raise IntegrationError(
            f"integration failed at t={t_last} (y={state[0]}, r={state[1]}): {sol.message}")
    if not np.all(np.isfinite(sol.y)):
        raise IntegrationError("non-finite state encountered during integration")
    if np.any(sol.y[0] < -1e-9):
        k = int(np.argmax(sol.y[0] < -1e-9))
        raise IntegrationError(
            f"income left the domain (y={sol.y[0][k]} at t={sol.t[k]})")
    return Trajectory(sol.t, sol.y[0], sol.y[1], FULL_MODE, spec.spec_id)


# ---------------------------------------------------------------------------
# singular limit

def attach_to_branch(spec: ModelSpec, isocline: LMIsocline, y: float, r: float
                     ) -> tuple[Branch, float]:
    """Resolve the fast flow from (y, r) to the branch it relaxes onto."""
    roots = lm_roots(y, spec, isocline.r_range, warn=False)
    if not roots:
        raise ValueError(f"no isocline branch exists at income {y}")
    e = excess_money(y, r, spec)
    if e > 0.0:
        above = [x for x in roots if x >= r]
        if not above:
            raise ValueError(f"fast flow from (y={y}, r={r}) escapes the scanned range")
        target = above[0]
    elif e < 0.0:
        below = [x for x in roots if x <= r]
        if not below:
            raise ValueError(f"fast flow from (y={y}, r={r}) escapes the scanned range")
        target = below[-1]
    else:
        target = min(roots, key=lambda x: abs(x - r))
    branch = _branch_with_root(isocline, y, target)
    if branch.stability != "stable":
        raise ValueError(
            f"fast flow from (y={y}, r={r}) lands on an unstable branch; "
            "start from a point attracted to a stable arc")
    return branch, target


def _branch_with_root(isocline: LMIsocline, y: float, r: float) -> Branch:
    best, best_d = None, math.inf
    for b in isocline.branches_at(y):
        d = abs(b.r_at(y) - r)
        if d < best_d:
            best, best_d = b, d
    if best is None:
        raise ValueError(f"no isocline branch covers income {y}")
    return best


def _fold_exit_jump(spec: ModelSpec, isocline: LMIsocline, branch: Branch,
                    end: tuple[str, int | str], travel: float, t: float
                    ) -> tuple[JumpEvent, Branch]:
    """Transfer the state vertically from a fold to the branch that catches it."""
    if end[0] != "fold":
        raise ValueError("branch end is not a fold")
    fold = isocline.folds[end[1]]
    y_f, r_f = fold.y, fold.r
    probe_y = max(y_f + math.copysign(1e-9 * max(1.0, abs(y_f)), travel), 0.0)
    e = excess_money(probe_y, r_f, spec)
    if e == 0.0:
        raise FoldStallError(f"fast flow vanishes at fold (y={y_f}, r={r_f})")
    direction = "up" if e > 0.0 else "down"
    roots = lm_roots(y_f, spec, isocline.r_range, warn=False)
    # exclude the fold's own double root: the excess is quartically flat
    # there, so spurious scan roots can appear within ~1e-5 of the fold rate
    pad = 1e-4
    if direction == "up":
        cands = [x for x in roots if x > r_f + pad]
        landing = min(cands) if cands else None
    else:
        cands = [x for x in roots if x < r_f - pad]
        landing = max(cands) if cands else None
    if landing is None:
        raise ValueError(
            f"malformed isocline: no branch to catch the {direction} jump at "
            f"(y={y_f}, r={r_f})")
    if excess_money_slope(landing, spec) >= 0.0:
        raise ValueError(
            f"malformed isocline: the {direction} jump at (y={y_f}, r={r_f}) "
            f"lands on a non-attracting branch at r={landing}")
    target = _branch_with_root(isocline, y_f, landing)
    return JumpEvent(t, t, y_f, r_f, landing, direction), target


def _slow_flow(spec: ModelSpec, branch: Branch):
    alpha = spec.params.alpha

    def f(_t, state):
        y = float(state[0])
        y_c = min(max(y, branch.y_lo), branch.y_hi)
        return (alpha * excess_goods(max(y_c, 0.0), branch.r_at(y_c), spec),)

    return f


def advance_reduced(spec: ModelSpec, isocline: LMIsocline, branch: Branch,
                    y: float, t: float, t_stop: float, stride: float,
                    ts: list[float], ys: list[float], rs: list[float],
                    jumps: list[JumpEvent]) -> tuple[Branch, float, float, str]:
    """Advance the singular-limit state to t_stop, appending samples in place.

    Returns the final (branch, income, time, status); status is "horizon"
    when t_stop was reached and "domain-exit" when the state drifted off the
    traced income range through a non-fold branch end.
    """
    while t < t_stop - 1e-12:
        y_hi_stop, y_lo_stop = branch.y_hi, branch.y_lo

        def ev_hi(_t, s, stop=y_hi_stop):
            return s[0] - stop

        def ev_lo(_t, s, stop=y_lo_stop):
            return s[0] - stop

        ev_hi.terminal = True
        ev_hi.direction = 1.0
        ev_lo.terminal = True
        ev_lo.direction = -1.0
        sol = solve_ivp(_slow_flow(spec, branch), (t, t_stop), (y,), method="RK45",
                        rtol=1e-10, atol=1e-12, events=[ev_hi, ev_lo],
                        dense_output=True)
        if not sol.success:
            raise IntegrationError(f"slow-flow integration failed: {sol.message}")
        seg_t_end = float(sol.t[-1])
        sample_ts = np.arange(ts[-1] + stride, seg_t_end, stride)
        if len(sample_ts):
            for tt, yv in zip(sample_ts, sol.sol(sample_ts)[0]):
                y_c = min(max(float(yv), branch.y_lo), branch.y_hi)
                ts.append(float(tt))
                ys.append(float(yv))
                rs.append(branch.r_at(y_c))

        hit_hi = len(sol.t_events[0]) > 0
        hit_lo = len(sol.t_events[1]) > 0
        if not (hit_hi or hit_lo):
            # reached t_stop on this branch (equilibrium approach or slow drift)
            y = float(sol.y[0][-1])
            if ts[-1] < t_stop - 1e-12:
                ts.append(t_stop)
                ys.append(y)
                rs.append(branch.r_at(min(max(y, branch.y_lo), branch.y_hi)))
            return branch, y, t_stop, "horizon"

        t_hit = float(sol.t_events[0][0] if hit_hi else sol.t_events[1][0])
        end = branch.hi_end if hit_hi else branch.lo_end
        y_end = branch.y_hi if hit_hi else branch.y_lo
        travel = 1.0 if hit_hi else -1.0
        if end[0] != "fold":
            if t_hit > ts[-1]:
                ts.append(t_hit)
                ys.append(y_end)
                rs.append(branch.r_at(y_end))
            return branch, y_end, t_hit, "domain-exit"
        flow = excess_goods(y_end, branch.r_at(y_end), spec)
        if flow == 0.0:
            raise FoldStallError(
                f"slow flow is exactly zero at the fold (y={y_end}); "
                "the continuation is undefined")
        jump, branch = _fold_exit_jump(spec, isocline, branch, end, travel, t_hit)
        _append_jump(ts, ys, rs, jumps, jump)
        t = t_hit
        y = jump.y_at_jump
    return branch, y, t, "horizon"


def _append_jump(ts: list[float], ys: list[float], rs: list[float],
                 jumps: list[JumpEvent], jump: JumpEvent) -> None:
    corner_t = jump.t_start - CORNER_DT * max(1.0, abs(jump.t_start))
    if corner_t > ts[-1]:
        ts.append(corner_t)
        ys.append(jump.y_at_jump)
        rs.append(jump.r_from)
    ts.append(jump.t_start)
    ys.append(jump.y_at_jump)
    rs.append(jump.r_to)
    jumps.append(jump)


def reduced_simulate(spec: ModelSpec, y0: float, branch0: int | Branch, t_end: float,
                     isocline: LMIsocline, stride: float | None = None,
                     t_start: float = 0.0) -> Trajectory:
    """Singular-limit simulation: slow drift along stable arcs, vertical jumps.

    Stored times are slow time (the epsilon-scaled clock of the full system).
    Each fold passage appends the pre-jump corner, the zero-duration jump
    event, and continues on the branch the fast flow lands on.
    """
    branch = isocline.branches[branch0] if isinstance(branch0, int) else branch0
    if branch.stability != "stable":
        raise ValueError("the starting branch must be stable")
    if not branch.covers(y0):
        raise ValueError(f"income {y0} is outside the starting branch domain")
    if stride is None:
        stride = (t_end - t_start) / 2000.0

    ts: list[float] = [t_start]
    ys: list[float] = [y0]
    rs: list[float] = [branch.r_at(y0)]
    jumps: list[JumpEvent] = []
    advance_reduced(spec, isocline, branch, y0, t_start, t_end, stride,
                    ts, ys, rs, jumps)
    return Trajectory(np.asarray(ts), np.asarray(ys), np.asarray(rs),
                      REDUCED_MODE, spec.spec_id, tuple(jumps))


# ---------------------------------------------------------------------------
# event detection

def detect_jumps(traj: Trajectory, spec: ModelSpec | None = None,
                 jump_min: float | None = None, y_slip: float | None = None,
                 threshold: float | None = None, merge_gap: int = 1
                 ) -> list[JumpEvent]:
    """Find maximal intervals of fast rate motion with nearly frozen income.

    The rate threshold defaults to ten times the typical fast speed implied
    by the trajectory's own money-market excess, with a robust floor based on
    the median sampled speed.
    """
    n = len(traj)
    if n < 2:
        return []
    t, y, r = traj.t, traj.y, traj.r
    dt = np.diff(t)
    rate = np.abs(np.diff(r)) / dt

    if jump_min is None:
        if spec is not None and spec.money.windows:
            jump_min = 0.25 * min(w.q - w.p for w in spec.money.windows)
        else:
            jump_min = 0.05 * max(float(np.ptp(r)), 1e-12)
    if y_slip is None:
        y_slip = 0.02 * max(float(np.ptp(y)), 1e-12) + 1e-9

    if threshold is None:
        med_rate = float(np.median(rate))
        if spec is not None:
            beta = spec.params.beta
            med_excess = float(np.median(np.abs(
                excess_money_many(np.maximum(y, 0.0), r, spec))))
            threshold = max(10.0 * beta * med_excess, 50.0 * med_rate, 1e-12)
        else:
            threshold = max(50.0 * med_rate, 1e-12)

    fast = rate > threshold
    events: list[JumpEvent] = []
    groups: list[tuple[int, int]] = []
    i = 0
    while i < len(fast):
        if fast[i]:
            j = i
            while j + 1 < len(fast) and fast[j + 1]:
                j += 1
            groups.append((i, j))
            i = j + 1
        else:
            i += 1
    merged: list[tuple[int, int]] = []
    for g in groups:
        if merged and g[0] - merged[-1][1] <= merge_gap:
            merged[-1] = (merged[-1][0], g[1])
        else:
            merged.append(g)
    for i0, i1 in merged:
        r_from, r_to = float(r[i0]), float(r[i1 + 1])
        dy = abs(float(y[i1 + 1]) - float(y[i0]))
        if abs(r_to - r_from) < jump_min or dy > y_slip:
            continue
        events.append(JumpEvent(float(t[i0]), float(t[i1 + 1]),
                                0.5 * (float(y[i0]) + float(y[i1 + 1])),
                                r_from, r_to,
                                "up" if r_to > r_from else "down"))
    return events


def detect_cycle(traj: Trajectory, spec: ModelSpec | None = None,
                 radius: float = 1e-4, transient_frac: float = 0.2,
                 jump_min: float | None = None, y_slip: float | None = None
                 ) -> CycleSummary | None:
    """Detect a closed loop by recurrence to a reference point.

    Distances are measured in loop-extent units, so the default ball radius is
    dimensionless.  Returns None when the trajectory never leaves the ball or
    never comes back, which covers equilibrium convergence.
    """
    n = len(traj)
    if n < 3:
        return None
    i0 = min(n - 2, max(0, int(n * transient_frac)))
    t, y, r = traj.t[i0:], traj.y[i0:], traj.r[i0:]
    y_scale = max(float(np.ptp(traj.y)), 1e-12)
    r_scale = max(float(np.ptp(traj.r)), 1e-12)

    # distance from the reference point to each linearly interpolated segment,
    # so sparse sampling cannot step over the recurrence ball
    pts = np.column_stack([(y - y[0]) / y_scale, (r - r[0]) / r_scale])
    seg_a = pts[:-1]
    seg_d = pts[1:] - seg_a
    len2 = (seg_d ** 2).sum(axis=1)
    len2[len2 == 0.0] = 1e-300
    tproj = np.clip(-(seg_a * seg_d).sum(axis=1) / len2, 0.0, 1.0)
    closest = seg_a + tproj[:, None] * seg_d
    dseg = np.hypot(closest[:, 0], closest[:, 1])
    t_seg = t[:-1] + tproj * np.diff(t)

    leave = max(10.0 * radius, 0.05)
    returns: list[float] = []
    away = False
    k = 0
    while k < len(dseg):
        if not away:
            if dseg[k] > leave:
                away = True
            k += 1
            continue
        if dseg[k] < radius:
            j = k
            while j + 1 < len(dseg) and dseg[j + 1] < radius:
                j += 1
            k_min = k + int(np.argmin(dseg[k:j + 1]))
            returns.append(float(t_seg[k_min]))
            away = False
            k = j + 1
        else:
            k += 1
    if not returns:
        return None
    gaps = np.diff(np.concatenate([[t[0]], returns]))
    period = float(np.median(gaps))
    if period <= 0.0:
        return None

    t_loop0 = float(returns[0]) - period if returns else float(t[0])
    t_loop0 = max(t_loop0, float(t[0]))
    window = traj.slice(t_loop0, t_loop0 + period)
    if len(window) < 3:
        return None
    area = _loop_area(window.y, window.r)
    orientation = "counterclockwise" if area > 0.0 else "clockwise"

    if traj.jumps:
        jumps = tuple(j for j in traj.jumps
                      if t_loop0 <= j.t_start <= t_loop0 + period)
    else:
        jumps = tuple(detect_jumps(window, spec, jump_min=jump_min, y_slip=y_slip))
    y_turning = tuple(sorted({round(j.y_at_jump, 9) for j in jumps}))
    r_extent = (float(np.min(window.r)), float(np.max(window.r)))
    return CycleSummary(period, orientation, jumps, y_turning, r_extent, t_loop0)


def _loop_area(y: np.ndarray, r: np.ndarray) -> float:
    # signed area of the closed loop via the circulation of Y dR
    y_c = np.concatenate([y, y[:1]])
    r_c = np.concatenate([r, r[:1]])
    return float(np.sum(0.5 * (y_c[:-1] + y_c[1:]) * np.diff(r_c)))


# ---------------------------------------------------------------------------
# helpers

def cycle_points(traj: Trajectory, summary: CycleSummary,
                 max_gap: float | None = 0.002) -> np.ndarray:
    """(Y, R) points along one detected loop, including jump verticals.

    Segments longer than `max_gap` (measured relative to the loop extents)
    are subdivided so that instantaneous jumps and sparsely sampled fast
    layers contribute full polylines, not just their endpoints.
    """
    window = traj.slice(summary.t_start, summary.t_start + summary.period)
    pts = window.points()
    if max_gap is None or len(pts) < 2:
        return pts
    return densify_polyline(pts, max_gap, closed=True)


def densify_polyline(pts: np.ndarray, max_step: float, closed: bool = False) -> np.ndarray:
    """Subdivide polyline segments to at most `max_step` in extent-scaled units."""
    scale = pts.max(axis=0) - pts.min(axis=0)
    scale[scale == 0.0] = 1.0
    seq = np.vstack([pts, pts[:1]]) if closed else pts
    out = [seq[0]]
    for a, b in zip(seq[:-1], seq[1:]):
        gap = math.hypot(*((b - a) / scale))
        n = max(1, int(math.ceil(gap / max_step)))
        for k in range(1, n + 1):
            out.append(a + (b - a) * (k / n))
    return np.asarray(out)


def hausdorff_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two planar point sets."""
    if len(a) == 0 or len(b) == 0:
        raise ValueError("point sets must be non-empty")

    def directed(p, q):
        worst = 0.0
        for chunk in np.array_split(p, max(1, len(p) // 512)):
            dists = np.sqrt(((chunk[:, None, :] - q[None, :, :]) ** 2).sum(axis=2))
            worst = max(worst, float(dists.min(axis=1).max()))
        return worst

    return max(directed(a, b), directed(b, a))


def excess_money_scale(spec: ModelSpec, y_range: tuple[float, float],
                       r_range: tuple[float, float], n: int = 101) -> float:
    """Magnitude scale of the money-market excess over a rectangle."""
    ys = np.linspace(max(y_range[0], 0.0), y_range[1], n)
    rs = np.linspace(r_range[0], r_range[1], n)
    yy, rr = np.meshgrid(ys, rs, indexing="ij")
    return float(np.max(np.abs(excess_money_many(yy, rr, spec))))
