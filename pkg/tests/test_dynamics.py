import numpy as np
import pytest

from islmsim.dynamics import (
    Trajectory,
    attach_to_branch,
    cycle_points,
    densify_polyline,
    detect_cycle,
    detect_jumps,
    excess_money_scale,
    hausdorff_distance,
    integrate,
    reduced_simulate,
)
from islmsim.geometry import find_equilibria, trace_lm_isocline
from islmsim.model import excess_money, excess_money_many
from islmsim.reference import no_trap_spec, steep_is_spec


# ---------------------------------------------------------------------------
# full-system integration

def test_trajectory_requires_increasing_time():
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 1.0, 1.0]), np.zeros(3), np.zeros(3),
                   "full-epsilon", "x")


def test_integration_stays_at_stable_equilibrium(ref_domain):
    spec = no_trap_spec()
    eq = find_equilibria(spec, ref_domain["y_range"])[0]
    traj = integrate(spec, eq.y, eq.r, 500.0, stride=1.0)
    assert np.max(np.abs(traj.y - eq.y)) < 1e-6
    assert np.max(np.abs(traj.r - eq.r)) < 1e-6


def test_integration_self_convergence(ref_domain):
    spec = no_trap_spec()
    final = []
    for factor in (1.0, 0.5):
        traj = integrate(spec, 2.0, 0.02, 300.0, rtol=1e-8 * factor,
                         atol=1e-10 * factor, stride=1.0)
        final.append((traj.y[-1], traj.r[-1]))
    dy = abs(final[0][0] - final[1][0])
    dr = abs(final[0][1] - final[1][1])
    assert dy < 10 * 1e-8 * max(1.0, abs(final[0][0]))
    assert dr < 10 * 1e-8


def test_integration_rejects_bad_horizon(ref_spec):
    with pytest.raises(ValueError):
        integrate(ref_spec, 1.0, 0.01, 0.0)


# ---------------------------------------------------------------------------
# singular limit

def test_reduced_cycle_skeleton(ref_spec, ref_isocline, ref_reduced_cycle):
    traj, cycle = ref_reduced_cycle
    assert len(traj.jumps) >= 4
    fold_ys = sorted(f.y for f in ref_isocline.folds)
    for j in traj.jumps:
        nearest = min(fold_ys, key=lambda fy: abs(fy - j.y_at_jump))
        assert j.y_at_jump == pytest.approx(nearest, abs=1e-9)
        # both jump endpoints sit on the isocline at the same income
        assert abs(excess_money(j.y_at_jump, j.r_from, ref_spec)) < 1e-10
        assert abs(excess_money(j.y_at_jump, j.r_to, ref_spec)) < 1e-10
    ups = {j.y_at_jump for j in traj.jumps if j.direction == "up"}
    downs = {j.y_at_jump for j in traj.jumps if j.direction == "down"}
    assert ups == {max(fold_ys)}
    assert downs == {min(fold_ys)}


def test_reduced_requires_stable_branch(ref_spec, ref_isocline):
    unstable = next(b for b in ref_isocline.branches if b.stability == "unstable")
    with pytest.raises(ValueError):
        reduced_simulate(ref_spec, 2.0, unstable, 5.0, ref_isocline)


def test_reduced_converges_to_equilibrium_when_is_crosses_the_arc(ref_domain):
    spec = steep_is_spec()
    iso = trace_lm_isocline(spec, ref_domain["y_range"], 700,
                            ref_domain["r_range"], 500)
    eqs = find_equilibria(spec, ref_domain["y_range"], iso)
    e_low = next(e for e in eqs if e.classification.startswith("stable")
                 and e.y > 2.5)
    branch, _ = attach_to_branch(spec, iso, 1.6, 0.0)
    traj = reduced_simulate(spec, 1.6, branch, 60.0, iso)
    assert len(traj.jumps) == 0
    # parks at the crossing, up to the branch interpolation resolution
    assert traj.y[-1] == pytest.approx(e_low.y, abs=1e-3)
    assert abs(traj.y[-1] - traj.y[-2]) < 1e-9
    assert detect_cycle(traj, spec) is None


def test_attach_resolves_fast_flow_direction(ref_spec, ref_isocline):
    # between the unstable arc and the top branch the flow relaxes upward
    branch, r = attach_to_branch(ref_spec, ref_isocline, 2.0, 0.09)
    assert branch.stability == "stable"
    assert r > 0.09
    # below the unstable arc it relaxes down to the bottom branch
    branch2, r2 = attach_to_branch(ref_spec, ref_isocline, 2.0, 0.03)
    assert r2 < 0.03
    assert branch2.index != branch.index


# ---------------------------------------------------------------------------
# jump detection

def test_no_jumps_at_equilibrium(ref_domain):
    spec = no_trap_spec()
    eq = find_equilibria(spec, ref_domain["y_range"])[0]
    traj = integrate(spec, eq.y, eq.r, 200.0, stride=0.5)
    assert detect_jumps(traj, spec) == []


def test_two_jumps_per_reduced_period(ref_spec, ref_reduced_cycle):
    traj, cycle = ref_reduced_cycle
    events = detect_jumps(traj, ref_spec)
    assert len(events) == len(traj.jumps)
    per_period = [j for j in events
                  if cycle.t_start <= j.t_start <= cycle.t_start + cycle.period]
    assert len(per_period) == 2
    assert {j.direction for j in per_period} == {"up", "down"}


def test_full_run_jump_directions_match_reduced(ref_spec, eps_ladder, ref_isocline):
    spec, traj, cycle = eps_ladder[1e-3]
    assert len(cycle.jumps) == 2
    fold_ys = sorted(f.y for f in ref_isocline.folds)
    for j in cycle.jumps:
        if j.direction == "up":
            assert j.y_at_jump == pytest.approx(max(fold_ys), rel=0.02)
        else:
            assert j.y_at_jump == pytest.approx(min(fold_ys), rel=0.02)


# ---------------------------------------------------------------------------
# cycle detection

def test_cycle_counterclockwise_and_reversal(ref_reduced_cycle):
    traj, cycle = ref_reduced_cycle
    assert cycle.orientation == "counterclockwise"
    # reversing the arrow of time flips the orientation
    t_rev = traj.t[-1] - traj.t[::-1]
    keep = np.concatenate([[True], np.diff(t_rev) > 0])
    rev = Trajectory(t_rev[keep], traj.y[::-1][keep], traj.r[::-1][keep],
                     traj.mode, traj.spec_id)
    back = detect_cycle(rev)
    assert back is not None
    assert back.orientation == "clockwise"


def test_cycle_orientation_start_invariance(ref_spec, ref_isocline):
    for y0, r0 in ((1.5, 0.01), (2.6, 0.12), (3.0, 0.005)):
        branch, _ = attach_to_branch(ref_spec, ref_isocline, y0, r0)
        traj = reduced_simulate(ref_spec, y0, branch, 40.0, ref_isocline)
        cycle = detect_cycle(traj, ref_spec)
        assert cycle is not None
        assert cycle.orientation == "counterclockwise"
        assert cycle.period == pytest.approx(6.011, rel=0.01)


def test_cycle_orientation_tolerance_invariance(ref_reduced_cycle):
    traj, baseline = ref_reduced_cycle
    for radius, frac in ((1e-4, 0.2), (5e-4, 0.2), (1e-4, 0.35), (2e-5, 0.1)):
        cycle = detect_cycle(traj, radius=radius, transient_frac=frac)
        assert cycle is not None
        assert cycle.orientation == baseline.orientation
        assert cycle.period == pytest.approx(baseline.period, rel=1e-3)


def test_no_cycle_without_trap_window(ref_domain):
    spec = no_trap_spec()
    for y0, r0 in ((0.5, 0.0), (2.0, 0.1), (4.8, -0.02)):
        traj = integrate(spec, y0, r0, 800.0, stride=1.0)
        assert detect_cycle(traj, spec) is None


def test_reduced_and_full_periods_agree(ref_reduced_cycle, eps_ladder):
    _, reduced_cycle = ref_reduced_cycle
    for eps, (_, _, cycle) in eps_ladder.items():
        assert cycle.period * eps == pytest.approx(reduced_cycle.period, rel=0.06)


# ---------------------------------------------------------------------------
# slow-fast structure

def test_slow_manifold_attachment(ref_spec, ref_domain, eps_ladder):
    scale = excess_money_scale(ref_spec, ref_domain["y_range"], ref_domain["r_range"])
    for eps in (1e-3, 1e-4):
        spec, traj, _ = eps_ladder[eps]
        bound = 10.0 * np.sqrt(eps) * scale
        mask = np.ones(len(traj), dtype=bool)
        pad = 20.0 * eps / 1e-3
        for j in detect_jumps(traj, spec):
            mask &= ~((traj.t >= j.t_start - pad) & (traj.t <= j.t_end + pad))
        resid = np.abs(excess_money_many(np.maximum(traj.y[mask], 0.0),
                                         traj.r[mask], spec))
        assert float(resid.max()) < bound


def test_jump_verticality_shrinks_with_epsilon(eps_ladder):
    slips = {}
    for eps in (1e-2, 1e-4):
        spec, traj, cycle = eps_ladder[eps]
        slips[eps] = max(abs(j.y_at_jump * 0.0) +
                         _jump_y_slip(traj, j) for j in cycle.jumps)
    assert slips[1e-4] < slips[1e-2]


def _jump_y_slip(traj, jump):
    m = (traj.t >= jump.t_start) & (traj.t <= jump.t_end)
    return float(np.ptp(traj.y[m])) if m.any() else 0.0


# ---------------------------------------------------------------------------
# geometry helpers

def test_hausdorff_basics():
    a = np.array([[0.0, 0.0], [1.0, 0.0]])
    b = np.array([[0.0, 0.5], [1.0, 0.5]])
    assert hausdorff_distance(a, a) == 0.0
    assert hausdorff_distance(a, b) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        hausdorff_distance(a, np.empty((0, 2)))


def test_densify_polyline_bounds_gaps():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
    dense = densify_polyline(pts, 0.05, closed=False)
    scaled = dense / np.array([1.0, 1.0])
    steps = np.hypot(*np.diff(scaled, axis=0).T)
    assert steps.max() <= 0.05 + 1e-12


def test_cycle_points_include_jump_verticals(ref_reduced_cycle):
    traj, cycle = ref_reduced_cycle
    pts = cycle_points(traj, cycle)
    up = next(j for j in cycle.jumps if j.direction == "up")
    r_probe = 0.5 * (up.r_from + up.r_to)
    near = pts[np.abs(pts[:, 0] - up.y_at_jump) < 1e-3]
    assert np.min(np.abs(near[:, 1] - r_probe)) < 5e-3
