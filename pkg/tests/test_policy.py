import numpy as np
import pytest

from islmsim.dynamics import attach_to_branch, reduced_simulate
from islmsim.geometry import is_curve, lm_roots, shift_lm, trace_lm_isocline
from islmsim.model import excess_money
from islmsim.policy import (
    FiscalDrive,
    FiscalShift,
    MonetaryStep,
    Scenario,
    ScenarioError,
    apply_scenario,
    is_shift_equivalence_check,
    negative_rate_probe,
    plan_stabilization,
    run_with_controller,
)
from islmsim.reference import reference_spec


@pytest.fixture
def kw(ref_domain):
    return dict(y_range=ref_domain["y_range"], r_range=ref_domain["r_range"])


@pytest.fixture
def lower_fold(ref_isocline):
    return next(f for f in ref_isocline.folds if f.kind == "lower-knee")


# ---------------------------------------------------------------------------
# scenario mechanics

def test_scenario_validation():
    with pytest.raises(ScenarioError):
        Scenario((FiscalDrive(2.0, 1.0, 3.0),), 5.0)  # inverted interval
    with pytest.raises(ScenarioError):
        Scenario((MonetaryStep(9.0),), 5.0)  # beyond horizon
    with pytest.raises(ScenarioError):
        Scenario((MonetaryStep(1.0), MonetaryStep(1.0)), 5.0)  # equal times
    with pytest.raises(ScenarioError):
        Scenario((FiscalDrive(0.0, 2.0, 3.0), FiscalDrive(1.0, 3.0, 2.0)), 5.0)


def test_empty_scenario_matches_plain_simulation(ref_spec, ref_isocline, kw):
    branch, r0 = attach_to_branch(ref_spec, ref_isocline, 1.5, 0.01)
    plain = reduced_simulate(ref_spec, 1.5, branch, 8.0, ref_isocline)
    result = apply_scenario(ref_spec, Scenario((), 8.0), 1.5, r0,
                            "singular-limit", validate=False, **kw)
    traj = result.trajectory
    assert len(traj.jumps) == len(plain.jumps)
    for a, b in zip(traj.jumps, plain.jumps):
        assert a.t_start == pytest.approx(b.t_start, abs=1e-9)
        assert a.y_at_jump == pytest.approx(b.y_at_jump, abs=1e-12)
    # same final state
    assert traj.y[-1] == pytest.approx(plain.y[-1], abs=1e-9)
    assert traj.r[-1] == pytest.approx(plain.r[-1], abs=1e-9)


def test_drive_across_upper_fold_has_one_upward_jump(ref_spec, ref_isocline, kw,
                                                     lower_fold):
    ramp = FiscalDrive(0.0, 3.0, y_to=3.45, y_from=2.9)
    result = apply_scenario(ref_spec, Scenario((ramp,), 3.0), 2.9, 0.02,
                            "singular-limit", validate=False, **kw)
    assert len(result.jumps) == 1
    j = result.jumps[0]
    assert j.direction == "up"
    assert j.y_at_jump == pytest.approx(lower_fold.y, abs=1e-9)
    assert j.r_from == pytest.approx(lower_fold.r, abs=1e-9)


def test_monetary_step_shifts_branches_exactly(ref_spec, ref_isocline, kw):
    delta = 0.015
    steps = (MonetaryStep(3.0, d_pi=delta),)
    result = apply_scenario(ref_spec, Scenario(steps, 6.0), 1.5, 0.01,
                            "singular-limit", validate=False, **kw)
    shifted = result.final_spec
    assert shifted.params.expected_inflation == pytest.approx(
        ref_spec.params.expected_inflation + delta)
    wide = (kw["r_range"][0] - 2 * delta, kw["r_range"][1])
    for y in (1.4, 2.2, 3.0):
        base = lm_roots(y, ref_spec, wide)
        moved = lm_roots(y, shifted, wide)
        for a, b in zip(base, moved):
            assert b - a == pytest.approx(-delta, abs=1e-9)
    # income is continuous across the step; only the rate re-slaves, which is
    # recorded as a reattach event at the step instant
    reattach = [e for e in result.events if e["kind"] == "reattach"]
    assert len(reattach) == 1
    assert reattach[0]["t"] == pytest.approx(3.0, abs=1e-12)
    t = result.trajectory.t
    corner = np.nonzero(np.diff(t) < 1e-6)[0]
    assert len(corner) == 1
    k = int(corner[0])
    assert result.trajectory.y[k + 1] == result.trajectory.y[k]
    assert result.trajectory.r[k + 1] != result.trajectory.r[k]


def test_intermediate_spec_validation_names_the_step(ref_spec, kw):
    steps = (MonetaryStep(1.0, d_ms=-1.99),)  # stock would drop to 0.01, fine
    apply_scenario(ref_spec, Scenario(steps, 2.0), 1.5, 0.01,
                   "singular-limit", validate=False, **kw)
    with pytest.raises(ScenarioError, match="step 0"):
        apply_scenario(ref_spec, Scenario((MonetaryStep(1.0, d_ms=-2.5),), 2.0),
                       1.5, 0.01, "singular-limit", validate=False, **kw)


def test_order_sensitivity_of_money_step_and_fold_crossing(ref_spec, kw, lower_fold):
    # the drive crosses the fold at t = 2.0 without intervention
    ramp = FiscalDrive(0.0, 4.0, y_to=3.65, y_from=2.85)
    slope = (3.65 - 2.85) / 4.0
    t_cross = (lower_fold.y - 2.85) / slope
    assert 1.0 < t_cross < 3.2
    early = apply_scenario(
        ref_spec, Scenario((ramp, MonetaryStep(1.0, d_ms=0.25)), 4.0),
        2.85, 0.02, "singular-limit", validate=False, **kw)
    late = apply_scenario(
        ref_spec, Scenario((ramp, MonetaryStep(3.2, d_ms=0.25)), 4.0),
        2.85, 0.02, "singular-limit", validate=False, **kw)
    n_early = len([j for j in early.jumps])
    n_late = len([j for j in late.jumps])
    assert n_early == 0   # the fold moved out of the ramp's reach in time
    assert n_late == 1    # the jump had already fired


# ---------------------------------------------------------------------------
# fiscal representations

def test_is_shift_equivalence_values(ref_spec):
    rep = is_shift_equivalence_check(ref_spec, 0.0)
    assert rep["predicted_shift"] == 0.0
    assert rep["consistent"]
    rep = is_shift_equivalence_check(ref_spec, 0.15)
    assert rep["predicted_shift"] == pytest.approx(0.01)
    assert rep["max_error"] < 1e-15
    assert rep["consistent"]


def test_fiscal_shift_moves_is_curve_only(ref_spec, kw):
    result = apply_scenario(ref_spec, Scenario((FiscalShift(1.0, 0.15),), 2.0),
                            1.5, 0.01, "singular-limit", validate=False, **kw)
    shifted = result.final_spec
    assert is_curve(shifted).intercept - is_curve(ref_spec).intercept \
        == pytest.approx(0.01)
    for y in (1.0, 2.5):
        assert lm_roots(y, shifted, kw["r_range"]) == \
            lm_roots(y, ref_spec, kw["r_range"])


# ---------------------------------------------------------------------------
# stabilization

def test_inflation_plan_is_exact_jump_height(ref_spec, ref_isocline, lower_fold, kw):
    plan = plan_stabilization(ref_spec, lower_fold, "inflation", ref_isocline)
    landing = [r for r in lm_roots(lower_fold.y, ref_spec, kw["r_range"])
               if r > lower_fold.r + 1e-6]
    assert plan.delta == pytest.approx(min(landing) - lower_fold.r, abs=1e-12)
    assert plan.matched
    assert plan.mode == "branch-match"
    assert plan.residual < 1e-8
    # shifting down to catch an upward jump: positive delta
    assert plan.jump_direction == "up"
    assert plan.delta > 0.0
    # verify by retrace: the shifted isocline's top branch passes through the
    # fold point
    shifted = shift_lm(ref_spec, d_pi=plan.delta)
    assert abs(excess_money(lower_fold.y, lower_fold.r, shifted)) < 1e-10


def test_fall_protection_plan_has_negative_delta(ref_spec, ref_isocline, kw):
    upper = next(f for f in ref_isocline.folds if f.kind == "upper-knee")
    plan = plan_stabilization(ref_spec, upper, "inflation", ref_isocline)
    assert plan.jump_direction == "down"
    assert plan.delta < 0.0  # shift the curve upwards to catch a fall
    assert plan.matched


def test_money_plan_reports_structural_no_solution(ref_spec, ref_isocline,
                                                   lower_fold):
    plan = plan_stabilization(ref_spec, lower_fold, "money-stock", ref_isocline,
                              protect_to_y=3.6)
    assert not plan.matched
    assert plan.mode == "fold-relocation"
    assert "no stock change" in plan.diagnosis
    # the fallback delta relocates the fold exactly to the protected income
    assert plan.delta == pytest.approx(
        excess_money(3.6, lower_fold.r, ref_spec), abs=1e-12)
    assert plan.delta > 0.0


def test_controller_prevents_the_jump(ref_spec, lower_fold, kw):
    ramp = FiscalDrive(0.0, 3.5, y_to=3.5)
    for instrument, protect in (("inflation", None), ("money-stock", 3.6)):
        iso = trace_lm_isocline(ref_spec, kw["y_range"], 700, kw["r_range"], 500)
        plan = plan_stabilization(ref_spec, lower_fold, instrument, iso,
                                  protect_to_y=protect)
        report = run_with_controller(ref_spec, ramp, plan, 2.8, 0.02,
                                     mode="singular-limit", margin_frac=0.05,
                                     **kw)
        assert report.jumps_uncontrolled == 1
        assert report.jumps_controlled == 0
        assert not report.controller_late
        assert report.r_band_controlled <= abs(
            plan.r_target - lower_fold.r) + 1e-9
        assert report.y_fired == pytest.approx(0.95 * lower_fold.y, abs=1e-6)
        assert plan.fired  # the firing is logged on the plan


def test_margin_zero_full_mode_is_flagged_late(ref_spec, ref_isocline,
                                               lower_fold, kw):
    plan = plan_stabilization(ref_spec, lower_fold, "inflation", ref_isocline)
    spec = reference_spec(epsilon=1e-3)
    ramp = FiscalDrive(0.0, 50.0, y_to=3.5)
    report = run_with_controller(spec, ramp, plan, 2.8, 0.0247,
                                 mode="full-epsilon", margin_frac=0.0,
                                 horizon=50.0, stride=0.05, monitor_stride=8.0,
                                 **kw)
    assert report.controller_late
    assert any(j.t_start <= report.t_fired for j in report.controlled.jumps)


# ---------------------------------------------------------------------------
# negative-rate probe

def test_probe_reports_no_crossing_above_zero(ref_spec, kw):
    report = negative_rate_probe(ref_spec, None, 1.5, 0.01, horizon=40.0, **kw)
    assert report["status"] == "above-zero"
    assert report["crossings"] == []
    assert report["min_rate"] > 0.0


def test_probe_reports_crossing_after_inflation_shift(ref_spec, kw):
    low = shift_lm(ref_spec, d_pi=0.008)
    report = negative_rate_probe(low, None, 1.5, 0.01, horizon=40.0, **kw)
    assert report["min_rate"] < 0.0
    kinds = {c["kind"] for c in report["crossings"]}
    assert "jump-crossing" in kinds
    jump_cross = next(c for c in report["crossings"] if c["kind"] == "jump-crossing")
    assert jump_cross["level_from"] > 0.0 > jump_cross["level_to"]


def test_probe_touching_classification(ref_spec, kw):
    base = negative_rate_probe(ref_spec, None, 1.5, 0.01, horizon=40.0, **kw)
    touched = shift_lm(ref_spec, d_pi=base["min_rate"])
    report = negative_rate_probe(touched, None, 1.5, 0.01, horizon=40.0,
                                 touch_tol=1e-6, **kw)
    assert report["touching"]
    assert report["status"] == "touching"
