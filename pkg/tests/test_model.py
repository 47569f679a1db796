import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from islmsim.model import (
    ConstructionError,
    ISBlock,
    ModelDomainError,
    ModelParams,
    ModelSpec,
    TrapWindow,
    build_three_phase_money,
    excess_goods,
    excess_money,
    short_rate,
    validate_properties,
)
from islmsim.reference import reference_spec, two_window_spec

from oracles import dense_scan_roots


def make_params(**over):
    base = dict(alpha=1.0, beta=0.25, epsilon=1e-3, m_stock=2.0,
                maturity_premium=0.02, expected_inflation=0.02)
    base.update(over)
    return ModelParams(**base)


# ---------------------------------------------------------------------------
# short rate and goods market

def test_short_rate_values():
    assert short_rate(0.05, make_params(maturity_premium=0.02, expected_inflation=0.02)) == 0.05
    assert short_rate(0.0, make_params(maturity_premium=0.0, expected_inflation=0.0)) == 0.0
    # negative long rate still yields a positive short rate
    assert short_rate(-0.01, make_params(maturity_premium=0.01, expected_inflation=0.04)) == pytest.approx(0.02)


@pytest.fixture
def example_is_spec():
    block = ISBlock(i0=2.0, i_y=0.3, i_r=10.0, s0=0.5, s_y=0.5, s_r=5.0)
    money = build_three_phase_money(0.5, 0.1, 20.0, 20.0, 2.2, 0.5, [])
    return ModelSpec(params=make_params(), is_block=block, money=money)


def test_excess_goods_direct_evaluation(example_is_spec):
    assert excess_goods(0.0, 0.0, example_is_spec) == pytest.approx(1.5)
    assert excess_goods(10.0, 0.0, example_is_spec) == pytest.approx(-0.5)


def test_excess_goods_vanishes_on_is_curve(example_is_spec):
    for y in (0.0, 1.0, 3.7, 7.5, 12.0):
        r = (1.5 - 0.2 * y) / 15.0
        assert excess_goods(y, r, example_is_spec) == pytest.approx(0.0, abs=1e-14)


def test_excess_functions_reject_negative_income(example_is_spec):
    with pytest.raises(ModelDomainError):
        excess_goods(-0.5, 0.0, example_is_spec)
    with pytest.raises(ModelDomainError):
        excess_money(-0.5, 0.0, example_is_spec)


# ---------------------------------------------------------------------------
# three-phase money construction

def test_no_window_slope_is_constant():
    money = build_three_phase_money(0.5, 0.1, 20.0, 20.0, 2.2, 0.5, [])
    for i in np.linspace(-0.05, 0.3, 997):
        d_l, d_m = money.slope_parts(float(i))
        assert d_l == -20.0
        assert d_m == 20.0


def test_one_window_sign_pattern():
    money = build_three_phase_money(
        0.5, 0.1, 20.0, 20.0, 2.2, 0.5,
        [TrapWindow(p=0.04, q=0.08, amp_l=15.0, amp_m=15.0)])
    d_p = money.slope_parts(0.04)
    d_q = money.slope_parts(0.08)
    assert d_p == (0.0, 0.0)
    assert d_q == (0.0, 0.0)
    inside = np.linspace(0.04, 0.08, 1001)[1:-1]
    d_l_in, d_m_in = money.slope_parts_many(inside)
    assert np.all(d_l_in > 0.0)
    assert np.all(d_m_in < 0.0)
    outside = np.concatenate([np.linspace(-0.02, 0.04, 500, endpoint=False),
                              np.linspace(0.0801, 0.3, 500)])
    d_l_out, d_m_out = money.slope_parts_many(outside)
    assert np.all(d_l_out < 0.0)
    assert np.all(d_m_out > 0.0)


def test_two_window_sign_pattern():
    spec = two_window_spec()
    money = spec.money
    signs = []
    grid = np.linspace(0.0, 0.2, 40001)
    d_l, _ = money.slope_parts_many(grid)
    sign = np.sign(d_l)
    # compress consecutive identical signs, dropping exact zeros between runs
    compressed = [sign[0]]
    for s in sign[1:]:
        if s != compressed[-1]:
            compressed.append(s)
    nonzero = [s for s in compressed if s != 0]
    assert nonzero == [-1, 1, -1, 1, -1]
    for w in money.windows:
        assert money.slope_parts(w.p) == (0.0, 0.0)
        assert money.slope_parts(w.q) == (0.0, 0.0)


def test_endpoint_slopes_are_exact_zeros():
    for spec in (reference_spec(), two_window_spec()):
        for w in spec.money.windows:
            for i in (w.p, w.q):
                d_l, d_m = spec.money.slope_parts(i)
                assert abs(d_l) < 1e-12
                assert abs(d_m) < 1e-12


def test_levels_are_continuously_differentiable():
    spec = two_window_spec()
    money = spec.money
    h = 1e-7
    grid = np.linspace(-0.02, 0.25, 1513)
    for i in grid:
        f_hi = money.level_parts(float(i) + h)
        f_lo = money.level_parts(float(i) - h)
        fd_l = (f_hi[0] - f_lo[0]) / (2 * h)
        fd_m = (f_hi[1] - f_lo[1]) / (2 * h)
        d_l, d_m = money.slope_parts(float(i))
        assert fd_l == pytest.approx(d_l, abs=5e-6)
        assert fd_m == pytest.approx(d_m, abs=5e-6)


def test_construction_rejections():
    with pytest.raises(ConstructionError):
        TrapWindow(p=0.08, q=0.04, amp_l=1.0, amp_m=1.0)  # unsorted bounds
    with pytest.raises(ConstructionError):
        TrapWindow(p=0.04, q=0.08, amp_l=0.0, amp_m=1.0)  # no sign reversal
    with pytest.raises(ConstructionError):
        build_three_phase_money(0.5, 0.1, 20.0, 20.0, 2.2, 0.5, [
            TrapWindow(0.04, 0.08, 15.0, 15.0),
            TrapWindow(0.06, 0.12, 15.0, 15.0),  # overlap
        ])
    with pytest.raises(ConstructionError):
        build_three_phase_money(0.5, 0.1, -20.0, 20.0, 2.2, 0.5, [])
    with pytest.raises(ConstructionError):
        make_params(epsilon=-1.0)
    with pytest.raises(ConstructionError):
        make_params(m_stock=0.0)


def test_slow_fast_flag():
    assert make_params(epsilon=1e-3).is_slow_fast
    assert not make_params(epsilon=0.5).is_slow_fast


# ---------------------------------------------------------------------------
# rate-dependence invariants

@settings(max_examples=60, deadline=None)
@given(r=st.floats(-0.1, 0.3), delta=st.floats(-0.1, 0.1), y=st.floats(0.0, 6.0))
def test_money_market_depends_on_rate_only_through_short_rate(r, delta, y):
    spec = reference_spec()
    p = spec.params
    shifted = ModelParams(alpha=p.alpha, beta=p.beta, epsilon=p.epsilon,
                          m_stock=p.m_stock, maturity_premium=p.maturity_premium,
                          expected_inflation=p.expected_inflation + delta)
    spec2 = ModelSpec(params=shifted, is_block=spec.is_block, money=spec.money)
    assert excess_money(y, r, spec) == pytest.approx(
        excess_money(y, r - delta, spec2), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(i=st.floats(-0.05, 0.3))
def test_scalar_and_vector_money_paths_agree(i):
    money = reference_spec().money
    f_l, f_m = money.level_parts(i)
    v_l, v_m = money.level_parts_many(np.array([i]))
    assert f_l == v_l[0]
    assert f_m == v_m[0]
    d_l, d_m = money.slope_parts(i)
    w_l, w_m = money.slope_parts_many(np.array([i]))
    assert d_l == w_l[0]
    assert d_m == w_m[0]


def test_excess_money_monotonicity_pattern(ref_spec):
    offset = ref_spec.params.maturity_premium - ref_spec.params.expected_inflation
    w = ref_spec.money.windows[0]
    h = 1e-8
    inside = np.linspace(w.p + 1e-4, w.q - 1e-4, 101) + offset
    outside = np.concatenate([np.linspace(-0.04, w.p - 1e-4, 101),
                              np.linspace(w.q + 1e-4, 0.2, 101)]) + offset
    for r in inside:
        fd = (excess_money(2.0, r + h, ref_spec) - excess_money(2.0, r - h, ref_spec)) / (2 * h)
        assert fd > 0.0
    for r in outside:
        fd = (excess_money(2.0, r + h, ref_spec) - excess_money(2.0, r - h, ref_spec)) / (2 * h)
        assert fd < 0.0


def test_excess_money_sign_far_from_branches(ref_spec, ref_domain):
    # above every branch the excess is negative, below the lowest positive
    roots = dense_scan_roots(ref_spec, 0.5, ref_domain["r_range"], n=20_000)
    assert len(roots) == 1
    assert excess_money(0.5, roots[0] + 0.05, ref_spec) < 0.0
    assert excess_money(0.5, roots[0] - 0.02, ref_spec) > 0.0


def test_excess_money_vanishes_on_branch_samples(ref_spec, ref_isocline):
    for b in ref_isocline.branches:
        take = slice(None, None, max(1, len(b.ys) // 40))
        for y, r in zip(b.ys[take], b.rs[take]):
            assert abs(excess_money(float(y), float(r), ref_spec)) < 1e-10


# ---------------------------------------------------------------------------
# property validation

def test_reference_spec_passes_validation(ref_spec, ref_domain):
    report = validate_properties(ref_spec, ref_domain["y_range"],
                                 ref_domain["r_range"], 200)
    assert report.passed
    assert all(c.passed for c in report.conditions)


def test_validation_rejects_small_grid(ref_spec, ref_domain):
    report = validate_properties(ref_spec, ref_domain["y_range"],
                                 ref_domain["r_range"], 10)
    assert not report.passed


def test_broken_investment_slope_is_diagnosed(ref_spec, ref_domain):
    bad = ModelSpec(
        params=ref_spec.params,
        is_block=ISBlock(i0=2.0, i_y=1.2, i_r=10.0, s0=0.5, s_y=0.5, s_r=5.0),
        money=ref_spec.money)
    report = validate_properties(bad, ref_domain["y_range"], ref_domain["r_range"], 120)
    assert not report.passed
    failed = {c.condition for c in report.failures()}
    assert "dI_dY < 1" in failed
    worst = next(c for c in report.failures() if c.condition == "dI_dY < 1")
    assert math.isfinite(worst.worst_point[0])


def test_broken_income_response_ordering_is_diagnosed(ref_spec, ref_domain):
    money = build_three_phase_money(0.1, 0.5, 20.0, 20.0, 2.2, 0.5,
                                    ref_spec.money.windows)
    bad = ModelSpec(params=ref_spec.params, is_block=ref_spec.is_block, money=money)
    report = validate_properties(bad, ref_domain["y_range"], ref_domain["r_range"], 120)
    assert not report.passed
    assert "dM_dY < dL_dY" in {c.condition for c in report.failures()}


def test_validation_never_raises_on_garbage():
    spec = reference_spec()
    report = validate_properties(spec, (0.0, 5.0), (0.3, 0.3 + 0.0), 120)
    assert not report.passed  # degenerate range reported, not raised


def test_boundary_condition_checked(ref_spec, ref_domain):
    report = validate_properties(ref_spec, ref_domain["y_range"],
                                 ref_domain["r_range"], 120)
    cond = next(c for c in report.conditions
                if c.condition == "R_IS above lowest LM branch at low income")
    assert cond.passed
    assert cond.worst_value > 0.0
