"""Shipped model configurations and the scenario suites built on them.

The numeric values here are repository defaults chosen so that each
configuration exhibits the behaviour it is named for; expected outputs in the
test suite are derived from independent oracles, never from these numbers.
"""

from __future__ import annotations

from .model import ISBlock, ModelParams, ModelSpec, TrapWindow, build_three_phase_money

__all__ = [
    "reference_spec",
    "no_trap_spec",
    "two_window_spec",
    "three_window_spec",
    "steep_is_spec",
    "reference_domain",
    "multiwindow_domain",
    "census_runs",
]

# Default validation/tracing domain for the reference family.
REFERENCE_Y_RANGE = (0.0, 5.0)
REFERENCE_R_RANGE = (-0.06, 0.22)
MULTI_Y_RANGE = (0.0, 5.5)
MULTI_R_RANGE = (-0.06, 0.30)

_REFERENCE_IS = ISBlock(i0=2.0, i_y=0.3, i_r=10.0, s0=0.5, s_y=0.5, s_r=5.0)


def _params(epsilon: float = 1e-3, m_stock: float = 2.0) -> ModelParams:
    return ModelParams(alpha=1.0, beta=0.25, epsilon=epsilon, m_stock=m_stock,
                       maturity_premium=0.02, expected_inflation=0.02)


def reference_spec(epsilon: float = 1e-3) -> ModelSpec:
    """One liquidity-trap window; the IS curve crosses only the unstable arc.

    The slow flow pushes through both folds, so the singular limit carries a
    perpetual counterclockwise relaxation oscillation.
    """
    money = build_three_phase_money(
        l_y=0.5, m_y=0.1, l_slope=20.0, m_slope=20.0, l0=2.2, m0=0.5,
        windows=[TrapWindow(p=0.04, q=0.10, amp_l=15.0, amp_m=15.0)],
    )
    return ModelSpec(params=_params(epsilon), is_block=_REFERENCE_IS, money=money)


def no_trap_spec(epsilon: float = 1e-3) -> ModelSpec:
    """Reference parameters with no trap window: single-branch increasing LM."""
    money = build_three_phase_money(
        l_y=0.5, m_y=0.1, l_slope=20.0, m_slope=20.0, l0=2.2, m0=0.5, windows=[],
    )
    return ModelSpec(params=_params(epsilon), is_block=_REFERENCE_IS, money=money)


def steep_is_spec(i0: float = 1.30, epsilon: float = 1e-3) -> ModelSpec:
    """Reference money block with an IS curve steep enough to cross all arcs.

    Sweeping the intercept i0 walks the system through the one / three /
    tangency / one equilibrium progression.
    """
    money = reference_spec(epsilon).money
    is_block = ISBlock(i0=i0, i_y=0.3, i_r=3.0, s0=0.5, s_y=0.5, s_r=2.0)
    return ModelSpec(params=_params(epsilon), is_block=is_block, money=money)


def two_window_spec(epsilon: float = 1e-3) -> ModelSpec:
    """Twice-bent LM curve arranged so the outer folds clear the middle arc.

    Fold incomes order as Q2 < Q1 < P2 < P1, which yields the four distinct
    jump segments: an outer loop between the lowest and highest stable arcs
    plus one upward and one downward departure from the middle stable arc.
    """
    money = build_three_phase_money(
        l_y=0.5, m_y=0.1, l_slope=20.0, m_slope=20.0, l0=2.2, m0=0.5,
        windows=[
            TrapWindow(p=0.03, q=0.06, amp_l=20.0, amp_m=20.0),
            TrapWindow(p=0.08, q=0.12, amp_l=15.0, amp_m=15.0),
        ],
    )
    return ModelSpec(params=_params(epsilon, m_stock=2.4), is_block=_REFERENCE_IS,
                     money=money)


def three_window_spec(epsilon: float = 1e-3) -> ModelSpec:
    """Thrice-bent LM curve with six distinct jump segments.

    Fold incomes order as Q3 < Q1 < Q2 < P2 < P3 < P1: an outer loop between
    the bottom and top arcs, an inner loop between the two middle stable arcs,
    and one extra departure from each middle arc.
    """
    money = build_three_phase_money(
        l_y=0.5, m_y=0.1, l_slope=20.0, m_slope=20.0, l0=2.2, m0=0.5,
        windows=[
            TrapWindow(p=0.03, q=0.055, amp_l=24.0, amp_m=24.0),
            TrapWindow(p=0.075, q=0.10, amp_l=16.0, amp_m=16.0),
            TrapWindow(p=0.12, q=0.15, amp_l=18.0, amp_m=18.0),
        ],
    )
    return ModelSpec(params=_params(epsilon, m_stock=2.43), is_block=_REFERENCE_IS,
                     money=money)


def reference_domain() -> dict:
    return {"y_range": REFERENCE_Y_RANGE, "r_range": REFERENCE_R_RANGE,
            "grid_n": 200, "y_steps": 700, "scan_n": 500}


def multiwindow_domain() -> dict:
    return {"y_range": MULTI_Y_RANGE, "r_range": MULTI_R_RANGE,
            "grid_n": 200, "y_steps": 700, "scan_n": 600}


def census_runs(n_windows: int) -> list[dict]:
    """Driven-income runs that exercise every jump segment exactly once.

    Each entry gives a start (income, rate near the intended arc), a ramp
    target, and the expected jump direction.  Expected fold incomes and
    landing rates are resolved against the traced isocline by the caller.
    """
    if n_windows == 2:
        return [
            {"label": "outer-up", "y0": 3.0, "r0_hint": 0.013, "y_to": 4.35, "direction": "up"},
            {"label": "outer-down", "y0": 3.0, "r0_hint": 0.134, "y_to": 1.95, "direction": "down"},
            {"label": "middle-up", "y0": 3.0, "r0_hint": 0.066, "y_to": 3.75, "direction": "up"},
            {"label": "middle-down", "y0": 3.0, "r0_hint": 0.066, "y_to": 2.35, "direction": "down"},
        ]
    if n_windows == 3:
        return [
            {"label": "outer-up", "y0": 3.3, "r0_hint": 0.012, "y_to": 4.5, "direction": "up"},
            {"label": "outer-down", "y0": 3.3, "r0_hint": 0.162, "y_to": 2.35, "direction": "down"},
            {"label": "lower-middle-up", "y0": 3.3, "r0_hint": 0.062, "y_to": 3.85, "direction": "up"},
            {"label": "lower-middle-down", "y0": 3.0, "r0_hint": 0.060, "y_to": 2.62, "direction": "down"},
            {"label": "upper-middle-up", "y0": 3.3, "r0_hint": 0.105, "y_to": 4.05, "direction": "up"},
            {"label": "upper-middle-down", "y0": 3.3, "r0_hint": 0.105, "y_to": 2.72, "direction": "down"},
        ]
    raise ValueError("census runs are defined for 2 or 3 windows")
