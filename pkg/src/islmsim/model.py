"""Model core: behavioral functions, parameters, and numerical sign validation.

The goods market is linear: I(Y,R) = i0 + i_y*Y - i_r*R, S(Y,R) = s0 + s_y*Y + s_r*R.
The money market is built derivative-first: money demand L and endogenous supply M
depend on the short rate i_S through piecewise-polynomial slope functions that are
negative (L) / positive (M) in normal regimes and reverse sign inside liquidity-trap
windows, with the slopes exactly zero at each window endpoint.  Integrating the
slopes in closed form gives continuous, C1 level functions.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, asdict
from functools import cached_property

import numpy as np

__all__ = [
    "SLOWFAST_EPSILON_THRESHOLD",
    "SIGN_DEGENERACY_TOL",
    "ConstructionError",
    "ModelDomainError",
    "ModelParams",
    "ISBlock",
    "TrapWindow",
    "MoneyBlock",
    "ModelSpec",
    "short_rate",
    "excess_goods",
    "excess_money",
    "excess_money_many",
    "excess_money_slope",
    "build_three_phase_money",
    "validate_properties",
    "ConditionResult",
    "ValidationReport",
]

# Epsilon at or below this value marks a model as a slow-fast configuration.
SLOWFAST_EPSILON_THRESHOLD = 0.01

# |finite difference| below this is reported "degenerate" rather than signed.
SIGN_DEGENERACY_TOL = 1e-9

# Finite-difference step, as a fraction of the axis scale.
FD_STEP_FRACTION = 1e-6

# Shoulder sizing for the slope transitions flanking each trap window: half the
# window width, capped so neighbouring windows never share a transition zone.
SHOULDER_WIDTH_FRACTION = 0.5
SHOULDER_GAP_FRACTION = 0.45


class ConstructionError(ValueError):
    """A block violates its structural invariants at build time."""


class ModelDomainError(ValueError):
    """An evaluation was requested outside the model domain (income < 0)."""


# ---------------------------------------------------------------------------
# quintic smoothstep machinery (exact zero value and slope at both ends)

def _smoothstep(v: float) -> float:
    """Quintic smoothstep on [0, 1]: 0 -> 1 with zero slope at both ends."""
    return v * v * v * (10.0 - 15.0 * v + 6.0 * v * v)


def _smoothstep_complement(v: float) -> float:
    """1 - smoothstep(v), factored so it stays exact as v -> 1."""
    w = 1.0 - v
    return w * w * w * (1.0 + 3.0 * v + 6.0 * v * v)


def _smoothstep_integral(v: float) -> float:
    """Integral of the quintic smoothstep from 0 to v; equals 0.5 at v = 1."""
    v4 = v * v * v * v
    return v4 * (2.5 - 3.0 * v + v * v)


def _bump(u: float) -> float:
    """Symmetric C1 bump on [0, 1]: zero at the ends, peak 1 at u = 1/2."""
    if u <= 0.5:
        return _smoothstep(2.0 * u)
    return _smoothstep(2.0 - 2.0 * u)


def _bump_integral(u: float) -> float:
    """Integral of the bump from 0 to u; equals 0.5 over the full window."""
    if u <= 0.5:
        return 0.5 * _smoothstep_integral(2.0 * u)
    return 0.5 - 0.5 * _smoothstep_integral(2.0 - 2.0 * u)


def _smoothstep_np(v):
    return v * v * v * (10.0 - 15.0 * v + 6.0 * v * v)


def _smoothstep_integral_np(v):
    v4 = v * v * v * v
    return v4 * (2.5 - 3.0 * v + v * v)


def _bump_np(u):
    return np.where(u <= 0.5, _smoothstep_np(2.0 * u), _smoothstep_np(2.0 - 2.0 * u))


def _bump_integral_np(u):
    return np.where(
        u <= 0.5,
        0.5 * _smoothstep_integral_np(2.0 * u),
        0.5 - 0.5 * _smoothstep_integral_np(2.0 - 2.0 * u),
    )


# ---------------------------------------------------------------------------
# domain types

@dataclass(frozen=True)
class ModelParams:
    """Dynamics parameters and the constants entering the short-rate identity."""

    alpha: float
    beta: float
    epsilon: float
    m_stock: float
    maturity_premium: float
    expected_inflation: float

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ConstructionError("adjustment speeds alpha and beta must be positive")
        if self.m_stock <= 0:
            raise ConstructionError("exogenous money stock must be positive")
        if not 0.0 < self.epsilon <= 1.0:
            raise ConstructionError("epsilon must lie in (0, 1]")

    @property
    def is_slow_fast(self) -> bool:
        return self.epsilon <= SLOWFAST_EPSILON_THRESHOLD


@dataclass(frozen=True)
class ISBlock:
    """Linear investment and saving schedules.

    Sign conditions (0 < i_y < 1, i_r > 0, 0 < s_y < 1, s_r > 0, i_y < s_y) are
    deliberately not enforced here; `validate_properties` reports them so that
    broken configurations produce diagnoses instead of constructor errors.
    """

    i0: float
    i_y: float
    i_r: float
    s0: float
    s_y: float
    s_r: float

    def investment(self, y: float, r: float) -> float:
        return self.i0 + self.i_y * y - self.i_r * r

    def saving(self, y: float, r: float) -> float:
        return self.s0 + self.s_y * y + self.s_r * r


@dataclass(frozen=True)
class TrapWindow:
    """One liquidity-trap interval (p, q) of the short rate with bump strengths."""

    p: float
    q: float
    amp_l: float
    amp_m: float

    def __post_init__(self):
        if not 0.0 < self.p < self.q:
            raise ConstructionError(f"window bounds must satisfy 0 < p < q, got ({self.p}, {self.q})")
        if self.amp_l <= 0.0 or self.amp_m <= 0.0:
            raise ConstructionError(
                "bump amplitudes must be positive, otherwise the slopes never "
                "reverse sign inside the window and no S-bend forms"
            )


# Segment kinds for the piecewise slope functions.
_FLAT, _SHOULDER_IN, _BUMP, _SHOULDER_OUT = 0, 1, 2, 3


@dataclass(frozen=True)
class _Segment:
    lo: float
    hi: float
    kind: int
    amp_l: float          # bump amplitudes; unused for non-bump kinds
    amp_m: float
    ref: float            # abscissa at which the cumulative integrals are stored
    f_l_ref: float        # exact cumulative integrals at ref
    f_m_ref: float


@dataclass(frozen=True)
class MoneyBlock:
    """Money demand L(Y, i_S) and endogenous supply M(Y, i_S).

    L = l0 + l_y*Y + f_L(i_S) and M = m0 + m_y*Y + f_M(i_S), where the slope
    functions f_L' and f_M' equal -l_slope / +m_slope away from the trap
    windows, reverse sign inside each window and vanish exactly at every
    window endpoint.
    """

    l_y: float
    m_y: float
    l_slope: float
    m_slope: float
    l0: float
    m0: float
    windows: tuple[TrapWindow, ...] = ()

    def __post_init__(self):
        # income-response sign conditions (0 < m_y < l_y) are validator
        # territory so broken configurations get diagnosed, not rejected here
        if self.l_slope <= 0.0 or self.m_slope <= 0.0:
            raise ConstructionError("baseline slope magnitudes must be positive")
        prev_q = None
        for w in self.windows:
            if prev_q is not None and w.p <= prev_q:
                raise ConstructionError("trap windows must be disjoint and sorted ascending")
            prev_q = w.q

    @cached_property
    def _segments(self) -> tuple[_Segment, ...]:
        return _build_segments(self)

    @cached_property
    def _breaks(self) -> np.ndarray:
        return np.array([s.lo for s in self._segments[1:]])

    # -- scalar evaluation (hot path for the integrators) ------------------

    def _segment_at(self, i: float) -> _Segment:
        segs = self._segments
        for s in segs:
            if i < s.hi:
                return s
        return segs[-1]

    def level_parts(self, i: float) -> tuple[float, float]:
        """Return (f_L(i), f_M(i)), the rate-dependent parts of L and M."""
        s = self._segment_at(i)
        if s.kind == _FLAT:
            d = i - s.ref
            return s.f_l_ref - self.l_slope * d, s.f_m_ref + self.m_slope * d
        w = s.hi - s.lo
        u = (i - s.lo) / w
        if s.kind == _BUMP:
            cum = _bump_integral(u) * w
            return s.f_l_ref + s.amp_l * cum, s.f_m_ref - s.amp_m * cum
        if s.kind == _SHOULDER_IN:
            cum = (u - _smoothstep_integral(u)) * w
            return s.f_l_ref - self.l_slope * cum, s.f_m_ref + self.m_slope * cum
        cum = _smoothstep_integral(u) * w
        return s.f_l_ref - self.l_slope * cum, s.f_m_ref + self.m_slope * cum

    def slope_parts(self, i: float) -> tuple[float, float]:
        """Return (f_L'(i), f_M'(i)), the slopes with respect to the short rate."""
        s = self._segment_at(i)
        if s.kind == _FLAT:
            return -self.l_slope, self.m_slope
        u = (i - s.lo) / (s.hi - s.lo)
        if s.kind == _BUMP:
            b = _bump(u)
            return s.amp_l * b, -s.amp_m * b
        if s.kind == _SHOULDER_IN:
            f = _smoothstep_complement(u)
            return -self.l_slope * f, self.m_slope * f
        f = _smoothstep(u)
        return -self.l_slope * f, self.m_slope * f

    # -- vectorised evaluation (validator, tracer, oracles) ----------------

    def level_parts_many(self, i) -> tuple[np.ndarray, np.ndarray]:
        i = np.asarray(i, dtype=float)
        segs = self._segments
        idx = np.searchsorted(self._breaks, i, side="right")
        f_l = np.empty_like(i)
        f_m = np.empty_like(i)
        for k, s in enumerate(segs):
            mask = idx == k
            if not mask.any():
                continue
            x = i[mask]
            if s.kind == _FLAT:
                d = x - s.ref
                f_l[mask] = s.f_l_ref - self.l_slope * d
                f_m[mask] = s.f_m_ref + self.m_slope * d
                continue
            w = s.hi - s.lo
            u = (x - s.lo) / w
            if s.kind == _BUMP:
                cum = _bump_integral_np(u) * w
                f_l[mask] = s.f_l_ref + s.amp_l * cum
                f_m[mask] = s.f_m_ref - s.amp_m * cum
            elif s.kind == _SHOULDER_IN:
                cum = (u - _smoothstep_integral_np(u)) * w
                f_l[mask] = s.f_l_ref - self.l_slope * cum
                f_m[mask] = s.f_m_ref + self.m_slope * cum
            else:
                cum = _smoothstep_integral_np(u) * w
                f_l[mask] = s.f_l_ref - self.l_slope * cum
                f_m[mask] = s.f_m_ref + self.m_slope * cum
        return f_l, f_m

    def slope_parts_many(self, i) -> tuple[np.ndarray, np.ndarray]:
        i = np.asarray(i, dtype=float)
        segs = self._segments
        idx = np.searchsorted(self._breaks, i, side="right")
        d_l = np.empty_like(i)
        d_m = np.empty_like(i)
        for k, s in enumerate(segs):
            mask = idx == k
            if not mask.any():
                continue
            x = i[mask]
            if s.kind == _FLAT:
                d_l[mask] = -self.l_slope
                d_m[mask] = self.m_slope
                continue
            u = (x - s.lo) / (s.hi - s.lo)
            if s.kind == _BUMP:
                b = _bump_np(u)
                d_l[mask] = s.amp_l * b
                d_m[mask] = -s.amp_m * b
            elif s.kind == _SHOULDER_IN:
                w = 1.0 - u
                f = w * w * w * (1.0 + 3.0 * u + 6.0 * u * u)
                d_l[mask] = -self.l_slope * f
                d_m[mask] = self.m_slope * f
            else:
                f = _smoothstep_np(u)
                d_l[mask] = -self.l_slope * f
                d_m[mask] = self.m_slope * f
        return d_l, d_m

    def demand(self, y: float, i: float) -> float:
        return self.l0 + self.l_y * y + self.level_parts(i)[0]

    def supply_endogenous(self, y: float, i: float) -> float:
        return self.m0 + self.m_y * y + self.level_parts(i)[1]

    def window_spans(self) -> list[tuple[float, float]]:
        return [(w.p, w.q) for w in self.windows]


def _build_segments(block: MoneyBlock) -> tuple[_Segment, ...]:
    """Lay out the piecewise slope structure and integrate it exactly.

    Each window gets an inward-tapering shoulder on both sides over which the
    normal slopes descend smoothly to zero, so the integrated levels are C1
    while the slopes still vanish exactly at the window endpoints.  The
    cumulative integrals are anchored at f_L(0) = f_M(0) = 0.
    """
    windows = block.windows
    n = len(windows)
    shoulders: list[tuple[float, float]] = []
    for j, w in enumerate(windows):
        width = w.q - w.p
        gap_l = w.p if j == 0 else w.p - windows[j - 1].q
        gap_r = math.inf if j == n - 1 else windows[j + 1].p - w.q
        w_l = min(SHOULDER_WIDTH_FRACTION * width,
                  gap_l if j == 0 else SHOULDER_GAP_FRACTION * gap_l)
        w_r = min(SHOULDER_WIDTH_FRACTION * width, SHOULDER_GAP_FRACTION * gap_r)
        shoulders.append((w_l, w_r))

    pieces: list[tuple[float, float, int, float, float]] = []
    cursor = -math.inf
    for j, w in enumerate(windows):
        w_l, w_r = shoulders[j]
        pieces.append((cursor, w.p - w_l, _FLAT, 0.0, 0.0))
        pieces.append((w.p - w_l, w.p, _SHOULDER_IN, 0.0, 0.0))
        pieces.append((w.p, w.q, _BUMP, w.amp_l, w.amp_m))
        pieces.append((w.q, w.q + w_r, _SHOULDER_OUT, 0.0, 0.0))
        cursor = w.q + w_r
    pieces.append((cursor, math.inf, _FLAT, 0.0, 0.0))

    def piece_integrals(width: float, kind: int, amp_l: float, amp_m: float) -> tuple[float, float]:
        # exact integral of (f_L', f_M') over one full piece
        if kind == _FLAT:
            return -block.l_slope * width, block.m_slope * width
        if kind == _BUMP:
            return amp_l * 0.5 * width, -amp_m * 0.5 * width
        # both shoulder kinds integrate |slope|*smoothstep-shape to width/2
        return -block.l_slope * 0.5 * width, block.m_slope * 0.5 * width

    # Walk left to right, carrying cumulative integrals relative to the first
    # finite boundary b0; the head piece stores its values at ref = b0.
    segments: list[_Segment] = []
    b0 = pieces[0][1] if pieces[0][1] > -math.inf else 0.0
    f_l = f_m = 0.0  # provisional values at b0
    segments.append(_Segment(-math.inf, b0, _FLAT, 0.0, 0.0, b0, f_l, f_m))
    for lo, hi, kind, amp_l, amp_m in pieces[1:]:
        segments.append(_Segment(lo, hi, kind, amp_l, amp_m, lo, f_l, f_m))
        if hi < math.inf:
            d_l, d_m = piece_integrals(hi - lo, kind, amp_l, amp_m)
            f_l, f_m = f_l + d_l, f_m + d_m

    if n == 0:
        segments = [_Segment(-math.inf, math.inf, _FLAT, 0.0, 0.0, 0.0, 0.0, 0.0)]
        return tuple(segments)

    # Re-anchor so that f_L(0) = f_M(0) = 0 exactly: i = 0 lies in the head
    # flat piece (shoulders never extend below zero), so the offset is linear.
    off_l = -block.l_slope * (0.0 - b0)
    off_m = block.m_slope * (0.0 - b0)
    return tuple(
        _Segment(s.lo, s.hi, s.kind, s.amp_l, s.amp_m, s.ref,
                 s.f_l_ref - off_l, s.f_m_ref - off_m)
        for s in segments
    )


@dataclass(frozen=True)
class ModelSpec:
    """Complete parameterization of the model."""

    params: ModelParams
    is_block: ISBlock
    money: MoneyBlock

    def to_dict(self) -> dict:
        d = {
            "params": asdict(self.params),
            "is_block": asdict(self.is_block),
            "money": {
                "l_y": self.money.l_y,
                "m_y": self.money.m_y,
                "l_slope": self.money.l_slope,
                "m_slope": self.money.m_slope,
                "l0": self.money.l0,
                "m0": self.money.m0,
                "windows": [asdict(w) for w in self.money.windows],
            },
        }
        return d

    @property
    def spec_id(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    @staticmethod
    def from_dict(d: dict) -> "ModelSpec":
        money = d["money"]
        return ModelSpec(
            params=ModelParams(**d["params"]),
            is_block=ISBlock(**d["is_block"]),
            money=MoneyBlock(
                l_y=money["l_y"], m_y=money["m_y"],
                l_slope=money["l_slope"], m_slope=money["m_slope"],
                l0=money["l0"], m0=money["m0"],
                windows=tuple(TrapWindow(**w) for w in money["windows"]),
            ),
        )


# ---------------------------------------------------------------------------
# operations

def short_rate(r: float, params: ModelParams) -> float:
    """Short nominal rate implied by the long real rate: r - MP + pi_e."""
    return r - params.maturity_premium + params.expected_inflation


def excess_goods(y: float, r: float, spec: ModelSpec) -> float:
    """I(y, r) - S(y, r); its sign drives the slow income variable."""
    if y < 0.0:
        raise ModelDomainError(f"income must be non-negative, got {y}")
    b = spec.is_block
    return (b.i0 - b.s0) + (b.i_y - b.s_y) * y - (b.i_r + b.s_r) * r


def excess_money(y: float, r: float, spec: ModelSpec) -> float:
    """L - M - M_S at the implied short rate; its sign drives the fast rate."""
    if y < 0.0:
        raise ModelDomainError(f"income must be non-negative, got {y}")
    i = short_rate(r, spec.params)
    m = spec.money
    f_l, f_m = m.level_parts(i)
    return (m.l0 - m.m0) + (m.l_y - m.m_y) * y + (f_l - f_m) - spec.params.m_stock


def excess_money_many(y, r, spec: ModelSpec) -> np.ndarray:
    """Vectorised excess_money; y and r broadcast against each other."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0.0):
        raise ModelDomainError("income must be non-negative")
    r = np.asarray(r, dtype=float)
    i = r - spec.params.maturity_premium + spec.params.expected_inflation
    m = spec.money
    f_l, f_m = m.level_parts_many(i)
    return (m.l0 - m.m0) + (m.l_y - m.m_y) * y + (f_l - f_m) - spec.params.m_stock


def excess_money_slope(r: float, spec: ModelSpec) -> float:
    """d(excess_money)/dR, exact from the derivative-first construction."""
    i = short_rate(r, spec.params)
    d_l, d_m = spec.money.slope_parts(i)
    return d_l - d_m


def build_three_phase_money(l_y: float, m_y: float, l_slope: float, m_slope: float,
                            l0: float, m0: float,
                            windows: list[TrapWindow] | tuple[TrapWindow, ...]) -> MoneyBlock:
    """Construct the three-phase money block from its slope description.

    Rejects unsorted or overlapping windows and non-positive bump amplitudes
    (the slopes would never reverse sign inside the window).
    """
    return MoneyBlock(l_y=l_y, m_y=m_y, l_slope=l_slope, m_slope=m_slope,
                      l0=l0, m0=m0, windows=tuple(windows))


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class ConditionResult:
    condition: str
    passed: bool
    n_checked: int
    n_degenerate: int
    worst_value: float
    worst_point: tuple[float, float]
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "passed": self.passed,
            "n_checked": self.n_checked,
            "n_degenerate": self.n_degenerate,
            "worst_value": self.worst_value,
            "worst_point": list(self.worst_point),
            "detail": self.detail,
        }


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    conditions: tuple[ConditionResult, ...]
    y_range: tuple[float, float]
    r_range: tuple[float, float]
    grid_n: int

    def failures(self) -> list[ConditionResult]:
        return [c for c in self.conditions if not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "y_range": list(self.y_range),
            "r_range": list(self.r_range),
            "grid_n": self.grid_n,
            "conditions": [c.to_dict() for c in self.conditions],
        }


def _signed_check(name: str, values: np.ndarray, want_positive: bool,
                  ys: np.ndarray, rs: np.ndarray, detail: str = "") -> ConditionResult:
    """Check the sign of sampled derivative values, skipping degenerate points."""
    signed = np.abs(values) > SIGN_DEGENERACY_TOL
    n_deg = int(values.size - signed.sum())
    vals = values if want_positive else -values
    ok = vals[signed] > 0.0
    passed = bool(ok.all()) if ok.size else True
    if vals.size:
        k = int(np.argmin(np.where(signed, vals, np.inf)))
        worst_value = float(values.flat[k])
        worst_point = (float(ys.flat[k]), float(rs.flat[k]))
    else:
        worst_value, worst_point = math.nan, (math.nan, math.nan)
    return ConditionResult(name, passed, int(signed.sum()), n_deg, worst_value, worst_point, detail)


def validate_properties(spec: ModelSpec, y_range: tuple[float, float],
                        r_range: tuple[float, float], grid_n: int = 200) -> ValidationReport:
    """Numerically verify every behavioural sign condition on a grid.

    All derivatives are taken by central finite differences, so the checks are
    independent of the closed forms used elsewhere.  Trap-window interiors are
    held to the reversed rate-slope signs, exteriors to the standard ones.
    Never raises; malformed inputs come back as a failed report.
    """
    try:
        if grid_n < 100:
            raise ValueError("grid_n must be at least 100 per axis")
        ys = np.linspace(y_range[0], y_range[1], grid_n)
        rs = np.linspace(r_range[0], r_range[1], grid_n)
        yy, rr = np.meshgrid(ys, rs, indexing="ij")
        h_y = FD_STEP_FRACTION * max(1.0, abs(y_range[1] - y_range[0]))
        h_r = FD_STEP_FRACTION * max(1.0, abs(r_range[1] - r_range[0]))

        b = spec.is_block
        inv = lambda y, r: b.i0 + b.i_y * y - b.i_r * r
        sav = lambda y, r: b.s0 + b.s_y * y + b.s_r * r

        di_dy = (inv(yy + h_y, rr) - inv(yy - h_y, rr)) / (2 * h_y)
        di_dr = (inv(yy, rr + h_r) - inv(yy, rr - h_r)) / (2 * h_r)
        ds_dy = (sav(yy + h_y, rr) - sav(yy - h_y, rr)) / (2 * h_y)
        ds_dr = (sav(yy, rr + h_r) - sav(yy, rr - h_r)) / (2 * h_r)

        params = spec.params
        money = spec.money
        i_of = lambda r: r - params.maturity_premium + params.expected_inflation

        def level_l(y, i):
            f_l, _ = money.level_parts_many(i)
            return money.l0 + money.l_y * y + f_l

        def level_m(y, i):
            _, f_m = money.level_parts_many(i)
            return money.m0 + money.m_y * y + f_m

        ii = i_of(rr)
        dl_dy = (level_l(yy + h_y, ii) - level_l(yy - h_y, ii)) / (2 * h_y)
        dm_dy = (level_m(yy + h_y, ii) - level_m(yy - h_y, ii)) / (2 * h_y)
        dl_di = (level_l(yy, i_of(rr + h_r)) - level_l(yy, i_of(rr - h_r))) / (2 * h_r)
        dm_di = (level_m(yy, i_of(rr + h_r)) - level_m(yy, i_of(rr - h_r))) / (2 * h_r)

        inside = np.zeros_like(ii, dtype=bool)
        for p, q in money.window_spans():
            inside |= (ii > p) & (ii < q)
        outside = ~inside

        conds = [
            _signed_check("dI_dY > 0", di_dy, True, yy, rr),
            _signed_check("dI_dY < 1", 1.0 - di_dy, True, yy, rr),
            _signed_check("dI_dR < 0", di_dr, False, yy, rr),
            _signed_check("dS_dY > 0", ds_dy, True, yy, rr),
            _signed_check("dS_dY < 1", 1.0 - ds_dy, True, yy, rr),
            _signed_check("dS_dR > 0", ds_dr, True, yy, rr),
            _signed_check("dI_dY < dS_dY (decreasing IS)", ds_dy - di_dy, True, yy, rr),
            _signed_check("dL_dY > 0", dl_dy, True, yy, rr),
            _signed_check("dM_dY > 0", dm_dy, True, yy, rr),
            _signed_check("dM_dY < dL_dY", dl_dy - dm_dy, True, yy, rr),
        ]
        if outside.any():
            conds.append(_signed_check(
                "dL_di_S < 0 outside trap windows", dl_di[outside], False,
                yy[outside], rr[outside]))
            conds.append(_signed_check(
                "dM_di_S > 0 outside trap windows", dm_di[outside], True,
                yy[outside], rr[outside]))
        if inside.any():
            conds.append(_signed_check(
                "dL_di_S > 0 inside trap windows (reversed)", dl_di[inside], True,
                yy[inside], rr[inside]))
            conds.append(_signed_check(
                "dM_di_S < 0 inside trap windows (reversed)", dm_di[inside], False,
                yy[inside], rr[inside]))

        conds.append(_boundary_condition(spec, y_range, r_range))
        passed = all(c.passed for c in conds)
        return ValidationReport(passed, tuple(conds), tuple(y_range), tuple(r_range), grid_n)
    except Exception as exc:  # contract: report, never raise
        fail = ConditionResult("validation run", False, 0, 0, math.nan,
                               (math.nan, math.nan), detail=str(exc))
        return ValidationReport(False, (fail,), tuple(y_range), tuple(r_range), int(grid_n))


def _boundary_condition(spec: ModelSpec, y_range, r_range) -> ConditionResult:
    """Intersection guarantee: the IS curve starts above the lowest LM branch."""
    y0 = max(y_range[0], 0.0)
    b = spec.is_block
    denom = b.i_r + b.s_r
    r_is = ((b.i0 - b.s0) + (b.i_y - b.s_y) * y0) / denom if denom else math.nan
    # lowest root of excess_money(y0, .) over a scan widened below r_range
    lo = min(r_range[0], r_is) - abs(r_range[1] - r_range[0])
    grid = np.linspace(lo, r_range[1], 4001)
    vals = excess_money_many(y0, grid, spec)
    sign_flip = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    if sign_flip.size == 0:
        return ConditionResult("R_IS above lowest LM branch at low income", False, 1, 0,
                               math.nan, (y0, math.nan),
                               detail="no LM root found at the low-income edge")
    a, c = grid[sign_flip[0]], grid[sign_flip[0] + 1]
    for _ in range(80):
        mid = 0.5 * (a + c)
        if excess_money(y0, a, spec) * excess_money(y0, mid, spec) <= 0.0:
            c = mid
        else:
            a = mid
    r_lm = 0.5 * (a + c)
    margin = r_is - r_lm
    return ConditionResult("R_IS above lowest LM branch at low income",
                           bool(margin > 0), 1, 0, float(margin), (float(y0), float(r_lm)))
