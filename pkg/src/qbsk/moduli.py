"""Grid estimates of moduli of continuity and the univariate error-bound checks.

Every supremum over a continuum is replaced by a supremum over a uniform grid
on the function's domain.  With ``GridPolicy.refine`` the grid is doubled
until the estimate moves by less than ``rel_change`` (relative), up to
``max_points``.  Grid suprema can only under-estimate the true value; the
bound checks absorb that with a relative slack on the right-hand side.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d

from .functions import DomainError, ScalarFunction
from .operators import (OperatorParams, central_moment, coefficients, evaluate, gamma,
                        phi)
from .qcore import TruncationPolicy

__all__ = [
    "GridPolicy",
    "BoundReport",
    "UnboundedCalibrationError",
    "THEOREMS_1D",
    "omega",
    "omega2",
    "lipschitz_maximal",
    "lip_class_constant",
    "bound_check",
    "bound_table",
    "calibrate_C",
    "window_oscillation",
]

THEOREMS_1D = ("T3_2", "T3_3", "T3_4")
THEOREMS_2D = ("T5_2", "T6_1", "T6_2", "T6_3")
BOUND_SLACK = 1e-6
# evaluation error of the operator itself (partition of unity holds to this level)
ABS_FLOOR = 1e-10
T3_4_X_MIN = 0.05


class UnboundedCalibrationError(ArithmeticError):
    """No finite constant makes the second-order bound hold on the battery."""


@dataclass(frozen=True)
class GridPolicy:
    """Discretisation used for all grid suprema.

    ``sup_points`` counts grid intervals on the function's domain and must
    be at least four times ``eval_points``.  Pairwise suprema (the Lipschitz
    class constant) cap their grid at ``pair_points``.
    """

    eval_points: int = 33
    sup_points: int = 4096
    exclusion: float = 1e-9
    refine: bool = True
    rel_change: float = 1e-3
    max_points: int = 2 ** 20
    pair_points: int = 2 ** 11
    endpoint_shift: bool = True

    def __post_init__(self):
        if self.eval_points < 2:
            raise ValueError("eval_points must be >= 2")
        if self.sup_points < 4 * self.eval_points:
            raise ValueError(
                f"sup_points={self.sup_points} must be >= 4 * eval_points={4 * self.eval_points}"
            )
        if not self.exclusion > 0:
            raise ValueError("exclusion must be > 0")
        if self.max_points < self.sup_points:
            raise ValueError("max_points must be >= sup_points")

    def doubled(self) -> "GridPolicy":
        return GridPolicy(self.eval_points, 2 * self.sup_points, self.exclusion, self.refine,
                          self.rel_change, max(self.max_points, 2 * self.sup_points),
                          2 * self.pair_points, self.endpoint_shift)


@dataclass(frozen=True)
class BoundReport:
    theorem_id: str
    x: float
    lhs: float
    rhs: float
    params_used: object
    y: Optional[float] = None
    label: str = ""

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def ok(self, slack: float = BOUND_SLACK, floor: float = ABS_FLOOR) -> bool:
        """``margin >= -slack * rhs``, less ``floor`` for round-off in ``lhs``."""
        return self.margin >= -slack * abs(self.rhs) - floor


def _refined(estimate: Callable[[int], float], gp: GridPolicy, cap: Optional[int] = None) -> float:
    """Run ``estimate(points)`` with grid doubling until it settles."""
    points = gp.sup_points
    value = estimate(points)
    if not gp.refine:
        return value
    cap = gp.max_points if cap is None else cap
    while 2 * points <= cap:
        points *= 2
        new = estimate(points)
        settled = abs(new - value) <= gp.rel_change * max(abs(new), abs(value))
        value = max(value, new)
        if settled:
            break
    return value


def _clamp(delta: float, length: float, what: str) -> float:
    if delta > length:
        warnings.warn(f"{what}={delta:.6g} exceeds the domain length {length:.6g}; clamped",
                      RuntimeWarning, stacklevel=3)
        return length
    return delta


def window_oscillation(values: np.ndarray, half_width: int, axis: int = -1) -> float:
    """``max |v_i - v_j|`` over index pairs with ``|i - j| <= half_width`` along ``axis``."""
    if half_width <= 0:
        return 0.0
    size = 2 * half_width + 1
    hi = maximum_filter1d(values, size=size, axis=axis, mode="nearest")
    lo = minimum_filter1d(values, size=size, axis=axis, mode="nearest")
    return float(max(np.max(hi - values), np.max(values - lo)))


class _LagProfile:
    """Per-lag maxima of first and second differences of ``f`` on one grid.

    ``first[j] = max_i |F[i+j] - F[i]|`` and ``second[j] = max_i |F[i+2j] - 2F[i+j] + F[i]|``,
    both cumulative-maxed over ``j``, extended lazily as larger lags are requested.
    """

    def __init__(self, f: ScalarFunction, lo: float, hi: float, points: int):
        self.t = np.linspace(lo, hi, points + 1)
        self.step = (hi - lo) / points
        self.vals = f(self.t)
        self.first = np.zeros(1)
        self.second = np.zeros(1)

    def first_upto(self, j: int) -> float:
        j = min(j, self.vals.size - 1)
        have = self.first.size - 1
        if j > have:
            v = self.vals
            ext = [float(np.max(np.abs(v[k:] - v[:-k]))) for k in range(have + 1, j + 1)]
            self.first = np.maximum.accumulate(np.concatenate([self.first, ext]))
        return float(self.first[j])

    def second_upto(self, j: int) -> float:
        j = min(j, (self.vals.size - 1) // 2)
        have = self.second.size - 1
        if j > have:
            v = self.vals
            ext = [float(np.max(np.abs(v[2 * k:] - 2.0 * v[k:-k] + v[:-2 * k])))
                   for k in range(have + 1, j + 1)]
            self.second = np.maximum.accumulate(np.concatenate([self.second, ext]))
        return float(self.second[j])


_PROFILES: dict = {}


def _profile(f: ScalarFunction, points: int) -> _LagProfile:
    lo, hi = f.finite_domain
    key = (f, lo, hi, points)
    prof = _PROFILES.get(key)
    if prof is None:
        if len(_PROFILES) > 64:
            _PROFILES.clear()
        prof = _PROFILES[key] = _LagProfile(f, lo, hi, points)
    return prof


def omega(f: ScalarFunction, delta: float, gp: GridPolicy = GridPolicy()) -> float:
    """First-order modulus ``sup_{0<p<=delta} sup_x |f(x+p) - f(x)|`` on ``f.domain``."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if delta == 0:
        return 0.0
    lo, hi = f.finite_domain
    delta = _clamp(delta, hi - lo, "delta")

    def estimate(points: int) -> float:
        prof = _profile(f, points)
        jmax = int(math.floor(delta / prof.step * (1 + 1e-12)))
        if jmax > 4096:
            best = window_oscillation(prof.vals, jmax)
        else:
            best = prof.first_upto(jmax)
        if gp.endpoint_shift:
            base = prof.t[prof.t + delta <= hi]
            if base.size:
                best = max(best, float(np.max(np.abs(f(base + delta) - f(base)))))
        return best

    return _refined(estimate, gp)


def omega2(f: ScalarFunction, h: float, gp: GridPolicy = GridPolicy()) -> float:
    """Second-order modulus ``sup_{0<p<=h} sup_x |f(x+2p) - 2f(x+p) + f(x)|``."""
    if h < 0:
        raise ValueError("h must be >= 0")
    if h == 0:
        return 0.0
    lo, hi = f.finite_domain
    h = _clamp(h, (hi - lo) / 2.0, "h")

    def estimate(points: int) -> float:
        prof = _profile(f, points)
        jmax = int(math.floor(h / prof.step * (1 + 1e-12)))
        best = prof.second_upto(min(jmax, 8192))
        if gp.endpoint_shift:
            base = prof.t[prof.t + 2 * h <= hi]
            if base.size:
                best = max(best, float(np.max(np.abs(f(base + 2 * h) - 2 * f(base + h) + f(base)))))
        return best

    return _refined(estimate, gp, cap=min(gp.max_points, 2 ** 16))


def lipschitz_maximal(f: ScalarFunction, x: float, xi: float, gp: GridPolicy = GridPolicy()) -> float:
    """``sup_{t != x} |f(t) - f(x)| / |t - x|**xi`` over ``f.domain``.

    Points with ``|t - x| < gp.exclusion`` are skipped; a geometric ladder of
    offsets between the exclusion radius and the grid step resolves the
    behaviour next to ``x``.
    """
    if not 0 < xi <= 1:
        raise ValueError("xi must lie in (0, 1]")
    lo, hi = f.finite_domain
    if not lo <= x <= hi:
        raise DomainError(f"x={x} outside {list(f.domain)}")
    fx = f(x)

    def estimate(points: int) -> float:
        t = np.linspace(lo, hi, points + 1)
        step = (hi - lo) / points
        ladder = np.geomspace(gp.exclusion, max(step, gp.exclusion), 48)
        t = np.concatenate([t, x - ladder, x + ladder])
        t = t[(t >= lo) & (t <= hi)]
        d = np.abs(t - x)
        t, d = t[d >= gp.exclusion], d[d >= gp.exclusion]
        if t.size == 0:
            return 0.0
        return float(np.max(np.abs(f(t) - fx) / d ** xi))

    return _refined(estimate, gp)


def lip_class_constant(f: ScalarFunction, s: float, gp: GridPolicy = GridPolicy()) -> float:
    """Smallest grid ``M`` with ``|f(t)-f(x)| <= M |t-x|**s / (t+x)**(s/2)`` on ``f.domain``."""
    if not 0 < s <= 1:
        raise ValueError("s must lie in (0, 1]")
    lo, hi = f.finite_domain
    if lo < 0:
        raise DomainError("the Lipschitz-type class lives on a nonnegative domain")

    def estimate(points: int) -> float:
        t = np.linspace(lo, hi, points + 1)
        vals = f(t)
        best = 0.0
        chunk = max(1, 4_000_000 // t.size)
        for i in range(0, t.size, chunk):
            ti = t[i:i + chunk, None]
            diff = np.abs(ti - t[None, :])
            tot = ti + t[None, :]
            mask = (diff >= gp.exclusion) & (tot > 0)
            with np.errstate(divide="ignore", invalid="ignore"):
                r = np.abs(vals[i:i + chunk, None] - vals[None, :]) * tot ** (s / 2) / diff ** s
            best = max(best, float(np.max(np.where(mask, r, 0.0))))
        return best

    key = (f, lo, hi, s, gp.pair_points, gp.sup_points, gp.refine, gp.exclusion)
    if key not in _LIP_CACHE:
        if len(_LIP_CACHE) > 256:
            _LIP_CACHE.clear()
        points = min(gp.sup_points, gp.pair_points)
        local = GridPolicy(gp.eval_points, max(points, 4 * gp.eval_points), gp.exclusion, gp.refine,
                           gp.rel_change, max(gp.pair_points, 4 * gp.eval_points), gp.pair_points)
        _LIP_CACHE[key] = _refined(estimate, local, cap=max(gp.pair_points, local.sup_points))
    return _LIP_CACHE[key]


_LIP_CACHE: dict = {}


class _Context:
    """Per-(f, p) cache so a batch of points shares the operator coefficients and moduli."""

    def __init__(self, f: ScalarFunction, p: OperatorParams, gp: GridPolicy, trunc: TruncationPolicy):
        self.f, self.p, self.gp = f, p, gp
        self.c = coefficients(f, p, trunc)
        self._cache = {}

    def lhs(self, x) -> np.ndarray:
        return np.abs(evaluate(self.c, self.p, x) - self.f(x))

    def memo(self, key, compute):
        if key not in self._cache:
            self._cache[key] = compute()
        return self._cache[key]


def _rhs(ctx: _Context, theorem_id: str, x: float, C: Optional[float], xi: float, s: float,
         M: Optional[float]) -> float:
    f, p, gp = ctx.f, ctx.p, ctx.gp
    if theorem_id == "T3_2":
        if C is None:
            raise ValueError("T3_2 needs a constant C (see calibrate_C)")
        return C * omega2(f, math.sqrt(max(phi(p, x), 0.0)), gp) + omega(f, abs(central_moment(p, x, 1)), gp)
    if theorem_id == "T3_3":
        return lipschitz_maximal(f, x, xi, gp) * max(gamma(p, x), 0.0) ** (xi / 2)
    if theorem_id == "T3_4":
        if x <= 0:
            raise DomainError("T3_4 holds for x in (0, 1] only")
        if M is None:
            M = ctx.memo(("M", s), lambda: lip_class_constant(f, s, gp))
        return M * (max(gamma(p, x), 0.0) / x) ** (s / 2)
    raise ValueError(f"unknown univariate theorem id {theorem_id!r}")


def _prepare(f: ScalarFunction, p: OperatorParams) -> ScalarFunction:
    lo, hi = f.domain
    if math.isinf(hi):
        return f.on(lo, p.upper)
    f.require(0.0, p.max_node)
    return f


def bound_check(theorem_id: str, f: ScalarFunction, p: OperatorParams, x: float,
                C: Optional[float] = None, gp: GridPolicy = GridPolicy(),
                trunc: TruncationPolicy = TruncationPolicy(), *, xi: float = 1.0, s: float = 1.0,
                M: Optional[float] = None) -> BoundReport:
    """One pointwise check ``|L(f; x) - f(x)| <= rhs`` for T3_2, T3_3 or T3_4.

    An unbounded function domain is cut to ``[lo, p.upper]``.
    """
    return bound_table(theorem_id, f, p, [x], C, gp, trunc, xi=xi, s=s, M=M)[0]


def bound_table(theorem_id: str, f: ScalarFunction, p: OperatorParams, xs: Iterable[float],
                C: Optional[float] = None, gp: GridPolicy = GridPolicy(),
                trunc: TruncationPolicy = TruncationPolicy(), *, xi: float = 1.0, s: float = 1.0,
                M: Optional[float] = None, _ctx: Optional[_Context] = None) -> list:
    if theorem_id not in THEOREMS_1D:
        raise ValueError(f"unknown univariate theorem id {theorem_id!r}")
    f = _prepare(f, p)
    ctx = _ctx if _ctx is not None else _Context(f, p, gp, trunc)
    out = []
    for x in xs:
        x = float(x)
        lhs = float(ctx.lhs(x))
        rhs = _rhs(ctx, theorem_id, x, C, xi, s, M)
        out.append(BoundReport(theorem_id, x, lhs, float(rhs), p, label=f.label))
    return out


def _t32_terms(ctx: _Context, x: float):
    f, p, gp = ctx.f, ctx.p, ctx.gp
    w2 = omega2(f, math.sqrt(max(phi(p, x), 0.0)), gp)
    w1 = omega(f, abs(central_moment(p, x, 1)), gp)
    return float(ctx.lhs(x)), w2, w1


def calibrate_C(f_battery: Sequence[ScalarFunction], p_battery: Sequence[OperatorParams],
                gp: GridPolicy = GridPolicy(), trunc: TruncationPolicy = TruncationPolicy(),
                xs: Optional[Sequence[float]] = None) -> float:
    """Smallest ``C`` making every T3_2 check on the battery hold.

    ``xs`` defaults to a uniform grid of ``gp.eval_points`` points in [0, 1].
    """
    if not f_battery or not p_battery:
        raise ValueError("calibration batteries must be nonempty")
    xs = np.linspace(0.0, 1.0, gp.eval_points) if xs is None else np.asarray(xs, dtype=float)
    best = 0.0
    for f in f_battery:
        for p in p_battery:
            fp = _prepare(f, p)
            ctx = _Context(fp, p, gp, trunc)
            for x in xs:
                lhs, w2, w1 = _t32_terms(ctx, float(x))
                excess = lhs - w1
                # operator round-off (constants, affine f) needs no C
                if excess <= ABS_FLOOR:
                    continue
                if w2 == 0:
                    raise UnboundedCalibrationError(
                        f"{fp.label or 'f'} at x={x}, {p}: lhs exceeds the first-order term and omega2 = 0"
                    )
                best = max(best, excess / w2)
    return best
