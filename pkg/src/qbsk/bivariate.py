"""Tensor-product bivariate operators, their moments, two-variable moduli and
the bivariate error-bound checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.ndimage import maximum_filter, maximum_filter1d, minimum_filter, minimum_filter1d

from .functions import BivariateFunction, DomainError, monomial
from .moduli import THEOREMS_2D, BoundReport
from .operators import (OperatorParams, basis_matrix, central_moment, coefficients, moment,
                        uniform_grid)
from .qcore import TruncationPolicy

__all__ = [
    "BivariateParams",
    "BivGridPolicy",
    "biv_coefficients",
    "biv_evaluate",
    "biv_apply",
    "biv_moment",
    "delta_x",
    "delta_y",
    "total_modulus",
    "partial_modulus",
    "lip_constant_2d",
    "derivative_norms",
    "biv_bound_check",
    "biv_bound_table",
    "biv_sup_error",
]

DIRECT_BUDGET = 5 * 10 ** 7


@dataclass(frozen=True)
class BivariateParams:
    px: OperatorParams
    py: OperatorParams

    def __post_init__(self):
        if not (isinstance(self.px, OperatorParams) and isinstance(self.py, OperatorParams)):
            raise TypeError("px and py must be OperatorParams")

    @property
    def rect(self):
        """Rectangle of all integration nodes."""
        return ((0.0, self.px.max_node), (0.0, self.py.max_node))

    @property
    def upper_rect(self):
        return ((0.0, self.px.upper), (0.0, self.py.upper))

    def as_dict(self) -> dict:
        return {"px": self.px.as_dict(), "py": self.py.as_dict()}


@dataclass(frozen=True)
class BivGridPolicy:
    """Grids for two-variable suprema.

    ``sup_points`` intervals per axis for moduli and derivative norms;
    ``pair_points`` per axis for the pairwise Lipschitz constant;
    ``deriv_step`` is the central-difference step used when a function has
    no analytic partials.
    """

    eval_points: int = 9
    sup_points: int = 128
    refine: bool = True
    rel_change: float = 1e-3
    max_points: int = 512
    pair_points: int = 24
    deriv_step: float = 1e-4
    endpoint_shift: bool = True

    def __post_init__(self):
        if self.eval_points < 2:
            raise ValueError("eval_points must be >= 2")
        if self.sup_points < 4 * self.eval_points:
            raise ValueError(
                f"sup_points={self.sup_points} must be >= 4 * eval_points={4 * self.eval_points}"
            )
        if self.max_points < self.sup_points:
            raise ValueError("max_points must be >= sup_points")
        if not self.deriv_step > 0:
            raise ValueError("deriv_step must be > 0")


def _direct_coefficients(f: BivariateFunction, bp: BivariateParams, trunc: TruncationPolicy):
    px, py = bp.px, bp.py
    (x0, x1), (y0, y1) = bp.rect
    M = f.sup_bound
    if M is None:
        # sampled sup, doubled for safety
        t = np.linspace(x0, x1, 129)
        s = np.linspace(y0, y1, 129)
        M = 2.0 * float(np.max(np.abs(f(t[:, None], s[None, :]))))
    if M == 0.0:
        return np.zeros((px.m + 1, py.m + 1))
    # coefficient error <= M (q1^S1 + q2^S2) since D q^-k w_k = 1
    S1 = max(1, int(math.ceil(math.log(trunc.tol / (2 * M)) / math.log(px.q))))
    S2 = max(1, int(math.ceil(math.log(trunc.tol / (2 * M)) / math.log(py.q))))
    cells = (px.m + 1) * (py.m + 1)
    if cells * S1 * S2 > DIRECT_BUDGET:
        raise ValueError(
            f"direct double q-integral needs {cells * S1 * S2:.3g} evaluations; "
            "use a separable function, a larger tol or smaller q"
        )
    pw1 = px.q ** np.arange(S1, dtype=float)
    pw2 = py.q ** np.arange(S2, dtype=float)
    a1, w1 = px.nodes[:-1], px.widths
    a2, w2 = py.nodes[:-1], py.widths
    out = np.empty((px.m + 1, py.m + 1))
    s_nodes = a2[:, None] + w2[:, None] * pw2[None, :]
    for i in range(px.m + 1):
        t_nodes = a1[i] + w1[i] * pw1
        vals = f(t_nodes[:, None, None], s_nodes[None, :, :])
        # (1-q1)(1-q2) Σ_s Σ_r f q1^s q2^r, times D1 D2 q^-k w = 1
        out[i] = (1 - px.q) * (1 - py.q) * np.einsum("s,skr,r->k", pw1, vals, pw2)
    return out


def biv_coefficients(f: BivariateFunction, bp: BivariateParams,
                     trunc: TruncationPolicy = TruncationPolicy(), method: str = "auto") -> np.ndarray:
    """Matrix ``c[k1, k2]`` with ``L(f; x, y) = Σ b_k1(x) b_k2(y) c[k1, k2]``.

    ``factored`` uses the separable structure of ``f`` (exact by the tensor
    identity); ``direct`` sums the double q-series cell by cell.
    """
    if method not in ("auto", "direct", "factored"):
        raise ValueError(f"unknown method {method!r}")
    f.require(bp.rect)
    if method == "auto":
        method = "factored" if f.factors is not None else "direct"
    if method == "direct":
        return _direct_coefficients(f, bp, trunc)
    if f.factors is None:
        raise ValueError("factored evaluation needs a separable function")
    g, h = f.factors
    cg = coefficients(g, bp.px, trunc)
    ch = coefficients(h, bp.py, trunc)
    if f.combine == "prod":
        return np.outer(cg, ch)
    ones_x = coefficients(monomial(0, g.domain), bp.px, trunc)
    ones_y = coefficients(monomial(0, h.domain), bp.py, trunc)
    return np.outer(cg, ones_y) + np.outer(ones_x, ch)


def biv_evaluate(c: np.ndarray, bp: BivariateParams, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    shape = x.shape
    bx = basis_matrix(bp.px, x.ravel())
    by = basis_matrix(bp.py, y.ravel())
    out = np.einsum("pi,ij,pj->p", bx, c, by).reshape(shape)
    return float(out) if out.ndim == 0 else out


def biv_apply(f: BivariateFunction, bp: BivariateParams, x, y,
              trunc: TruncationPolicy = TruncationPolicy(), method: str = "auto"):
    """``L(f; x, y)`` at broadcast points ``(x, y)`` in the unit square."""
    return biv_evaluate(biv_coefficients(f, bp, trunc, method), bp, x, y)


def biv_moment(bp: BivariateParams, x, y, i: int, j: int):
    """``L(t^i s^j; x, y)`` as the product of the univariate closed forms."""
    if i not in (0, 1, 2) or j not in (0, 1, 2):
        raise ValueError("i and j must be 0, 1 or 2")
    return moment(bp.px, x, i) * moment(bp.py, y, j)


def delta_x(bp: BivariateParams, x):
    return central_moment(bp.px, x, 2)


def delta_y(bp: BivariateParams, y):
    return central_moment(bp.py, y, 2)


_GRIDS: dict = {}


def _grid(f: BivariateFunction, points: int):
    """Grid values of ``f`` plus a per-grid memo for window maxima, cached per function."""
    key = (f, points)
    hit = _GRIDS.get(key)
    if hit is None:
        if len(_GRIDS) > 16:
            _GRIDS.clear()
        (a0, a1), (b0, b1) = f.finite_domain
        t = np.linspace(a0, a1, points + 1)
        s = np.linspace(b0, b1, points + 1)
        hit = _GRIDS[key] = (t, s, f(t[:, None], s[None, :]), {})
    return hit


def _refined(estimate, gp: BivGridPolicy) -> float:
    points = gp.sup_points
    value = estimate(points)
    if not gp.refine:
        return value
    while 2 * points <= gp.max_points:
        points *= 2
        new = estimate(points)
        settled = abs(new - value) <= gp.rel_change * max(abs(new), abs(value))
        value = max(value, new)
        if settled:
            break
    return value


def _shift_diff(f, t, s, dt, ds, rect) -> float:
    (a0, a1), (b0, b1) = rect
    tt = t[(t + dt >= a0) & (t + dt <= a1)]
    ss = s[(s + ds >= b0) & (s + ds <= b1)]
    if tt.size == 0 or ss.size == 0:
        return 0.0
    T, S = tt[:, None], ss[None, :]
    return float(np.max(np.abs(f(T + dt, S + ds) - f(T, S))))


def total_modulus(f: BivariateFunction, d1: float, d2: float, gp: BivGridPolicy = BivGridPolicy()) -> float:
    """``sup |f(t, s) - f(x, y)|`` over ``|t - x| <= d1``, ``|s - y| <= d2`` in the rectangle."""
    if d1 < 0 or d2 < 0:
        raise ValueError("d1 and d2 must be >= 0")
    if d1 == 0 and d2 == 0:
        return 0.0
    rect = f.finite_domain
    (a0, a1), (b0, b1) = rect

    def estimate(points: int) -> float:
        t, s, F, memo = _grid(f, points)
        j1 = int(math.floor(d1 / ((a1 - a0) / points) * (1 + 1e-12)))
        j2 = int(math.floor(d2 / ((b1 - b0) / points) * (1 + 1e-12)))
        key = ("total", j1, j2)
        if key not in memo:
            size = (2 * j1 + 1, 2 * j2 + 1)
            memo[key] = float(max(np.max(maximum_filter(F, size=size, mode="nearest") - F),
                                  np.max(F - minimum_filter(F, size=size, mode="nearest"))))
        return memo[key]

    best = _refined(estimate, gp)
    if gp.endpoint_shift:
        # exact displacements, on the base grid only
        t, s, _, _ = _grid(f, gp.sup_points)
        for dt, ds in ((d1, d2), (d1, -d2), (d1, 0.0), (0.0, d2)):
            best = max(best, _shift_diff(f, t, s, dt, ds, rect))
    return best


def partial_modulus(f: BivariateFunction, delta: float, which: str = "first",
                    gp: BivGridPolicy = BivGridPolicy()) -> float:
    """Modulus in one argument, with the sup taken over the other.

    ``first``: ``sup{|f(x1, s) - f(x2, s)| : |x1 - x2| <= delta}``;
    ``second``: the same with the roles of the arguments swapped.
    """
    if which not in ("first", "second"):
        raise ValueError("which must be 'first' or 'second'")
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if delta == 0:
        return 0.0
    rect = f.finite_domain
    axis = 0 if which == "first" else 1
    lo, hi = rect[axis]

    def estimate(points: int) -> float:
        t, s, F, memo = _grid(f, points)
        j = int(math.floor(delta / ((hi - lo) / points) * (1 + 1e-12)))
        key = ("partial", axis, j)
        if key not in memo:
            size = 2 * j + 1
            memo[key] = 0.0 if j == 0 else float(max(
                np.max(maximum_filter1d(F, size, axis=axis, mode="nearest") - F),
                np.max(F - minimum_filter1d(F, size, axis=axis, mode="nearest"))))
        return memo[key]

    best = _refined(estimate, gp)
    if gp.endpoint_shift:
        t, s, _, _ = _grid(f, gp.sup_points)
        dt, ds = (delta, 0.0) if axis == 0 else (0.0, delta)
        best = max(best, _shift_diff(f, t, s, dt, ds, rect))
    return best


def lip_constant_2d(f: BivariateFunction, s1: float, s2: float, gp: BivGridPolicy = BivGridPolicy()) -> float:
    """Grid ``M`` for ``|f(x, y) - f(x', y')| <= M |x - x'|**s1 |y - y'|**s2``.

    Taking ``y = y'`` forces ``f(x, y) = f(x', y)``, so only functions that
    are constant along both axes admit a finite ``M``.  Returns ``inf`` when
    the grid shows variation along either axis, otherwise the largest ratio
    over grid pairs with ``x != x'`` and ``y != y'``.
    """
    if not (0 < s1 <= 1 and 0 < s2 <= 1):
        raise ValueError("s1 and s2 must lie in (0, 1]")
    t, s, F, _ = _grid(f, gp.pair_points)
    thresh = 1e-12 * max(1.0, float(np.max(np.abs(F))))
    if np.ptp(F, axis=0).max() > thresh or np.ptp(F, axis=1).max() > thresh:
        return math.inf
    T, S = np.meshgrid(t, s, indexing="ij")
    T, S, F = T.ravel(), S.ravel(), F.ravel()
    dt = np.abs(T[:, None] - T[None, :])
    ds = np.abs(S[:, None] - S[None, :])
    mask = (dt > 0) & (ds > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.abs(F[:, None] - F[None, :]) / (dt ** s1 * ds ** s2)
    return float(np.max(np.where(mask, r, 0.0)))


def derivative_norms(f: BivariateFunction, gp: BivGridPolicy = BivGridPolicy()) -> tuple:
    """Grid sup norms of the two partial derivatives over the rectangle.

    Uses the analytic partials when ``f`` carries them, otherwise central
    differences with step ``gp.deriv_step`` (one-sided at the edges).
    """
    if not f.smooth:
        raise DomainError(f"{f.label or 'function'} is not continuously differentiable")
    (a0, a1), (b0, b1) = f.finite_domain
    t = np.linspace(a0, a1, gp.sup_points + 1)[:, None]
    s = np.linspace(b0, b1, gp.sup_points + 1)[None, :]
    if f.partial_t is not None and f.partial_s is not None:
        ft = np.asarray(f.partial_t(t, s)) * np.ones((t.size, s.size))
        fs = np.asarray(f.partial_s(t, s)) * np.ones((t.size, s.size))
    else:
        h = gp.deriv_step
        tp, tm = np.minimum(t + h, a1), np.maximum(t - h, a0)
        sp, sm = np.minimum(s + h, b1), np.maximum(s - h, b0)
        ft = (f(tp, s) - f(tm, s)) / (tp - tm)
        fs = (f(t, sp) - f(t, sm)) / (sp - sm)
    if not (np.all(np.isfinite(ft)) and np.all(np.isfinite(fs))):
        raise DomainError("partial derivatives are not finite on the rectangle")
    return float(np.max(np.abs(ft))), float(np.max(np.abs(fs)))


def _prepare(f: BivariateFunction, bp: BivariateParams) -> BivariateFunction:
    f.require(bp.rect)
    (a0, a1), (b0, b1) = f.domain
    if math.isinf(a1) or math.isinf(b1):
        ux, uy = bp.upper_rect
        return f.on(((a0, min(a1, ux[1])), (b0, min(b1, uy[1]))))
    return f


class _Context2D:
    def __init__(self, f, bp, gp, trunc, method):
        self.f, self.bp, self.gp = f, bp, gp
        self.c = biv_coefficients(f, bp, trunc, method)
        self._cache = {}

    def memo(self, key, compute):
        if key not in self._cache:
            self._cache[key] = compute()
        return self._cache[key]


def _rhs2(ctx: _Context2D, theorem_id, x, y, s1, s2, M, norms):
    f, bp, gp = ctx.f, ctx.bp, ctx.gp
    d1 = max(float(delta_x(bp, x)), 0.0)
    d2 = max(float(delta_y(bp, y)), 0.0)
    if theorem_id == "T5_2":
        return 4.0 * total_modulus(f, math.sqrt(d1), math.sqrt(d2), gp)
    if theorem_id == "T6_1":
        if M is None:
            M = ctx.memo(("M", s1, s2), lambda: lip_constant_2d(f, s1, s2, gp))
        if M == 0.0:
            return 0.0
        if math.isinf(M):
            return math.inf
        return M * d1 ** (s1 / 2) * d2 ** (s2 / 2)
    if theorem_id == "T6_2":
        if norms is None:
            norms = ctx.memo("norms", lambda: derivative_norms(f, gp))
        return norms[0] * math.sqrt(d1) + norms[1] * math.sqrt(d2)
    if theorem_id == "T6_3":
        return (2.0 * partial_modulus(f, math.sqrt(d1), "first", gp)
                + 2.0 * partial_modulus(f, math.sqrt(d2), "second", gp))
    raise ValueError(f"unknown bivariate theorem id {theorem_id!r}")


def biv_bound_table(theorem_id: str, f: BivariateFunction, bp: BivariateParams, points: Sequence,
                    gp: BivGridPolicy = BivGridPolicy(), trunc: TruncationPolicy = TruncationPolicy(),
                    *, s1: float = 1.0, s2: float = 1.0, M: Optional[float] = None,
                    norms: Optional[tuple] = None, method: str = "auto") -> list:
    """One :class:`BoundReport` per ``(x, y)`` in ``points``, in the given order."""
    if theorem_id not in THEOREMS_2D:
        raise ValueError(f"unknown bivariate theorem id {theorem_id!r}")
    f = _prepare(f, bp)
    ctx = _Context2D(f, bp, gp, trunc, method)
    out = []
    for x, y in points:
        x, y = float(x), float(y)
        lhs = abs(biv_evaluate(ctx.c, bp, x, y) - f(x, y))
        rhs = _rhs2(ctx, theorem_id, x, y, s1, s2, M, norms)
        out.append(BoundReport(theorem_id, x, float(lhs), float(rhs), bp, y=y, label=f.label))
    return out


def biv_bound_check(theorem_id: str, f: BivariateFunction, bp: BivariateParams, x: float, y: float,
                    gp: BivGridPolicy = BivGridPolicy(), trunc: TruncationPolicy = TruncationPolicy(),
                    **extras) -> BoundReport:
    return biv_bound_table(theorem_id, f, bp, [(x, y)], gp, trunc, **extras)[0]


def biv_sup_error(f: BivariateFunction, bp: BivariateParams, grid_n: int = 17,
                  trunc: TruncationPolicy = TruncationPolicy(), method: str = "auto") -> float:
    """Sup of ``|L(f) - f|`` over a ``grid_n x grid_n`` grid on the unit square."""
    g = uniform_grid(grid_n)
    X, Y = np.meshgrid(g, g, indexing="ij")
    c = biv_coefficients(f, bp, trunc, method)
    return float(np.max(np.abs(biv_evaluate(c, bp, X, Y) - f(X, Y))))
