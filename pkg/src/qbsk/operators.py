"""Stancu-type q-Bernstein-Schurer-Kantorovich operators.

For parameters ``(n, l, alpha, beta, q)`` and ``D = [n+1]_q + beta`` the
operator is

    L(f; x) = D Σ_{k=0}^{n+l} b_k(x) q^{-k} ∫_{([k]+α)/D}^{([k+1]+α)/D} f(t) d^R_q t

with the q-Bernstein basis ``b_k(x) = [n+l choose k]_q x^k (1-x)_q^{n+l-k}``.
``apply`` evaluates this definition directly and is the reference against
which every closed-form moment below is checked.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .functions import ScalarFunction
from .qcore import TruncationPolicy, geometric_node_sums, q_binomial_row, q_integer

__all__ = [
    "OperatorParams",
    "ParameterRangeWarning",
    "MomentReport",
    "basis",
    "basis_matrix",
    "coefficients",
    "evaluate",
    "apply",
    "moment",
    "central_moment",
    "printed_central_moment",
    "gamma",
    "phi",
    "basis_power_sum",
    "power_sum_closed_form",
    "sup_norm_check",
    "sup_error",
    "moment_report",
    "uniform_grid",
]

DEFAULT_GRID = 257


class ParameterRangeWarning(UserWarning):
    """Stancu shifts outside ``0 < beta <= alpha`` (other than ``alpha = beta = 0``)."""


@dataclass(frozen=True)
class OperatorParams:
    n: int
    l: int = 0
    alpha: float = 0.0
    beta: float = 0.0
    q: float = 0.9
    _nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if isinstance(self.l, bool) or int(self.l) != self.l or self.l < 0:
            raise ValueError(f"l must be a nonnegative integer, got {self.l!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "l", int(self.l))
        for name in ("alpha", "beta", "q"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ValueError(f"{name} must be finite, got {val!r}")
            object.__setattr__(self, name, val)
        if self.alpha < 0 or self.beta < 0:
            raise ValueError(f"alpha and beta must be >= 0, got alpha={self.alpha}, beta={self.beta}")
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must lie in (0, 1), got {self.q!r}")
        if not (self.alpha == self.beta == 0.0 or 0.0 < self.beta <= self.alpha):
            warnings.warn(
                f"alpha={self.alpha}, beta={self.beta} lies outside 0 < beta <= alpha",
                ParameterRangeWarning, stacklevel=3,
            )
        k = np.arange(self.m + 2)
        nodes = (q_integer(k, self.q) + self.alpha) / self.denom
        if not np.all(np.isfinite(nodes)):
            raise ValueError("integration nodes are not finite")
        object.__setattr__(self, "_nodes", nodes)

    @property
    def m(self) -> int:
        """Number of basis functions minus one, ``n + l``."""
        return self.n + self.l

    @property
    def denom(self) -> float:
        """``[n+1]_q + beta``."""
        return q_integer(self.n + 1, self.q) + self.beta

    @property
    def nodes(self) -> np.ndarray:
        """Integration endpoints ``([k]_q + alpha) / D`` for ``k = 0..n+l+1``."""
        return self._nodes.copy()

    @property
    def widths(self) -> np.ndarray:
        """Interval lengths ``q^k / D``, ``k = 0..n+l``."""
        return self.q ** np.arange(self.m + 1, dtype=float) / self.denom

    @property
    def max_node(self) -> float:
        return float(self._nodes[-1])

    @property
    def upper(self) -> float:
        """Right end of the interval a function must be defined on: ``max(1+l, max node)``."""
        return max(1.0 + self.l, self.max_node)

    def with_q(self, q: float) -> "OperatorParams":
        return OperatorParams(self.n, self.l, self.alpha, self.beta, q)

    def as_dict(self) -> dict:
        return {"n": self.n, "l": self.l, "alpha": self.alpha, "beta": self.beta, "q": self.q}

    @cached_property
    def _binomials(self) -> np.ndarray:
        return q_binomial_row(self.m, self.q)


def uniform_grid(points: int = DEFAULT_GRID, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    if points < 2:
        raise ValueError("a grid needs at least 2 points")
    return np.linspace(lo, hi, points)


def _as_x(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0) or np.any(np.isnan(arr)):
        raise ValueError("x must lie in [0, 1]")
    return arr


def basis_matrix(p: OperatorParams, x) -> np.ndarray:
    """Basis values, shape ``x.shape + (n+l+1,)``."""
    x = _as_x(x)
    m, q = p.m, p.q
    xs = x[..., None]
    k = np.arange(m + 1)
    # (1-x)_q^j for j = 0..m: cumulative product of (1 - q^i x)
    factors = 1.0 - (q ** np.arange(m, dtype=float)) * xs
    poch = np.concatenate([np.ones(x.shape + (1,)), np.cumprod(factors, axis=-1)], axis=-1)
    return p._binomials * xs ** k * poch[..., m - k]


def basis(p: OperatorParams, k: int, x):
    """``b_k(x) = [n+l choose k]_q x^k (1-x)_q^{n+l-k}``."""
    if not 0 <= k <= p.m:
        raise IndexError(f"basis index k={k} outside 0..{p.m}")
    out = basis_matrix(p, x)[..., k]
    return float(out) if np.ndim(out) == 0 else out


def coefficients(f: ScalarFunction, p: OperatorParams,
                 trunc: TruncationPolicy = TruncationPolicy()) -> np.ndarray:
    """Kantorovich coefficients ``D q^{-k} ∫_k f d^R_q t``, ``k = 0..n+l``.

    Each interval's tail tolerance is ``trunc.tol * width_k``; since
    ``D q^{-k} width_k = 1`` every coefficient, and hence ``L(f; x)``, carries
    a truncation error below ``trunc.tol``.
    """
    if isinstance(f, ScalarFunction):
        f.require(0.0, p.max_node)
        sup = f.sup_bound
    else:
        sup = None
    a = p.nodes[:-1]
    w = p.widths
    tol = trunc.tol * w
    cap = trunc.terms_cap(p.q, float(tol.min()))
    integrals = geometric_node_sums(f, a, w, p.q, tol, cap, sup)
    return p.denom * p.q ** (-np.arange(p.m + 1, dtype=float)) * integrals


def evaluate(c: np.ndarray, p: OperatorParams, x):
    out = basis_matrix(p, x) @ c
    return float(out) if np.ndim(out) == 0 else out


def apply(f: ScalarFunction, p: OperatorParams, x, trunc: TruncationPolicy = TruncationPolicy()):
    """``L(f; x)`` straight from the operator definition."""
    return evaluate(coefficients(f, p, trunc), p, x)


def _qs(p: OperatorParams):
    q = p.q
    return q, q_integer(p.m, q), q_integer(p.m - 1, q), p.denom, 1.0 + q, 1.0 + q + q * q


def moment(p: OperatorParams, x, order: int, variant: str = "corrected"):
    """Closed-form ``L(t^order; x)`` for order 0, 1, 2.

    ``variant="printed"`` reproduces the published formulas verbatim.  For
    order 1 the printed first term ``alpha/[n+l]_q`` is replaced in the
    corrected variant by ``alpha/([n+1]_q + beta)``.  For order 2 the
    corrected variant is assembled from the basis power sums rather than the
    simplified printed polynomial; the two agree algebraically.
    """
    if variant not in ("printed", "corrected"):
        raise ValueError(f"variant must be 'printed' or 'corrected', got {variant!r}")
    x = _as_x(x)
    q, mq, m1q, D, q2, q3 = _qs(p)
    a = p.alpha
    if order == 0:
        out = np.ones_like(x)
    elif order == 1:
        shift = a / mq if variant == "printed" else a / D
        out = shift + 1.0 / (D * q2) + 2.0 * q * mq * x / (D * q2)
    elif order == 2:
        if variant == "printed":
            out = (1.0 / (D ** 2 * q3) + 2.0 * a / (D ** 2 * q2) + a ** 2 / D ** 2
                   + q * mq * ((3 + 4 * a) + (5 + 4 * a) * q + 4 * (1 + a) * q ** 2) / (D ** 2 * q2 * q3) * x
                   + q ** 2 * mq * m1q * (1 + q + 4 * q ** 2) / (D ** 2 * q2 * q3) * x ** 2)
        else:
            s1 = mq * x                                   # Σ b_k [k]
            s2 = mq * x + q * mq * m1q * x ** 2           # Σ b_k [k]^2
            t1 = 1.0 - (1.0 - q) * mq * x                 # Σ b_k q^k
            t1k = s1 - (1.0 - q) * s2                     # Σ b_k q^k [k]
            t2 = 1.0 - (1.0 - q * q) * mq * x + q * (1.0 - q) ** 2 * mq * m1q * x ** 2
            out = (s2 + 2 * a * s1 + a * a + 2.0 / q2 * (t1k + a * t1) + t2 / q3) / D ** 2
    else:
        raise ValueError(f"order must be 0, 1 or 2, got {order!r}")
    return float(out) if np.ndim(out) == 0 else out


def central_moment(p: OperatorParams, x, order: int):
    """``L((t-x)^order; x)`` for order 1 or 2, from the corrected moments."""
    x = _as_x(x)
    m1 = moment(p, x, 1)
    if order == 1:
        out = m1 - x
    elif order == 2:
        out = moment(p, x, 2) - 2.0 * x * m1 + x * x
    else:
        raise ValueError(f"order must be 1 or 2, got {order!r}")
    return float(out) if np.ndim(out) == 0 else out


def gamma(p: OperatorParams, x):
    """Second central moment ``L((t-x)^2; x)``."""
    return central_moment(p, x, 2)


def printed_central_moment(p: OperatorParams, x, order: int):
    """Published central-moment formulas, kept for discrepancy reports only.

    The printed factor ``(1_q+4q^2)`` is read as ``(1+q+4q^2)``.
    """
    x = _as_x(x)
    q, mq, m1q, D, q2, q3 = _qs(p)
    a = p.alpha
    if order == 1:
        out = (2 * q * mq / (q2 * D) - 1.0) * x + 1.0 / (q2 * D) + a / mq
    elif order == 2:
        out = (a ** 2 / D ** 2 + 2 * a / (D ** 2 * q2) + 1.0 / (D ** 2 * q3)
               + (q * mq * ((3 + 4 * a) + (5 + 4 * a) * q + 4 * (1 + a) * q ** 2) / (D ** 2 * q2 * q3)
                  - 2.0 / (D ** 2 * q2) - 2 * a / mq) * x
               + (q ** 2 * mq * m1q * (1 + q + 4 * q ** 2) / (D ** 2 * q2 * q3) - 4 * q * mq / (D * q2) + 1.0) * x ** 2)
    else:
        raise ValueError(f"order must be 1 or 2, got {order!r}")
    return float(out) if np.ndim(out) == 0 else out


def phi(p: OperatorParams, x):
    """``L((t-x)^2; x) + (L(t; x) - x)^2``."""
    d = central_moment(p, x, 1)
    return gamma(p, x) + d * d


def basis_power_sum(p: OperatorParams, x, r: int):
    """``Σ_k b_k(x) q^{r k}`` by direct summation."""
    if r not in (1, 2):
        raise ValueError("r must be 1 or 2")
    out = basis_matrix(p, x) @ (p.q ** (r * np.arange(p.m + 1, dtype=float)))
    return float(out) if np.ndim(out) == 0 else out


def power_sum_closed_form(p: OperatorParams, x, r: int):
    x = _as_x(x)
    q, mq, m1q = p.q, q_integer(p.m, p.q), q_integer(p.m - 1, p.q)
    if r == 1:
        out = 1.0 - (1.0 - q) * mq * x
    elif r == 2:
        out = 1.0 - (1.0 - q * q) * mq * x + q * (1.0 - q) ** 2 * mq * m1q * x ** 2
    else:
        raise ValueError("r must be 1 or 2")
    return float(out) if np.ndim(out) == 0 else out


def sup_norm_check(f: ScalarFunction, p: OperatorParams, grid_n: int = DEFAULT_GRID,
                   trunc: TruncationPolicy = TruncationPolicy()):
    """``(max_x |L(f; x)|, max_t |f(t)|)``.

    The left side runs over a uniform grid on [0, 1]; the right side over a
    16x finer grid on ``[0, p.upper]``, i.e. every point the operator reads.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    lhs = float(np.max(np.abs(apply(f, p, uniform_grid(grid_n), trunc))))
    t = uniform_grid(16 * (grid_n - 1) + 1, 0.0, p.upper)
    rhs = float(np.max(np.abs(f(t))))
    return lhs, rhs


def sup_error(f: ScalarFunction, p: OperatorParams, grid_n: int = DEFAULT_GRID,
              trunc: TruncationPolicy = TruncationPolicy()) -> float:
    """Grid sup of ``|L(f; x) - f(x)|`` on [0, 1]."""
    x = uniform_grid(grid_n)
    return float(np.max(np.abs(apply(f, p, x, trunc) - f(x))))


@dataclass(frozen=True)
class MomentReport:
    order: int
    x: float
    closed_form_printed: float
    closed_form_corrected: float
    oracle: float
    abs_diff_corrected: float
    abs_diff_printed: float
    params: Optional[OperatorParams] = None


def moment_report(p: OperatorParams, xs, orders=(0, 1, 2),
                  trunc: TruncationPolicy = TruncationPolicy()) -> list:
    """Closed forms against ``apply(e_order)``, one row per (order, x)."""
    from .functions import monomial

    xs = np.atleast_1d(_as_x(xs))
    rows = []
    for order in orders:
        oracle = apply(monomial(order, (0.0, p.upper)), p, xs, trunc)
        printed = np.atleast_1d(moment(p, xs, order, "printed"))
        corrected = np.atleast_1d(moment(p, xs, order, "corrected"))
        for x, cp, cc, o in zip(xs, printed, corrected, np.atleast_1d(oracle)):
            rows.append(MomentReport(order, float(x), float(cp), float(cc), float(o),
                                     abs(float(cc) - float(o)), abs(float(cp) - float(o)), p))
    return rows
