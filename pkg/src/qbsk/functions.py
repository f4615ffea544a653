"""Evaluable real functions with an explicit closed domain."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Tuple

import numpy as np

__all__ = ["ScalarFunction", "BivariateFunction", "DomainError", "monomial"]

Interval = Tuple[float, float]


class DomainError(ValueError):
    """A function was asked for values outside the interval it is defined on."""


@dataclass(frozen=True)
class ScalarFunction:
    """A vectorised map ``R -> R`` on a closed interval.

    ``func`` must accept and return numpy arrays.  ``sup_bound``, when given,
    is a known bound on ``|f|`` over the domain and is used by q-integral
    truncation instead of the running node maximum.  ``derivative`` is an
    optional analytic first derivative; ``smooth=False`` marks functions that
    are not C^1 on their domain.
    """

    func: Callable[[np.ndarray], np.ndarray]
    domain: Interval = (0.0, math.inf)
    sup_bound: Optional[float] = None
    derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    smooth: bool = True
    label: str = ""

    def __post_init__(self):
        lo, hi = self.domain
        if not lo < hi:
            raise ValueError(f"empty domain {self.domain}")
        object.__setattr__(self, "domain", (float(lo), float(hi)))

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        out = np.asarray(self.func(arr), dtype=float)
        if out.shape != arr.shape:
            out = np.broadcast_to(out, arr.shape).copy()
        return float(out) if out.ndim == 0 else out

    def covers(self, lo: float, hi: float) -> bool:
        return self.domain[0] <= lo and hi <= self.domain[1]

    def require(self, lo: float, hi: float) -> None:
        if not self.covers(lo, hi):
            name = self.label or "function"
            raise DomainError(f"{name} is defined on {list(self.domain)} but [{lo:.12g}, {hi:.12g}] is needed")

    def on(self, lo: float, hi: float) -> "ScalarFunction":
        """Same function with its domain replaced by ``[lo, hi]``.

        A ``sup_bound`` survives only when the new domain is inside the old one.
        """
        sup = self.sup_bound if self.covers(lo, hi) else None
        return replace(self, domain=(lo, hi), sup_bound=sup)

    @property
    def finite_domain(self) -> Interval:
        lo, hi = self.domain
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise DomainError(f"grid suprema need a bounded domain, got {list(self.domain)}")
        return lo, hi

    # arithmetic helpers used by the test suites and batteries
    def __add__(self, other):
        if isinstance(other, ScalarFunction):
            return _combine(self, other, np.add, "+")
        c = float(other)
        return ScalarFunction(lambda t: self.func(t) + c, self.domain, label=f"({self.label}+{c:g})",
                              derivative=self.derivative, smooth=self.smooth)

    def __mul__(self, other):
        if isinstance(other, ScalarFunction):
            return _combine(self, other, np.multiply, "*")
        c = float(other)
        d = self.derivative
        return ScalarFunction(lambda t: c * self.func(t), self.domain, label=f"{c:g}*{self.label}",
                              derivative=None if d is None else (lambda t: c * d(t)), smooth=self.smooth)

    __rmul__ = __mul__


def _combine(f: ScalarFunction, g: ScalarFunction, op, sym: str) -> ScalarFunction:
    lo = max(f.domain[0], g.domain[0])
    hi = min(f.domain[1], g.domain[1])
    return ScalarFunction(lambda t: op(f.func(t), g.func(t)), (lo, hi),
                          label=f"({f.label}{sym}{g.label})", smooth=f.smooth and g.smooth)


def monomial(i: int, domain: Interval = (0.0, math.inf)) -> ScalarFunction:
    """Test function ``e_i(t) = t**i``."""
    if i == 0:
        return ScalarFunction(lambda t: np.ones_like(t), domain, sup_bound=1.0,
                              derivative=lambda t: np.zeros_like(t), label="e0")
    lo, hi = domain
    sup = max(abs(lo), abs(hi)) ** i if math.isfinite(lo) and math.isfinite(hi) else None
    return ScalarFunction(lambda t: t ** i, domain, sup_bound=sup,
                          derivative=lambda t: i * t ** (i - 1), label=f"e{i}")


@dataclass(frozen=True)
class BivariateFunction:
    """A vectorised map ``(t, s) -> R`` on a rectangle.

    ``factors`` and ``combine`` ("prod" or "sum") record a separable
    structure ``g(t) * h(s)`` or ``g(t) + h(s)`` when the function was built
    that way.  ``partial_t`` / ``partial_s`` are optional analytic partials.
    """

    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    domain: Tuple[Interval, Interval] = ((0.0, math.inf), (0.0, math.inf))
    factors: Optional[Tuple[ScalarFunction, ScalarFunction]] = None
    combine: Optional[str] = None
    partial_t: Optional[Callable] = None
    partial_s: Optional[Callable] = None
    smooth: bool = True
    sup_bound: Optional[float] = None
    label: str = field(default="")

    def __post_init__(self):
        if self.combine not in (None, "prod", "sum"):
            raise ValueError(f"combine must be 'prod' or 'sum', got {self.combine!r}")
        if (self.factors is None) != (self.combine is None):
            raise ValueError("factors and combine must be given together")
        (a0, a1), (b0, b1) = self.domain
        if not (a0 < a1 and b0 < b1):
            raise ValueError(f"empty rectangle {self.domain}")

    def __call__(self, t, s):
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        out = np.asarray(self.func(t, s), dtype=float)
        shape = np.broadcast_shapes(t.shape, s.shape)
        if out.shape != shape:
            out = np.broadcast_to(out, shape).copy()
        return float(out) if out.ndim == 0 else out

    @classmethod
    def product(cls, g: ScalarFunction, h: ScalarFunction) -> "BivariateFunction":
        pt = ps = None
        if g.derivative is not None and h.derivative is not None:
            pt = lambda t, s: g.derivative(t) * h.func(s)  # noqa: E731
            ps = lambda t, s: g.func(t) * h.derivative(s)  # noqa: E731
        return cls(lambda t, s: g.func(t) * h.func(s), (g.domain, h.domain), (g, h), "prod",
                   pt, ps, g.smooth and h.smooth, label=f"prod2({g.label};{h.label})")

    @classmethod
    def sum(cls, g: ScalarFunction, h: ScalarFunction) -> "BivariateFunction":
        pt = ps = None
        if g.derivative is not None and h.derivative is not None:
            pt = lambda t, s: g.derivative(t) + 0.0 * s  # noqa: E731
            ps = lambda t, s: 0.0 * t + h.derivative(s)  # noqa: E731
        return cls(lambda t, s: g.func(t) + h.func(s), (g.domain, h.domain), (g, h), "sum",
                   pt, ps, g.smooth and h.smooth, label=f"sum2({g.label};{h.label})")

    def covers(self, rect) -> bool:
        (x0, x1), (y0, y1) = rect
        (a0, a1), (b0, b1) = self.domain
        return a0 <= x0 and x1 <= a1 and b0 <= y0 and y1 <= b1

    def require(self, rect) -> None:
        if not self.covers(rect):
            raise DomainError(f"{self.label or 'function'} is defined on {self.domain} but {rect} is needed")

    def on(self, rect) -> "BivariateFunction":
        (x0, x1), (y0, y1) = rect
        factors = self.factors
        if factors is not None:
            factors = (factors[0].on(x0, x1), factors[1].on(y0, y1))
        return replace(self, domain=((float(x0), float(x1)), (float(y0), float(y1))), factors=factors)

    @property
    def finite_domain(self):
        for lo, hi in self.domain:
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise DomainError(f"grid suprema need a bounded rectangle, got {self.domain}")
        return self.domain
