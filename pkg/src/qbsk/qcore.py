"""q-calculus primitives: q-integers, q-factorials, q-binomials, q-Pochhammer
products and the two q-integrals (Jackson and Riemann type).

The integrals are infinite geometric-node series.  They are truncated with a
tail bound of the form ``sup|f| * q**s * (b - a)``, where ``sup|f|`` is either
a caller-supplied bound or the running maximum of ``|f|`` over the nodes seen
so far (plus the limit node ``a``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "TruncationPolicy",
    "QIntegralConvergenceError",
    "q_integer",
    "q_factorial",
    "q_binomial",
    "q_pochhammer_plus",
    "jackson_integral",
    "riemann_q_integral",
    "default_s_max",
]

DEFAULT_TOL = 1e-12


class QIntegralConvergenceError(ArithmeticError):
    """Raised when a q-integral series hits ``s_max`` with its tail bound still above ``tol``."""


@dataclass(frozen=True)
class TruncationPolicy:
    """Stopping rule for q-integral series.

    ``tol`` is an absolute bound on the discarded tail.  ``s_max`` caps the
    number of series terms; ``None`` picks ``ceil(log(tol*(1-q))/log(q)) + 64``
    for the q at hand.
    """

    tol: float = DEFAULT_TOL
    s_max: Optional[int] = None

    def __post_init__(self):
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise ValueError(f"tol must be a positive finite real, got {self.tol!r}")
        if self.s_max is not None and int(self.s_max) < 1:
            raise ValueError(f"s_max must be >= 1, got {self.s_max!r}")

    def terms_cap(self, q: float, tol: Optional[float] = None) -> int:
        if self.s_max is not None:
            return int(self.s_max)
        return default_s_max(q, self.tol if tol is None else tol)


def default_s_max(q: float, tol: float) -> int:
    return int(math.ceil(math.log(tol * (1.0 - q)) / math.log(q))) + 64


def _check_q(q, *, integral: bool = False) -> float:
    q = float(q)
    if integral:
        if not 0.0 < q < 1.0:
            raise ValueError(f"q-integrals need 0 < q < 1, got q={q!r}")
    elif not 0.0 < q <= 1.0:
        raise ValueError(f"need 0 < q <= 1, got q={q!r}")
    return q


def q_integer(k, q):
    """``[k]_q = (1 - q**k) / (1 - q)``, and ``k`` itself at ``q == 1``.

    ``k`` may be an integer or an integer array.
    """
    q = _check_q(q)
    k_arr = np.asarray(k)
    if np.any(k_arr < 0):
        raise ValueError("q_integer needs k >= 0")
    if q == 1.0:
        out = k_arr.astype(float)
    else:
        # expm1 keeps relative accuracy when q**k is close to 1
        out = -np.expm1(k_arr * math.log(q)) / (1.0 - q)
    return float(out) if out.ndim == 0 else out


def q_factorial(k: int, q) -> float:
    """``[k]_q! = [k]_q [k-1]_q ... [1]_q`` with ``[0]_q! = 1``.

    Returns ``inf`` (with a RuntimeWarning) once the product leaves the float range.
    """
    if k < 0:
        raise ValueError("q_factorial needs k >= 0")
    q = _check_q(q)
    out = 1.0
    for j in range(1, k + 1):
        out *= q_integer(j, q)
        if math.isinf(out):
            warnings.warn(f"[{k}]_q! overflows double precision at q={q}", RuntimeWarning, stacklevel=2)
            return math.inf
    return out


def q_binomial(n: int, k: int, q) -> float:
    """Gaussian binomial coefficient ``[n]_q! / ([k]_q! [n-k]_q!)``.

    Evaluated as ``prod_{j=1..k} [n-k+j]_q / [j]_q`` so intermediate
    factorials never overflow.
    """
    q = _check_q(q)
    if n < 0 or k < 0 or k > n:
        raise ValueError(f"q_binomial needs 0 <= k <= n, got n={n}, k={k}")
    k = min(k, n - k)
    out = 1.0
    for j in range(1, k + 1):
        out *= q_integer(n - k + j, q) / q_integer(j, q)
    return out


def q_binomial_row(n: int, q) -> np.ndarray:
    """All of ``[n choose k]_q`` for ``k = 0..n`` via ``C(n,k) = C(n,k-1) [n-k+1]_q / [k]_q``."""
    q = _check_q(q)
    if n < 0:
        raise ValueError("q_binomial_row needs n >= 0")
    k = np.arange(1, n + 1)
    ratios = q_integer(n - k + 1, q) / q_integer(k, q)
    return np.concatenate([[1.0], np.cumprod(ratios)])


def q_pochhammer_plus(x, m: int, q):
    """``(1+x)_q^m = (1+x)(1+qx)...(1+q^{m-1}x)``; 1 when ``m == 0``.

    No domain restriction on ``x``; ``(1-x)_q^m`` is ``q_pochhammer_plus(-x, m, q)``.
    """
    if m < 0:
        raise ValueError("q_pochhammer_plus needs m >= 0")
    q = _check_q(q)
    x_arr = np.asarray(x, dtype=float)
    out = np.ones_like(x_arr)
    qj = 1.0
    for _ in range(m):
        out = out * (1.0 + qj * x_arr)
        qj *= q
    return float(out) if out.ndim == 0 else out


def _eval(f: Callable, t: np.ndarray) -> np.ndarray:
    vals = np.asarray(f(t), dtype=float)
    if vals.shape != t.shape:
        vals = np.broadcast_to(vals, t.shape)
    return vals


def geometric_node_sums(f: Callable, a, w, q: float, tol, s_max: int,
                        sup_bound: Optional[float] = None) -> np.ndarray:
    """Vectorised Riemann-type q-integrals over several intervals at once.

    Row ``i`` integrates over ``[a[i], a[i] + w[i]]`` and is truncated
    independently against ``tol[i]``.  Returns
    ``(1-q) w Σ_s f(a + w q^s) q^s`` for every row.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    tol = np.broadcast_to(np.asarray(tol, dtype=float), a.shape)
    if sup_bound is not None:
        return _bounded_node_sums(f, a, w, q, tol, s_max, float(sup_bound))
    total = np.zeros(a.shape)
    running = np.abs(_eval(f, a))
    active = np.arange(a.size)
    s0 = 0
    block = 256
    while active.size:
        if s0 >= s_max:
            worst = float(np.max(running[active] * q ** s0 * w[active] - tol[active]))
            raise QIntegralConvergenceError(
                f"q-integral did not converge within s_max={s_max} terms "
                f"(q={q}, tail bound exceeds tol by {worst:.3e})"
            )
        stop_at = min(s0 + block, s_max)
        powers = q ** np.arange(s0, stop_at, dtype=float)
        nodes = a[active, None] + w[active, None] * powers[None, :]
        vals = _eval(f, nodes)
        if not np.all(np.isfinite(vals)):
            raise ValueError("integrand returned a non-finite value at a q-node")
        cm = np.maximum(np.maximum.accumulate(np.abs(vals), axis=1), running[active, None])
        # tail after keeping terms 0..j is bounded by cm_j * q^(j+1) * w
        bound = cm * (powers * q)[None, :] * w[active, None]
        stop = bound < tol[active, None]
        done = stop.any(axis=1)
        first = np.where(done, np.argmax(stop, axis=1), stop.shape[1] - 1)
        keep = np.arange(stop.shape[1])[None, :] <= first[:, None]
        total[active] += np.where(keep, vals * powers[None, :], 0.0).sum(axis=1)
        running[active] = cm[:, -1]
        active = active[~done]
        s0 = stop_at
        block = min(block * 2, 8192)
    return (1.0 - q) * w * total


def _bounded_node_sums(f, a, w, q, tol, s_max, sup):
    # with a known bound the stopping index is explicit: first s with sup*q^s*w < tol
    if sup <= 0.0:
        terms = np.ones(a.shape, dtype=int)
    else:
        ratio = tol / (sup * w)
        terms = np.where(ratio >= 1.0, 1, np.floor(np.log(ratio) / math.log(q)).astype(int) + 1)
        terms = np.maximum(terms, 1)
    if np.any(terms > s_max):
        raise QIntegralConvergenceError(
            f"q-integral needs {int(terms.max())} terms but s_max={s_max} (q={q})"
        )
    out = np.empty(a.shape)
    for count in np.unique(terms):
        rows = np.flatnonzero(terms == count)
        powers = q ** np.arange(count, dtype=float)
        step = max(1, 2_000_000 // count)
        for lo in range(0, rows.size, step):
            r = rows[lo:lo + step]
            vals = _eval(f, a[r, None] + w[r, None] * powers[None, :])
            if not np.all(np.isfinite(vals)):
                raise ValueError("integrand returned a non-finite value at a q-node")
            out[r] = vals @ powers
    return (1.0 - q) * w * out


def _callable_and_bound(f):
    sup = getattr(f, "sup_bound", None)
    return f, sup


def _check_interval(f, lo: float, hi: float):
    covers = getattr(f, "covers", None)
    if covers is not None and not covers(lo, hi):
        raise ValueError(f"integrand domain {f.domain} does not cover [{lo}, {hi}]")


def riemann_q_integral(f, a: float, b: float, q: float,
                       trunc: TruncationPolicy = TruncationPolicy()) -> float:
    """Riemann-type q-integral ``(1-q)(b-a) Σ_{s>=0} f(a + (b-a) q^s) q^s``."""
    q = _check_q(q, integral=True)
    if not 0.0 <= a < b:
        raise ValueError(f"riemann_q_integral needs 0 <= a < b, got a={a}, b={b}")
    _check_interval(f, a, b)
    func, sup = _callable_and_bound(f)
    val = geometric_node_sums(func, [a], [b - a], q, trunc.tol, trunc.terms_cap(q), sup)
    return float(val[0])


def jackson_integral(f, a: float, b: float, q: float,
                     trunc: TruncationPolicy = TruncationPolicy()) -> float:
    """Jackson q-integral ``∫_0^b f d_q x - ∫_0^a f d_q x``.

    Each piece is ``(1-q) c Σ f(c q^n) q^n``; the tolerance is split between
    the two pieces.
    """
    q = _check_q(q, integral=True)
    if not 0.0 <= a < b:
        raise ValueError(f"jackson_integral needs 0 <= a < b, got a={a}, b={b}")
    _check_interval(f, 0.0, b)
    func, sup = _callable_and_bound(f)
    if a == 0.0:
        ends, tol = [b], trunc.tol
    else:
        ends, tol = [b, a], trunc.tol / 2.0
    vals = geometric_node_sums(func, np.zeros(len(ends)), ends, q, tol, trunc.terms_cap(q, tol), sup)
    return float(vals[0] - vals[1]) if len(ends) == 2 else float(vals[0])
