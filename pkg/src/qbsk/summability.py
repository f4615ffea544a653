"""Summability matrices, A-transforms and A-statistical convergence checks.

Sequences are 1-indexed: ``x[0]`` of an array holds ``x_1``.  A sequence may
also be given as a callable ``k -> x_k`` that accepts integer arrays.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from .functions import monomial
from .operators import OperatorParams, apply, uniform_grid, DEFAULT_GRID
from .qcore import TruncationPolicy, q_integer

__all__ = [
    "SummabilityMatrix",
    "SummabilityDivergenceError",
    "QSequence",
    "StatRow",
    "StatReport",
    "cesaro",
    "cesaro_row",
    "a_transform",
    "exceedance_weight",
    "make_q_sequence",
    "sequence_conditions",
    "sup_error_sequence",
    "stat_convergence_report",
]

SequenceLike = Union[Sequence[float], np.ndarray, Callable[[np.ndarray], np.ndarray]]


class SummabilityDivergenceError(ArithmeticError):
    """A row-weighted series could not be truncated within its tail bound."""


@dataclass(frozen=True)
class SummabilityMatrix:
    """Nonnegative matrix ``A = (a_nk)``, rows and columns indexed from 1.

    ``weight(n, k)`` returns the entries of row ``n`` at the integer array
    ``k``.  ``row_support(n)`` gives the inclusive column range ``(first,
    last)``; ``last`` may be ``math.inf`` if ``tail_bound(n, K)`` bounds
    ``Σ_{k>K} a_nk``.
    """

    weight: Callable[[int, np.ndarray], np.ndarray]
    row_support: Callable[[int], tuple]
    tail_bound: Optional[Callable[[int, int], float]] = None
    name: str = "custom"
    k_max: int = 10 ** 7

    def support(self, n: int) -> tuple:
        if n < 1:
            raise ValueError(f"rows are indexed from 1, got n={n}")
        first, last = self.row_support(n)
        if math.isinf(last) and self.tail_bound is None:
            raise ValueError(f"row {n} of {self.name} has infinite support and no tail bound")
        return int(first), last

    def row(self, n: int, tol: float = 0.0) -> tuple:
        """Column indices and weights of row ``n``.

        Infinite rows are cut at the first ``K`` with ``tail_bound(n, K) <= tol``.
        """
        first, last = self.support(n)
        if math.isinf(last):
            last = self._cut(n, first, tol)
        k = np.arange(first, int(last) + 1)
        w = np.asarray(self.weight(n, k), dtype=float)
        if np.any(w < 0):
            raise ValueError(f"{self.name} has a negative weight in row {n}")
        return k, w

    def _cut(self, n: int, first: int, tol: float) -> int:
        K = max(first, 16)
        while self.tail_bound(n, K) > tol:
            K *= 2
            if K > self.k_max:
                raise SummabilityDivergenceError(
                    f"row {n} of {self.name}: tail bound still {self.tail_bound(n, K):.3e} "
                    f"above {tol:.3e} after {self.k_max} columns"
                )
        return K

    def row_sum(self, n: int, tol: float = 1e-15) -> float:
        return float(np.sum(self.row(n, tol)[1]))

    def regularity(self, rows: Sequence[int], columns: Sequence[int] = (1, 2, 3)) -> dict:
        """Finite-section view of the regularity conditions.

        Returns the row sums, their sup, and the entries of the given columns
        along ``rows`` (which should tend to 0).
        """
        sums = np.array([self.row_sum(n) for n in rows])
        cols = {}
        for k in columns:
            vals = []
            for n in rows:
                first, last = self.support(n)
                inside = first <= k <= last
                vals.append(float(self.weight(n, np.array([k]))[0]) if inside else 0.0)
            cols[k] = np.array(vals)
        return {"rows": np.asarray(rows), "row_sums": sums, "sup_row_sum": float(np.max(sums)),
                "columns": cols}


def cesaro_row(n: int) -> np.ndarray:
    """Row ``n`` of the Cesaro matrix of order one: ``n`` weights equal to ``1/n``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return np.full(n, 1.0 / n)


def cesaro() -> SummabilityMatrix:
    return SummabilityMatrix(lambda n, k: np.where((k >= 1) & (k <= n), 1.0 / n, 0.0),
                             lambda n: (1, n), name="cesaro")


def _values(x: SequenceLike, k: np.ndarray) -> np.ndarray:
    if callable(x):
        return np.asarray(x(k), dtype=float) * np.ones(k.shape)
    arr = np.asarray(x, dtype=float)
    if k.size and k[-1] > arr.size:
        raise IndexError(f"sequence has {arr.size} terms but column {int(k[-1])} is needed")
    return arr[k - 1]


def a_transform(A: SummabilityMatrix, x: SequenceLike, n: int, *, x_bound: Optional[float] = None,
                tol: float = 1e-12) -> float:
    """``(Ax)_n = Σ_k a_nk x_k``.

    For a row with infinite support the sequence must be bounded by
    ``x_bound``; the row is cut where ``tail_bound * x_bound <= tol``.
    """
    first, last = A.support(n)
    if math.isinf(last):
        if x_bound is None:
            raise SummabilityDivergenceError(f"row {n} of {A.name} is infinite; pass x_bound")
        k, w = A.row(n, tol / max(x_bound, 1e-300))
    else:
        k, w = A.row(n)
    return float(np.dot(w, _values(x, k)))


def exceedance_weight(A: SummabilityMatrix, x: SequenceLike, L: float, eps: float, n: int,
                      tol: float = 1e-12) -> float:
    """``Σ a_nk`` over the columns ``k`` of row ``n`` with ``|x_k - L| >= eps``."""
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    k, w = A.row(n, tol)
    hit = np.abs(_values(x, k) - L) >= eps
    return float(np.sum(w[hit]))


@dataclass(frozen=True)
class QSequence:
    """An admissible sequence ``(q_n)``, ``n >= 1``.

    * ``power_root``: ``q_n = a**(1/n)``, so ``q_n**n = a``;
    * ``harmonic``: ``q_n = 1 - 1/(n + c)``, so ``q_n**n -> exp(-1)``;
    * ``constant``: ``q_n = a`` (not admissible, used for converse runs);
    * ``custom``: ``q_n = func(n)``.
    """

    kind: str
    a: Optional[float] = None
    c: Optional[float] = None
    func: Optional[Callable[[int], float]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind in ("power_root", "constant"):
            if self.a is None or not 0.0 < self.a < 1.0:
                raise ValueError(f"{self.kind} needs a in (0, 1), got a={self.a!r}")
        elif self.kind == "harmonic":
            if self.c is None or not self.c > 0:
                raise ValueError(f"harmonic needs c > 0, got c={self.c!r}")
        elif self.kind == "custom":
            if self.func is None:
                raise ValueError("custom sequences need func")
        else:
            raise ValueError(f"unknown q-sequence kind {self.kind!r}")

    def __call__(self, n: int) -> float:
        return make_q_sequence(self, n)

    @property
    def power_limit(self) -> Optional[float]:
        """The limit of ``q_n**n`` when it is known in closed form."""
        if self.kind == "power_root":
            return self.a
        if self.kind == "harmonic":
            return math.exp(-1.0)
        return None

    def as_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.a is not None:
            out["a"] = self.a
        if self.c is not None:
            out["c"] = self.c
        return out


def make_q_sequence(spec: QSequence, n: int) -> float:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if spec.kind == "power_root":
        q = spec.a ** (1.0 / n)
    elif spec.kind == "harmonic":
        q = 1.0 - 1.0 / (n + spec.c)
    elif spec.kind == "constant":
        q = spec.a
    else:
        q = float(spec.func(n))
    if not 0.0 < q < 1.0:
        raise ValueError(f"q_{n} = {q!r} is outside (0, 1)")
    return q


def sequence_conditions(spec: QSequence, ns: Sequence[int] = (100, 1000, 10000)) -> dict:
    """Numerical view of the three conditions on ``(q_n)``.

    ``q_n -> 1`` is read as ``1 - q_n`` strictly decreasing along ``ns``;
    ``q_n**n -> a`` is checked against the closed-form limit when there is
    one; ``1/[n]_{q_n} -> 0`` as a strict decrease along ``ns``.
    """
    ns = list(ns)
    q = np.array([make_q_sequence(spec, n) for n in ns])
    powers = np.array([qi ** n for qi, n in zip(q, ns)])
    recip = np.array([1.0 / q_integer(n, qi) for qi, n in zip(q, ns)])
    limit = spec.power_limit
    if limit is None:
        power_ok = bool(np.all(np.abs(np.diff(powers)) <= np.abs(powers[0] - powers[-1]) + 1e-15))
    elif spec.kind == "power_root":
        power_ok = bool(np.all(np.abs(powers - limit) <= 1e-12))
    else:
        power_ok = bool(np.all(np.diff(np.abs(powers - limit)) < 0))
    return {
        "n": ns,
        "q": q,
        "q_power_n": powers,
        "recip_q_integer": recip,
        "q_to_one": bool(np.all(np.diff(1.0 - q) < 0)),
        "power_limit": power_ok,
        "recip_to_zero": bool(np.all(np.diff(recip) < 0)),
    }


def _template(p_template) -> dict:
    if isinstance(p_template, OperatorParams):
        d = p_template.as_dict()
    else:
        d = dict(p_template)
    return {"l": int(d.get("l", 0)), "alpha": float(d.get("alpha", 0.0)),
            "beta": float(d.get("beta", 0.0))}


def sup_error_sequence(qspec: QSequence, p_template, e_index: int, n_max: int,
                       grid_n: int = DEFAULT_GRID, trunc: TruncationPolicy = TruncationPolicy(),
                       workers: int = 1) -> np.ndarray:
    """``y_n = max_x |L_n(e_i; x) - x**i|`` over a uniform grid on [0, 1], ``n = 1..n_max``.

    Operator ``n`` uses ``q = q_n`` and the ``l``, ``alpha``, ``beta`` of
    ``p_template``.
    """
    if e_index not in (0, 1, 2):
        raise ValueError("e_index must be 0, 1 or 2")
    tpl = _template(p_template)
    x = uniform_grid(grid_n)
    target = x ** e_index

    def one(n: int) -> float:
        p = OperatorParams(n, tpl["l"], tpl["alpha"], tpl["beta"], make_q_sequence(qspec, n))
        f = monomial(e_index, (0.0, p.upper))
        return float(np.max(np.abs(apply(f, p, x, trunc) - target)))

    ns = range(1, n_max + 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ys = list(pool.map(one, ns))
    else:
        ys = [one(n) for n in ns]
    return np.array(ys)


@dataclass(frozen=True)
class StatRow:
    e_index: int
    eps: float
    n_max: int
    weight: float


@dataclass
class StatReport:
    rows: list
    y: np.ndarray

    def weight(self, eps: float, n_max: int) -> float:
        for r in self.rows:
            if r.eps == eps and r.n_max == n_max:
                return r.weight
        raise KeyError((eps, n_max))


def stat_convergence_report(A: SummabilityMatrix, qspec: QSequence, p_template: Mapping,
                            e_index: int, eps_list: Sequence[float], n_max,
                            grid_n: int = DEFAULT_GRID, trunc: TruncationPolicy = TruncationPolicy(),
                            workers: int = 1) -> StatReport:
    """Exceedance weights of the sup-error sequence for every ``(eps, n_max)``.

    ``n_max`` may be one row index or several; ``y_n`` is computed once up
    to the largest.  The matrix rows must be finitely supported within it.
    """
    n_list = [int(n_max)] if np.ndim(n_max) == 0 else [int(v) for v in n_max]
    if min(n_list) < 16:
        raise ValueError("n_max must be >= 16")
    top = max(n_list)
    for n in n_list:
        last = A.support(n)[1]
        if last > top:
            raise ValueError(f"row {n} of {A.name} reaches column {last} beyond the computed y_1..y_{top}")
    y = sup_error_sequence(qspec, p_template, e_index, top, grid_n, trunc, workers)
    rows = [StatRow(e_index, float(eps), n, exceedance_weight(A, y, 0.0, eps, n))
            for eps in eps_list for n in n_list]
    return StatReport(rows, y)
