"""Parameter and function batteries shared by the harness and the test suite."""

from __future__ import annotations

import math
import warnings
from typing import List

import numpy as np

from .bivariate import BivariateParams
from .functions import BivariateFunction, ScalarFunction, monomial
from .operators import OperatorParams, ParameterRangeWarning
from .qcore import q_integer

__all__ = [
    "DEFAULT_SEED",
    "random_params",
    "standard_params",
    "standard_functions",
    "lip_functions",
    "full_function_battery",
    "bivariate_params",
    "bivariate_functions",
    "random_bivariate_params",
]

DEFAULT_SEED = 20240611
# printed and corrected first moments differ by alpha * |1/[n+l] - 1/([n+1]+beta)|;
# cases where that gap is below this are redrawn so the two variants stay distinguishable
MIN_ALPHA_GAP = 1e-6


def _alpha_gap(n, l, alpha, beta, q) -> float:
    return alpha * abs(1.0 / q_integer(n + l, q) - 1.0 / (q_integer(n + 1, q) + beta))


def random_params(size: int = 200, seed: int = DEFAULT_SEED, n_max: int = 30, l_max: int = 3,
                  q_range=(0.3, 0.99)) -> List[OperatorParams]:
    """Seeded battery: ``n <= n_max``, ``l <= l_max``, ``q`` uniform in ``q_range``.

    A quarter of the cases have ``alpha = beta = 0``; the rest draw ``alpha``
    in ``(0, 2]`` and ``beta`` in ``[alpha/10, alpha]``.
    """
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < size:
        n = int(rng.integers(1, n_max + 1))
        l = int(rng.integers(0, l_max + 1))
        q = float(rng.uniform(*q_range))
        if rng.random() < 0.25:
            alpha = beta = 0.0
        else:
            alpha = float(rng.uniform(0.0, 2.0)) or 2.0
            beta = float(rng.uniform(alpha / 10.0, alpha))
            if _alpha_gap(n, l, alpha, beta, q) < MIN_ALPHA_GAP:
                continue
        out.append(OperatorParams(n, l, alpha, beta, q))
    return out


_STANDARD = [
    (5, 0, 0.0, 0.0, 0.8),
    (5, 1, 0.5, 0.25, 0.9),
    (8, 1, 0.5, 0.25, 0.9),
    (10, 0, 0.0, 0.0, 0.9),
    (10, 2, 1.0, 0.5, 0.95),
    (12, 2, 0.0, 0.0, 0.7),
    (15, 3, 0.3, 0.3, 0.85),
    (20, 1, 0.5, 0.5, 0.95),
    (20, 0, 0.2, 0.1, 0.98),
    (25, 0, 0.5, 0.1, 0.99),
    (30, 1, 1.0, 0.5, 0.97),
    (40, 1, 0.25, 0.25, 0.98),
]


def standard_params() -> List[OperatorParams]:
    """The fixed 12-case parameter battery used by the bound checks."""
    return [OperatorParams(*row) for row in _STANDARD]


def _bump() -> ScalarFunction:
    return ScalarFunction(lambda t: np.exp(-8.0 * (t - 0.5) ** 2), sup_bound=1.0,
                          derivative=lambda t: -16.0 * (t - 0.5) * np.exp(-8.0 * (t - 0.5) ** 2),
                          label="bump")


def standard_functions() -> List[ScalarFunction]:
    """``e2``, ``|x - 1/2|`` and a smooth Gaussian bump centred at 1/2."""
    absf = ScalarFunction(lambda t: np.abs(t - 0.5), derivative=lambda t: np.sign(t - 0.5),
                          smooth=False, label="abs_half")
    return [monomial(2), absf, _bump()]


def lip_functions() -> List[ScalarFunction]:
    """Functions used with the Lipschitz-type class bound: the standard ones plus ``sqrt``."""
    return standard_functions() + [ScalarFunction(np.sqrt, smooth=False, label="sqrt")]


def full_function_battery() -> List[ScalarFunction]:
    sinpi = ScalarFunction(lambda t: np.sin(math.pi * t), sup_bound=1.0,
                           derivative=lambda t: math.pi * np.cos(math.pi * t), label="sin_pi")
    cos3 = ScalarFunction(lambda t: np.cos(3.0 * t), sup_bound=1.0, label="cos3")
    lin = ScalarFunction(lambda t: 1.0 - 2.0 * t, derivative=lambda t: -2.0 + 0.0 * t, label="1-2x")
    return ([monomial(0), monomial(1)] + standard_functions()
            + [ScalarFunction(np.sqrt, smooth=False, label="sqrt"), sinpi, cos3, lin])


def bivariate_params() -> List[BivariateParams]:
    rows = [
        ((4, 1, 0.5, 0.25, 0.8), (3, 0, 0.3, 0.2, 0.7)),
        ((6, 0, 0.0, 0.0, 0.85), (5, 1, 0.4, 0.4, 0.8)),
        ((8, 1, 0.5, 0.25, 0.9), (6, 2, 1.0, 0.5, 0.85)),
    ]
    return [BivariateParams(OperatorParams(*a), OperatorParams(*b)) for a, b in rows]


def random_bivariate_params(size: int = 50, seed: int = DEFAULT_SEED + 1) -> List[BivariateParams]:
    a = random_params(size, seed, n_max=20, l_max=2)
    b = random_params(size, seed + 1, n_max=20, l_max=2)
    return [BivariateParams(x, y) for x, y in zip(a, b)]


def bivariate_functions() -> List[BivariateFunction]:
    """A separable product, a separable sum with a kink, a non-separable smooth
    function and a constant (the only kind with a finite bivariate Lipschitz constant)."""
    sinpi = ScalarFunction(lambda t: np.sin(math.pi * t), sup_bound=1.0,
                           derivative=lambda t: math.pi * np.cos(math.pi * t), label="sin_pi")
    absf = ScalarFunction(lambda t: np.abs(t - 0.5), derivative=lambda t: np.sign(t - 0.5),
                          smooth=False, label="abs_half")
    mixed = BivariateFunction(lambda t, s: np.sin(t * s) + t,
                              partial_t=lambda t, s: s * np.cos(t * s) + 1.0,
                              partial_s=lambda t, s: t * np.cos(t * s), label="sin(ts)+t")
    const = BivariateFunction(lambda t, s: 2.0 + 0.0 * (t + s), partial_t=lambda t, s: 0.0 * (t + s),
                              partial_s=lambda t, s: 0.0 * (t + s), sup_bound=2.0, label="const2")
    return [BivariateFunction.product(sinpi, monomial(1)), BivariateFunction.sum(absf, monomial(2)),
            mixed, const]


def quiet_params(*args) -> OperatorParams:
    """``OperatorParams`` without the out-of-range warning."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ParameterRangeWarning)
        return OperatorParams(*args)
