"""scikit-learn style wrappers around the operators.

``QBernsteinFeatures`` maps ``x`` to the q-Bernstein basis values, so a
linear model on top of it is a polynomial fit in that basis.
``StancuKantorovichApproximator`` applies the operator to a target function,
given either as a callable or as samples (linearly interpolated, constant
beyond the sampled range).
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_unit_column, check_unit_square, make_params
from .bivariate import BivariateParams, biv_coefficients, biv_evaluate
from .functions import BivariateFunction, ScalarFunction
from .operators import OperatorParams, basis_matrix, coefficients, evaluate
from .qcore import TruncationPolicy

__all__ = ["QBernsteinFeatures", "StancuKantorovichApproximator", "BivariateStancuKantorovichApproximator"]


class QBernsteinFeatures(TransformerMixin, BaseEstimator):
    """Basis values ``b_k(x)``, ``k = 0..n+l``, as features."""

    def __init__(self, n: int = 10, l: int = 0, q: float = 0.9):
        self.n = n
        self.l = l
        self.q = q

    def fit(self, X, y=None):
        check_unit_column(X)
        self.params_ = OperatorParams(self.n, self.l, 0.0, 0.0, self.q)
        self.n_features_in_ = 1
        self.n_features_out_ = self.params_.m + 1
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        return basis_matrix(self.params_, check_unit_column(X))

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "params_")
        return np.array([f"b{k}" for k in range(self.n_features_out_)], dtype=object)


def _interpolant(x: np.ndarray, y: np.ndarray) -> ScalarFunction:
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    if np.any(np.diff(xs) == 0):
        # average duplicate abscissae
        uniq, inv = np.unique(xs, return_inverse=True)
        ys = np.bincount(inv, weights=ys) / np.bincount(inv)
        xs = uniq
    bound = float(np.max(np.abs(ys)))
    return ScalarFunction(lambda t: np.interp(t, xs, ys), (0.0, math.inf), sup_bound=bound,
                          smooth=False, label="interp")


class StancuKantorovichApproximator(RegressorMixin, BaseEstimator):
    """``L(f; x)`` for a target ``f``.

    With ``func`` set, ``fit`` ignores ``y`` and uses ``func`` (a vectorised
    callable on ``[0, inf)`` or a :class:`ScalarFunction`).  Otherwise ``f``
    is the piecewise-linear interpolant of the samples ``(X, y)``.
    """

    def __init__(self, func: Optional[Callable] = None, n: int = 10, l: int = 0, alpha: float = 0.0,
                 beta: float = 0.0, q: float = 0.9, tol: float = 1e-12, s_max: Optional[int] = None):
        self.func = func
        self.n = n
        self.l = l
        self.alpha = alpha
        self.beta = beta
        self.q = q
        self.tol = tol
        self.s_max = s_max

    def fit(self, X=None, y=None):
        p = make_params(self)
        if self.func is not None:
            f = self.func if isinstance(self.func, ScalarFunction) else ScalarFunction(self.func)
        else:
            if X is None or y is None:
                raise ValueError("fit needs samples (X, y) when func is not set")
            x = check_unit_column(X)
            yv = np.asarray(y, dtype=float).ravel()
            if yv.shape != x.shape:
                raise ValueError(f"X and y have inconsistent lengths {x.size} and {yv.size}")
            f = _interpolant(x, yv)
        self.params_ = p
        self.target_ = f
        self.coef_ = coefficients(f, p, TruncationPolicy(self.tol, self.s_max))
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return np.atleast_1d(evaluate(self.coef_, self.params_, check_unit_column(X)))


class BivariateStancuKantorovichApproximator(RegressorMixin, BaseEstimator):
    """Tensor-product operator ``L(f; x, y)`` for a callable ``func(t, s)``."""

    def __init__(self, func=None, n1: int = 8, l1: int = 0, alpha1: float = 0.0, beta1: float = 0.0,
                 q1: float = 0.9, n2: int = 8, l2: int = 0, alpha2: float = 0.0, beta2: float = 0.0,
                 q2: float = 0.9, tol: float = 1e-12, method: str = "auto"):
        self.func = func
        self.n1, self.l1, self.alpha1, self.beta1, self.q1 = n1, l1, alpha1, beta1, q1
        self.n2, self.l2, self.alpha2, self.beta2, self.q2 = n2, l2, alpha2, beta2, q2
        self.tol = tol
        self.method = method

    def fit(self, X=None, y=None):
        if self.func is None:
            raise ValueError("BivariateStancuKantorovichApproximator needs func")
        f = self.func if isinstance(self.func, BivariateFunction) else BivariateFunction(self.func)
        self.params_ = BivariateParams(make_params(self, "1"), make_params(self, "2"))
        self.coef_ = biv_coefficients(f, self.params_, TruncationPolicy(self.tol), self.method)
        self.n_features_in_ = 2
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        arr = check_unit_square(X)
        return np.atleast_1d(biv_evaluate(self.coef_, self.params_, arr[:, 0], arr[:, 1]))
