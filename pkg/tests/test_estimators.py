import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.linear_model import LinearRegression
from sklearn.pipeline import make_pipeline

from qbsk.estimators import (BivariateStancuKantorovichApproximator, QBernsteinFeatures,
                             StancuKantorovichApproximator)
from qbsk.functions import ScalarFunction
from qbsk.operators import OperatorParams, apply, basis_matrix

X = np.linspace(0, 1, 11).reshape(-1, 1)


def test_features_are_basis_values():
    feat = QBernsteinFeatures(n=5, l=2, q=0.7).fit(X)
    B = feat.transform(X)
    assert B.shape == (11, 8)
    np.testing.assert_allclose(B, basis_matrix(OperatorParams(5, 2, 0, 0, 0.7), X.ravel()))
    np.testing.assert_allclose(B.sum(axis=1), 1.0, atol=1e-13)
    assert list(feat.get_feature_names_out())[:2] == ["b0", "b1"]


def test_features_pipeline_fits_polynomial():
    y = 1 - 2 * X.ravel() + X.ravel() ** 3
    model = make_pipeline(QBernsteinFeatures(n=4, q=0.8), LinearRegression(fit_intercept=False)).fit(X, y)
    np.testing.assert_allclose(model.predict(X), y, atol=1e-8)


def test_get_params_and_clone():
    est = StancuKantorovichApproximator(np.sin, n=7, alpha=0.5, beta=0.25)
    params = est.get_params()
    assert params["n"] == 7 and params["alpha"] == 0.5 and params["func"] is np.sin
    twin = clone(est)
    assert twin.get_params() == params and twin is not est
    twin.set_params(n=9)
    assert twin.n == 9 and est.n == 7


def test_callable_target_matches_apply():
    est = StancuKantorovichApproximator(np.cos, n=6, l=1, alpha=0.5, beta=0.25, q=0.85).fit()
    p = OperatorParams(6, 1, 0.5, 0.25, 0.85)
    np.testing.assert_allclose(est.predict(X), apply(ScalarFunction(np.cos).on(0, p.upper), p, X.ravel()),
                               atol=1e-12)


def test_interpolant_target():
    # the interpolant extends by its last value beyond x = 1
    xs = np.linspace(0, 1, 201)
    est = StancuKantorovichApproximator(n=6, l=1, q=0.85).fit(xs.reshape(-1, 1), xs ** 2)
    p = est.params_
    ref = ScalarFunction(lambda t: np.minimum(t, 1.0) ** 2)
    np.testing.assert_allclose(est.predict(X), apply(ref, p, X.ravel()), atol=5e-5)


def test_interpolant_unsorted_and_duplicates():
    a = StancuKantorovichApproximator(n=4, q=0.8).fit([[0.0], [1.0], [0.5], [0.5]], [0.0, 1.0, 0.2, 0.8])
    b = StancuKantorovichApproximator(n=4, q=0.8).fit([[0.0], [0.5], [1.0]], [0.0, 0.5, 1.0])
    np.testing.assert_allclose(a.coef_, b.coef_, atol=1e-13)


def test_score_for_constant():
    y = np.full(11, 2.0)
    est = StancuKantorovichApproximator(lambda t: 0 * t + 2.0, n=5).fit()
    np.testing.assert_allclose(est.predict(X), y, atol=1e-12)


def test_input_validation():
    est = StancuKantorovichApproximator(n=4)
    with pytest.raises(ValueError):
        est.fit()
    with pytest.raises(ValueError):
        est.fit([[0.1], [0.2]], [1.0])
    with pytest.raises(ValueError):
        est.fit([[0.1, 0.2]], [1.0])
    with pytest.raises(ValueError):
        est.fit([[1.5]], [1.0])
    with pytest.raises(NotFittedError):
        StancuKantorovichApproximator(np.sin).predict(X)
    with pytest.raises(ValueError):
        StancuKantorovichApproximator(np.sin, q=1.0).fit()
    fitted = StancuKantorovichApproximator(np.sin).fit()
    with pytest.raises(ValueError):
        fitted.predict([[-0.1]])
    with pytest.raises(ValueError):
        QBernsteinFeatures().fit(np.zeros((3, 2)))


def test_bivariate_estimator():
    g = np.linspace(0, 1, 4)
    pts = np.array([(a, b) for a in g for b in g])
    est = BivariateStancuKantorovichApproximator(lambda t, s: t * s, n1=4, q1=0.8, n2=3, q2=0.7).fit()
    p1, p2 = OperatorParams(4, 0, 0, 0, 0.8), OperatorParams(3, 0, 0, 0, 0.7)
    e1 = ScalarFunction(lambda t: t)
    expected = apply(e1, p1, pts[:, 0]) * apply(e1, p2, pts[:, 1])
    np.testing.assert_allclose(est.predict(pts), expected, atol=1e-10)
    assert clone(est).get_params()["q2"] == 0.7
    with pytest.raises(ValueError):
        BivariateStancuKantorovichApproximator().fit()
    with pytest.raises(ValueError):
        est.predict(np.zeros((2, 3)))
