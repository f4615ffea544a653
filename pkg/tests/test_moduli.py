import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qbsk.batteries import standard_functions, standard_params
from qbsk.functions import DomainError, ScalarFunction, monomial
from qbsk.moduli import (BoundReport, GridPolicy, UnboundedCalibrationError, bound_check, bound_table,
                         calibrate_C, lip_class_constant, lipschitz_maximal, omega, omega2)
from qbsk.operators import OperatorParams, apply, central_moment

UNIT = (0.0, 1.0)
GP = GridPolicy()
COARSE = GridPolicy(eval_points=9, sup_points=512, refine=False, pair_points=256)


def _f(func, domain=UNIT, **kw):
    return ScalarFunction(func, domain, **kw)


def _brute_omega(f, delta, points=2000):
    t = np.linspace(*f.domain, points + 1)
    v = f(t)
    h = t[1] - t[0]
    best = 0.0
    for j in range(1, points + 1):
        if j * h >= delta:
            break
        best = max(best, float(np.max(np.abs(v[j:] - v[:-j]))))
    return best


def test_grid_policy_validation():
    with pytest.raises(ValueError):
        GridPolicy(eval_points=33, sup_points=100)
    with pytest.raises(ValueError):
        GridPolicy(exclusion=0.0)
    assert GP.doubled().sup_points == 2 * GP.sup_points


def test_omega_examples():
    assert omega(_f(lambda t: t), 0.1) == pytest.approx(0.1, abs=1e-9)
    assert omega(_f(lambda t: 3.0 + 0 * t), 0.3) == 0.0
    assert omega(_f(lambda t: np.abs(t - 0.5)), 0.2) == pytest.approx(0.2, abs=1e-9)


def test_omega_matches_brute_force():
    f = _f(lambda t: np.sin(7 * t) + t ** 2)
    for d in (0.05, 0.2, 0.5):
        assert omega(f, d, COARSE) >= _brute_omega(f, d, 500) - 1e-12
        assert omega(f, d) == pytest.approx(_brute_omega(f, d, 4000), abs=5e-3)


def test_omega_monotone_and_vanishing():
    for f in standard_functions():
        f = f.on(0.0, 1.0)
        ds = [1e-1, 1e-2, 1e-3]
        vals = [omega(f, d) for d in ds]
        assert all(b < a for a, b in zip(vals, vals[1:]))


@settings(max_examples=25, deadline=None)
@given(st.floats(1e-3, 0.9), st.floats(1e-3, 0.9))
def test_omega_monotone_in_delta(d1, d2):
    f = _f(lambda t: np.cos(5 * t))
    lo, hi = sorted((d1, d2))
    assert omega(f, lo) <= omega(f, hi) + 1e-15


def test_omega_subadditive():
    f = _f(lambda t: np.sqrt(t))
    a, b = 0.05, 0.12
    assert omega(f, a + b) <= omega(f, a) + omega(f, b) + 1e-9


def test_omega_clamps_large_delta():
    f = _f(lambda t: t)
    with pytest.warns(RuntimeWarning):
        assert omega(f, 5.0) == pytest.approx(1.0, abs=1e-9)


def test_omega_rejects_negative_delta():
    with pytest.raises(ValueError):
        omega(_f(lambda t: t), -0.1)
    with pytest.raises(ValueError):
        omega2(_f(lambda t: t), -0.1)
    assert omega(_f(lambda t: t), 0.0) == 0.0


def test_omega2_examples():
    assert omega2(_f(lambda t: 2 * t - 1), 0.3) == pytest.approx(0.0, abs=1e-12)
    assert omega2(_f(lambda t: 5.0 + 0 * t), 0.3) == 0.0
    for h in (0.05, 0.1, 0.25):
        assert omega2(_f(lambda t: t * t), h) == pytest.approx(2 * h * h, rel=1e-3)


def test_omega2_bounded_by_four_sup():
    for f in standard_functions():
        f = f.on(0.0, 2.0)
        sup = float(np.max(np.abs(f(np.linspace(0, 2, 4097)))))
        assert omega2(f, 0.7) <= 4 * sup


def test_lipschitz_maximal_examples():
    p_dom = (0.0, 2.0)
    assert lipschitz_maximal(_f(lambda t: t, p_dom), 0.3, 1.0) == pytest.approx(1.0, abs=1e-9)
    assert lipschitz_maximal(_f(lambda t: 0 * t + 1, p_dom), 0.3, 0.5) == 0.0
    assert lipschitz_maximal(_f(lambda t: t * t), 0.0, 1.0) == pytest.approx(1.0, abs=1e-9)


def test_lipschitz_maximal_rejects_bad_xi():
    with pytest.raises(ValueError):
        lipschitz_maximal(_f(lambda t: t), 0.5, 1.5)


def test_lip_class_constant_examples():
    assert lip_class_constant(_f(lambda t: 0 * t + 2), 0.5) == 0.0
    assert lip_class_constant(_f(np.sqrt), 1.0) == pytest.approx(1.0, abs=1e-3)
    assert lip_class_constant(_f(lambda t: t), 1.0) == pytest.approx(math.sqrt(2), abs=1e-3)


def test_lip_class_constant_brute_force():
    f = _f(lambda t: np.abs(t - 0.3))
    # 256 intervals nest inside the 2^11-interval pair grid
    t = np.linspace(0, 1, 257)
    T, Xg = np.meshgrid(t, t)
    mask = (T != Xg) & (T + Xg > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.abs(f(T) - f(Xg)) * (T + Xg) ** 0.25 / np.abs(T - Xg) ** 0.5
    brute = float(np.max(r[mask]))
    assert lip_class_constant(f, 0.5) >= brute - 1e-9


def test_bound_report_margin_and_ok():
    r = BoundReport("T3_3", 0.5, 0.2, 0.3, None)
    assert r.margin == pytest.approx(0.1)
    assert r.ok()
    assert not BoundReport("T3_3", 0.5, 0.3, 0.2, None).ok()


def test_t33_constant_function():
    p = OperatorParams(8, 1, 0.5, 0.25, 0.9)
    r = bound_check("T3_3", monomial(0), p, 0.4, xi=1.0)
    assert r.rhs == 0.0 and r.lhs == pytest.approx(0.0, abs=1e-11) and r.ok()


def test_t33_abs_example():
    p = OperatorParams(8, 1, 0.5, 0.25, 0.9)
    f = ScalarFunction(lambda t: np.abs(t - 0.5))
    r = bound_check("T3_3", f, p, 0.3, xi=1.0)
    assert r.margin >= 0
    assert r.lhs == pytest.approx(abs(apply(f, p, 0.3) - 0.2), abs=1e-12)


def test_t34_sqrt_battery():
    f = ScalarFunction(np.sqrt, smooth=False)
    for p in standard_params():
        r = bound_check("T3_4", f, p, 0.5, s=1.0)
        assert r.margin >= -1e-6 * r.rhs


def test_t34_rejects_zero():
    with pytest.raises(DomainError):
        bound_check("T3_4", monomial(1), OperatorParams(5, 0, 0, 0, 0.8), 0.0)


def test_t32_needs_constant():
    with pytest.raises(ValueError):
        bound_check("T3_2", monomial(2), OperatorParams(5, 0, 0, 0, 0.8), 0.5)


def test_unknown_theorem():
    with pytest.raises(ValueError):
        bound_check("T9_9", monomial(2), OperatorParams(5, 0, 0, 0, 0.8), 0.5)


def test_bound_table_order_and_lhs():
    p = OperatorParams(6, 1, 0.4, 0.2, 0.85)
    xs = [0.9, 0.1, 0.5]
    rows = bound_table("T3_3", monomial(2), p, xs, gp=COARSE, xi=0.5)
    assert [r.x for r in rows] == xs
    for r in rows:
        assert r.lhs == pytest.approx(abs(apply(monomial(2), p, r.x) - r.x ** 2), abs=1e-12)
        assert r.rhs >= 0


def test_t33_gamma_factor():
    p = OperatorParams(6, 1, 0.4, 0.2, 0.85)
    f = ScalarFunction(lambda t: t, (0.0, p.upper))
    r = bound_check("T3_3", f, p, 0.5, gp=COARSE, xi=1.0)
    assert r.rhs == pytest.approx(math.sqrt(central_moment(p, 0.5, 2)), rel=1e-9)


def test_calibrate_constants_is_zero():
    ps = [OperatorParams(5, 1, 0.5, 0.25, 0.8)]
    fs = [ScalarFunction(lambda t: 3.0 + 0 * t, sup_bound=3.0)]
    assert calibrate_C(fs, ps, COARSE) == 0.0


def test_calibrate_superset_monotone():
    fs = standard_functions()
    ps = standard_params()[:4]
    small = calibrate_C(fs[:1], ps[:2], COARSE)
    large = calibrate_C(fs, ps, COARSE)
    assert large >= small


def test_calibrate_empty_battery():
    with pytest.raises(ValueError):
        calibrate_C([], [OperatorParams(5, 0, 0.0, 0.0, 0.8)], COARSE)


def test_calibrate_affine():
    # for affine f the lhs equals omega(f, |L(e1) - x|) and omega2 vanishes
    lin = ScalarFunction(lambda t: 1.0 - 2.0 * t)
    p = OperatorParams(5, 1, 0.5, 0.25, 0.8)
    assert calibrate_C([lin], [p], COARSE) == pytest.approx(0.0, abs=1e-6)
    # without the exact endpoint shift the grid omega falls short of the lhs
    loose = GridPolicy(eval_points=9, sup_points=64, refine=False, pair_points=64, endpoint_shift=False)
    with pytest.raises(UnboundedCalibrationError):
        calibrate_C([lin], [p], loose)
