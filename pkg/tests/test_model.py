import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sfnide.errors import DomainError, EvaluationError, MismatchError, ShapeError
from sfnide.model import (EXAMPLE1_PARAMETER_SETS, AssumptionWarning, FractionalOrders, Grid,
                          ProblemSpec, build_kernel_rules, check_linear_growth, eval_F,
                          eval_G0, eval_Gj, example1, linear_test)
from sfnide.specialfn import beta, gamma

INV_GAMMA_04 = 0.4508241991944110895158129
# mpmath reference for the Example 1 G_1 kernel at alpha=0.4, beta1=0.6, s=0.5, t=1, z=1
EXAMPLE1_G1 = 0.9208083518406171177381283


def const(c, noise=False):
    def fn(*args):
        z = np.asarray(args[-1], dtype=float)
        out = np.full(z.shape, float(c))
        return out[..., None] if noise else out
    return fn


def test_eval_F_examples():
    orders = FractionalOrders(0.5, (1.0, 0.5))
    z = np.array([2.0])
    assert eval_F(0, orders, const(3.0), 0.9, 0.2, z)[0] == pytest.approx(3.0, rel=1e-15)
    assert eval_F(1, orders, const(1.0), 0.5, 0.25, z)[0] == pytest.approx(
        2 / math.sqrt(math.pi), rel=1e-15)
    np.testing.assert_array_equal(eval_F(1, orders, const(0.0), 0.5, 0.25, z), [0.0])


def test_eval_G0_examples():
    z = np.array([0.3, -1.0])
    assert eval_G0(FractionalOrders(1.0), const(2.5), 0.7, 0.1, z) == pytest.approx([2.5, 2.5])
    val = eval_G0(FractionalOrders(0.4), const(1.0), 1.0, 0.0, z)
    np.testing.assert_allclose(val, [INV_GAMMA_04] * 2, rtol=1e-14)
    np.testing.assert_array_equal(eval_G0(FractionalOrders(0.4), const(0.0), 1.0, 0.0, z), 0.0)


def test_eval_Gj_constant_closed_form():
    orders = FractionalOrders(0.6, (), 0.3, 0.2)
    rules = build_kernel_rules(orders, 16)
    z = np.array([1.0, 2.0])
    for j, b in ((1, 0.3), (2, 0.2)):
        g = const(1.7, noise=(j == 2))
        val = eval_Gj(j, orders, g, rules[j], 0.9, 0.3, z)
        exact = 1.7 * 0.6 ** (0.6 - b) * beta(1 - b, 0.6) / gamma(0.6)
        assert np.allclose(val, exact, rtol=1e-13)
    assert eval_Gj(2, orders, const(1.0, True), rules[2], 0.9, 0.3, z).shape == (2, 1)
    np.testing.assert_array_equal(eval_Gj(1, orders, const(0.0), rules[1], 0.9, 0.3, z), 0.0)


def test_eval_Gj_example1_oracle():
    problem = example1(0.4, 0.5, 0.6, 0.4)
    rules = build_kernel_rules(problem.orders, 16)
    val = eval_Gj(1, problem.orders, problem.g1, rules[1], 1.0, 0.5, np.array([1.0]))
    assert val[0] == pytest.approx(EXAMPLE1_G1, rel=1e-13)


def test_eval_Gj_homogeneity():
    orders = FractionalOrders(0.7, (), 0.45, 0.35)
    rules = build_kernel_rules(orders)
    z = np.array([0.5])
    for j in (1, 2):
        g = const(2.0, noise=(j == 2))
        a = eval_Gj(j, orders, g, rules[j], 1.0, 0.5, z)
        b = eval_Gj(j, orders, g, rules[j], 0.7, 0.2, z)
        np.testing.assert_allclose(a, b, rtol=1e-12)


def test_eval_Gj_rule_mismatch():
    orders = FractionalOrders(0.7, (), 0.45, 0.35)
    rules = build_kernel_rules(FractionalOrders(0.5, (), 0.45, 0.35))
    with pytest.raises(MismatchError):
        eval_Gj(1, orders, const(1.0), rules[1], 1.0, 0.5, np.array([0.0]))


def test_kernels_reject_diagonal():
    orders = FractionalOrders(0.5, (0.5,))
    with pytest.raises(DomainError):
        eval_F(0, orders, const(1.0), 0.5, 0.5, np.array([1.0]))
    with pytest.raises(DomainError):
        eval_G0(orders, const(1.0), 0.4, 0.5, np.array([1.0]))


def test_kernel_linearity():
    orders = FractionalOrders(0.35, (0.8,))
    f = lambda s, z: np.sin(z) + s
    f2 = lambda s, z: 2 * (np.sin(z) + s)
    z = np.array([0.3, 1.2, -2.0])
    assert np.array_equal(2 * eval_F(0, orders, f, 0.8, 0.1, z), eval_F(0, orders, f2, 0.8, 0.1, z))
    assert np.array_equal(2 * eval_G0(orders, f, 0.8, 0.1, z), eval_G0(orders, f2, 0.8, 0.1, z))


@settings(max_examples=50)
@given(st.integers(1, 4), st.floats(0.0, 0.9), st.floats(0.01, 1.0),
       st.lists(st.floats(-5, 5), min_size=4, max_size=4))
def test_kernel_shapes(d, s, lag, zs):
    problem = example1(0.4, 0.5, 0.6, 0.4)
    orders = problem.orders
    rules = build_kernel_rules(orders, 8)
    z = np.array(zs[:d])
    t = s + lag
    assert eval_F(0, orders, problem.f[0], t, s, z).shape == (d,)
    assert eval_G0(orders, problem.g0, t, s, z).shape == (d,)
    g1 = eval_Gj(1, orders, problem.g1, rules[1], t, s, z)
    g2 = eval_Gj(2, orders, lambda v, s_, zz: np.stack([np.sin(zz), np.cos(zz)], -1),
                 rules[2], t, s, z)
    assert g1.shape == (d,) and g2.shape == (d, 2)
    assert np.all(np.isfinite(g1)) and np.all(np.isfinite(g2))


def test_coefficient_errors():
    orders = FractionalOrders(0.5)
    with pytest.raises(EvaluationError):
        eval_G0(orders, lambda s, z: np.full(z.shape, np.nan), 1.0, 0.0, np.array([1.0]))
    with pytest.raises(ShapeError):
        eval_G0(orders, lambda s, z: np.ones(3), 1.0, 0.0, np.array([1.0, 2.0]))


def test_example1_sets_accepted():
    for params in EXAMPLE1_PARAMETER_SETS:
        problem = example1(*params)
        assert problem.orders.alpha == params[0]
        assert problem.dim == problem.wiener_dim == 1
    with pytest.raises(DomainError):
        example1(0.4, 0.3, 0.6, 0.4)


@pytest.mark.parametrize("bad", [
    dict(alpha=0.0), dict(alpha=1.2), dict(alpha_i=(0.2,)), dict(beta1=1.0),
    dict(beta2=0.5), dict(beta2=0.0)])
def test_order_validation(bad):
    args = dict(alpha=0.5, alpha_i=(0.6,), beta1=0.5, beta2=0.25)
    args.update(bad)
    with pytest.raises(DomainError):
        FractionalOrders(**args)


def test_problem_validation():
    orders = FractionalOrders(0.5, (0.6,))
    base = dict(dim=1, wiener_dim=1, orders=orders, f=(const(0.0),), g0=const(0.0),
                g1=const(0.0), g2=const(0.0, True), z0=[1.0])
    ProblemSpec(**base)
    with pytest.raises(MismatchError):
        ProblemSpec(**{**base, "f": ()})
    with pytest.raises(ShapeError):
        ProblemSpec(**{**base, "z0": [1.0, 2.0]})
    # d = 2 with a g2 that forgets the noise axis
    with pytest.raises(ShapeError):
        ProblemSpec(**{**base, "dim": 2, "z0": [1.0, 2.0], "g2": const(0.0)})


def test_grid():
    grid = Grid(8, 2.0)
    assert grid.h == 0.25
    assert grid.nodes[-1] == 2.0 and len(grid.nodes) == 9
    with pytest.raises(DomainError):
        Grid(0, 1.0)
    with pytest.raises(DomainError):
        Grid(4, -1.0)


def test_linear_growth_spot_check():
    problem = example1(0.4, 0.5, 0.6, 0.4)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert check_linear_growth(problem, 2.0) == "pass"
    steep = linear_test(0.5, coef_g0=100.0)
    with pytest.warns(AssumptionWarning):
        assert check_linear_growth(steep, 1.0) == "warn"
