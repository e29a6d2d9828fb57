"""Evaluation semantics and the series Bessel against mpmath."""

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from symred.expr import (
    FunctionSymbol,
    apply_symbol,
    con,
    div,
    exp,
    ln,
    mul,
    pow_,
    sqrt,
    var,
)
from symred.numeric import (
    Binding,
    PointRejected,
    bessel_i,
    evaluate,
    instantiate_functions,
    substitute_functions,
)

x = var("x")


def test_bessel_reference_value():
    # I_0(1), quoted to the last ulp
    assert bessel_i(Fraction(0), 1.0) == 1.2660658777520084


def test_bessel_against_mpmath():
    mpmath.mp.dps = 30
    rng = np.random.default_rng(5)
    for _ in range(60):
        nu = Fraction(int(rng.integers(-11, 12)), 6)
        arg = float(rng.uniform(0.05, 8.0))
        mine = bessel_i(nu, arg)
        ref = complex(mpmath.besseli(float(nu), arg))
        assert mine == pytest.approx(ref, rel=1e-12), (nu, arg)


def test_bessel_recurrence():
    # I_{nu-1}(t) - I_{nu+1}(t) = (2 nu / t) I_nu(t)
    for nu in (Fraction(1, 6), Fraction(5, 6), Fraction(-1, 6)):
        for t in (0.3, 0.9, 2.4):
            lhs = bessel_i(nu - 1, t) - bessel_i(nu + 1, t)
            rhs = 2 * float(nu) / t * bessel_i(nu, t)
            assert abs(lhs - rhs) < 1e-9


def test_singularity_rejected():
    with pytest.raises(PointRejected):
        evaluate(div(con(1), x), Binding({"x": 0.0}), eps_sing=1e-6)


def test_negative_radicand_rejected_in_real_mode():
    e = sqrt(x)
    with pytest.raises(PointRejected):
        evaluate(e, Binding({"x": -1.0}), real_domain=True)
    # complex mode takes the principal branch instead
    assert evaluate(e, Binding({"x": -1.0})) == pytest.approx(1j)


def test_log_domain():
    with pytest.raises(PointRejected):
        evaluate(ln(x), Binding({"x": -2.0}), real_domain=True)
    assert evaluate(ln(x), Binding({"x": math.e})) == pytest.approx(1.0)


def test_fractional_power_of_negative_base_real_mode():
    with pytest.raises(PointRejected):
        evaluate(pow_(x, Fraction(1, 2)), Binding({"x": -4.0}), real_domain=True)


def test_unbound_variable_is_an_error():
    from symred.numeric import EvaluationError
    with pytest.raises(EvaluationError):
        evaluate(x, Binding({}))


def test_instantiate_functions_deterministic():
    f = FunctionSymbol("f", ("s", "r"))
    e = apply_symbol(f, x, con(2))
    _, t1 = instantiate_functions(e, seed=42)
    _, t2 = instantiate_functions(e, seed=42)
    assert t1[f] == t2[f]
    _, t3 = instantiate_functions(e, seed=43)
    assert t1[f] != t3[f]


def test_instantiation_differs_per_symbol():
    f = FunctionSymbol("f", ("s",))
    h = FunctionSymbol("h", ("s",))
    e = mul(apply_symbol(f, x), apply_symbol(h, x))
    _, table = instantiate_functions(e, seed=7)
    assert table[f] != table[h]


def test_substitute_functions_applies_formals():
    f = FunctionSymbol("f", ("s",))
    e = apply_symbol(f, mul(con(2), x))
    concrete, table = instantiate_functions(e, seed=1)
    v1 = evaluate(concrete, Binding({"x": 0.4}))
    direct = evaluate(table[f], Binding({"s": 0.8}))
    assert v1 == pytest.approx(direct)
    # substitute_functions with the same table agrees with the rewrite
    again = substitute_functions(e, table)
    assert evaluate(again, Binding({"x": 0.4})) == pytest.approx(v1)


def test_substitute_functions_handles_derivative_applications():
    from symred.expr import differentiate
    f = FunctionSymbol("f", ("s",))
    e = differentiate(apply_symbol(f, mul(x, x)), "x")
    concrete_d, table = instantiate_functions(e, seed=3)
    # chain rule must survive instantiation: d/dx f(x^2) = 2x f'(x^2)
    fd = substitute_functions(apply_symbol(f, mul(x, x)), table)
    h = 1e-6
    at = lambda vx: evaluate(fd, Binding({"x": vx}))
    approx = (at(0.9 + h) - at(0.9 - h)) / (2 * h)
    exact = evaluate(concrete_d, Binding({"x": 0.9}))
    assert exact == pytest.approx(approx, rel=1e-6)


def test_exp_of_imaginary_argument():
    from symred.expr import I
    e = exp(mul(I, x))
    v = evaluate(e, Binding({"x": math.pi}))
    assert v == pytest.approx(-1.0)
