"""Jet geometry: spaces, total derivatives, candidate sampling."""

import pytest

from symred.expr import FunctionSymbol, free_variables, var
from symred.jets import (
    CandidateSolution,
    JetError,
    jet_keys,
    key_of_variable,
    make_space,
    sample_points,
    substitute_candidate,
    total_derivative,
)
from symred.numeric import Binding, evaluate
from symred.parser import parse_expression
from symred.sampling import SamplePlan

from helpers import finite_difference

SPACE = make_space(("x", "y"), ("u", "v"), 2)


def test_jet_key_enumeration():
    keys = jet_keys(SPACE, 1)
    # u, v, and four first derivatives
    assert len(keys) == 6
    assert len(jet_keys(SPACE, 2)) == 12


def test_key_of_variable():
    k = key_of_variable(SPACE, "d(u,x,y)")
    assert k is not None and k.alpha == 0 and k.orders == (1, 1)
    assert key_of_variable(SPACE, "u") is not None
    assert key_of_variable(SPACE, "x") is None
    assert key_of_variable(SPACE, "d(w,x)") is None


def test_total_derivative_of_dependent():
    e = total_derivative(var("u"), SPACE, 0)
    assert free_variables(e) == {"d(u,x)"}


def test_total_derivative_product():
    # D_x(x * u) = u + x u_x
    e = total_derivative(parse_expression("x*u"), SPACE, 0)
    b = Binding({"x": 2.0, "u": 3.0, "d(u,x)": 5.0})
    assert evaluate(e, b) == 13.0


def test_total_derivative_chain_through_jets():
    # D_y(u_x) = u_xy
    e = total_derivative(parse_expression("d(u,x)"), SPACE, 1)
    assert free_variables(e) == {"d(u,x,y)"}


def test_total_derivative_order_cap():
    with pytest.raises(JetError):
        total_derivative(parse_expression("d(u,x,x)"), SPACE, 0)


def test_substitute_candidate_replaces_jets():
    c = CandidateSolution(SPACE, {
        "u": parse_expression("x^2*y"),
        "v": parse_expression("x + y"),
    }, name="poly")
    e = substitute_candidate(parse_expression("d(u,x,y) - 2*x"), c)
    # u_xy of x^2 y is 2x, so the residual vanishes identically
    b = Binding({"x": 1.3, "y": -0.4})
    assert evaluate(e, b) == pytest.approx(0.0, abs=1e-14)


def test_sample_points_slots_match_assignments():
    c = CandidateSolution(SPACE, {
        "u": parse_expression("x^3 + y^2"),
        "v": parse_expression("x*y"),
    }, name="poly")
    plan = SamplePlan()
    points = sample_points(c, plan, 2)
    assert len(points) >= plan.min_accepted
    pt = points[0]
    vx, vy = pt.base["x"], pt.base["y"]
    assert pt.slots["u"] == pytest.approx(vx**3 + vy**2)
    assert pt.slots["d(u,x)"] == pytest.approx(3 * vx**2)
    assert pt.slots["d(u,x,x)"] == pytest.approx(6 * vx)
    assert pt.slots["d(v,x,y)"] == pytest.approx(1.0)


def test_sample_points_with_opaque_function_match_fd():
    f = FunctionSymbol("f", ("s",))
    c = CandidateSolution(SPACE, {
        "u": parse_expression("f(x*y)", {"f": f}),
        "v": parse_expression("0"),
    }, name="opaque")
    plan = SamplePlan()
    points = sample_points(c, plan, 1)
    from symred.jets import candidate_instantiation
    from symred.numeric import substitute_functions
    for pt in points[:4]:
        inst = candidate_instantiation(c, pt.seed)
        concrete = substitute_functions(c.assignments["u"], inst)
        fd = finite_difference(concrete, "x", dict(pt.base))
        assert pt.slots["d(u,x)"] == pytest.approx(fd, rel=1e-6)


def test_sample_points_skip_excluded_loci():
    c = CandidateSolution(SPACE, {
        "u": parse_expression("1/(x - y)"),
        "v": parse_expression("0"),
    }, (parse_expression("x - y"),), name="singular")
    points = sample_points(c, SamplePlan(), 1)
    for pt in points:
        assert abs(pt.base["x"] - pt.base["y"]) > 1e-6


def test_sampling_requires_full_assignment():
    # classes with free components are written with opaque functions,
    # never by omitting a dependent
    c = CandidateSolution(SPACE, {"u": parse_expression("x + y")}, name="part")
    with pytest.raises(JetError):
        sample_points(c, SamplePlan(), 1)


def test_candidate_rejects_jet_expressions():
    with pytest.raises(JetError):
        CandidateSolution(SPACE, {"u": parse_expression("d(v,x)")}, name="bad")


def test_candidate_rejects_unknown_dependent():
    with pytest.raises(JetError):
        CandidateSolution(SPACE, {"w": parse_expression("x")}, name="bad")


def test_order_zero_rejected():
    with pytest.raises(JetError):
        make_space(("x",), ("u",), 0)


def test_space_name_collision():
    with pytest.raises(JetError):
        make_space(("x", "u"), ("u",), 1)
