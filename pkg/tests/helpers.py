"""Shared test oracles: random expression trees, finite differences and
a brute-force minor rank.  Everything is seeded; no test depends on
global RNG state."""

from __future__ import annotations

import itertools

import numpy as np

from symred.expr import (
    Expression,
    ExpressionError,
    add,
    con,
    cos,
    differentiate,
    div,
    exp,
    free_variables,
    ln,
    mul,
    neg,
    pow_,
    sin,
    sqrt,
    var,
)
from symred.numeric import Binding, PointRejected, evaluate
from symred.sampling import draw_values, shared_instantiation

VARS = ("x", "y", "z")


def random_expression(rng: np.random.Generator, depth: int = 3) -> Expression:
    """A small random tree over x, y, z with smooth builtins."""
    if depth == 0 or rng.uniform() < 0.3:
        if rng.uniform() < 0.6:
            return var(VARS[rng.integers(0, len(VARS))])
        return con(int(rng.integers(-4, 5)) or 1)
    pick = rng.uniform()
    if pick < 0.30:
        return add(random_expression(rng, depth - 1),
                   random_expression(rng, depth - 1))
    if pick < 0.55:
        return mul(random_expression(rng, depth - 1),
                   random_expression(rng, depth - 1))
    if pick < 0.65:
        num = random_expression(rng, depth - 1)
        den = random_expression(rng, depth - 1)
        try:
            return div(num, den)
        except ExpressionError:     # denominator folded to exact zero
            return num
    if pick < 0.72:
        return pow_(random_expression(rng, depth - 1),
                    int(rng.integers(2, 4)))
    if pick < 0.79:
        return neg(random_expression(rng, depth - 1))
    inner = random_expression(rng, depth - 1)
    builtin = (exp, sin, cos, ln, sqrt)[rng.integers(0, 5)]
    return builtin(inner)


def finite_difference(e: Expression, name: str, values: dict,
                      h_scale: float = 1e-6) -> complex:
    """Central difference of e along name at the given point."""
    h = h_scale * max(1.0, abs(values[name]))
    hi, lo = dict(values), dict(values)
    hi[name] = values[name] + h
    lo[name] = values[name] - h
    vh = evaluate(e, Binding(hi), real_domain=True)
    vl = evaluate(e, Binding(lo), real_domain=True)
    return (vh - vl) / (2 * h)


def try_fd_case(e: Expression, name: str, values: dict) -> float | None:
    """Relative derivative gap at one point, or None if unusable there.

    A point is unusable when evaluation rejects it, anything overflows,
    the finite-difference stencil straddles a singularity, or the
    derivative does not exist (ln/sqrt of an exact zero).
    """
    try:
        exact = evaluate(differentiate(e, name), Binding(values), real_domain=True)
        approx = finite_difference(e, name, values)
    except (PointRejected, OverflowError, ExpressionError):
        return None
    if abs(exact) > 1e6 or abs(approx) > 1e6:
        return None
    return abs(approx - exact) / max(1.0, abs(exact))


def minor_rank(m: np.ndarray, rel_tol: float = 1e-8) -> int:
    """Rank as the largest k with a k x k minor above tolerance.

    Deliberately naive: the point is independence from the row-reduction
    path used by the library.
    """
    rows, cols = m.shape
    scale = max(1.0, float(np.max(np.abs(m))))
    for k in range(min(rows, cols), 0, -1):
        threshold = rel_tol * scale**k
        for rs in itertools.combinations(range(rows), k):
            for cs in itertools.combinations(range(cols), k):
                if abs(np.linalg.det(m[np.ix_(rs, cs)])) > threshold:
                    return k
    return 0


def numeric_matrix(matrix, values: dict) -> np.ndarray:
    """Evaluate an ExpressionMatrix of jet-free entries at one point."""
    out = np.empty(matrix.shape, dtype=complex)
    for i, row in enumerate(matrix.entries):
        for j, e in enumerate(row):
            out[i, j] = evaluate(e, Binding(values))
    return out


def point_for(matrix, rng: np.random.Generator) -> dict:
    names = set()
    for row in matrix.entries:
        for e in row:
            names |= free_variables(e)
    return {n: float(rng.uniform(0.5, 2.0)) * (1 if rng.uniform() < 0.5 else -1)
            for n in sorted(names)}


def max_abs_sampled(e: Expression, plan) -> float:
    """Largest |e| over box samples of its free variables.

    Independent of the library's point machinery on purpose: draws raw
    values, instantiates any opaque symbols once per seed, and skips
    rejected points.
    """
    names = sorted(free_variables(e))
    worst = 0.0
    for seed in plan.seeds:
        functions = shared_instantiation((e,), seed)
        accepted = 0
        for index in range(plan.count):
            values = draw_values(names, plan, seed, index)
            try:
                value = evaluate(e, Binding(values, functions),
                                 eps_sing=plan.eps_sing,
                                 real_domain=not plan.allow_complex)
            except PointRejected:
                continue
            accepted += 1
            worst = max(worst, abs(value))
        assert accepted >= plan.min_accepted, (seed, accepted)
    return worst
