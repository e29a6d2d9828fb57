"""Seeded point sampling with singularity rejection, and the numeric
equality oracle built on it.

Determinism contract: the value drawn for a variable depends only on
(seed, point index, position in the requested name list), so any two
runs with the same plan produce identical samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .expr import Expression, free_variables, function_symbols
from .numeric import (
    Binding,
    PointRejected,
    evaluate,
    random_polynomial,
    substitute_functions,
)

# numeric_equiv tolerances
EQUIV_ABS = 1e-10
EQUIV_REL = 1e-9

DEFAULT_INTERVALS = ((-2.0, -0.5), (0.5, 2.0))
DEFAULT_SEEDS = (101, 211, 331)


class SamplingError(RuntimeError):
    """Rejection starvation: too few points survived the guards."""


@dataclass(frozen=True)
class SamplePlan:
    """Where and how densely to sample.

    box maps variable names to interval unions ((lo, hi), ...); names
    not listed use default_intervals.  eps_sing is the rejection radius
    around excluded loci and denominators.  allow_complex switches the
    evaluator from real-domain guards to principal branches.
    """

    box: Mapping[str, tuple[tuple[float, float], ...]] = field(default_factory=dict)
    default_intervals: tuple[tuple[float, float], ...] = DEFAULT_INTERVALS
    count: int = 20
    min_accepted: int = 12
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    eps_sing: float = 1e-6
    allow_complex: bool = False

    def __post_init__(self):
        if not (self.count >= self.min_accepted >= 4):
            raise ValueError("need count >= min_accepted >= 4")
        if not self.seeds:
            raise ValueError("need at least one seed")
        for name, intervals in self.box.items():
            _check_intervals(name, intervals)
        _check_intervals("<default>", self.default_intervals)

    def intervals_for(self, name: str) -> tuple[tuple[float, float], ...]:
        return self.box.get(name, self.default_intervals)

    def with_(self, **changes) -> "SamplePlan":
        return replace(self, **changes)


def _check_intervals(name, intervals):
    if not intervals:
        raise ValueError("empty interval union for %s" % name)
    for lo, hi in intervals:
        if not (hi > lo):
            raise ValueError("empty interval [%g, %g] for %s" % (lo, hi, name))


def point_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def draw_from_intervals(rng: np.random.Generator,
                        intervals: tuple[tuple[float, float], ...]) -> float:
    widths = [hi - lo for lo, hi in intervals]
    u = rng.uniform(0.0, sum(widths))
    for (lo, hi), w in zip(intervals, widths):
        if u <= w:
            return lo + u
        u -= w
    return intervals[-1][1]


def draw_values(names: Sequence[str], plan: SamplePlan, seed: int,
                index: int) -> dict[str, float]:
    """One sample point for the named variables, in list order."""
    rng = point_rng(seed, index)
    return {name: draw_from_intervals(rng, plan.intervals_for(name)) for name in names}


def shared_instantiation(exprs: Iterable[Expression], seed: int):
    """One instantiation map covering every opaque symbol in exprs."""
    symbols = set()
    for e in exprs:
        symbols |= function_symbols(e)
    return {s: random_polynomial(s, seed) for s in sorted(symbols, key=lambda s: s.name)}


def numeric_equiv(e1: Expression, e2: Expression,
                  plan: SamplePlan | None = None) -> bool:
    """Sampling oracle for expression equality.

    True iff |e1 - e2| <= max(EQUIV_ABS, EQUIV_REL * max(|e1|, |e2|)) at
    every accepted point, over all plan seeds.  Opaque symbols get a
    shared per-seed instantiation so both sides see the same functions.
    """
    plan = plan or SamplePlan()
    names = sorted(free_variables(e1) | free_variables(e2))
    for seed in plan.seeds:
        inst = shared_instantiation((e1, e2), seed)
        f1 = substitute_functions(e1, inst)
        f2 = substitute_functions(e2, inst)
        accepted = 0
        for index in range(plan.count):
            values = draw_values(names, plan, seed, index)
            try:
                v1 = evaluate(f1, Binding(values), eps_sing=plan.eps_sing,
                              real_domain=not plan.allow_complex)
                v2 = evaluate(f2, Binding(values), eps_sing=plan.eps_sing,
                              real_domain=not plan.allow_complex)
            except PointRejected:
                continue
            accepted += 1
            if abs(v1 - v2) > max(EQUIV_ABS, EQUIV_REL * max(abs(v1), abs(v2))):
                return False
        if accepted < plan.min_accepted:
            raise SamplingError(
                "seed %d: only %d of %d points survived rejection (need %d)"
                % (seed, accepted, plan.count, plan.min_accepted))
    return True
