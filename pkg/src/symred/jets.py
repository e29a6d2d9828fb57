"""Variable spaces, jet coordinates, candidate solutions and jet sampling.

A jet coordinate is an atomic Variable named d(u,x,...) with the
derivative list stored sorted, so mixed partials have one spelling.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

from .expr import (
    ZERO,
    Builtin,
    Expression,
    FunctionApp,
    Power,
    Product,
    Sum,
    Variable,
    differentiate,
    free_variables,
    normalize,
)
from .numeric import Binding, PointRejected, evaluate, substitute_functions
from .parser import jet_name, split_jet_name
from .sampling import SamplePlan, SamplingError, draw_values, shared_instantiation


class JetError(ValueError):
    pass


@dataclass(frozen=True)
class VariableSpace:
    independents: tuple[str, ...]
    dependents: tuple[str, ...]
    max_order: int

    @property
    def p(self) -> int:
        return len(self.independents)

    @property
    def q(self) -> int:
        return len(self.dependents)

    def dependent_index(self, name: str) -> int:
        try:
            return self.dependents.index(name)
        except ValueError:
            raise JetError("%r is not a dependent variable" % name) from None


def make_space(independents: Sequence[str], dependents: Sequence[str],
               max_order: int) -> VariableSpace:
    independents = tuple(independents)
    dependents = tuple(dependents)
    names = independents + dependents
    if len(set(names)) != len(names):
        raise JetError("independent/dependent names must be distinct")
    if not independents or not dependents:
        raise JetError("need at least one independent and one dependent variable")
    if max_order < 1:
        raise JetError("max_order must be >= 1")
    for name in names:
        if split_jet_name(name):
            raise JetError("%r collides with jet-coordinate spelling" % name)
    return VariableSpace(independents, dependents, max_order)


@dataclass(frozen=True)
class JetKey:
    """Dependent index alpha plus a derivative multi-index over independents."""

    alpha: int
    orders: tuple[int, ...]

    @property
    def order(self) -> int:
        return sum(self.orders)


def jet_keys(space: VariableSpace, order: int) -> list[JetKey]:
    """All JetKeys with |J| <= order, dependent-major, in a stable order."""
    if order > space.max_order:
        raise JetError("order %d exceeds space max_order %d" % (order, space.max_order))
    multi = sorted(
        m for m in itertools.product(range(order + 1), repeat=space.p)
        if sum(m) <= order)
    return [JetKey(alpha, m) for alpha in range(space.q) for m in multi]


def key_variable(space: VariableSpace, key: JetKey) -> Variable:
    if key.order == 0:
        return Variable(space.dependents[key.alpha])
    dvars = []
    for name, k in zip(space.independents, key.orders):
        dvars.extend([name] * k)
    return Variable(jet_name(space.dependents[key.alpha], dvars))


def key_of_variable(space: VariableSpace, name: str) -> JetKey | None:
    """Inverse of key_variable for names that denote jets of this space."""
    if name in space.dependents:
        return JetKey(space.dependents.index(name), (0,) * space.p)
    parts = split_jet_name(name)
    if parts is None or parts[0] not in space.dependents:
        return None
    head, dvars = parts
    orders = [0] * space.p
    for v in dvars:
        if v not in space.independents:
            return None
        orders[space.independents.index(v)] += 1
    return JetKey(space.dependents.index(head), tuple(orders))


def bump_name(space: VariableSpace, name: str, i: int) -> str:
    """Jet name for one more derivative of `name` along independent i."""
    parts = split_jet_name(name)
    if parts is None:
        head, dvars = name, ()
    else:
        head, dvars = parts
    dvars = list(dvars) + [space.independents[i]]
    if len(dvars) > space.max_order:
        raise JetError("derivative of %s exceeds max_order %d" % (name, space.max_order))
    return jet_name(head, dvars)


def total_derivative(e: Expression, space: VariableSpace, i: int) -> Expression:
    """Total derivative D_i on the jet space.

    D_i = d/dx_i + sum over jet coordinates v present in e of
    (d e / d v) * v-bumped-along-i.
    """
    terms = [differentiate(e, space.independents[i])]
    for name in sorted(free_variables(e)):
        if key_of_variable(space, name) is None:
            continue
        partial = differentiate(e, name)
        if partial == ZERO:
            continue
        terms.append(Product((partial, Variable(bump_name(space, name, i)))))
    return normalize(Sum(tuple(terms)))


@dataclass(frozen=True)
class CandidateSolution:
    """An explicit ansatz u = f(x), possibly with free parameters baked in.

    assignments may cover a subset of the dependents; operations that
    need a missing one raise.  excluded_loci are expressions in the
    independents whose small values mark points to reject.
    """

    space: VariableSpace
    assignments: Mapping[str, Expression]
    excluded_loci: tuple[Expression, ...] = ()
    name: str = "candidate"

    def __post_init__(self):
        object.__setattr__(self, "assignments", dict(self.assignments))
        object.__setattr__(self, "excluded_loci", tuple(self.excluded_loci))
        forbidden = set(self.space.dependents)
        for dep, rhs in self.assignments.items():
            if dep not in self.space.dependents:
                raise JetError("%r is not a dependent of the space" % dep)
            bad = {v for v in free_variables(rhs)
                   if v in forbidden or key_of_variable(self.space, v) is not None}
            if bad:
                raise JetError("candidate %s for %s uses jet-space names %s"
                               % (self.name, dep, sorted(bad)))
        for locus in self.excluded_loci:
            bad = {v for v in free_variables(locus)
                   if key_of_variable(self.space, v) is not None}
            if bad:
                raise JetError("excluded locus uses jet-space names %s" % sorted(bad))


@lru_cache(maxsize=8192)
def _candidate_derivative(rhs: Expression, dvars: tuple[str, ...]) -> Expression:
    out = rhs
    for v in dvars:
        out = differentiate(out, v)
    return out


def substitute_candidate(e: Expression, c: CandidateSolution) -> Expression:
    """Replace dependents and jet coordinates in e by the candidate's data."""
    return normalize(_subst(e, c))


def _subst(e: Expression, c: CandidateSolution) -> Expression:
    if isinstance(e, Variable):
        key = key_of_variable(c.space, e.name)
        if key is None:
            return e
        if key.order > c.space.max_order:  # pragma: no cover - name length bound
            raise JetError("jet order of %s exceeds the space bound" % e.name)
        dep = c.space.dependents[key.alpha]
        rhs = c.assignments.get(dep)
        if rhs is None:
            raise JetError("candidate %s does not define %s" % (c.name, dep))
        dvars = []
        for name, k in zip(c.space.independents, key.orders):
            dvars.extend([name] * k)
        return _candidate_derivative(rhs, tuple(dvars))
    if isinstance(e, Sum):
        return Sum(tuple(_subst(t, c) for t in e.terms))
    if isinstance(e, Product):
        return Product(tuple(_subst(f, c) for f in e.factors))
    if isinstance(e, Power):
        return Power(_subst(e.base, c), e.exponent)
    if isinstance(e, Builtin):
        return Builtin(e.name, _subst(e.arg, c), e.order)
    if isinstance(e, FunctionApp):
        return FunctionApp(e.symbol, tuple(_subst(a, c) for a in e.args), e.orders)
    return e


@dataclass(frozen=True)
class JetPoint:
    """One sampled point of a candidate's prolonged graph.

    slots maps jet-coordinate names (dependents included, order 0) to
    values; base maps independents.  The instantiation seed pins down
    which stand-ins any opaque symbols received.
    """

    base: Mapping[str, float]
    slots: Mapping[str, complex]
    order: int
    candidate: str
    seed: int
    index: int

    def binding_values(self) -> dict[str, complex]:
        out = {name: complex(v) for name, v in self.base.items()}
        out.update(self.slots)
        return out

    def to_json(self, space: VariableSpace) -> dict:
        # field order: independents, then jet_keys order
        return {
            "base": [[name, self.base[name]] for name in space.independents],
            "slots": [[name, val.real, val.imag]
                      for name, val in sorted(self.slots.items())],
            "order": self.order,
            "candidate": self.candidate,
            "seed": self.seed,
            "index": self.index,
        }


def candidate_instantiation(c: CandidateSolution, seed: int):
    """Opaque-symbol instantiation used when sampling this candidate.

    Exposed so that diagnostics can reproduce exactly the fragments a
    given seed saw.
    """
    return shared_instantiation(
        list(c.assignments.values()) + list(c.excluded_loci), seed)


def sample_points(c: CandidateSolution, plan: SamplePlan, order: int) -> list[JetPoint]:
    """Draw jet points on the candidate's graph.

    Rejects points where any excluded locus or encountered denominator
    is within eps_sing of zero.  min_accepted applies per seed.
    """
    space = c.space
    if order > space.max_order:
        raise JetError("order %d exceeds space max_order %d" % (order, space.max_order))
    keys = jet_keys(space, order)
    needed = sorted({space.dependents[k.alpha] for k in keys})
    missing = [dep for dep in needed if dep not in c.assignments]
    if missing:
        raise JetError("candidate %s does not define %s" % (c.name, missing))

    points: list[JetPoint] = []
    for seed in plan.seeds:
        inst = candidate_instantiation(c, seed)
        derivs: dict[str, Expression] = {}
        for key in keys:
            dep = space.dependents[key.alpha]
            dvars = []
            for name, k in zip(space.independents, key.orders):
                dvars.extend([name] * k)
            rhs = substitute_functions(c.assignments[dep], inst)
            derivs[key_variable(space, key).name] = _candidate_derivative(
                rhs, tuple(dvars))
        loci = [substitute_functions(L, inst) for L in c.excluded_loci]

        accepted = 0
        for index in range(plan.count):
            base = draw_values(space.independents, plan, seed, index)
            b = Binding(base)
            try:
                if any(abs(evaluate(L, b, eps_sing=plan.eps_sing,
                                    real_domain=not plan.allow_complex)) <= plan.eps_sing
                       for L in loci):
                    continue
                slots = {name: evaluate(d, b, eps_sing=plan.eps_sing,
                                        real_domain=not plan.allow_complex)
                         for name, d in derivs.items()}
            except PointRejected:
                continue
            accepted += 1
            points.append(JetPoint(base, slots, order, c.name, seed, index))
        if accepted < plan.min_accepted:
            raise SamplingError(
                "seed %d: candidate %s kept %d of %d points (need %d)"
                % (seed, c.name, accepted, plan.count, plan.min_accepted))
    return points


def point_json_lines(points: list[JetPoint], space: VariableSpace) -> str:
    return "\n".join(json.dumps(p.to_json(space), sort_keys=True) for p in points)
