"""Vector fields on (x, u), algebras, coefficient/characteristic matrices,
brackets, closure checking and prolongation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .expr import (
    MINUS_ONE,
    ZERO,
    Expression,
    Product,
    Sum,
    differentiate,
    free_variables,
    normalize,
)
from .jets import JetError, JetKey, VariableSpace, key_of_variable, key_variable, total_derivative
from .numeric import Binding, PointRejected, evaluate, substitute_functions
from .sampling import SamplePlan, SamplingError, draw_values, shared_instantiation


class FieldError(ValueError):
    pass


@dataclass(frozen=True)
class VectorField:
    """v = sum xi_i d/dx_i + sum phi_alpha d/du_alpha with coefficients
    depending on (x, u) only."""

    space: VariableSpace
    xi: tuple[Expression, ...]
    phi: tuple[Expression, ...]
    name: str = "v"

    def __post_init__(self):
        object.__setattr__(self, "xi", tuple(normalize(e) for e in self.xi))
        object.__setattr__(self, "phi", tuple(normalize(e) for e in self.phi))
        if len(self.xi) != self.space.p or len(self.phi) != self.space.q:
            raise FieldError("field %s: expected %d xi and %d phi coefficients"
                             % (self.name, self.space.p, self.space.q))
        for e in self.xi + self.phi:
            for v in free_variables(e):
                key = key_of_variable(self.space, v)
                if key is not None and key.order >= 1:
                    raise FieldError(
                        "field %s: coefficient uses jet coordinate %s" % (self.name, v))

    def components(self) -> tuple[Expression, ...]:
        return self.xi + self.phi

    def apply_to(self, f: Expression) -> Expression:
        """Directional derivative v(f) for f = f(x, u)."""
        names = self.space.independents + self.space.dependents
        terms = []
        for coeff, name in zip(self.components(), names):
            df = differentiate(f, name)
            if coeff == ZERO or df == ZERO:
                continue
            terms.append(Product((coeff, df)))
        return normalize(Sum(tuple(terms))) if terms else ZERO


@dataclass(frozen=True)
class Algebra:
    space: VariableSpace
    fields: tuple[VectorField, ...]
    name: str = "algebra"

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        if not self.fields:
            raise FieldError("algebra %s has no generators" % self.name)
        for f in self.fields:
            if f.space != self.space:
                raise FieldError("generator %s lives on a different space" % f.name)

    @property
    def r(self) -> int:
        return len(self.fields)

    def generator_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.fields)


@dataclass(frozen=True)
class ExpressionMatrix:
    entries: tuple[tuple[Expression, ...], ...]
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    name: str = "M"

    def __post_init__(self):
        object.__setattr__(self, "entries",
                           tuple(tuple(row) for row in self.entries))
        rows = len(self.entries)
        cols = len(self.entries[0]) if rows else 0
        if any(len(row) != cols for row in self.entries):
            raise FieldError("matrix %s is ragged" % self.name)
        if len(self.row_labels) != rows or len(self.col_labels) != cols:
            raise FieldError("matrix %s labels do not match its shape" % self.name)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.entries), len(self.entries[0]) if self.entries else 0

    def all_entries(self) -> list[Expression]:
        return [e for row in self.entries for e in row]

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "ExpressionMatrix":
        return ExpressionMatrix(
            tuple(tuple(self.entries[i][j] for j in cols) for i in rows),
            tuple(self.row_labels[i] for i in rows),
            tuple(self.col_labels[j] for j in cols),
            name="%s[%s;%s]" % (self.name, ",".join(map(str, rows)),
                                ",".join(map(str, cols))))


def xi_matrices(a: Algebra) -> tuple[ExpressionMatrix, ExpressionMatrix]:
    """The coefficient matrices: Xi1 = {xi}, Xi2 = {xi, phi}.

    Xi2 keeps the full p+q column set, including columns that happen to
    be identically zero, so column labels always line up with the space.
    """
    xi1 = ExpressionMatrix(
        tuple(f.xi for f in a.fields),
        a.generator_names(), a.space.independents,
        name="Xi1(%s)" % a.name)
    xi2 = ExpressionMatrix(
        tuple(f.xi + f.phi for f in a.fields),
        a.generator_names(), a.space.independents + a.space.dependents,
        name="Xi2(%s)" % a.name)
    return xi1, xi2


def characteristic_row(v: VectorField) -> tuple[Expression, ...]:
    space = v.space
    row = []
    for alpha, dep in enumerate(space.dependents):
        terms: list[Expression] = [v.phi[alpha]]
        for i in range(space.p):
            if v.xi[i] == ZERO:
                continue
            jet = key_variable(space, JetKey(alpha, tuple(1 if j == i else 0
                                                          for j in range(space.p))))
            terms.append(Product((MINUS_ONE, v.xi[i], jet)))
        row.append(normalize(Sum(tuple(terms))))
    return tuple(row)


def characteristic_matrix(a: Algebra) -> ExpressionMatrix:
    """Q(a, alpha) = phi^a_alpha - sum_i xi^a_i * d(u_alpha, x_i)."""
    return ExpressionMatrix(
        tuple(characteristic_row(f) for f in a.fields),
        a.generator_names(), a.space.dependents,
        name="Q(%s)" % a.name)


def evolutionary_form(v: VectorField) -> tuple[Expression, ...]:
    """The characteristics of v: its row of the Q matrix."""
    return characteristic_row(v)


def lie_bracket(v: VectorField, w: VectorField) -> VectorField:
    """Commutator [v, w] as a vector field on (x, u)."""
    if v.space != w.space:
        raise FieldError("bracket of fields on different spaces")
    xi = tuple(normalize(Sum((v.apply_to(w.xi[i]),
                              Product((MINUS_ONE, w.apply_to(v.xi[i]))))))
               for i in range(v.space.p))
    phi = tuple(normalize(Sum((v.apply_to(w.phi[a]),
                               Product((MINUS_ONE, w.apply_to(v.phi[a]))))))
                for a in range(v.space.q))
    return VectorField(v.space, xi, phi, name="[%s,%s]" % (v.name, w.name))


@dataclass
class ClosureReport:
    """Outcome of closure_check: membership of A in span(within) plus all
    pairwise bracket structure coefficients over within's basis."""

    ok: bool
    structure: dict[tuple[int, int], tuple[float, ...]]
    membership: dict[int, tuple[float, ...]]
    worst_residual: float
    flagged: bool = False

    def __bool__(self) -> bool:
        return self.ok


CLOSURE_TOL = 1e-8


def _field_samples(fields_components: list[tuple[Expression, ...]],
                   space: VariableSpace, plan: SamplePlan, n_points: int):
    """Evaluate each component tuple at shared random (x, u) points.

    Returns one matrix per input tuple: rows = stacked components over
    points, i.e. a vector in R^{(p+q)*n_points}.
    """
    names = list(space.independents + space.dependents)
    width = space.p + space.q
    all_exprs = [e for comps in fields_components for e in comps]
    columns = [[] for _ in fields_components]
    for seed in plan.seeds:
        inst = shared_instantiation(all_exprs, seed)
        ready = [[substitute_functions(e, inst) for e in comps]
                 for comps in fields_components]
        got = 0
        for index in range(plan.count):
            if got >= n_points:
                break
            values = draw_values(names, plan, seed, index)
            b = Binding(values)
            try:
                vals = [[evaluate(e, b, eps_sing=plan.eps_sing) for e in comps]
                        for comps in ready]
            except PointRejected:
                continue
            got += 1
            for col, v in zip(columns, vals):
                col.extend(v)
        if got < min(plan.min_accepted, n_points):
            raise SamplingError("seed %d: closure sampling starved" % seed)
    return [np.array(col, dtype=complex) for col in columns], width


def _fit_in_span(target: np.ndarray, basis: list[np.ndarray]) -> tuple[np.ndarray, float, bool]:
    A = np.stack(basis, axis=1)
    coeff, _, rank, _ = np.linalg.lstsq(A, target, rcond=None)
    resid = float(np.linalg.norm(A @ coeff - target))
    scale = max(1.0, float(np.linalg.norm(target)))
    deficient = rank < len(basis)
    return coeff, resid / scale, deficient


def closure_check(a: Algebra, within: Algebra,
                  plan: SamplePlan | None = None) -> ClosureReport:
    """True iff span(a) lies in span(within) and every pairwise bracket of
    a's generators does too, with constant coefficients.

    Coefficients are fitted by least squares over sampled (x, u) points;
    a fit counts only if its relative residual is below 1e-8.  A
    rank-deficient design matrix triggers one retry with more points and
    is then reported via the flagged bit.
    """
    if a.space != within.space:
        raise FieldError("closure_check across different spaces")
    plan = plan or SamplePlan()
    brackets: dict[tuple[int, int], VectorField] = {}
    for i in range(a.r):
        for j in range(i + 1, a.r):
            brackets[(i, j)] = lie_bracket(a.fields[i], a.fields[j])

    def run(n_points: int):
        components = [f.components() for f in within.fields]
        components += [f.components() for f in a.fields]
        components += [brackets[key].components() for key in sorted(brackets)]
        sampled, _ = _field_samples(components, a.space, plan, n_points)
        basis = sampled[:within.r]
        member_vecs = sampled[within.r:within.r + a.r]
        bracket_vecs = sampled[within.r + a.r:]
        membership = {}
        structure = {}
        worst = 0.0
        deficient_any = False
        for i, vec in enumerate(member_vecs):
            coeff, resid, deficient = _fit_in_span(vec, basis)
            membership[i] = tuple(float(c.real) for c in coeff)
            worst = max(worst, resid)
            deficient_any |= deficient
        for key, vec in zip(sorted(brackets), bracket_vecs):
            coeff, resid, deficient = _fit_in_span(vec, basis)
            structure[key] = tuple(float(c.real) for c in coeff)
            worst = max(worst, resid)
            deficient_any |= deficient
        return membership, structure, worst, deficient_any

    membership, structure, worst, deficient = run(plan.count)
    if deficient:
        membership, structure, worst, deficient = run(plan.count * 3)
    ok = worst < CLOSURE_TOL
    return ClosureReport(ok, structure, membership, worst, flagged=deficient)


def prolong(v: VectorField, order: int) -> dict[JetKey, Expression]:
    """Prolongation coefficients phi^{alpha,J} for |J| <= order.

    phi^{alpha, J+e_i} = D_i phi^{alpha,J} - sum_j (D_i xi_j) * u^alpha_{J+e_j}.
    """
    space = v.space
    if order > space.max_order:
        raise JetError("prolongation order %d exceeds max_order %d"
                       % (order, space.max_order))
    out: dict[JetKey, Expression] = {}
    for alpha in range(space.q):
        out[JetKey(alpha, (0,) * space.p)] = v.phi[alpha]
    d_xi = [[total_derivative(v.xi[j], space, i) for j in range(space.p)]
            for i in range(space.p)]
    for level in range(1, order + 1):
        for key in list(out):
            if key.order != level - 1:
                continue
            for i in range(space.p):
                new_orders = tuple(k + (1 if j == i else 0)
                                   for j, k in enumerate(key.orders))
                new_key = JetKey(key.alpha, new_orders)
                if new_key in out:
                    continue
                terms = [total_derivative(out[key], space, i)]
                for j in range(space.p):
                    if d_xi[i][j] == ZERO:
                        continue
                    bump = tuple(k + (1 if l == j else 0)
                                 for l, k in enumerate(key.orders))
                    jet = key_variable(space, JetKey(key.alpha, bump))
                    terms.append(Product((MINUS_ONE, d_xi[i][j], jet)))
                out[new_key] = normalize(Sum(tuple(terms)))
    return out


def apply_prolonged(v: VectorField, e: Expression) -> Expression:
    """pr v applied to an expression over the jet space."""
    space = v.space
    needed = 0
    for name in free_variables(e):
        key = key_of_variable(space, name)
        if key is not None:
            needed = max(needed, key.order)
    coeffs = prolong(v, needed)
    terms = []
    for i, x in enumerate(space.independents):
        de = differentiate(e, x)
        if de == ZERO or v.xi[i] == ZERO:
            continue
        terms.append(Product((v.xi[i], de)))
    for key, phi in coeffs.items():
        de = differentiate(e, key_variable(space, key).name)
        if de == ZERO or phi == ZERO:
            continue
        terms.append(Product((phi, de)))
    return normalize(Sum(tuple(terms))) if terms else ZERO
