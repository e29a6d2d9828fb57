"""Immutable symbolic expression trees over exact rationals.

The kernel is deliberately small: construction, structural normalization,
exact differentiation and printing.  There is no general simplifier; two
expressions are considered equal when the sampling oracle in
:mod:`symred.sampling` says so.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

# Exact scalar type used for all literal constants and exponents.
Rational = Fraction

RationalLike = Union[Rational, int]

BUILTIN_NAMES = ("exp", "ln", "sin", "cos", "besseli")


class ExpressionError(ValueError):
    pass


@dataclass(frozen=True)
class FunctionSymbol:
    """An opaque function of declared formal arguments, e.g. a(t).

    Derivatives are represented by the applying node's multi-index, one
    entry per formal argument, so the symbol itself never changes.
    """

    name: str
    formals: tuple[str, ...]

    def __post_init__(self):
        if not self.formals:
            raise ExpressionError("function symbol %r needs at least one argument" % self.name)
        object.__setattr__(self, "formals", tuple(self.formals))

    @property
    def arity(self) -> int:
        return len(self.formals)


class Expression:
    """Base class for all nodes.  Instances are immutable and hashable."""

    __slots__ = ()

    def __add__(self, other):
        return Sum((self, _coerce(other)))

    def __radd__(self, other):
        return Sum((_coerce(other), self))

    def __sub__(self, other):
        return Sum((self, neg(_coerce(other))))

    def __rsub__(self, other):
        return Sum((_coerce(other), neg(self)))

    def __mul__(self, other):
        return Product((self, _coerce(other)))

    def __rmul__(self, other):
        return Product((_coerce(other), self))

    def __truediv__(self, other):
        return Product((self, Power(_coerce(other), Rational(-1))))

    def __rtruediv__(self, other):
        return Product((_coerce(other), Power(self, Rational(-1))))

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return Power(self, Rational(exponent))

    def __repr__(self):
        return "<%s %s>" % (type(self).__name__, to_text(self))


@dataclass(frozen=True, eq=True, repr=False)
class Constant(Expression):
    value: Rational

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True, eq=True, repr=False)
class ImaginaryUnit(Expression):
    pass


@dataclass(frozen=True, eq=True, repr=False)
class Variable(Expression):
    name: str


@dataclass(frozen=True, eq=True, repr=False)
class FunctionApp(Expression):
    """symbol applied to argument expressions, differentiated per orders.

    orders[j] counts derivatives with respect to the j-th formal slot.
    """

    symbol: FunctionSymbol
    args: tuple[Expression, ...]
    orders: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        object.__setattr__(self, "orders", tuple(self.orders))
        if len(self.args) != self.symbol.arity:
            raise ExpressionError(
                "%s expects %d argument(s), got %d"
                % (self.symbol.name, self.symbol.arity, len(self.args))
            )
        if len(self.orders) != self.symbol.arity or any(k < 0 for k in self.orders):
            raise ExpressionError("bad derivative multi-index for %s" % self.symbol.name)


@dataclass(frozen=True, eq=True, repr=False)
class Sum(Expression):
    terms: tuple[Expression, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))


@dataclass(frozen=True, eq=True, repr=False)
class Product(Expression):
    factors: tuple[Expression, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))


@dataclass(frozen=True, eq=True, repr=False)
class Power(Expression):
    base: Expression
    exponent: Rational

    def __post_init__(self):
        if not isinstance(self.exponent, Fraction):
            object.__setattr__(self, "exponent", Fraction(self.exponent))


@dataclass(frozen=True, eq=True, repr=False)
class Builtin(Expression):
    """exp, ln, sin, cos or besseli.  `order` is the besseli index nu."""

    name: str
    arg: Expression
    order: Rational | None = None

    def __post_init__(self):
        if self.name not in BUILTIN_NAMES:
            raise ExpressionError("unknown builtin %r" % self.name)
        if (self.name == "besseli") != (self.order is not None):
            raise ExpressionError("besseli takes an order, other builtins do not")
        if self.order is not None and not isinstance(self.order, Fraction):
            object.__setattr__(self, "order", Fraction(self.order))


ZERO = Constant(Fraction(0))
ONE = Constant(Fraction(1))
MINUS_ONE = Constant(Fraction(-1))
I = ImaginaryUnit()


def _coerce(value) -> Expression:
    if isinstance(value, Expression):
        return value
    if isinstance(value, (int, Fraction)):
        return Constant(Fraction(value))
    raise ExpressionError("cannot use %r as an expression" % (value,))


def con(value: RationalLike) -> Constant:
    return Constant(Fraction(value))


def var(name: str) -> Variable:
    return Variable(name)


def add(*terms) -> Expression:
    return Sum(tuple(_coerce(t) for t in terms))


def mul(*factors) -> Expression:
    return Product(tuple(_coerce(f) for f in factors))


def neg(e) -> Expression:
    return Product((MINUS_ONE, _coerce(e)))


def div(a, b) -> Expression:
    return Product((_coerce(a), Power(_coerce(b), Fraction(-1))))


def pow_(base, exponent: RationalLike) -> Expression:
    return Power(_coerce(base), Fraction(exponent))


def sqrt(e) -> Expression:
    # sqrt is not a distinct node kind; it canonicalizes to a 1/2 power.
    return Power(_coerce(e), Fraction(1, 2))


def exp(e) -> Expression:
    return Builtin("exp", _coerce(e))


def ln(e) -> Expression:
    return Builtin("ln", _coerce(e))


def sin(e) -> Expression:
    return Builtin("sin", _coerce(e))


def cos(e) -> Expression:
    return Builtin("cos", _coerce(e))


def besseli(order: RationalLike, e) -> Expression:
    return Builtin("besseli", _coerce(e), Fraction(order))


def apply_symbol(symbol: FunctionSymbol, *args, orders: tuple[int, ...] | None = None) -> FunctionApp:
    if orders is None:
        orders = (0,) * symbol.arity
    return FunctionApp(symbol, tuple(_coerce(a) for a in args), orders)


# ---------------------------------------------------------------------------
# traversal helpers

def children(e: Expression) -> tuple[Expression, ...]:
    if isinstance(e, Sum):
        return e.terms
    if isinstance(e, Product):
        return e.factors
    if isinstance(e, Power):
        return (e.base,)
    if isinstance(e, Builtin):
        return (e.arg,)
    if isinstance(e, FunctionApp):
        return e.args
    return ()


def free_variables(e: Expression) -> set[str]:
    out: set[str] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Variable):
            out.add(node.name)
        else:
            stack.extend(children(node))
    return out


def function_symbols(e: Expression) -> set[FunctionSymbol]:
    out: set[FunctionSymbol] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, FunctionApp):
            out.add(node.symbol)
        stack.extend(children(node))
    return out


def substitute(e: Expression, mapping: Mapping[str, Expression]) -> Expression:
    """Replace variables by expressions, by name.  Does not normalize."""
    if isinstance(e, Variable):
        return mapping.get(e.name, e)
    if isinstance(e, Sum):
        return Sum(tuple(substitute(t, mapping) for t in e.terms))
    if isinstance(e, Product):
        return Product(tuple(substitute(f, mapping) for f in e.factors))
    if isinstance(e, Power):
        return Power(substitute(e.base, mapping), e.exponent)
    if isinstance(e, Builtin):
        return Builtin(e.name, substitute(e.arg, mapping), e.order)
    if isinstance(e, FunctionApp):
        return FunctionApp(e.symbol, tuple(substitute(a, mapping) for a in e.args), e.orders)
    return e


# ---------------------------------------------------------------------------
# canonical ordering

_KIND_RANK = {
    Constant: 0,
    ImaginaryUnit: 1,
    Variable: 2,
    Power: 3,
    Builtin: 4,
    FunctionApp: 5,
    Product: 6,
    Sum: 7,
}


def _sort_key(e: Expression):
    rank = _KIND_RANK[type(e)]
    if isinstance(e, Constant):
        return (rank, e.value, ())
    if isinstance(e, ImaginaryUnit):
        return (rank, 0, ())
    if isinstance(e, Variable):
        return (rank, e.name, ())
    if isinstance(e, Power):
        return (rank, e.exponent, (_sort_key(e.base),))
    if isinstance(e, Builtin):
        return (rank, (e.name, e.order if e.order is not None else Fraction(0)), (_sort_key(e.arg),))
    if isinstance(e, FunctionApp):
        return (rank, (e.symbol.name, e.orders), tuple(_sort_key(a) for a in e.args))
    if isinstance(e, Sum):
        return (rank, len(e.terms), tuple(_sort_key(t) for t in e.terms))
    if isinstance(e, Product):
        return (rank, len(e.factors), tuple(_sort_key(f) for f in e.factors))
    raise ExpressionError("unreachable")


def _cmp_key(a, b) -> int:
    # Keys mix strings, fractions and tuples at the same depth, so plain
    # tuple comparison can raise TypeError; compare elementwise by type.
    if isinstance(a, tuple) and isinstance(b, tuple):
        for x, y in zip(a, b):
            c = _cmp_key(x, y)
            if c:
                return c
        return (len(a) > len(b)) - (len(a) < len(b))
    ta = 0 if isinstance(a, (int, Fraction)) else 1 if isinstance(a, str) else 2
    tb = 0 if isinstance(b, (int, Fraction)) else 1 if isinstance(b, str) else 2
    if ta != tb:
        return -1 if ta < tb else 1
    return (a > b) - (a < b)


class _Keyed:
    __slots__ = ("key", "expr")

    def __init__(self, expr):
        self.key = _sort_key(expr)
        self.expr = expr

    def __lt__(self, other):
        return _cmp_key(self.key, other.key) < 0


def _sorted_exprs(exprs: Iterable[Expression]) -> list[Expression]:
    return [k.expr for k in sorted(_Keyed(e) for e in exprs)]


# ---------------------------------------------------------------------------
# normalization

def normalize(e: Expression) -> Expression:
    """Weak structural normal form.

    Flattens nested sums and products, folds rational constants, merges
    equal-base powers inside a product and sorts children canonically.
    Idempotent and value preserving; it does not attempt cancellation
    beyond exact rational arithmetic.
    """
    if isinstance(e, (Constant, ImaginaryUnit, Variable)):
        return e
    if isinstance(e, Sum):
        return _normalize_sum(e)
    if isinstance(e, Product):
        return _normalize_product(e)
    if isinstance(e, Power):
        return _normalize_power(normalize(e.base), e.exponent)
    if isinstance(e, Builtin):
        return Builtin(e.name, normalize(e.arg), e.order)
    if isinstance(e, FunctionApp):
        return FunctionApp(e.symbol, tuple(normalize(a) for a in e.args), e.orders)
    raise ExpressionError("unknown node %r" % type(e).__name__)


def _normalize_sum(e: Sum) -> Expression:
    terms: list[Expression] = []
    const = Fraction(0)
    for raw in e.terms:
        t = normalize(raw)
        if isinstance(t, Sum):
            inner = t.terms
        else:
            inner = (t,)
        for u in inner:
            if isinstance(u, Constant):
                const += u.value
            else:
                terms.append(u)
    terms = _sorted_exprs(terms)
    if const != 0:
        terms.insert(0, Constant(const))
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    return Sum(tuple(terms))


def _as_base_exponent(f: Expression) -> tuple[Expression, Fraction]:
    if isinstance(f, Power):
        return f.base, f.exponent
    return f, Fraction(1)


def _normalize_product(e: Product) -> Expression:
    flat: list[Expression] = []
    const = Fraction(1)
    i_power = 0
    stack = [normalize(f) for f in e.factors]
    for f in stack:
        inner = f.factors if isinstance(f, Product) else (f,)
        for u in inner:
            if isinstance(u, Constant):
                const *= u.value
            elif isinstance(u, ImaginaryUnit):
                i_power += 1
            elif isinstance(u, Power) and isinstance(u.base, ImaginaryUnit) \
                    and u.exponent.denominator == 1:
                i_power += u.exponent.numerator
            else:
                flat.append(u)
    if const == 0:
        return ZERO
    # fold powers of i exactly: i^2 = -1
    i_power %= 4
    if i_power >= 2:
        const = -const
        i_power -= 2
    # merge equal bases; exponents add under the principal branch since
    # z^a * z^b = exp((a+b) ln z) whenever both factors use the same ln z
    merged: list[tuple[Expression, Fraction]] = []
    for f in flat:
        base, expo = _as_base_exponent(f)
        for j, (b, q) in enumerate(merged):
            if b == base:
                merged[j] = (b, q + expo)
                break
        else:
            merged.append((base, expo))
    factors: list[Expression] = []
    for base, q in merged:
        piece = _normalize_power(base, q)
        if isinstance(piece, Constant):
            const *= piece.value
        else:
            factors.append(piece)
    if const == 0:
        return ZERO
    if i_power:
        factors.append(I)
    factors = _sorted_exprs(factors)
    if const != 1:
        factors.insert(0, Constant(const))
    if not factors:
        return Constant(const)
    if len(factors) == 1:
        return factors[0]
    return Product(tuple(factors))


def _normalize_power(base: Expression, exponent: Fraction) -> Expression:
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, ImaginaryUnit) and exponent.denominator == 1:
        n = exponent.numerator % 4
        return (ONE, I, MINUS_ONE, Product((MINUS_ONE, I)))[n]
    if isinstance(base, Constant) and exponent.denominator == 1:
        n = exponent.numerator
        if base.value == 0 and n < 0:
            raise ExpressionError("division by exact zero")
        return Constant(base.value ** n)
    # (x^a)^b is left alone: collapsing it is unsound on principal branches
    return Power(base, exponent)


# ---------------------------------------------------------------------------
# differentiation

def differentiate(e: Expression, v: str) -> Expression:
    """Exact partial derivative with respect to the variable named v.

    Every Variable is treated as an independent coordinate, including jet
    coordinates; total derivatives live in :mod:`symred.jets`.
    """
    return normalize(_diff(e, v))


def _diff(e: Expression, v: str) -> Expression:
    if isinstance(e, (Constant, ImaginaryUnit)):
        return ZERO
    if isinstance(e, Variable):
        return ONE if e.name == v else ZERO
    if isinstance(e, Sum):
        return Sum(tuple(_diff(t, v) for t in e.terms))
    if isinstance(e, Product):
        terms = []
        for i, f in enumerate(e.factors):
            rest = e.factors[:i] + (_diff(f, v),) + e.factors[i + 1:]
            terms.append(Product(rest))
        return Sum(tuple(terms)) if terms else ZERO
    if isinstance(e, Power):
        return Product((Constant(e.exponent),
                        Power(e.base, e.exponent - 1),
                        _diff(e.base, v)))
    if isinstance(e, Builtin):
        da = _diff(e.arg, v)
        if e.name == "exp":
            inner = Builtin("exp", e.arg)
        elif e.name == "ln":
            inner = Power(e.arg, Fraction(-1))
        elif e.name == "sin":
            inner = Builtin("cos", e.arg)
        elif e.name == "cos":
            inner = neg(Builtin("sin", e.arg))
        else:  # besseli: I_nu' = (I_{nu-1} + I_{nu+1}) / 2
            inner = Product((Constant(Fraction(1, 2)),
                             Sum((Builtin("besseli", e.arg, e.order - 1),
                                  Builtin("besseli", e.arg, e.order + 1)))))
        return Product((inner, da))
    if isinstance(e, FunctionApp):
        terms = []
        for j, arg in enumerate(e.args):
            da = _diff(arg, v)
            if da == ZERO:
                continue
            bumped = tuple(k + (1 if i == j else 0) for i, k in enumerate(e.orders))
            terms.append(Product((FunctionApp(e.symbol, e.args, bumped), da)))
        return Sum(tuple(terms)) if terms else ZERO
    raise ExpressionError("unknown node %r" % type(e).__name__)


# ---------------------------------------------------------------------------
# printing

def _fmt_rational(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return "%d/%d" % (q.numerator, q.denominator)


def _paren(text: str, needed: bool) -> str:
    return "(" + text + ")" if needed else text


def _strip_minus(e: Expression) -> Expression | None:
    """e written as -(something positive-headed), else None."""
    if isinstance(e, Constant) and e.value < 0:
        return Constant(-e.value)
    if isinstance(e, Product) and e.factors and isinstance(e.factors[0], Constant):
        c = e.factors[0].value
        if c == -1 and len(e.factors) == 2:
            return e.factors[1]
        if c == -1:
            return Product(e.factors[1:])
        if c < 0:
            return Product((Constant(-c),) + e.factors[1:])
    return None


def to_text(e: Expression) -> str:
    """Render an expression in the grammar accepted by parse_expression."""
    return _print(e, 0)


# precedence levels: 0 sum, 1 product, 2 unary minus handled via constants,
# 3 power, 4 atom
def _print(e: Expression, ctx: int) -> str:
    if isinstance(e, Constant):
        text = _fmt_rational(e.value)
        neg_or_frac = e.value < 0 or e.value.denominator != 1
        return _paren(text, ctx >= 1 and neg_or_frac)
    if isinstance(e, ImaginaryUnit):
        return "i"
    if isinstance(e, Variable):
        return e.name
    if isinstance(e, Sum):
        text = ""
        for j, t in enumerate(e.terms):
            pos = _strip_minus(t)
            if pos is not None:
                text += ("-" if j == 0 else " - ") + _print(pos, 1)
            else:
                text += ("" if j == 0 else " + ") + _print(t, 1)
        return _paren(text, ctx >= 1)
    if isinstance(e, Product):
        parts = [_print(f, 2) for f in e.factors]
        return _paren("*".join(parts), ctx >= 2)
    if isinstance(e, Power):
        base = _print(e.base, 3)
        expo = _fmt_rational(e.exponent)
        if e.exponent < 0 or e.exponent.denominator != 1:
            expo = "(" + expo + ")"
        return _paren(base + "^" + expo, ctx >= 3)
    if isinstance(e, Builtin):
        if e.name == "besseli":
            return "besseli(%s; %s)" % (_fmt_rational(e.order), _print(e.arg, 0))
        return "%s(%s)" % (e.name, _print(e.arg, 0))
    if isinstance(e, FunctionApp):
        if all(k == 0 for k in e.orders):
            return "%s(%s)" % (e.symbol.name, ", ".join(_print(a, 0) for a in e.args))
        dvars = []
        for formal, k in zip(e.symbol.formals, e.orders):
            dvars.extend([formal] * k)
        head = "d(%s, %s)" % (e.symbol.name, ", ".join(dvars))
        plain = tuple(Variable(f) for f in e.symbol.formals)
        if e.args == plain:
            return head
        return "%s(%s)" % (head, ", ".join(_print(a, 0) for a in e.args))
    raise ExpressionError("unknown node %r" % type(e).__name__)
