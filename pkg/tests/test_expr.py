import math

import numpy as np
import pytest

from pathtrans import expr
from pathtrans.errors import ExpressionSyntaxError, SingularityError, ValidationError
from pathtrans.expr import BinOp, Call, Neg, Num, Pow, Var

# ---------------------------------------------------------------------------
# Grammar corpus (structure, precedence, and every documented error case)
# ---------------------------------------------------------------------------

PARSE_OK = [
    ("x1^2 + sin(x2)", BinOp("+", Pow(Var("x1"), 2), Call("sin", (Var("x2"),)))),
    ("-x1*x2", BinOp("*", Neg(Var("x1")), Var("x2"))),       # unary minus binds tighter than *
    ("1 + 2 - 3", BinOp("-", BinOp("+", Num(1 + 0j), Num(2 + 0j)), Num(3 + 0j))),
    ("2^3^2", Pow(Pow(Num(2 + 0j), 3), 2)),                  # left associative
    ("-x^2", Neg(Pow(Var("x"), 2))),                         # ^ binds tighter than unary minus
    ("2*-x", BinOp("*", Num(2 + 0j), Neg(Var("x")))),
    ("x^-2", Pow(Var("x"), -2)),
    ("((x))", Var("x")),
    ("atan2(x2, x1)", Call("atan2", (Var("x2"), Var("x1")))),
    ("i", Num(1j)),
    ("pi", Num(complex(math.pi))),
    ("x_1 * some_name2", BinOp("*", Var("x_1"), Var("some_name2"))),
    ("  x1  +x2 ", BinOp("+", Var("x1"), Var("x2"))),
    ("1e-3", Num(1e-3 + 0j)),
    ("1.5E2", Num(150 + 0j)),
    (".5 + 2.", BinOp("+", Num(0.5 + 0j), Num(2 + 0j))),
    ("sqrt(x)/ln(y)", BinOp("/", Call("sqrt", (Var("x"),)), Call("ln", (Var("y"),)))),
    ("exp(-x)", Call("exp", (Neg(Var("x")),))),
]

PARSE_EVAL = [
    ("2^3^2", {}, 64.0),
    ("1/2/2", {}, 0.25),            # left associative
    ("6 - 2 - 1", {}, 3.0),
    ("2^2*3", {}, 12.0),            # ^ above *
    ("-2^2", {}, -4.0),             # ^ above unary minus
    ("2*3 + 4", {}, 10.0),
    ("sqrt(4)", {}, 2.0),
    ("exp(ln(5))", {}, 5.0),
    ("atan2(1, 1)", {}, math.pi / 4),
    ("x1*x2", {"x1": 3, "x2": 4}, 12.0),
    ("i*i", {}, -1.0),
]

PARSE_ERRORS = [
    ("2*(x0", 6),          # unclosed parenthesis reported one past the end
    ("", 1),
    ("foo(x)", 1),          # unknown function
    ("x^2.5", 3),           # non-integer exponent
    ("x^x", 3),             # exponent must be a literal
    ("1 +", 4),
    ("(1,2)", 3),
    (")x", 1),
    ("x @ y", 3),           # stray character
    ("sin x", 5),           # function name without call parens
    ("sin(x, y)", 1),       # wrong arity
    ("1..2", 3),
]


@pytest.mark.parametrize("text,tree", PARSE_OK)
def test_parse_structure(text, tree):
    assert expr.parse(text) == tree


@pytest.mark.parametrize("text,bindings,value", PARSE_EVAL)
def test_parse_and_eval(text, bindings, value):
    got = expr.evaluate_scalar(expr.parse(text), bindings)
    assert got == pytest.approx(value, abs=1e-12)


@pytest.mark.parametrize("text,position", PARSE_ERRORS)
def test_parse_errors_carry_positions(text, position):
    with pytest.raises(ExpressionSyntaxError) as err:
        expr.parse(text)
    assert err.value.position == position


def test_corpus_is_large_enough():
    assert len(PARSE_OK) + len(PARSE_EVAL) + len(PARSE_ERRORS) >= 30


# ---------------------------------------------------------------------------
# Evaluation semantics
# ---------------------------------------------------------------------------

def test_euler_identity():
    assert abs(expr.evaluate_scalar(expr.parse("exp(i*pi)"), {}) + 1.0) < 1e-12


def test_eval_errors():
    with pytest.raises(ValidationError):
        expr.evaluate_scalar(expr.parse("x + y"), {"x": 1.0})
    with pytest.raises(SingularityError):
        expr.evaluate_scalar(expr.parse("1/(x - 1)"), {"x": 1.0})
    with pytest.raises(SingularityError):
        expr.evaluate_scalar(expr.parse("ln(x)"), {"x": 0.0})
    with pytest.raises(SingularityError):
        expr.evaluate_scalar(expr.parse("x^-1"), {"x": 0.0})
    with pytest.raises(ValidationError):
        expr.evaluate_scalar(expr.parse("atan2(x, 1)"), {"x": 1j})


def test_vectorized_eval_matches_scalar():
    e = expr.parse("sin(x)*x^2 + exp(-x)")
    xs = np.linspace(-2, 2, 11)
    vec = expr.evaluate(e, {"x": xs.astype(np.complex128)})
    for x, v in zip(xs, vec):
        assert abs(v - expr.evaluate_scalar(e, {"x": complex(x)})) < 1e-14


# ---------------------------------------------------------------------------
# Differentiation
# ---------------------------------------------------------------------------

def test_product_with_constant_factor():
    d = expr.differentiate(expr.parse("x1*sin(x2)"), "x1")
    assert d == Call("sin", (Var("x2"),))


def test_power_rule():
    d = expr.differentiate(expr.parse("x1^3"), "x1")
    assert d == BinOp("*", Num(3 + 0j), Pow(Var("x1"), 2))


def test_atan2_derivative():
    d = expr.differentiate(expr.parse("atan2(x2,x1)"), "x1")
    # -x2/(x1^2+x2^2), checked against central differences at scattered points
    rng = np.random.default_rng(7)
    for _ in range(10):
        x1, x2 = rng.uniform(0.3, 2.0, size=2)
        got = expr.evaluate_scalar(d, {"x1": complex(x1), "x2": complex(x2)})
        h = 1e-6
        fd = (math.atan2(x2, x1 + h) - math.atan2(x2, x1 - h)) / (2 * h)
        assert abs(got - fd) < 1e-6
        assert abs(got - (-x2 / (x1 ** 2 + x2 ** 2))) < 1e-12


def _random_tree(rng, depth):
    if depth == 0:
        pick = rng.integers(0, 3)
        if pick == 0:
            return Num(complex(round(float(rng.uniform(-2, 2)), 3)))
        return Var("x") if pick == 1 else Var("y")
    op = rng.integers(0, 6)
    if op <= 2:
        return BinOp("+-*"[op], _random_tree(rng, depth - 1), _random_tree(rng, depth - 1))
    if op == 3:
        return Call("sin", (_random_tree(rng, depth - 1),))
    if op == 4:
        return Call("cos", (_random_tree(rng, depth - 1),))
    return Pow(_random_tree(rng, depth - 1), int(rng.integers(1, 4)))


def test_derivative_matches_finite_differences_on_random_corpus():
    rng = np.random.default_rng(123)
    checked = 0
    for _ in range(60):
        tree = _random_tree(rng, 3)
        for var in ("x", "y"):
            d = expr.differentiate(tree, var)
            x, y = rng.uniform(-1.2, 1.2, size=2)
            h = 1e-5
            lo = dict(x=complex(x), y=complex(y))
            hi = dict(lo)
            hi[var] += h
            lo[var] -= h
            fd = (expr.evaluate_scalar(tree, hi) - expr.evaluate_scalar(tree, lo)) / (2 * h)
            got = expr.evaluate_scalar(d, dict(x=complex(x), y=complex(y)))
            scale = max(1.0, abs(fd))
            assert abs(got - fd) / scale < 1e-6
            checked += 1
    assert checked >= 100


def test_simplify_keeps_only_constant_folding_and_units():
    e = expr.parse("0*x + 1*y + z^1 + 0")
    assert expr.simplify(e) == BinOp("+", Var("y"), Var("z"))


def test_substitute():
    e = expr.parse("x^2 + y")
    out = expr.substitute(e, {"x": expr.parse("u + v")})
    assert out == BinOp("+", Pow(BinOp("+", Var("u"), Var("v")), 2), Var("y"))


# ---------------------------------------------------------------------------
# Pretty printer round trips
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("text", [t for t, _ in PARSE_OK] + [t for t, _, _ in PARSE_EVAL])
def test_print_parse_is_idempotent(text):
    a1 = expr.parse(text)
    a2 = expr.parse(expr.to_text(a1))
    assert expr.parse(expr.to_text(a2)) == a2


def test_print_parse_idempotent_on_random_trees():
    rng = np.random.default_rng(99)
    for _ in range(200):
        tree = _random_tree(rng, 4)
        a2 = expr.parse(expr.to_text(tree))
        assert expr.parse(expr.to_text(a2)) == a2


def test_printer_parenthesizes_negative_bases():
    e = Pow(Num(-3.5 + 0j), 2)
    assert expr.evaluate_scalar(expr.parse(expr.to_text(e)), {}) == pytest.approx(12.25)
