import random

import pytest
import sympy as sp

from jetsigma.exprs import Expr, eval_numeric
from jetsigma.jets import JetContext, VectorField, VectorFieldSet, lie_bracket, total_derivative

from fuzzing import random_expr, random_polynomial


@pytest.fixture
def ctx():
    return JetContext("x", ["u", "v"], 2)


def test_total_derivative_examples(ctx):
    P = ctx.parse
    assert total_derivative(P("exp(-u)*v_1"), ctx) == P("exp(-u)*(v_2 - u_1*v_1)")
    assert total_derivative(P("x"), ctx).sym == 1
    assert total_derivative(P("exp(-v)*u_1"), ctx) == P("exp(-v)*(u_2 - u_1*v_1)")


def test_total_derivative_extends_order(ctx):
    # applying at the top order emits the next coordinate rather than failing
    e = total_derivative(ctx.parse("u_2"), ctx)
    assert e.sym == sp.Symbol("u_3")


def test_apply_examples(ctx):
    P = ctx.parse
    y1 = VectorField.from_coefficients(
        ctx,
        {("u", 0): P("1"), ("v", 1): P("v_1"), ("u", 2): P("u_1*v_1"), ("v", 2): P("v_2")},
        2,
    )
    assert y1.apply(P("exp(-u)*v_1")).sym == 0
    assert y1.apply(P("5/7")).sym == 0
    du = VectorField.on_base(ctx, 0, [P("1"), P("0")])
    assert du.apply(P("u*v")) == P("v")


def test_apply_rejects_higher_order(ctx):
    du = VectorField.on_base(ctx, 0, [ctx.parse("1"), ctx.parse("0")])
    with pytest.raises(Exception):
        du.apply(ctx.parse("u_1"))


def test_bracket_antisymmetry_on_self(ctx):
    P = ctx.parse
    V = VectorField.from_coefficients(ctx, {("u", 0): P("u*v"), ("v", 1): P("u_1 + x")}, 1)
    W = V.truncated(1)
    assert lie_bracket(W, W).is_zero_field()


def test_bracket_quotient_case():
    ctx = JetContext("x", ["u", "v"], 1)
    P = ctx.parse
    y1 = VectorField.from_coefficients(ctx, {("v", 0): P("1"), ("v", 1): P("u_1/u")}, 1)
    y2 = VectorField.from_coefficients(ctx, {("u", 0): P("1/u")}, 1)
    br = lie_bracket(y1, y2)
    expected = VectorField.from_coefficients(ctx, {("v", 1): P("u_1/u^3")}, 1)
    assert br == expected


def test_jacobi_identity_fuzzed():
    ctx = JetContext("x", ["u", "v"], 0)
    rng = random.Random(5)
    base = [ctx.x, ctx.coord(0, 0), ctx.coord(1, 0)]
    for _ in range(6):
        fields = [
            VectorField.on_base(
                ctx,
                random_polynomial(rng, base, degree=1, terms=1),
                [random_polynomial(rng, base) for _ in range(2)],
            )
            for _ in range(3)
        ]
        a, b, c = fields
        total = lie_bracket(lie_bracket(a, b), c).plus(
            lie_bracket(lie_bracket(b, c), a)
        ).plus(lie_bracket(lie_bracket(c, a), b))
        assert total.is_zero_field()


def test_total_derivative_product_rule(ctx):
    rng = random.Random(6)
    syms = [ctx.x, ctx.coord(0, 0), ctx.coord(1, 0), ctx.coord(0, 1)]
    for _ in range(10):
        e = random_expr(rng, syms, depth=2)
        f = random_expr(rng, syms, depth=2)
        lhs = total_derivative(e * f, ctx)
        rhs = total_derivative(e, ctx) * f + e * total_derivative(f, ctx)
        assert lhs == rhs


def test_apply_is_derivation(ctx):
    rng = random.Random(7)
    syms = [ctx.x, ctx.coord(0, 0), ctx.coord(1, 0)]
    base = syms
    for _ in range(10):
        V = VectorField.on_base(
            ctx,
            random_polynomial(rng, base, degree=1, terms=1),
            [random_polynomial(rng, base) for _ in range(2)],
        )
        e = random_expr(rng, syms, depth=2)
        f = random_expr(rng, syms, depth=2)
        assert V.apply(e * f) == V.apply(e) * f + e * V.apply(f)


def test_total_derivative_matches_dynamics(ctx):
    """Along a numeric solution, the evaluated total derivative of an
    expression equals the time derivative of its evaluation."""
    import numpy as np

    from jetsigma.oracle import integrate, invariant_along_trajectory
    from jetsigma.reduction import ODESystem

    P = ctx.parse
    sys = ODESystem(
        ctx,
        2,
        [P("u_2 - u_1*v_1*(1 + exp(-u))"), P("v_2 - u_1*v_1*(1 - exp(-v))")],
        solved={"u_2": P("u_1*v_1*(1 + exp(-u))"), "v_2": P("u_1*v_1*(1 - exp(-v))")},
    )
    traj = integrate(sys, {"u": 0, "v": 0, "u_1": 1, "v_1": 1}, (0.0, 0.4), 1e-3)
    e = P("x*u + v_1^2")
    from jetsigma.reduction import restrict

    de = restrict(total_derivative(e, ctx), sys)
    vals, dvals = invariant_along_trajectory(e, traj)
    dexp, _ = invariant_along_trajectory(de, traj)
    rel = np.max(np.abs(dvals - dexp[1:-1])) / max(1.0, np.max(np.abs(dexp)))
    assert rel < 1e-4


def test_field_printing(ctx):
    P = ctx.parse
    f = VectorField.from_coefficients(ctx, {("u", 0): P("u"), ("v", 1): P("-u*u_1")}, 1, xi=P("x"))
    assert str(f) == "x*d/dx + u*d/du - u*u_1*d/dv_1"


def test_set_requires_shared_order(ctx):
    a = VectorField.on_base(ctx, 0, [ctx.parse("1"), ctx.parse("0")])
    b = VectorField.from_coefficients(ctx, {("u", 0): ctx.parse("1")}, 1)
    with pytest.raises(Exception):
        VectorFieldSet([a, b])
    with pytest.raises(Exception):
        VectorFieldSet([])
