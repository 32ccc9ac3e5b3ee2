import pytest
import sympy as sp

from jetsigma.exprs import Expr
from jetsigma.jets import JetContext, VectorField, VectorFieldSet, lie_bracket
from jetsigma.linalg import ExprMatrix, SingularMatrixError, linear_solve


@pytest.fixture
def ctx():
    return JetContext("x", ["u", "v"], 2)


def test_identity_system(ctx):
    P = ctx.parse
    b = [P("u_1*v"), P("exp(-u)")]
    result = linear_solve([[P("1"), P("0")], [P("0"), P("1")]], b)
    assert result.status == "solved"
    assert result.solution == b


def test_bracket_expansion_coefficients(ctx):
    """Expressing a bracket in the set's own basis gives (0, 1) for the
    scaling/transvection pair."""
    from jetsigma.prolong import SigmaMatrix, sigma_prolong

    P = ctx.parse
    X1 = VectorField.on_base(ctx, 0, [P("u"), P("0")])
    X2 = VectorField.on_base(ctx, 0, [P("0"), P("-u")])
    sig = SigmaMatrix(ctx, [[P("0"), P("-u")], [P("-u_1"), P("0")]])
    Ys = sigma_prolong(VectorFieldSet([X1, X2]), sig, 2)
    br = lie_bracket(Ys[0], Ys[1])
    mat = [[Ys[k].components()[c] for k in range(2)] for c in range(len(br.components()))]
    result = linear_solve(mat, br.components())
    assert result.status == "solved"
    assert [s.sym for s in result.solution] == [0, 1]


def test_inconsistent_witness(ctx):
    P = ctx.parse
    result = linear_solve([[P("1")], [P("1")]], [P("u"), P("u + 1")])
    assert result.status == "inconsistent"
    assert result.witness is not None


def test_underdetermined_free_indices(ctx):
    P = ctx.parse
    result = linear_solve([[P("1"), P("u")]], [P("v")])
    assert result.status == "underdetermined"
    assert result.free_indices == [1]
    assert result.solution[0] == P("v") and result.solution[1].sym == 0


def test_solve_with_expression_pivots(ctx):
    P = ctx.parse
    mat = [[P("u"), P("1")], [P("1"), P("v")]]
    rhs = [P("u^2 + 1"), P("u + v")]
    result = linear_solve(mat, rhs)
    assert result.status == "solved"
    assert result.solution[0] == P("u")
    assert result.solution[1] == P("1")


def test_matrix_inverse_and_det(ctx):
    P = ctx.parse
    A = ExprMatrix([[P("u"), P("1")], [P("1"), P("v")]])
    assert A.det() == P("u*v - 1")
    Ainv = A.inverse()
    assert (A @ Ainv) == ExprMatrix.identity(2)
    assert (Ainv @ A) == ExprMatrix.identity(2)


def test_singular_matrix_rejected(ctx):
    P = ctx.parse
    A = ExprMatrix([[P("u"), P("u")], [P("v"), P("v")]])
    with pytest.raises(SingularMatrixError):
        A.inverse()


def test_matrix_algebra(ctx):
    P = ctx.parse
    A = ExprMatrix([[P("u"), P("0")], [P("0"), P("v")]])
    B = ExprMatrix([[P("1"), P("2")], [P("3"), P("4")]])
    assert (A @ B)[0, 1] == P("2*u")
    assert (A + B)[1, 1] == P("v + 4")
    assert (A - B).transpose()[0, 1] == P("-3")
    assert A.total_derivative(ctx)[0, 0] == P("u_1")
