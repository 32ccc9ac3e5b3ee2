"""Standard and twisted prolongation operators for vector fields on jet bundles.

The joint twist couples the members of a set of r fields through an r x r
matrix of functions on the first jet bundle: one prolongation step sends the
order-k coefficients psi[a][k] of the whole set to

    psi[a][i][k+1] = (D_x psi[a][i][k] - u^a_{k+1} D_x xi_i)
                     + sum_j sigma[i][j] * (psi[a][j][k] - u^a_{k+1} xi_j)

and iterating the step produces the higher prolongations.  The scalar twist is
the r = 1 case, and the untwisted operators are the sigma = 0 degenerations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import sympy as sp

from .exprs import Expr, ExprError, ZeroVerdict, is_zero, normalize, print_expr
from .jets import JetContext, VectorField, VectorFieldSet, total_derivative
from .linalg import ExprMatrix

__all__ = [
    "SigmaMatrix",
    "ChiData",
    "NonVerticalFieldError",
    "standard_prolong",
    "lambda_prolong",
    "sigma_prolong",
    "mu_prolong_vertical",
    "chi_prolong",
    "check_prolongation_commutation",
    "CommutationReport",
]


class NonVerticalFieldError(ExprError):
    """An operation restricted to vertical fields received one with xi != 0."""


class SigmaMatrix:
    """Square matrix of twist functions; every entry must live on the first
    jet bundle (depend only on x, u^a, u^a_1)."""

    def __init__(self, ctx: JetContext, entries: Sequence[Sequence[Expr]]):
        self.mat = ExprMatrix(entries, domain="jet1")
        if not self.mat.is_square:
            raise ExprError(f"twist matrix must be square, got {self.mat.nrows}x{self.mat.ncols}")
        for row in self.mat.entries:
            for e in row:
                if ctx.jet_order_of(e) > 1:
                    raise ExprError(
                        f"twist entry depends on a jet coordinate of order >= 2: {print_expr(e)}"
                    )
        self.ctx = ctx

    @staticmethod
    def zero(ctx: JetContext, r: int) -> "SigmaMatrix":
        return SigmaMatrix(ctx, ExprMatrix.zero(r, r).entries)

    @staticmethod
    def scalar(ctx: JetContext, lam: Expr, r: int = 1) -> "SigmaMatrix":
        z = Expr.number(0)
        return SigmaMatrix(ctx, [[lam if i == j else z for j in range(r)] for i in range(r)])

    @property
    def r(self) -> int:
        return self.mat.nrows

    def __getitem__(self, ij) -> Expr:
        return self.mat[ij]

    def transposed(self) -> "SigmaMatrix":
        return SigmaMatrix(self.ctx, self.mat.transpose().entries)

    def scaled(self, factor: Expr | int) -> "SigmaMatrix":
        return SigmaMatrix(self.ctx, self.mat.scaled(factor).entries)

    def is_zero_matrix(self) -> bool:
        return self.mat.is_zero_matrix()

    def __eq__(self, other):
        return isinstance(other, SigmaMatrix) and self.mat == other.mat

    def __repr__(self):
        return f"SigmaMatrix{self.mat!r}"


@dataclass(frozen=True)
class ChiData:
    """Data for the combined twist: a p x p matrix acting on the dependent
    index (entries on the base) and an r x r matrix acting on the set index."""

    Lambda: ExprMatrix
    Theta: ExprMatrix


def _one_joint_step(
    Xs: Sequence[VectorField], psis: list[list[list[Expr]]], k: int, sigma: SigmaMatrix | None
) -> None:
    """Append the order-(k+1) coefficients to psis in place."""
    ctx = Xs[0].ctx
    r = len(Xs)
    dxi = [total_derivative(X.xi, ctx) for X in Xs]
    for i in range(r):
        for a in range(ctx.p):
            u_next = Expr(ctx.coord(a, k + 1))
            coeff = total_derivative(psis[i][a][k], ctx) - u_next * dxi[i]
            if sigma is not None:
                for j in range(r):
                    s = sigma[i, j]
                    if s.sym != 0:
                        coeff = coeff + s * (psis[j][a][k] - u_next * Xs[j].xi)
            psis[i][a].append(coeff)


def _prolong_set(Xs: Sequence[VectorField], sigma: SigmaMatrix | None, n: int) -> list[VectorField]:
    for X in Xs:
        if X.order != 0:
            raise ExprError("prolongation starts from fields on the base (order 0)")
    ctx = Xs[0].ctx
    psis = [[[X.phi(a)] for a in range(ctx.p)] for X in Xs]
    for k in range(n):
        _one_joint_step(Xs, psis, k, sigma)
    out_ctx = ctx if ctx.max_order >= n else ctx.extended(n)
    return [
        VectorField(out_ctx, n, X.xi, psis[i])
        for i, X in enumerate(Xs)
    ]


def standard_prolong(X: VectorField, n: int) -> VectorField:
    """Untwisted prolongation: psi[a][k+1] = D_x psi[a][k] - u^a_{k+1} D_x xi."""
    return _prolong_set([X], None, n)[0]


def lambda_prolong(X: VectorField, lam: Expr, n: int) -> VectorField:
    """Scalar twist by a function on the first jet bundle."""
    sigma = SigmaMatrix.scalar(X.ctx, lam)
    return _prolong_set([X], sigma, n)[0]


def sigma_prolong(Xs: VectorFieldSet, sigma: SigmaMatrix, n: int) -> VectorFieldSet:
    """Joint twisted prolongation of the whole set."""
    if len(Xs) != sigma.r:
        raise ExprError(f"twist matrix is {sigma.r}x{sigma.r} but the set has {len(Xs)} fields")
    return VectorFieldSet(_prolong_set(list(Xs), sigma, n))


def mu_prolong_vertical(Xs: VectorFieldSet, Lambda: ExprMatrix, n: int) -> VectorFieldSet:
    """Per-field twist acting on the dependent index:
    psi[a][k+1] = D_x psi[a][k] + Lambda[a][b] psi[b][k]; vertical fields only."""
    ctx = Xs.ctx
    if not Xs.is_vertical:
        raise NonVerticalFieldError("the dependent-index twist is defined for vertical fields only")
    if not (Lambda.is_square and Lambda.nrows == ctx.p):
        raise ExprError(f"dependent-index twist matrix must be {ctx.p}x{ctx.p}")
    out = []
    for X in Xs:
        if X.order != 0:
            raise ExprError("prolongation starts from fields on the base (order 0)")
        psi = [[X.phi(a)] for a in range(ctx.p)]
        for k in range(n):
            for a in range(ctx.p):
                coeff = total_derivative(psi[a][k], ctx)
                for b in range(ctx.p):
                    lab = Lambda[a, b]
                    if lab.sym != 0:
                        coeff = coeff + lab * psi[b][k]
                psi[a].append(coeff)
        out_ctx = ctx if ctx.max_order >= n else ctx.extended(n)
        out.append(VectorField(out_ctx, n, Expr.number(0), psi))
    return VectorFieldSet(out)


def chi_prolong(Xs: VectorFieldSet, chi: ChiData, n: int) -> VectorFieldSet:
    """Combined twist on vertical fields, applied recursively order by order:

        psi[a][i][k+1] = D_x psi[a][i][k] + Lambda[a][b] psi[b][i][k]
                         - Theta^T[i][j] psi[a][j][k]
    """
    ctx = Xs.ctx
    r = len(Xs)
    if not Xs.is_vertical:
        raise NonVerticalFieldError("the combined twist is defined for vertical fields only")
    if not (chi.Lambda.is_square and chi.Lambda.nrows == ctx.p):
        raise ExprError(f"dependent-index part must be {ctx.p}x{ctx.p}")
    if not (chi.Theta.is_square and chi.Theta.nrows == r):
        raise ExprError(f"set-index part must be {r}x{r}")
    for X in Xs:
        if X.order != 0:
            raise ExprError("prolongation starts from fields on the base (order 0)")
    psis = [[[X.phi(a)] for a in range(ctx.p)] for X in Xs]
    theta_t = chi.Theta.transpose()
    for k in range(n):
        for i in range(r):
            for a in range(ctx.p):
                coeff = total_derivative(psis[i][a][k], ctx)
                for b in range(ctx.p):
                    lab = chi.Lambda[a, b]
                    if lab.sym != 0:
                        coeff = coeff + lab * psis[i][b][k]
                for j in range(r):
                    t = theta_t[i, j]
                    if t.sym != 0:
                        coeff = coeff - t * psis[j][a][k]
                psis[i][a].append(coeff)
    out_ctx = ctx if ctx.max_order >= n else ctx.extended(n)
    return VectorFieldSet(
        [VectorField(out_ctx, n, Expr.number(0), psis[i]) for i in range(r)]
    )


# ---------------------------------------------------------------------------
# the commutation identity characterizing jointly twisted sets
# ---------------------------------------------------------------------------


@dataclass
class CommutationResidual:
    field_index: int
    coordinate: str
    residual: Expr
    verdict: ZeroVerdict


@dataclass
class CommutationReport:
    residuals: list[CommutationResidual]

    @property
    def holds(self) -> bool:
        return all(r.verdict.is_zero for r in self.residuals)

    @property
    def witnesses(self) -> list[CommutationResidual]:
        return [r for r in self.residuals if not r.verdict.is_zero]

    def __str__(self):
        lines = [f"commutation identity: {'holds' if self.holds else 'fails'}"]
        for r in self.residuals:
            if not r.verdict.is_zero:
                lines.append(
                    f"  field {r.field_index + 1}, coordinate {r.coordinate}: "
                    f"{print_expr(r.residual)} [{r.verdict}]"
                )
        return "\n".join(lines)


def check_prolongation_commutation(
    Ys: VectorFieldSet, sigma: SigmaMatrix, trials: int = 20, seed: int = 0
) -> CommutationReport:
    """Check, coordinatewise, the operator identity obeyed exactly by jointly
    twisted sets:

        [Y_i, D_x](c) = sum_j sigma[i][j] Y_j(c)
                        - (D_x xi_i + sum_j sigma[i][j] xi_j) D_x(c)

    for c ranging over x and the jet coordinates of order <= n-1.  Both sides
    are derivations, so agreement on the coordinates settles the identity."""
    ctx = Ys.ctx
    n = Ys.order
    if n < 1:
        raise ExprError("the commutation identity needs order >= 1")
    if len(Ys) != sigma.r:
        raise ExprError("twist matrix size does not match the set")
    coords: list[sp.Symbol] = [ctx.x] + [ctx.coord(a, k) for a in range(ctx.p) for k in range(n)]
    residuals = []
    for i, Y in enumerate(Ys):
        dx_xi = total_derivative(Y.xi, ctx)
        twist_scalar = dx_xi
        for j in range(len(Ys)):
            twist_scalar = twist_scalar + sigma[i, j] * Ys[j].xi
        for c in coords:
            ce = Expr(c)
            dc = total_derivative(ce, ctx)
            lhs = Y.apply(dc) - total_derivative(Y.apply(ce), ctx)
            rhs = -twist_scalar * dc
            for j in range(len(Ys)):
                s = sigma[i, j]
                if s.sym != 0:
                    rhs = rhs + s * Ys[j].apply(ce)
            residual = lhs - rhs
            residuals.append(
                CommutationResidual(i, str(c), residual, is_zero(residual, trials=trials, seed=seed))
            )
    return CommutationReport(residuals)
