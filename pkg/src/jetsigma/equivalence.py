"""Relating twisted sets to standardly prolonged generators of the same module:
twist matrices from transformation matrices, gauge changes, and the bridge to
the dependent-index form of the twist."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import sympy as sp

from .exprs import Expr, ExprError, ZeroVerdict, is_zero, normalize, print_expr
from .involution import StructureFunctions
from .jets import JetContext, VectorField, VectorFieldSet
from .linalg import ExprMatrix, SingularMatrixError
from .prolong import SigmaMatrix, sigma_prolong, standard_prolong

__all__ = [
    "Convention",
    "sigma_from_A",
    "verify_A_sigma",
    "transform_fields",
    "standardizing_roundtrip",
    "RoundtripReport",
    "gauge_transform_sigma",
    "theta_from_mu",
    "mu_sigma_bridge",
    "BridgeResult",
]

# The two ways a transformation matrix A on the base can induce a twist:
#   "inverse_dx":  sigma = A^-1 (D_x A)   -- the standard generators are A * (twisted set)
#   "dx_inverse":  sigma = A (D_x A^-1)   -- the twisted set is A * (standard generators)
Convention = Literal["inverse_dx", "dx_inverse"]


def _check_base_matrix(A: ExprMatrix, ctx: JetContext, what: str = "transformation matrix"):
    for row in A.entries:
        for e in row:
            if ctx.jet_order_of(e) > 0:
                raise ExprError(f"{what} must live on the base (x, u): entry {print_expr(e)}")


def sigma_from_A(
    A: ExprMatrix, ctx: JetContext, convention: Convention = "inverse_dx", seed: int = 0
) -> SigmaMatrix:
    """Twist matrix induced by an invertible matrix of base functions."""
    _check_base_matrix(A, ctx)
    if convention == "inverse_dx":
        raw = A.inverse(seed=seed) @ A.total_derivative(ctx)
    elif convention == "dx_inverse":
        raw = A @ A.inverse(seed=seed).total_derivative(ctx)
    else:
        raise ExprError(f"unknown convention {convention!r}")
    return SigmaMatrix(ctx, raw.entries)


def verify_A_sigma(A: ExprMatrix, sigma: SigmaMatrix, ctx: JetContext, trials: int = 20, seed: int = 0):
    """Check D_x A = A sigma; returns (verdict, residual matrix)."""
    residual = A.total_derivative(ctx) - (A @ sigma.mat)
    ok = all(
        is_zero(e, trials=trials, seed=seed).is_zero for row in residual.entries for e in row
    )
    return ok, residual


def transform_fields(A: ExprMatrix, Vs: VectorFieldSet) -> VectorFieldSet:
    """New generators of the same module: (result)_i = sum_j A[i][j] V_j."""
    if A.ncols != len(Vs):
        raise ExprError(f"matrix has {A.ncols} columns but the set has {len(Vs)} fields")
    out = []
    for i in range(A.nrows):
        acc = Vs[0].scaled(A[i, 0])
        for j in range(1, len(Vs)):
            acc = acc.plus(Vs[j].scaled(A[i, j]))
        out.append(acc)
    return VectorFieldSet(out)


@dataclass
class RoundtripReport:
    sigma: SigmaMatrix
    transformed: VectorFieldSet  # A-combinations of the standard prolongations
    twisted: VectorFieldSet  # twisted prolongations of the A-combined base fields
    residuals: list[list[Expr]]  # per field, per coefficient
    verdicts: list[ZeroVerdict]

    @property
    def holds(self) -> bool:
        return all(v.is_zero for v in self.verdicts)


def standardizing_roundtrip(
    Ws: VectorFieldSet,
    A: ExprMatrix,
    n: int,
    convention: Convention = "inverse_dx",
    trials: int = 20,
    seed: int = 0,
    deny: Sequence[Expr] = (),
) -> RoundtripReport:
    """The commuting square behind the equivalence of twisted and standard
    generators: combining standard prolongations with the matrix P equals the
    twisted prolongation (with sigma = P D_x(P^-1)) of the P-combined fields.
    P is A itself under the "dx_inverse" convention and A^-1 under
    "inverse_dx"."""
    ctx = Ws.ctx
    _check_base_matrix(A, ctx)
    if convention == "dx_inverse":
        P = A
    elif convention == "inverse_dx":
        P = A.inverse(seed=seed)
    else:
        raise ExprError(f"unknown convention {convention!r}")
    sigma_raw = P @ P.inverse(seed=seed).total_derivative(ctx)
    sigma = SigmaMatrix(ctx, sigma_raw.entries)
    Zs = VectorFieldSet([standard_prolong(W, n) for W in Ws])
    transformed = transform_fields(P, Zs)
    Xs = transform_fields(P, VectorFieldSet([W for W in Ws]))
    twisted = sigma_prolong(Xs, sigma, n)
    residuals = []
    verdicts = []
    for lhs, rhs in zip(transformed, twisted):
        diff_comps = lhs.minus(rhs).components()
        residuals.append(diff_comps)
        for c in diff_comps:
            verdicts.append(is_zero(c, trials=trials, seed=seed, deny=deny))
    return RoundtripReport(sigma, transformed, twisted, residuals, verdicts)


def gauge_transform_sigma(
    B: ExprMatrix, sigma: SigmaMatrix, ctx: JetContext, seed: int = 0
) -> SigmaMatrix:
    """Twist under a change of module generators: B sigma B^-1 + B D_x(B^-1)."""
    _check_base_matrix(B, ctx, "gauge matrix")
    Binv = B.inverse(seed=seed)
    raw = (B @ sigma.mat @ Binv) + (B @ Binv.total_derivative(ctx))
    return SigmaMatrix(ctx, raw.entries)


def theta_from_mu(
    A: ExprMatrix, Ys: VectorFieldSet, mu: StructureFunctions, seed: int = 0
) -> StructureFunctions:
    """Structure functions of the transformed set Z_i = A[i][j] Y_j:

        theta[i][j][k] = (A[i][m] mu[m][l][h] A[j][l]
                          + A[i][m] Y_m(A[j][h]) - A[j][m] Y_m(A[i][h])) Ainv[h][k]
    """
    r = len(Ys)
    if mu.r != r or A.nrows != r or A.ncols != r:
        raise ExprError("dimension mismatch between matrix, set, and structure functions")
    Ainv = A.inverse(seed=seed)
    upper: dict[tuple[int, int], list[Expr]] = {}
    for i in range(r):
        for j in range(i + 1, r):
            coeffs = []
            for k in range(r):
                acc = Expr.number(0)
                for h in range(r):
                    inner = Expr.number(0)
                    for m in range(r):
                        for l in range(r):
                            muml = mu[m, l, h]
                            if muml.sym != 0:
                                inner = inner + A[i, m] * muml * A[j, l]
                    for m in range(r):
                        inner = inner + A[i, m] * Ys[m].apply(A[j, h]) - A[j, m] * Ys[m].apply(A[i, h])
                    acc = acc + inner * Ainv[h, k]
                coeffs.append(acc)
            upper[(i, j)] = coeffs
    return StructureFunctions.from_upper(r, upper)


@dataclass
class BridgeResult:
    S: ExprMatrix
    M: ExprMatrix
    commutator: ExprMatrix
    lift_verdicts: list[ZeroVerdict]

    @property
    def lift_holds(self) -> bool:
        return all(v.is_zero for v in self.lift_verdicts)


def mu_sigma_bridge(
    Phi: ExprMatrix,
    ctx: JetContext,
    S: ExprMatrix | None = None,
    M: ExprMatrix | None = None,
    trials: int = 20,
    seed: int = 0,
) -> BridgeResult:
    """Translate between the set-index twist (via S) and the dependent-index
    twist (via M) for a component matrix Phi of base vector fields:

        M = Phi S^T Phi^-1        S^T = Phi^-1 M Phi

    and the two induced prolongation twists agree on the first jet bundle iff
    [Phi^-1 (D_x Phi), S^T] = 0 (the lift verdict)."""
    if not Phi.is_square:
        raise ExprError("component matrix must be square (as many fields as dependents)")
    if (S is None) == (M is None):
        raise ExprError("exactly one of S and M must be given")
    Phinv = Phi.inverse(seed=seed)
    if S is not None:
        M = Phi @ S.transpose() @ Phinv
    else:
        S = (Phinv @ M @ Phi).transpose()
    st = S.transpose()
    core = Phinv @ Phi.total_derivative(ctx)
    commutator = (core @ st) - (st @ core)
    verdicts = [
        is_zero(e, trials=trials, seed=seed) for row in commutator.entries for e in row
    ]
    return BridgeResult(S, M, commutator, verdicts)
