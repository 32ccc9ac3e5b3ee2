"""Common differential invariants: verification, generation by the
invariants-by-differentiation step, and functional independence."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import sympy as sp

from .exprs import Expr, ExprError, ZeroVerdict, is_zero, normalize, print_expr
from .jets import JetContext, VectorFieldSet, total_derivative
from .linalg import PivotUndecidableError
from .exprs import is_zero as _is_zero

__all__ = [
    "InvariantTable",
    "DegenerateBaseError",
    "SeedNotInvariantError",
    "DependentSeedsError",
    "UnknownVerdictError",
    "verify_invariant",
    "ibdp_step",
    "generate_invariants",
    "independence_check",
    "IndependenceReport",
]


class DegenerateBaseError(ExprError):
    """The base invariant has identically vanishing total derivative."""


class SeedNotInvariantError(ExprError):
    def __init__(self, seed_expr: Expr, field_index: int, verdict: ZeroVerdict):
        super().__init__(
            f"seed {print_expr(seed_expr)} is not annihilated by field "
            f"{field_index + 1}: {verdict}"
        )
        self.seed = seed_expr
        self.field_index = field_index
        self.verdict = verdict


class DependentSeedsError(ExprError):
    """The supplied seeds are functionally dependent."""


class UnknownVerdictError(ExprError):
    """A required zero test came back Unknown; refusing to certify numerically."""


def verify_invariant(
    Ys: VectorFieldSet, e: Expr, trials: int = 20, seed: int = 0, deny: Sequence[Expr] = ()
) -> list[ZeroVerdict]:
    """Apply every field of the set to e; one verdict per field.  Unknown
    verdicts are surfaced, never silently treated as zero."""
    return [is_zero(Y.apply(e), trials=trials, seed=seed, deny=deny) for Y in Ys]


def ibdp_step(eta: Expr, zeta: Expr, ctx: JetContext) -> Expr:
    """One invariants-by-differentiation step: D_x zeta / D_x eta."""
    d_eta = total_derivative(eta, ctx)
    if d_eta.sym == 0:
        raise DegenerateBaseError(
            f"total derivative of the base invariant {print_expr(eta)} vanishes identically"
        )
    return total_derivative(zeta, ctx) / d_eta


@dataclass
class InvariantTable:
    """Verified common invariants organized as one differentiation chain per
    seed: chains[j][0] is the seed, chains[j][i] its i-th derived invariant."""

    eta: Expr
    chains: list[list[Expr]]
    provenance: list[list[str]]  # "seed" | "ibdp-derived", parallel to chains
    extra_base: list[Expr] = field(default_factory=list)  # additional order-0 invariants

    def all_entries(self) -> list[Expr]:
        out = [self.eta, *self.extra_base]
        for chain in self.chains:
            out.extend(chain)
        return out

    def level(self, k: int) -> list[Expr]:
        """Entries that are k differentiation steps beyond their seed."""
        return [chain[k] for chain in self.chains if len(chain) > k]

    def __repr__(self):
        lines = [f"eta = {print_expr(self.eta)}"]
        for b in self.extra_base:
            lines.append(f"base invariant: {print_expr(b)}")
        for j, chain in enumerate(self.chains):
            for i, e in enumerate(chain):
                lines.append(f"zeta[{j + 1}][{i}] = {print_expr(e)} ({self.provenance[j][i]})")
        return "InvariantTable(\n  " + "\n  ".join(lines) + "\n)"


def generate_invariants(
    Ys: VectorFieldSet,
    eta: Expr,
    seeds: Sequence[Expr],
    target_order: int,
    extra_base: Sequence[Expr] = (),
    trials: int = 20,
    seed: int = 0,
    deny: Sequence[Expr] = (),
) -> InvariantTable:
    """Generate levels of common invariants by repeated differentiation steps.

    The base invariant, any extra order-0 invariants, and every seed are first
    verified against the whole set; every generated entry is re-verified, and
    functional independence of the full table is checked."""
    ctx = Ys.ctx
    if target_order < 2:
        raise ExprError("generation requires target order q > 1")
    for s in list(extra_base) + [eta] + list(seeds):
        if ctx.jet_order_of(s) > 1:
            raise ExprError(f"seed {print_expr(s)} has jet order > 1")

    def certify(candidate: Expr, what: str):
        for i, verdict in enumerate(verify_invariant(Ys, candidate, trials, seed, deny)):
            if verdict.is_nonzero:
                raise SeedNotInvariantError(candidate, i, verdict)
            if verdict.status == "unknown":
                raise UnknownVerdictError(
                    f"cannot certify {what} {print_expr(candidate)} under field "
                    f"{i + 1}: zero test is Unknown"
                )

    for candidate in [eta, *extra_base, *seeds]:
        certify(candidate, "seed")
    chains: list[list[Expr]] = []
    provenance: list[list[str]] = []
    for s in seeds:
        chain = [normalize(s)]
        prov = ["seed"]
        guard = 0
        while ctx.jet_order_of(chain[-1]) < target_order:
            guard += 1
            if guard > target_order + 2:
                raise ExprError(
                    f"differentiation chain of {print_expr(s)} does not reach order "
                    f"{target_order}"
                )
            nxt = ibdp_step(eta, chain[-1], ctx)
            certify(nxt, "generated invariant")
            chain.append(nxt)
            prov.append("ibdp-derived")
        chains.append(chain)
        provenance.append(prov)
    table = InvariantTable(normalize(eta), chains, provenance, list(extra_base))
    report = independence_check(table.all_entries(), ctx, seed=seed)
    if report.dependent:
        raise DependentSeedsError(
            f"table entries {sorted(i + 1 for i in report.dependent)} are functionally "
            "dependent on the others"
        )
    return table


@dataclass
class IndependenceReport:
    rank: int
    dependent: list[int]  # indices of expressions in the span of the others


def independence_check(exprs: Sequence[Expr], ctx: JetContext, seed: int = 0) -> IndependenceReport:
    """Symbolic rank of the Jacobian with respect to x and all jet coordinates;
    a row reducing to zero flags its expression as functionally dependent."""
    exprs = [normalize(e) for e in exprs]
    max_order = max([ctx.jet_order_of(e) for e in exprs] + [ctx.max_order])
    coords: list[sp.Symbol] = [ctx.x] + [
        ctx.coord(a, k) for a in range(ctx.p) for k in range(max_order + 1)
    ]
    jac = [[Expr(sp.diff(e.sym, c)) for c in coords] for e in exprs]
    m, n = len(exprs), len(coords)
    row_of = list(range(m))  # original expression index per current row
    rank = 0
    dependent: list[int] = []
    rows = [list(r) for r in jac]
    for col in range(n):
        if rank == m:
            break
        pivot_row = None
        for i in range(rank, m):
            entry = rows[i][col]
            if entry.sym == 0:
                continue
            verdict = _is_zero(entry, trials=12, seed=seed + col + 31 * i)
            if verdict.is_nonzero:
                pivot_row = i
                break
            if verdict.status == "unknown":
                raise PivotUndecidableError(
                    f"cannot decide Jacobian pivot: {print_expr(entry)}"
                )
        if pivot_row is None:
            continue
        rows[rank], rows[pivot_row] = rows[pivot_row], rows[rank]
        row_of[rank], row_of[pivot_row] = row_of[pivot_row], row_of[rank]
        piv = rows[rank][col]
        for i in range(rank + 1, m):
            if rows[i][col].sym != 0:
                factor = rows[i][col] / piv
                rows[i] = [a - factor * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
    for i in range(rank, m):
        dependent.append(row_of[i])
    return IndependenceReport(rank, sorted(dependent))
