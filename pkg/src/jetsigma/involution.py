"""Structure functions of vector-field sets, closure under the Lie bracket,
and the conditions on twist matrices that preserve involution relations."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import sympy as sp

from .exprs import Expr, ExprError, ZeroVerdict, eval_numeric, is_zero, normalize, print_expr
from .jets import JetContext, VectorField, VectorFieldSet, lie_bracket, total_derivative
from .linalg import PivotUndecidableError, linear_solve
from .prolong import SigmaMatrix, sigma_prolong

__all__ = [
    "StructureFunctions",
    "NotInvolutiveError",
    "ClosureExceededError",
    "structure_functions",
    "close_under_bracket",
    "ClosureReport",
    "check_involution_transfer",
    "InvolutionTransferReport",
    "expand_in_basis",
]


class NotInvolutiveError(ExprError):
    """A pairwise bracket leaves the pointwise span of the set."""

    def __init__(self, i: int, j: int, bracket: VectorField, detail: str):
        super().__init__(f"bracket of fields {i + 1} and {j + 1} leaves the span: {detail}")
        self.pair = (i, j)
        self.bracket = bracket
        self.detail = detail


class ClosureExceededError(ExprError):
    """Bracket closure did not terminate within the allowed number of new fields."""


@dataclass
class StructureFunctions:
    """Coefficients mu[i][j][k] with [V_i, V_j] = sum_k mu[i][j][k] V_k,
    antisymmetric in (i, j)."""

    r: int
    mu: list[list[list[Expr]]]
    domain: str = "jet"

    @staticmethod
    def from_upper(r: int, upper: dict[tuple[int, int], list[Expr]], domain: str = "jet") -> "StructureFunctions":
        zero = Expr.number(0)
        mu = [[[zero] * r for _ in range(r)] for _ in range(r)]
        for (i, j), coeffs in upper.items():
            for k in range(r):
                mu[i][j][k] = coeffs[k]
                mu[j][i][k] = -coeffs[k]
        return StructureFunctions(r, mu, domain)

    def __getitem__(self, ijk) -> Expr:
        i, j, k = ijk
        return self.mu[i][j][k]

    def is_zero(self) -> bool:
        return all(e.sym == 0 for plane in self.mu for row in plane for e in row)

    def __repr__(self):
        parts = []
        for i in range(self.r):
            for j in range(i + 1, self.r):
                coeffs = ", ".join(print_expr(self.mu[i][j][k]) for k in range(self.r))
                parts.append(f"mu[{i + 1}{j + 1}] = ({coeffs})")
        return "StructureFunctions(" + "; ".join(parts) + ")"


# ---------------------------------------------------------------------------
# exact rational elimination for the constant-coefficient fast path
# ---------------------------------------------------------------------------


def _solve_rational(rows: list[list[Fraction]], rhs: list[Fraction]):
    """Exact solve over Q; free variables are pinned to zero.  Returns the
    solution list or None if inconsistent."""
    m, n = len(rows), len(rows[0]) if rows else 0
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    pivots = []
    rank = 0
    for col in range(n):
        sel = next((i for i in range(rank, m) if aug[i][col] != 0), None)
        if sel is None:
            continue
        aug[rank], aug[sel] = aug[sel], aug[rank]
        piv = aug[rank][col]
        aug[rank] = [v / piv for v in aug[rank]]
        for i in range(m):
            if i != rank and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[rank])]
        pivots.append(col)
        rank += 1
    for i in range(rank, m):
        if aug[i][n] != 0:
            return None
    solution = [Fraction(0)] * n
    for row_idx, col in enumerate(pivots):
        solution[col] = aug[row_idx][n]
    return solution


def _rational_rank(rows: list[list[Fraction]]) -> int:
    m = len(rows)
    if m == 0:
        return 0
    n = len(rows[0])
    work = [list(r) for r in rows]
    rank = 0
    for col in range(n):
        sel = next((i for i in range(rank, m) if work[i][col] != 0), None)
        if sel is None:
            continue
        work[rank], work[sel] = work[sel], work[rank]
        piv = work[rank][col]
        for i in range(rank + 1, m):
            if work[i][col] != 0:
                f = work[i][col] / piv
                work[i] = [a - f * b for a, b in zip(work[i], work[rank])]
        rank += 1
    return rank


def _atomized_components(fields: Sequence[VectorField], extra: Sequence[VectorField]):
    """Component tables with kernel/opaque atoms replaced by shared dummies so
    points can be sampled with exact rational arithmetic."""
    from .exprs import _is_opaque  # internal, deliberate

    all_syms: list[sp.Expr] = []
    for f in list(fields) + list(extra):
        for c in f.components():
            all_syms.append(c.sym)
    atom_map: dict[sp.Expr, sp.Symbol] = {}
    for s in all_syms:
        for node in sorted(s.atoms(sp.Function), key=sp.default_sort_key):
            if node not in atom_map:
                atom_map[node] = sp.Dummy(f"a{len(atom_map)}")

    def atomize(e: Expr):
        return e.sym.xreplace(atom_map)

    return atomize


def _sample_rational_point(symbols, rng: random.Random):
    return {
        s: sp.Rational((-1 if rng.random() < 0.5 else 1) * rng.randint(1, 19), rng.randint(1, 7))
        for s in symbols
    }


def _denominator_factors(exprs) -> set:
    """Irreducible factors occurring in the denominators of the expressions."""
    out = set()
    for e in exprs:
        _, den = sp.fraction(e.sym)
        if den == 1:
            continue
        try:
            _, factors = sp.factor_list(den)
        except sp.PolynomialError:
            factors = [(den, 1)]
        for base, _mult in factors:
            out.add(sp.factor(base))
    return out


def _admissible_coefficients(coeffs: Sequence[Expr], allowed: set) -> bool:
    """Structure coefficients may only be singular where the fields already
    are: every denominator factor must come from the basis or the bracket."""
    for c in coeffs:
        _, den = sp.fraction(c.sym)
        if den == 1 or den.is_Rational:
            continue
        try:
            _, factors = sp.factor_list(den)
        except sp.PolynomialError:
            factors = [(den, 1)]
        for base, _mult in factors:
            if sp.factor(base) not in allowed:
                return False
    return True


def expand_in_basis(
    bracket: VectorField,
    basis: Sequence[VectorField],
    seed: int = 0,
    restrict_singularities: bool = False,
    complexity_budget: int | None = None,
):
    """Express a field in the pointwise span of a basis.

    Tries a constant-coefficient expansion first (sampled exactly over Q, then
    certified symbolically); falls back to symbolic elimination over the
    expression field.  With restrict_singularities, coefficients singular at
    points where the fields themselves are regular are rejected (used during
    bracket closure); otherwise the generic pointwise answer is accepted.
    Returns the coefficient list, or None when no admissible expansion
    exists."""
    r = len(basis)
    allowed = _denominator_factors(
        [c for f in list(basis) + [bracket] for c in f.components()]
    )
    # fast path: constant coefficients, confirmed symbolically
    atomize = _atomized_components(basis, [bracket])
    basis_syms = [[atomize(c) for c in f.components()] for f in basis]
    bracket_syms = [atomize(c) for c in bracket.components()]
    symbols = sorted(
        {s for col in basis_syms + [bracket_syms] for e in col for s in e.free_symbols},
        key=lambda s: s.name,
    )
    rng = random.Random(seed)
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    points = 0
    attempts = 0
    while points < max(3, r) and attempts < 40:
        attempts += 1
        pt = _sample_rational_point(symbols, rng)
        try:
            new_rows = []
            new_rhs = []
            for comp in range(len(bracket_syms)):
                row = []
                for k in range(r):
                    v = basis_syms[k][comp].xreplace(pt)
                    if not v.is_Rational:
                        raise ValueError
                    row.append(Fraction(int(v.p), int(v.q)))
                b = bracket_syms[comp].xreplace(pt)
                if not b.is_Rational:
                    raise ValueError
                new_rows.append(row)
                new_rhs.append(Fraction(int(b.p), int(b.q)))
        except ValueError:
            continue
        rows.extend(new_rows)
        rhs.extend(new_rhs)
        points += 1
    if points >= 3:
        candidate = _solve_rational(rows, rhs)
        if candidate is not None:
            coeffs = [Expr.number(c) for c in candidate]
            if _expansion_residual_is_zero(bracket, basis, coeffs):
                return coeffs
        # pointwise rank pre-check: if adjoining the bracket raises the rank of
        # the coefficient matrix at a sample point, no expansion can exist and
        # the costly symbolic elimination is skipped
        ncomp = len(bracket_syms)
        for block in range(points):
            seg = rows[block * ncomp : (block + 1) * ncomp]
            seg_rhs = rhs[block * ncomp : (block + 1) * ncomp]
            basis_rank = _rational_rank([list(r) for r in seg])
            full_rank = _rational_rank([r + [b] for r, b in zip(seg, seg_rhs)])
            if full_rank > basis_rank:
                return None
    # symbolic path
    mat = [[basis[k].components()[comp] for k in range(r)] for comp in range(len(bracket.components()))]
    vec = bracket.components()
    if complexity_budget is not None:
        size = sum(sp.count_ops(e.sym) for row in mat for e in row)
        size += sum(sp.count_ops(e.sym) for e in vec)
        if size > complexity_budget:
            return None
    result = linear_solve(mat, vec, seed=seed)
    if result.status == "inconsistent":
        return None
    coeffs = result.solution
    if restrict_singularities and not _admissible_coefficients(coeffs, allowed):
        return None
    if _expansion_residual_is_zero(bracket, basis, coeffs):
        return coeffs
    return None


def _expansion_residual_is_zero(bracket, basis, coeffs) -> bool:
    residual = bracket
    for c, g in zip(coeffs, basis):
        residual = residual.minus(g.scaled(c))
    return residual.is_zero_field()


def structure_functions(Vs: VectorFieldSet, seed: int = 0) -> StructureFunctions:
    """Solve [V_i, V_j] = sum_k mu[i][j][k] V_k for every pair; raises
    NotInvolutiveError with the offending bracket when a pair leaves the span."""
    r = len(Vs)
    upper: dict[tuple[int, int], list[Expr]] = {}
    max_jet = 0
    for i in range(r):
        for j in range(i + 1, r):
            bracket = lie_bracket(Vs[i], Vs[j])
            if bracket.is_zero_field():
                upper[(i, j)] = [Expr.number(0)] * r
                continue
            coeffs = expand_in_basis(bracket, list(Vs), seed=seed)
            if coeffs is None:
                labels = bracket.coordinate_labels()
                comps = bracket.components()
                desc = ", ".join(
                    f"{print_expr(c)}*{lab}" for c, lab in zip(comps, labels) if c.sym != 0
                )
                raise NotInvolutiveError(i, j, bracket, desc)
            upper[(i, j)] = coeffs
            for c in coeffs:
                max_jet = max(max_jet, Vs.ctx.jet_order_of(c))
    domain = "base" if max_jet == 0 else "jet"
    return StructureFunctions.from_upper(r, upper, domain)


# ---------------------------------------------------------------------------
# closure under the bracket
# ---------------------------------------------------------------------------


@dataclass
class ClosureReport:
    added: list[VectorField]
    stripped_factors: list[Expr]
    structure: StructureFunctions


def _pivot_coordinate(f: VectorField, seed: int) -> int | None:
    for idx, c in enumerate(f.components()):
        if c.sym == 0:
            continue
        verdict = is_zero(c, trials=6, seed=seed + idx)
        if verdict.is_nonzero:
            return idx
    return None


def _coefficient_content(e: sp.Expr) -> Fraction:
    """The rational-number content of a normalized expression's terms."""
    num, den = sp.fraction(e)
    terms = num.args if num.is_Add else (num,)
    content = Fraction(0)
    for t in terms:
        rat = sp.S.One
        if t.is_Mul:
            rat = sp.Mul(*[a for a in t.args if a.is_Rational])
        elif t.is_Rational:
            rat = t
        fr = Fraction(int(sp.numer(rat)), int(sp.denom(rat)))
        content = (
            fr
            if content == 0
            else Fraction(
                __import__("math").gcd(content.numerator * fr.denominator, fr.numerator * content.denominator),
                content.denominator * fr.denominator,
            )
        )
    if den.is_Rational and den != 1:
        content = content / Fraction(int(den))
    return content


def _strip_rational_content(f: VectorField) -> tuple[VectorField, Expr]:
    """Divide out the common rational-number content of the coefficients."""
    contents = []
    leading = None
    for c in f.components():
        if c.sym == 0:
            continue
        fr = _coefficient_content(c.sym)
        if leading is None:
            num, _ = sp.fraction(c.sym)
            lead = num.args[0] if num.is_Add else num
            rat = sp.Mul(*[a for a in lead.args if a.is_Rational]) if lead.is_Mul else (lead if lead.is_Rational else sp.S.One)
            leading = Fraction(int(sp.numer(rat)), int(sp.denom(rat)))
        contents.append(abs(fr))
    if not contents:
        return f, Expr.number(1)
    g = contents[0]
    for fr in contents[1:]:
        g = Fraction(
            __import__("math").gcd(g.numerator * fr.denominator, fr.numerator * g.denominator),
            g.denominator * fr.denominator,
        )
    if leading is not None and leading < 0:
        g = -g
    if g in (0, 1):
        return f, Expr.number(1)
    return f.scaled(Expr.number(1 / g)), Expr.number(g)


def _nonzero_count(f: VectorField) -> int:
    return sum(1 for c in f.components() if c.sym != 0)


def _reduce_against(residual: VectorField, base: Sequence[VectorField], seed: int) -> VectorField:
    """Subtract constant multiples of the original generators when doing so
    strictly simplifies the residual (fewer nonzero components); this keeps
    adjoined generators in their cleanest form."""
    for g in base:
        piv = _pivot_coordinate(g, seed)
        if piv is None:
            continue
        num = residual.components()[piv]
        if num.sym == 0:
            continue
        ratio = num / g.components()[piv]
        if ratio.sym.is_Rational and ratio.sym != 0:
            tentative = residual.minus(g.scaled(ratio))
            if _nonzero_count(tentative) < _nonzero_count(residual):
                residual = tentative
    return residual


def close_under_bracket(
    Vs: VectorFieldSet, max_new: int = 8, seed: int = 0, complexity_budget: int = 600
) -> tuple[VectorFieldSet, ClosureReport]:
    """Adjoin bracket residuals (reduced against the original generators and
    stripped of rational content) until the set is involutive.  Wildly growing
    coefficient complexity aborts the closure instead of grinding."""
    if max_new < 0:
        raise ExprError("max_new must be >= 0")
    base = list(Vs)
    gens = list(Vs)
    added: list[VectorField] = []
    factors: list[Expr] = []
    for _round in range(max_new + 2):
        new_fields: list[VectorField] = []
        for i in range(len(gens)):
            for j in range(i + 1, len(gens)):
                bracket = lie_bracket(gens[i], gens[j])
                if bracket.is_zero_field():
                    continue
                if sum(sp.count_ops(c.sym) for c in bracket.components()) > complexity_budget:
                    raise ClosureExceededError(
                        "closure brackets grow beyond the complexity budget"
                    )
                # span checks run against the round-start set so independent
                # residuals discovered in one round are all adjoined together
                if (
                    expand_in_basis(
                        bracket,
                        gens,
                        seed=seed,
                        restrict_singularities=True,
                        complexity_budget=complexity_budget,
                    )
                    is not None
                ):
                    continue
                residual = _reduce_against(bracket, base, seed)
                residual, factor = _strip_rational_content(residual)
                if residual.is_zero_field() or any(residual == nf for nf in new_fields):
                    continue
                if (
                    expand_in_basis(
                        residual,
                        gens + new_fields,
                        seed=seed,
                        restrict_singularities=True,
                        complexity_budget=complexity_budget,
                    )
                    is not None
                ):
                    continue
                if sum(sp.count_ops(c.sym) for c in residual.components()) > complexity_budget:
                    raise ClosureExceededError(
                        "closure generators grow beyond the complexity budget"
                    )
                new_fields.append(residual)
                factors.append(factor)
        if not new_fields:
            structure = structure_functions(VectorFieldSet(gens), seed=seed)
            return VectorFieldSet(gens), ClosureReport(added, factors, structure)
        gens.extend(new_fields)
        added.extend(new_fields)
        if len(added) > max_new:
            raise ClosureExceededError(
                f"closure needed more than {max_new} new fields ({len(added)} so far)"
            )
    raise ClosureExceededError(f"closure did not terminate within {max_new + 2} rounds")


# ---------------------------------------------------------------------------
# involution transfer under the joint twist
# ---------------------------------------------------------------------------


@dataclass
class InvolutionTransferReport:
    mu: StructureFunctions
    Q: dict[tuple[int, int], list[Expr]]
    R: dict[tuple[int, int], list[Expr]]
    contracted: dict[tuple[int, int], list[Expr]]  # sum_k R[i][j][k] * phi^a_k, per a
    Q_contracted: dict[tuple[int, int], list[Expr]]
    holds_pointwise: bool  # the sufficient condition: every R entry vanishes
    holds_contracted: bool  # the weaker necessary-and-sufficient contracted form

    def __str__(self):
        lines = [
            f"pointwise twist condition: {'holds' if self.holds_pointwise else 'fails'}",
            f"contracted twist condition: {'holds' if self.holds_contracted else 'fails'}",
        ]
        for (i, j), q in sorted(self.Q.items()):
            lines.append(
                f"  Q[{i + 1}{j + 1}] = (" + ", ".join(print_expr(e) for e in q) + ")"
            )
        return "\n".join(lines)


def check_involution_transfer(
    Xs: VectorFieldSet, sigma: SigmaMatrix, trials: int = 20, seed: int = 0
) -> InvolutionTransferReport:
    """Evaluate the conditions under which the jointly twisted prolongations
    satisfy the same involution relations as the base fields.

    Uses only the first prolongations: with mu the base structure functions,

        Q[i][j][k] = Y_i(sigma[j][k]) - Y_j(sigma[i][k])
        R[i][j][k] = Q[i][j][k] + D_x mu[i][j][k]
                     + sum_m (sigma[i][m] mu[m][j][k] - sigma[j][m] mu[m][i][k]
                              - mu[i][j][m] sigma[m][k])

    The strong condition asks every R entry to vanish; the weak one only asks
    the contractions sum_k R[i][j][k] phi^a_k to vanish."""
    ctx = Xs.ctx
    r = len(Xs)
    if sigma.r != r:
        raise ExprError("twist matrix size does not match the set")
    mu = structure_functions(Xs, seed=seed)
    Ys = sigma_prolong(Xs, sigma, 1)
    Q: dict[tuple[int, int], list[Expr]] = {}
    R: dict[tuple[int, int], list[Expr]] = {}
    contracted: dict[tuple[int, int], list[Expr]] = {}
    q_contracted: dict[tuple[int, int], list[Expr]] = {}
    holds_pointwise = True
    holds_contracted = True
    for i in range(r):
        for j in range(i + 1, r):
            q_row = []
            r_row = []
            for k in range(r):
                q = Ys[i].apply(sigma[j, k]) - Ys[j].apply(sigma[i, k])
                extra = total_derivative(mu[i, j, k], ctx)
                for m in range(r):
                    extra = (
                        extra
                        + sigma[i, m] * mu[m, j, k]
                        - sigma[j, m] * mu[m, i, k]
                        - mu[i, j, m] * sigma[m, k]
                    )
                q_row.append(q)
                r_row.append(q + extra)
            Q[(i, j)] = q_row
            R[(i, j)] = r_row
            con = []
            qcon = []
            for a in range(ctx.p):
                acc = Expr.number(0)
                qacc = Expr.number(0)
                for k in range(r):
                    acc = acc + r_row[k] * Xs[k].phi(a)
                    qacc = qacc + q_row[k] * Xs[k].phi(a)
                con.append(acc)
                qcon.append(qacc)
            contracted[(i, j)] = con
            q_contracted[(i, j)] = qcon
            if any(not is_zero(e, trials=trials, seed=seed).is_zero for e in r_row):
                holds_pointwise = False
            if any(not is_zero(e, trials=trials, seed=seed).is_zero for e in con):
                holds_contracted = False
    return InvolutionTransferReport(
        mu, Q, R, contracted, q_contracted, holds_pointwise, holds_contracted
    )
