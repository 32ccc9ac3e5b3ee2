"""Exact linear algebra over the expression field: fraction-free Gaussian
elimination with randomized-zero-test pivoting, and small symbolic matrices."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import sympy as sp

from .exprs import Expr, ExprError, ZeroVerdict, is_zero, normalize, print_expr

__all__ = [
    "ExprMatrix",
    "LinearSolveResult",
    "PivotUndecidableError",
    "SingularMatrixError",
    "linear_solve",
]


class PivotUndecidableError(ExprError):
    """A candidate pivot could not be certified nonzero by the zero test."""


class SingularMatrixError(ExprError):
    """A matrix required to be invertible has identically vanishing determinant."""


def _decide_nonzero(e: Expr, seed: int) -> bool:
    """True if e is certified nonzero, False if zero; Unknown is an error."""
    if e.sym == 0:
        return False
    verdict = is_zero(e, trials=8, seed=seed)
    if verdict.is_nonzero:
        return True
    if verdict.is_zero:
        return False
    raise PivotUndecidableError(f"cannot decide whether pivot candidate vanishes: {e}")


@dataclass
class LinearSolveResult:
    status: str  # "solved" | "inconsistent" | "underdetermined"
    solution: list[Expr] | None = None
    free_indices: list[int] = field(default_factory=list)
    witness: Expr | None = None  # the contradictory reduced equation (0 = witness)

    @property
    def ok(self) -> bool:
        return self.status != "inconsistent"


def _clear_denominators(row: list[sp.Expr]) -> list[sp.Expr]:
    factor = sp.S.One
    for entry in row:
        _, d = sp.fraction(sp.together(entry))
        if d != 1:
            try:
                factor = sp.lcm(factor, d)
            except sp.PolynomialError:
                factor = factor * d
    if factor == 1:
        return row
    return [sp.cancel(entry * factor) for entry in row]


def linear_solve(mat: Sequence[Sequence[Expr]], rhs: Sequence[Expr], seed: int = 0) -> LinearSolveResult:
    """Solve M x = b exactly by Bareiss-style fraction-free elimination.

    Returns the unique solution, an inconsistency witness (a reduced equation
    with zero coefficients but nonzero right side), or an underdetermined
    result whose particular solution sets the free variables to zero.
    """
    m = len(mat)
    if m == 0:
        return LinearSolveResult("underdetermined", [], [])
    n = len(mat[0])
    # kernel and opaque applications become plain symbols for the elimination:
    # the gcd machinery is dramatically faster over a pure polynomial ring
    atom_map: dict[sp.Expr, sp.Symbol] = {}
    for seq in list(mat) + [rhs]:
        for entry in seq:
            for node in sorted(normalize(entry).sym.atoms(sp.Function), key=sp.default_sort_key):
                if node not in atom_map:
                    atom_map[node] = sp.Dummy(f"g{len(atom_map)}")
    restore = {v: k for k, v in atom_map.items()}

    def enc(e: Expr) -> sp.Expr:
        return normalize(e).sym.xreplace(atom_map)

    rows = [
        _clear_denominators([enc(mat[i][j]) for j in range(n)] + [enc(rhs[i])])
        for i in range(m)
    ]
    pivot_cols: list[int] = []
    prev_pivot = sp.S.One
    r = 0
    for col in range(n):
        pivot_row = None
        for i in range(r, m):
            if _decide_nonzero(Expr(rows[i][col]), seed=seed + 17 * i + col):
                pivot_row = i
                break
        if pivot_row is None:
            continue
        rows[r], rows[pivot_row] = rows[pivot_row], rows[r]
        pivot = rows[r][col]
        for i in range(r + 1, m):
            if rows[i][col] == 0:
                # still rescale so the Bareiss divisions below stay exact
                rows[i] = [sp.cancel((pivot * rows[i][j]) / prev_pivot) for j in range(n + 1)]
                continue
            rows[i] = [
                sp.cancel((pivot * rows[i][j] - rows[i][col] * rows[r][j]) / prev_pivot)
                for j in range(n + 1)
            ]
        prev_pivot = pivot
        pivot_cols.append(col)
        r += 1
        if r == m:
            break
    # consistency: rows below the rank must have zero right side
    for i in range(r, m):
        rhs_entry = Expr(rows[i][n])
        if _decide_nonzero(rhs_entry, seed=seed + 101 * i):
            return LinearSolveResult("inconsistent", witness=Expr(rows[i][n].xreplace(restore)))
    free = [c for c in range(n) if c not in pivot_cols]
    solution = [sp.S.Zero] * n
    for back in range(r - 1, -1, -1):
        col = pivot_cols[back]
        acc = rows[back][n]
        for j in range(col + 1, n):
            if rows[back][j] != 0:
                acc = acc - rows[back][j] * solution[j]
        solution[col] = sp.cancel(acc / rows[back][col])
    out = [Expr(s.xreplace(restore)) for s in solution]
    if free:
        return LinearSolveResult("underdetermined", out, free)
    return LinearSolveResult("solved", out, [])


class ExprMatrix:
    """A rectangular matrix of expressions, optionally tagged with the domain
    its entries are required to live on ("base" for functions of (x, u^a))."""

    def __init__(self, entries: Sequence[Sequence[Expr]], domain: str | None = None):
        rows = tuple(tuple(normalize(e) for e in row) for row in entries)
        if not rows or not rows[0]:
            raise ExprError("matrix must be nonempty")
        ncols = len(rows[0])
        if any(len(row) != ncols for row in rows):
            raise ExprError("ragged matrix")
        self.entries = rows
        self.domain = domain

    @staticmethod
    def identity(n: int) -> "ExprMatrix":
        return ExprMatrix(
            [[Expr.number(1 if i == j else 0) for j in range(n)] for i in range(n)]
        )

    @staticmethod
    def zero(nrows: int, ncols: int) -> "ExprMatrix":
        z = Expr.number(0)
        return ExprMatrix([[z] * ncols for _ in range(nrows)])

    @property
    def nrows(self) -> int:
        return len(self.entries)

    @property
    def ncols(self) -> int:
        return len(self.entries[0])

    @property
    def is_square(self) -> bool:
        return self.nrows == self.ncols

    def __getitem__(self, ij) -> Expr:
        i, j = ij
        return self.entries[i][j]

    def row(self, i: int) -> list[Expr]:
        return list(self.entries[i])

    def map(self, fn: Callable[[Expr], Expr]) -> "ExprMatrix":
        return ExprMatrix([[fn(e) for e in row] for row in self.entries])

    def transpose(self) -> "ExprMatrix":
        return ExprMatrix(
            [[self.entries[i][j] for i in range(self.nrows)] for j in range(self.ncols)]
        )

    def __add__(self, other: "ExprMatrix") -> "ExprMatrix":
        self._shape_check(other)
        return ExprMatrix(
            [
                [a + b for a, b in zip(ra, rb)]
                for ra, rb in zip(self.entries, other.entries)
            ]
        )

    def __sub__(self, other: "ExprMatrix") -> "ExprMatrix":
        self._shape_check(other)
        return ExprMatrix(
            [
                [a - b for a, b in zip(ra, rb)]
                for ra, rb in zip(self.entries, other.entries)
            ]
        )

    def __matmul__(self, other: "ExprMatrix") -> "ExprMatrix":
        if self.ncols != other.nrows:
            raise ExprError(
                f"cannot multiply {self.nrows}x{self.ncols} by {other.nrows}x{other.ncols}"
            )
        out = []
        for i in range(self.nrows):
            row = []
            for j in range(other.ncols):
                acc = sp.S.Zero
                for k in range(self.ncols):
                    acc = acc + self.entries[i][k].sym * other.entries[k][j].sym
                row.append(Expr(acc))
            out.append(row)
        return ExprMatrix(out)

    def scaled(self, factor: Expr | int) -> "ExprMatrix":
        f = normalize(factor)
        return self.map(lambda e: f * e)

    def _shape_check(self, other: "ExprMatrix"):
        if self.nrows != other.nrows or self.ncols != other.ncols:
            raise ExprError("matrix shapes differ")

    def det(self) -> Expr:
        if not self.is_square:
            raise ExprError("determinant of a non-square matrix")
        n = self.nrows
        if n == 1:
            return self.entries[0][0]
        # Laplace expansion: the matrices here stay tiny (r <= 3)
        acc = sp.S.Zero
        for j in range(n):
            minor = ExprMatrix(
                [
                    [self.entries[i][c] for c in range(n) if c != j]
                    for i in range(1, n)
                ]
            )
            term = self.entries[0][j].sym * minor.det().sym
            acc = acc + (term if j % 2 == 0 else -term)
        return Expr(acc)

    def inverse(self, seed: int = 0) -> "ExprMatrix":
        """Symbolic adjugate/determinant inverse; the determinant must be
        certified nonzero by the randomized zero test."""
        if not self.is_square:
            raise ExprError("inverse of a non-square matrix")
        d = self.det()
        if not _decide_nonzero_det(d, seed):
            raise SingularMatrixError(f"matrix determinant vanishes identically: {print_expr(d)}")
        n = self.nrows
        if n == 1:
            return ExprMatrix([[Expr.number(1) / self.entries[0][0]]])
        cof = []
        for i in range(n):
            row = []
            for j in range(n):
                minor = ExprMatrix(
                    [
                        [self.entries[r][c] for c in range(n) if c != j]
                        for r in range(n)
                        if r != i
                    ]
                )
                sign = 1 if (i + j) % 2 == 0 else -1
                row.append(minor.det() * sign)
            cof.append(row)
        # adjugate is the transposed cofactor matrix
        return ExprMatrix(
            [[cof[j][i] / d for j in range(n)] for i in range(n)]
        )

    def total_derivative(self, ctx) -> "ExprMatrix":
        from .jets import total_derivative

        return self.map(lambda e: total_derivative(e, ctx))

    def is_zero_matrix(self) -> bool:
        return all(e.sym == 0 for row in self.entries for e in row)

    def __eq__(self, other):
        return isinstance(other, ExprMatrix) and self.entries == other.entries

    def __repr__(self):
        rows = "; ".join(", ".join(print_expr(e) for e in row) for row in self.entries)
        return f"ExprMatrix[{rows}]"


def _decide_nonzero_det(d: Expr, seed: int) -> bool:
    if d.sym == 0:
        return False
    verdict = is_zero(d, trials=8, seed=seed)
    if verdict.is_nonzero:
        return True
    if verdict.is_zero:
        return False
    raise PivotUndecidableError(f"cannot decide invertibility: determinant {d}")
