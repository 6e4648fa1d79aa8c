"""Exact and numeric linear algebra used by the rank and jet computations.

Exact routines work over complex rationals (QC entries, plain nested lists)
with classical row reduction; they are the default whenever the inputs are
exp-free and the point is exact.  Numeric routines wrap numpy's SVD with a
relative tolerance and a refuse-to-guess band: singular values within a
factor of 10 of the cut make the decision inconclusive.
"""

from __future__ import annotations

import numpy as np

from .errors import InconclusiveRank, SingularAtPoint
from .expr import QC, Expr, evaluate, simplify, div, mul, sub, is_zero_constant

BORDERLINE_FACTOR = 10.0


def _to_qc(v) -> QC:
    if isinstance(v, QC):
        return v
    return QC(v)


def exact_matrix(rows) -> list:
    return [[_to_qc(v) for v in row] for row in rows]


def exact_rank(rows) -> int:
    m = exact_matrix(rows)
    return len(_row_echelon(m))


def _row_echelon(m: list) -> list[int]:
    """In-place forward elimination; returns the pivot column list."""
    if not m:
        return []
    n_rows, n_cols = len(m), len(m[0])
    pivots = []
    r = 0
    for c in range(n_cols):
        pivot_row = None
        for i in range(r, n_rows):
            if not m[i][c].is_zero:
                pivot_row = i
                break
        if pivot_row is None:
            continue
        m[r], m[pivot_row] = m[pivot_row], m[r]
        inv = QC(1) / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(n_rows):
            if i != r and not m[i][c].is_zero:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == n_rows:
            break
    return pivots


def exact_nullspace(rows, n_cols: int | None = None) -> list[list[QC]]:
    """Basis of the right kernel, one vector per free column."""
    m = exact_matrix(rows)
    if not m:
        if n_cols is None:
            raise ValueError("empty matrix needs an explicit column count")
        return [[QC(1) if j == i else QC(0) for j in range(n_cols)] for i in range(n_cols)]
    n_cols = len(m[0])
    pivots = _row_echelon(m)
    pivot_set = set(pivots)
    free = [c for c in range(n_cols) if c not in pivot_set]
    basis = []
    for fc in free:
        vec = [QC(0)] * n_cols
        vec[fc] = QC(1)
        for r, pc in enumerate(pivots):
            vec[pc] = -m[r][fc]
        basis.append(vec)
    return basis


def exact_solve(a_rows, b) -> list[QC] | None:
    """One particular solution of A x = b, or None when inconsistent."""
    m = exact_matrix(a_rows)
    rhs = [_to_qc(v) for v in b]
    n_cols = len(m[0]) if m else 0
    aug = [row + [v] for row, v in zip(m, rhs)]
    pivots = _row_echelon(aug)
    if n_cols in pivots:
        return None
    sol = [QC(0)] * n_cols
    for r, pc in enumerate(pivots):
        sol[pc] = aug[r][n_cols]
    return sol


def exact_det(rows) -> QC:
    m = exact_matrix(rows)
    n = len(m)
    det = QC(1)
    for c in range(n):
        pivot_row = None
        for i in range(c, n):
            if not m[i][c].is_zero:
                pivot_row = i
                break
        if pivot_row is None:
            return QC(0)
        if pivot_row != c:
            m[c], m[pivot_row] = m[pivot_row], m[c]
            det = -det
        det = det * m[c][c]
        inv = QC(1) / m[c][c]
        for i in range(c + 1, n):
            if not m[i][c].is_zero:
                f = m[i][c] * inv
                m[i] = [a - f * b for a, b in zip(m[i], m[c])]
    return det


def _to_ndarray(rows) -> np.ndarray:
    return np.array([[complex(v) for v in row] for row in rows], dtype=complex)


def _row_equilibrated(a: np.ndarray) -> np.ndarray:
    """Scale each row by its largest entry; rank and kernel are unchanged and
    the singular spectrum of structured stacks becomes decidable."""
    scale = np.max(np.abs(a), axis=1, keepdims=True)
    scale[scale == 0] = 1.0
    return a / scale


def numeric_rank(rows, tol: float = 1e-9) -> tuple[int, bool]:
    """(rank, inconclusive) with rank = #{singular values > tol * largest},
    computed on the row-equilibrated matrix."""
    a = _to_ndarray(rows)
    if a.size == 0:
        return 0, False
    a = _row_equilibrated(a)
    svals = np.linalg.svd(a, compute_uv=False)
    top = float(svals[0]) if len(svals) else 0.0
    if top == 0.0:
        return 0, False
    cut = tol * top
    kept = svals[svals > cut]
    dropped = svals[svals <= cut]
    rank = int(len(kept))
    inconclusive = False
    if len(dropped) and float(dropped[0]) > cut / BORDERLINE_FACTOR:
        inconclusive = True
    if rank and float(kept[-1]) < cut * BORDERLINE_FACTOR:
        inconclusive = True
    return rank, inconclusive


def numeric_nullspace(rows, n_cols: int, tol: float = 1e-9) -> list[list[complex]]:
    a = _to_ndarray(rows)
    if a.size == 0:
        return [[1.0 if j == i else 0.0 for j in range(n_cols)] for i in range(n_cols)]
    a = _row_equilibrated(a)
    _, svals, vh = np.linalg.svd(a)
    top = svals[0] if len(svals) else 0.0
    cut = tol * top if top > 0 else 0.0
    rank = int(np.sum(svals > cut))
    return [list(vh[i].conj()) for i in range(rank, n_cols)]


def nullity(rows, n_cols: int, mode: str = "exact", tol: float = 1e-9) -> int:
    """Kernel dimension of a (possibly empty) matrix with n_cols columns."""
    if not rows:
        return n_cols
    if mode == "exact":
        return n_cols - exact_rank(rows)
    rank, inconclusive = numeric_rank(rows, tol)
    if inconclusive:
        raise InconclusiveRank(
            "singular values fall inside the borderline band; refusing a numeric verdict"
        )
    return n_cols - rank


def solve_symbolic(a_exprs, b_cols, hint_point, params=None):
    """Solve a square system with Expression entries by Gaussian elimination.

    Pivots are chosen by largest magnitude at `hint_point`, which must make
    the matrix invertible (raises SingularAtPoint otherwise).  `b_cols` is a
    list of right-hand-side columns; returns the matching solution columns.
    """
    n = len(a_exprs)
    a = [list(row) for row in a_exprs]
    b = [list(col) for col in b_cols]
    cache: dict = {}

    def magnitude(e: Expr) -> float:
        val = evaluate(e, hint_point, params=params, cache=cache)
        if isinstance(val, QC):
            return float(val.abs2())
        return abs(val) ** 2

    perm = list(range(n))
    for c in range(n):
        best, best_mag = None, 0.0
        for r in range(c, n):
            mag = magnitude(a[r][c])
            if mag > best_mag:
                best, best_mag = r, mag
        if best is None:
            raise SingularAtPoint("symbolic system is singular at the hint point")
        a[c], a[best] = a[best], a[c]
        perm[c], perm[best] = perm[best], perm[c]
        for col in b:
            col[c], col[best] = col[best], col[c]
        pivot = a[c][c]
        for r in range(c + 1, n):
            if is_zero_constant(a[r][c]):
                continue
            factor = simplify(div(a[r][c], pivot))
            for j in range(c, n):
                a[r][j] = simplify(sub(a[r][j], mul(factor, a[c][j])))
            for col in b:
                col[r] = simplify(sub(col[r], mul(factor, col[c])))
    solutions = []
    for col in b:
        x: list[Expr | None] = [None] * n
        for r in range(n - 1, -1, -1):
            acc = col[r]
            for j in range(r + 1, n):
                acc = sub(acc, mul(a[r][j], x[j]))
            x[r] = simplify(div(acc, a[r][r]))
        solutions.append(x)
    return solutions
