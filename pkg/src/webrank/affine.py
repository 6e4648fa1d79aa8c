"""Webs of parallel hyperplane pencils: exact Veronese ranks, the rank
formula, the hypersurface criterion, and an independent abelian-relation
solver used as the cross-check oracle.

An affine web is d rational linear forms; foliation i is the family of level
hyperplanes of form i.  Because the slopes are constant, an abelian relation
is a d-tuple of univariate polynomials g_i with
``sum_i g_i(l_i(x)) * grad(l_i) == 0`` identically in x: closedness is
automatic, so rank computation is pure exact linear algebra.  The solver
builds that identity coefficient by coefficient and returns the raw kernel
basis; it deliberately shares nothing with `veronese_rank`, so agreement of
the two is a meaningful test.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .combinatorics import (
    enumerate_partitions,
    height_cap,
    monomial_count,
    multinomial,
)
from .errors import NotStrongGeneralPosition
from .expr import QC
from . import linalg


@dataclass(frozen=True)
class AffineWeb:
    """d rational linear forms in n variables; no zero or repeated form."""

    n: int
    forms: tuple  # d tuples of n Fractions

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need n >= 2, got {self.n}")
        if self.d <= self.n:
            raise ValueError(f"need d > n, got d={self.d}")
        for coeffs in self.forms:
            if len(coeffs) != self.n:
                raise ValueError("each form needs n coefficients")
            if all(c == 0 for c in coeffs):
                raise ValueError("zero form is not allowed")
        for a, b in combinations(self.forms, 2):
            if _proportional(a, b):
                raise ValueError(f"forms {a} and {b} are proportional")

    @property
    def d(self) -> int:
        return len(self.forms)


def affine_web(forms) -> AffineWeb:
    """Build an AffineWeb from any nested iterable of rationals."""
    rows = tuple(tuple(Fraction(c) for c in row) for row in forms)
    if not rows:
        raise ValueError("no forms given")
    return AffineWeb(n=len(rows[0]), forms=rows)


def _proportional(a, b) -> bool:
    pivot = next((s for s, c in enumerate(a) if c != 0), None)
    if pivot is None or b[pivot] == 0:
        return False
    ratio = Fraction(b[pivot], a[pivot])
    return all(bc == ratio * ac for ac, bc in zip(a, b))


def monomial_power(coeffs, L) -> Fraction:
    out = Fraction(1)
    for c, e in zip(coeffs, L):
        out *= Fraction(c) ** e
    return out


def veronese_matrix(aw: AffineWeb, h: int):
    """d x c(n, h) matrix of monomial coefficients of the h-th powers l_i^h."""
    parts = enumerate_partitions(aw.n, h)
    return [
        [multinomial(L) * monomial_power(coeffs, L) for L in parts]
        for coeffs in aw.forms
    ]


def veronese_rank(aw: AffineWeb, h: int) -> int:
    """Exact rank of the degree-h coefficient matrix of the forms."""
    if h < 1:
        raise ValueError(f"need h >= 1, got {h}")
    return linalg.exact_rank(veronese_matrix(aw, h))


def is_strong_general_position(aw: AffineWeb) -> bool:
    for subset in combinations(range(aw.d), aw.n):
        sub = [aw.forms[i] for i in subset]
        if linalg.exact_det(sub).is_zero:
            return False
    return True


def affine_rank(aw: AffineWeb) -> int:
    """Exact rank of the affine web: sum over h <= k0 of (d - veronese rank).

    Requires strong general position; raises NotStrongGeneralPosition
    otherwise (the formula is not established beyond that case).
    """
    if not is_strong_general_position(aw):
        raise NotStrongGeneralPosition(
            "some n of the forms are linearly dependent; the rank formula does not apply"
        )
    k0 = height_cap(aw.n, aw.d)
    return sum(aw.d - veronese_rank(aw, h) for h in range(1, k0 + 1))


def is_ordinary_affine(aw: AffineWeb) -> bool:
    """True when no degree h <= k0 sees a Veronese rank drop, i.e. when for
    each h some c(n, h) of the dual points avoid a common degree-h
    hypersurface."""
    k0 = height_cap(aw.n, aw.d)
    for h in range(2, k0 + 1):
        if veronese_rank(aw, h) < min(aw.d, monomial_count(aw.n, h)):
            return False
    return True


@dataclass(frozen=True)
class AbelianRelationBasis:
    """Exact kernel basis of the polynomial abelian-relation system.

    Each basis element is a d-tuple of univariate polynomials, stored as
    coefficient tuples (degree 0 .. degree_cap) of exact rationals.
    """

    degree_cap: int
    basis: tuple
    dimension: int

    def polynomials(self, index: int):
        return self.basis[index]


def solve_abelian_relations(aw: AffineWeb, degree_cap: int | None = None) -> AbelianRelationBasis:
    """Kernel of the identity ``sum_i g_i(l_i(x)) * a_i,lam == 0``.

    One equation per coordinate lam and per monomial of degree <= degree_cap
    in x; unknowns are the coefficients of the g_i.  The default cap is
    k0 - 1, which the rank bound makes lossless; raising it is a useful
    stability check.
    """
    n, d = aw.n, aw.d
    if degree_cap is None:
        degree_cap = max(height_cap(n, d) - 1, 0)
    if degree_cap < 0:
        raise ValueError("degree cap must be >= 0")
    n_unknowns = d * (degree_cap + 1)

    def col(i: int, j: int) -> int:
        return i * (degree_cap + 1) + j

    rows = []
    for lam in range(n):
        for m in range(degree_cap + 1):
            for M in enumerate_partitions(n, m):
                row = [Fraction(0)] * n_unknowns
                mb = multinomial(M)
                for i, coeffs in enumerate(aw.forms):
                    row[col(i, m)] = mb * monomial_power(coeffs, M) * coeffs[lam]
                rows.append(row)
    kernel = linalg.exact_nullspace(rows, n_unknowns)
    basis = []
    for vec in kernel:
        polys = tuple(
            tuple(_as_fraction(vec[col(i, j)]) for j in range(degree_cap + 1))
            for i in range(d)
        )
        basis.append(polys)
    return AbelianRelationBasis(
        degree_cap=degree_cap, basis=tuple(basis), dimension=len(basis)
    )


def _as_fraction(v) -> Fraction:
    if isinstance(v, QC):
        if v.im:
            raise ValueError("unexpected imaginary part in a rational kernel")
        return v.re
    return Fraction(v)


def relation_residual(aw: AffineWeb, polys, degree_cap: int):
    """Max absolute coefficient of the defining identity for a candidate
    relation; exactly zero for genuine abelian relations (test helper)."""
    n = aw.n
    worst = Fraction(0)
    for lam in range(n):
        for m in range(degree_cap + 1):
            for M in enumerate_partitions(n, m):
                acc = Fraction(0)
                mb = multinomial(M)
                for coeffs, g in zip(aw.forms, polys):
                    if m < len(g):
                        acc += g[m] * mb * monomial_power(coeffs, M) * coeffs[lam]
                worst = max(worst, abs(acc))
    return worst
