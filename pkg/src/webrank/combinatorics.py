"""Partition enumeration, monomial dimension counts, and the two rank bounds.

Multi-indices are plain tuples of non-negative integers, one slot per
variable; the height of a multi-index is the sum of its entries.  The set of
all multi-indices of height ``h`` in ``n`` slots indexes the monomial basis
of homogeneous degree-``h`` polynomials, whose dimension is
``monomial_count(n, h)``.  All arithmetic is exact (Python integers never
wrap).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

MultiIndex = tuple[int, ...]


def monomial_count(n: int, h: int) -> int:
    """Dimension of the space of homogeneous degree-h polynomials in n variables."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if h < 0:
        raise ValueError(f"need h >= 0, got {h}")
    return math.comb(n - 1 + h, h)


def castelnuovo_bound(n: int, d: int) -> int:
    """Classical upper bound for the rank of a d-web in n variables.

    The sum of positive parts ``(d - h(n-1) - 1)^+`` over h >= 1; equals the
    maximal arithmetic genus of a degree-d curve in projective n-space.
    """
    _check_nd(n, d)
    total = 0
    h = 1
    while True:
        term = d - h * (n - 1) - 1
        if term <= 0:
            return total
        total += term
        h += 1


def height_cap(n: int, d: int) -> int:
    """The unique k0 with monomial_count(n, k0) <= d < monomial_count(n, k0 + 1)."""
    _check_nd(n, d)
    k = 1
    while monomial_count(n, k + 1) <= d:
        k += 1
    return k


def ordinary_rank_bound(n: int, d: int) -> int:
    """Sharper rank bound valid for ordinary webs.

    Zero when d < monomial_count(n, 2); otherwise the sum of positive parts
    ``(d - monomial_count(n, h))^+`` over h >= 1.
    """
    _check_nd(n, d)
    if d < monomial_count(n, 2):
        return 0
    return sum(d - monomial_count(n, h) for h in range(1, height_cap(n, d) + 1))


@dataclass(frozen=True)
class BoundsReport:
    """Both rank bounds for a given (n, d), with the supporting dimension table."""

    n: int
    d: int
    c_table: dict[int, int]
    k0: int
    castelnuovo: int
    ordinary: int


def bounds_report(n: int, d: int) -> BoundsReport:
    k0 = height_cap(n, d)
    table = {h: monomial_count(n, h) for h in range(1, k0 + 2)}
    return BoundsReport(
        n=n,
        d=d,
        c_table=table,
        k0=k0,
        castelnuovo=castelnuovo_bound(n, d),
        ordinary=ordinary_rank_bound(n, d),
    )


def enumerate_partitions(n: int, h: int) -> list[MultiIndex]:
    """All multi-indices of height h in n slots, lexicographically decreasing.

    The order is the canonical column order for moment matrices and jet
    systems; it is deterministic and the list has exactly
    ``monomial_count(n, h)`` entries.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if h < 0:
        raise ValueError(f"need h >= 0, got {h}")
    if n == 1:
        return [(h,)]
    out: list[MultiIndex] = []
    for first in range(h, -1, -1):
        for rest in enumerate_partitions(n - 1, h - first):
            out.append((first,) + rest)
    return out


def multinomial(index: MultiIndex) -> int:
    """|L|! / (l_1! ... l_n!) for a multi-index L."""
    total = math.factorial(sum(index))
    for e in index:
        total //= math.factorial(e)
    return total


def unit_index(n: int, lam: int) -> MultiIndex:
    """Multi-index with a single 1 in (1-based) slot lam."""
    if not 1 <= lam <= n:
        raise ValueError(f"slot {lam} out of range 1..{n}")
    return tuple(1 if s == lam - 1 else 0 for s in range(n))


def index_add(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(x + y for x, y in zip(a, b))


def index_sub(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    """Componentwise difference; raises if any slot would go negative."""
    out = tuple(x - y for x, y in zip(a, b))
    if any(e < 0 for e in out):
        raise ValueError(f"{a} - {b} has a negative slot")
    return out


def index_binomial(a: MultiIndex, b: MultiIndex) -> int:
    """Product of slotwise binomial coefficients C(a_s, b_s)."""
    out = 1
    for x, y in zip(a, b):
        out *= math.comb(x, y)
    return out


def indices_below(L: MultiIndex):
    """All multi-indices J with J <= L slotwise, in a fixed deterministic order."""
    ranges = [range(e + 1) for e in L]

    def rec(s: int, prefix: tuple[int, ...]):
        if s == len(L):
            yield prefix
            return
        for v in ranges[s]:
            yield from rec(s + 1, prefix + (v,))

    yield from rec(0, ())


def _check_nd(n: int, d: int) -> None:
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if d <= n:
        raise ValueError(f"need d > n, got d={d}, n={n}")
