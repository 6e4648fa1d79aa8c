"""Moment matrices, their ranks, and pointwise detection of the singular
locus S.

The degree-h moment matrix of a web at a point has one row per foliation:
the row is the h-th Veronese power of the normalized normal covector, with
columns indexed by `enumerate_partitions(n, h)`.  A point lies in S when
some of these ranks drop below min(d, c(n, h)) for 2 <= h <= k0 (when
d >= c(n, 2)), or when the order-one jet system already has a nonzero
solution (when n < d < c(n, 2)).  Everything here is pointwise; S is never
built as a variety.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .combinatorics import enumerate_partitions, height_cap, monomial_count
from .errors import ResampleExhausted
from .expr import QC, Point
from .web import Web, sample_points, _all_slopes
from . import linalg


@dataclass(frozen=True)
class MomentMatrix:
    """Evaluated degree-h moment matrix with its column index."""

    h: int
    partitions: tuple
    entries: tuple  # d rows of length c(n, h)
    point: Point

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.entries), len(self.partitions)


def moment_matrix(w: Web, h: int, p: Point, cache: dict | None = None) -> MomentMatrix:
    """Rows are the degree-h monomials of each normal covector at p."""
    if h < 1:
        raise ValueError(f"need h >= 1, got {h}")
    normals = w.normal_values(p, cache=cache)
    parts = enumerate_partitions(w.n, h)
    rows = []
    for covector in normals:
        row = []
        for L in parts:
            val = QC(1) if isinstance(covector[0], QC) else complex(1)
            for comp, e in zip(covector, L):
                if e:
                    val = val * comp**e
            row.append(val)
        rows.append(tuple(row))
    return MomentMatrix(h=h, partitions=tuple(parts), entries=tuple(rows), point=p)


def rank_of(matrix, mode: str = "exact", tol: float = 1e-9) -> int:
    """Rank of a MomentMatrix or plain row list; exact row reduction or
    SVD counting with relative tolerance tol."""
    rows = matrix.entries if isinstance(matrix, MomentMatrix) else matrix
    if mode == "exact":
        return linalg.exact_rank(rows)
    rank, _ = linalg.numeric_rank(rows, tol)
    return rank


@dataclass(frozen=True)
class OrdinarinessVerdict:
    point: Point
    regime: str  # "small-d" or "large-d"
    ranks: dict = field(default_factory=dict)  # h -> r_h (large-d regime)
    expected: dict = field(default_factory=dict)  # h -> min(d, c(n, h))
    in_S: bool = False
    fiber_dim: int | None = None  # order-one solution space (small-d regime)
    inconclusive: bool = False


def ordinariness(w: Web, p: Point, mode: str | None = None, tol: float = 1e-9) -> OrdinarinessVerdict:
    """Decide whether p belongs to the singular locus S."""
    if mode is None:
        mode = "exact" if (p.exact and not w.has_exp) else "numeric"
    n, d = w.n, w.d
    c2 = monomial_count(n, 2)
    if d >= c2:
        k0 = height_cap(n, d)
        ranks, expected = {}, {}
        in_s = False
        inconclusive = False
        cache: dict = {}
        for h in range(2, k0 + 1):
            m = moment_matrix(w, h, p, cache=cache)
            if mode == "exact":
                r = linalg.exact_rank(m.entries)
            else:
                r, flag = linalg.numeric_rank(m.entries, tol)
                inconclusive = inconclusive or flag
            ranks[h] = r
            expected[h] = min(d, monomial_count(n, h))
            if r < expected[h]:
                in_s = True
        return OrdinarinessVerdict(
            point=p,
            regime="large-d",
            ranks=ranks,
            expected=expected,
            in_S=in_s,
            inconclusive=inconclusive,
        )
    # small-d regime: S is where the stacked order-one system in (f, w)
    # already has a nonzero solution.
    from .jets import order_one_system

    rows = order_one_system(w, p)
    dim = linalg.nullity(rows, 2 * d, mode=mode, tol=tol)
    return OrdinarinessVerdict(
        point=p,
        regime="small-d",
        in_S=dim >= 1,
        fiber_dim=dim,
    )


@dataclass(frozen=True)
class SampleVerdict:
    ordinary: bool
    witnesses: tuple  # points found outside S
    in_s_points: tuple
    trials: int
    seed: int


def sample_ordinariness(w: Web, trials: int = 10, seed: int = 7, tol: float = 1e-9) -> SampleVerdict:
    """Declare the web ordinary when some sampled point escapes S.

    Extraordinary verdicts are only up to sampling confidence.  Pole hits
    are resampled; the budget is 10x trials.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    try:
        points = sample_points(w.n, trials, seed, avoid_poles_of=_all_slopes(w))
    except ResampleExhausted:
        raise
    witnesses = []
    in_s = []
    for p in points:
        verdict = ordinariness(w, p, tol=tol)
        if verdict.in_S:
            in_s.append(p)
        else:
            witnesses.append(p)
    return SampleVerdict(
        ordinary=bool(witnesses),
        witnesses=tuple(witnesses),
        in_s_points=tuple(in_s),
        trials=trials,
        seed=seed,
    )
