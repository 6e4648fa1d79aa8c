"""The web data model: slope tables, construction from first integrals,
integrability and general-position checks, and point sampling.

A d-web on an n-dimensional coordinate domain is stored as the d x (n-1)
table of slope expressions: foliation i is annihilated by the 1-form
``dx_n - sum_a slope[i][a] dx_a``, so its normal covector is
``(slope[i][1], ..., slope[i][n-1], -1)``.  The -1 normalization is
hard-wired; webs with a leaf containing the x_n direction must first be
pushed through a linear coordinate change (`build_web` automates this with a
seeded deterministic search).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .errors import DegenerateIntegral, PoleAtPoint, ResampleExhausted
from .expr import (
    QC,
    Expr,
    Point,
    const,
    differentiate,
    div,
    evaluate,
    add,
    is_zero_constant,
    mul,
    neg,
    simplify,
    substitute,
    uses_exp,
    var,
)
from . import linalg

MINUS_ONE = const(QC(-1))


@dataclass(frozen=True)
class Web:
    """n, d, and the slope table; immutable after construction."""

    n: int
    slopes: tuple  # d rows, each a tuple of n-1 expressions

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need n >= 2, got {self.n}")
        if self.d <= self.n:
            raise ValueError(f"need d > n, got d={self.d}, n={self.n}")
        for row in self.slopes:
            if len(row) != self.n - 1:
                raise ValueError("each slope row must have n-1 entries")

    @property
    def d(self) -> int:
        return len(self.slopes)

    def slope(self, i: int, lam: int) -> Expr:
        """Normal-covector component for leaf i (1-based) and coordinate lam;
        lam = n returns the constant -1."""
        if lam == self.n:
            return MINUS_ONE
        return self.slopes[i - 1][lam - 1]

    @property
    def has_exp(self) -> bool:
        return any(uses_exp(e) for row in self.slopes for e in row)

    def normal_values(self, p: Point, cache: dict | None = None) -> list[list]:
        """The d normal covectors evaluated at p (last component -1)."""
        if cache is None:
            cache = {}
        rows = []
        minus_one = QC(-1) if p.exact else complex(-1)
        for row in self.slopes:
            vals = [evaluate(e, p, cache=cache) for e in row]
            if not p.exact:
                vals = [complex(v) for v in vals]
            rows.append(vals + [minus_one])
        return rows


@dataclass(frozen=True)
class FirstIntegralWeb:
    """A web presented by d first integrals u_i (level-set foliations)."""

    n: int
    integrals: tuple

    @property
    def d(self) -> int:
        return len(self.integrals)


def from_first_integrals(fw: FirstIntegralWeb, seed: int = 11, checks: int = 8) -> Web:
    """Normalize du_i into slope form: slope a = -(u_i)'_a / (u_i)'_n.

    Raises DegenerateIntegral when some (u_i)'_n is identically zero under
    randomized testing (the leaf contains the x_n direction; apply a
    coordinate change first, e.g. via `build_web`).
    """
    memo: dict = {}
    rows = []
    for i, u in enumerate(fw.integrals, start=1):
        dn = differentiate(u, fw.n, memo)
        if _vanishes_at_samples(dn, fw.n, seed + i, checks):
            raise DegenerateIntegral(
                f"integral #{i} has (u)'_{fw.n} == 0 at all sample points; "
                "a linear coordinate change is required"
            )
        row = tuple(
            simplify(neg(div(differentiate(u, lam, memo), dn))) for lam in range(1, fw.n)
        )
        rows.append(row)
    return Web(n=fw.n, slopes=tuple(rows))


def _vanishes_at_samples(e: Expr, n: int, seed: int, checks: int) -> bool:
    rng = random.Random(seed)
    hits = 0
    for _ in range(checks * 10):
        if hits >= checks:
            break
        p = _random_point(rng, n)
        try:
            v = evaluate(e, p)
        except PoleAtPoint:
            continue
        hits += 1
        if isinstance(v, QC):
            if not v.is_zero:
                return False
        elif v != 0:
            return False
    return True


def random_coordinate_change(n: int, seed: int = 0):
    """Deterministic invertible rational matrix with small entries."""
    rng = random.Random(seed)
    for _ in range(1000):
        matrix = [
            [Fraction(rng.randint(-5, 5), rng.randint(1, 3)) for _ in range(n)]
            for _ in range(n)
        ]
        det = linalg.exact_det(matrix)
        if not det.is_zero:
            return matrix
    raise RuntimeError("could not draw an invertible matrix")  # pragma: no cover


def apply_coordinate_change(fw: FirstIntegralWeb, matrix) -> FirstIntegralWeb:
    """Precompose every integral with the linear map x -> T * x_new."""
    n = fw.n
    var_map = {
        lam: add(*[mul(const(QC(matrix[lam - 1][mu])), var(mu + 1)) for mu in range(n)])
        for lam in range(1, n + 1)
    }
    return FirstIntegralWeb(
        n=n, integrals=tuple(simplify(substitute(u, var_map=var_map)) for u in fw.integrals)
    )


def build_web(fw: FirstIntegralWeb, auto_change: bool = False, seed: int = 0):
    """(web, change) from first integrals; `change` is the coordinate matrix
    used (None when the integrals normalize directly)."""
    try:
        return from_first_integrals(fw), None
    except DegenerateIntegral:
        if not auto_change:
            raise
    for attempt in range(64):
        matrix = random_coordinate_change(fw.n, seed + attempt)
        try:
            return from_first_integrals(apply_coordinate_change(fw, matrix)), matrix
        except DegenerateIntegral:
            continue
    raise DegenerateIntegral("no coordinate change in the search budget worked")


def integrability_residual(w: Web, i: int, lam: int, mu: int, p: Point) -> object:
    """Value at p of the local integrability bracket for leaf i and the
    coordinate pair (lam, mu); zero for every integrable web."""
    memo: dict = {}
    p_lam = w.slope(i, lam)
    p_mu = w.slope(i, mu)
    e = add(
        differentiate(p_lam, mu, memo),
        neg(differentiate(p_mu, lam, memo)),
        mul(p_mu, differentiate(p_lam, w.n, memo)),
        neg(mul(p_lam, differentiate(p_mu, w.n, memo))),
    )
    return evaluate(e, p)


def is_integrable(w: Web, trials: int = 10, seed: int = 23, tol: float = 1e-9) -> bool:
    """Certify integrability at `trials` sample points (exactly on exact
    points, within tol otherwise).  Tries a symbolic shortcut first."""
    memo: dict = {}
    exprs = []
    symbolic_zero = True
    for i in range(1, w.d + 1):
        for lam in range(1, w.n + 1):
            for mu in range(lam + 1, w.n + 1):
                p_lam, p_mu = w.slope(i, lam), w.slope(i, mu)
                e = simplify(
                    add(
                        differentiate(p_lam, mu, memo),
                        neg(differentiate(p_mu, lam, memo)),
                        mul(p_mu, differentiate(p_lam, w.n, memo)),
                        neg(mul(p_lam, differentiate(p_mu, w.n, memo))),
                    )
                )
                exprs.append(e)
                if not is_zero_constant(e):
                    symbolic_zero = False
    if symbolic_zero:
        return True
    points = sample_points(w.n, trials, seed, avoid_poles_of=_all_slopes(w))
    for p in points:
        cache: dict = {}
        for e in exprs:
            try:
                v = evaluate(e, p, cache=cache)
            except PoleAtPoint:
                return False
            if isinstance(v, QC):
                if not v.is_zero:
                    return False
            elif abs(v) > tol:
                return False
    return True


@dataclass(frozen=True)
class PositionReport:
    weak: bool
    strong: bool
    distinguishable: bool


def position_check(w: Web, p: Point) -> PositionReport:
    """General-position flags at p.

    weak: some n covectors independent; strong: every n-subset independent;
    distinguishable: pairwise distinct slope vectors.
    """
    from itertools import combinations

    rows = w.normal_values(p)
    exact = p.exact and all(isinstance(v, QC) for row in rows for v in row)
    if exact:
        weak = linalg.exact_rank(rows) == w.n
    else:
        rank, _ = linalg.numeric_rank(rows)
        weak = rank == w.n
    strong = True
    for subset in combinations(range(w.d), w.n):
        sub = [rows[i] for i in subset]
        if exact:
            if linalg.exact_det(sub).is_zero:
                strong = False
                break
        else:
            rank, _ = linalg.numeric_rank(sub)
            if rank < w.n:
                strong = False
                break
    distinguishable = True
    seen = []
    for row in rows:
        for other in seen:
            if all(_close(a, b) for a, b in zip(row, other)):
                distinguishable = False
        seen.append(row)
    return PositionReport(weak=weak, strong=strong, distinguishable=distinguishable)


def _close(a, b, tol: float = 1e-12) -> bool:
    if isinstance(a, QC) and isinstance(b, QC):
        return a == b
    return abs(complex(a) - complex(b)) <= tol


def _all_slopes(w: Web) -> list:
    return [e for row in w.slopes for e in row]


def sample_points(
    n: int,
    count: int,
    seed: int,
    avoid_poles_of=(),
    bound: int = 97,
    exact: bool = True,
) -> list[Point]:
    """Deterministic rational sample points, rejecting poles of the given
    expressions.  Fails after a 10x resampling budget."""
    rng = random.Random(seed)
    out: list[Point] = []
    attempts = 0
    budget = max(10 * count, 10)
    while len(out) < count:
        if attempts >= budget:
            raise ResampleExhausted(
                f"drew {attempts} candidate points but only {len(out)} avoided poles"
            )
        attempts += 1
        p = _random_point(rng, n, bound)
        try:
            cache: dict = {}
            for e in avoid_poles_of:
                evaluate(e, p, cache=cache)
        except PoleAtPoint:
            continue
        out.append(p if exact else p.as_float())
    return out


def _random_point(rng: random.Random, n: int, bound: int = 97) -> Point:
    coords = []
    for _ in range(n):
        num = rng.randint(-bound, bound)
        den = rng.randint(1, bound)
        coords.append(QC(Fraction(num, den)))
    return Point(tuple(coords), exact=True)
