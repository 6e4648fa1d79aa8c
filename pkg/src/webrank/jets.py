"""Derivative reduction, jet constraint assembly, and prolongation fibers.

Along an abelian relation, every mixed partial derivative of the density
functions f_i reduces to a combination of pure x_n-derivatives: one
coordinate slot at a time, the first-order identity
``(f_i)'_a = -(f_i * slope_ia)'_n`` is substituted and expanded by the
Leibniz rule.  `reduce` produces the coefficient expressions of that
combination; the top coefficient always equals (-1)^|L| times the
corresponding moment-matrix entry.

The constraints on a (k+1)-jet of an abelian relation are the derivatives of
the trace identities up to total order k+2.  After reduction each constraint
becomes a linear equation in the stacked coordinates
(f_i, (f_i)'_n, ..., (f_i)'_{n^{k+1}}); the block acting on the newest layer
is exactly the degree-(k+2) moment matrix.  Fibers of formal abelian
relations are computed as kernels of these stacked systems, never by quoting
the dimension formula (which the tests use as the independent oracle).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .combinatorics import (
    MultiIndex,
    enumerate_partitions,
    height_cap,
    index_binomial,
    index_sub,
    indices_below,
    monomial_count,
    unit_index,
)
from .errors import InconsistentLowerJet, PointInS
from .expr import (
    Expr,
    Point,
    QC,
    ZERO,
    add,
    const,
    differentiate,
    evaluate,
    is_zero_constant,
    mul,
    neg,
    power,
    simplify,
)
from .web import Web
from . import linalg

import weakref

_SYSTEMS: "weakref.WeakKeyDictionary[Web, JetSystem]" = weakref.WeakKeyDictionary()


def get_system(web: Web) -> "JetSystem":
    """Shared per-web symbolic workspace (reductions and rows are reused
    across points and prolongation orders)."""
    system = _SYSTEMS.get(web)
    if system is None:
        system = JetSystem(web)
        _SYSTEMS[web] = system
    return system


@dataclass(frozen=True)
class ReducedDerivative:
    """Coefficients writing (f_i)'_L as sum_k coeffs[k] * (f_i)'_{n^k}."""

    leaf: int
    index: MultiIndex
    coeffs: tuple  # length |L| + 1


class JetSystem:
    """Per-web symbolic workspace: reduction and row assembly with memoing.

    Not thread-safe during construction of new entries; all products are
    immutable expressions, so concurrent evaluation afterwards is fine.
    """

    def __init__(self, web: Web):
        self.web = web
        self._diff: dict = {}
        self._reduce: dict = {}
        self._slope_deriv: dict = {}
        self._rows: dict = {}

    # -- slope derivatives -------------------------------------------------

    def slope_derivative(self, i: int, lam: int, M: MultiIndex) -> Expr:
        if lam == self.web.n:
            return const(QC(-1)) if sum(M) == 0 else ZERO
        key = (i, lam, M)
        hit = self._slope_deriv.get(key)
        if hit is not None:
            return hit
        if sum(M) == 0:
            out = self.web.slope(i, lam)
        else:
            slot = next(s for s, e in enumerate(M) if e)
            lower = tuple(e - 1 if s == slot else e for s, e in enumerate(M))
            out = differentiate(self.slope_derivative(i, lam, lower), slot + 1, self._diff)
        self._slope_deriv[key] = out
        return out

    def _slope_nderiv(self, i: int, alpha: int, k: int) -> Expr:
        n = self.web.n
        M = tuple(k if s == n - 1 else 0 for s in range(n))
        return self.slope_derivative(i, alpha, M)

    # -- reduction ---------------------------------------------------------

    def _reduce_step(self, i: int, prev: tuple, alpha: int) -> tuple:
        """One strip of an alpha-derivative off an already-reduced derivative."""
        K = len(prev) - 1
        out = []
        for j in range(K + 2):
            pieces = []
            if j <= K and not is_zero_constant(prev[j]):
                d = differentiate(prev[j], alpha, self._diff)
                if not is_zero_constant(d):
                    pieces.append(d)
            for m in range(max(j - 1, 0), K + 1):
                if is_zero_constant(prev[m]):
                    continue
                sd = self._slope_nderiv(i, alpha, m + 1 - j)
                if is_zero_constant(sd):
                    continue
                pieces.append(neg(mul(const(QC(math.comb(m + 1, j))), prev[m], sd)))
            out.append(add(*pieces) if pieces else ZERO)
        return tuple(out)

    def reduce(self, i: int, L: MultiIndex) -> tuple:
        """Coefficients of (f_i)'_{n^0..n^|L|} representing (f_i)'_L."""
        key = (i, L)
        hit = self._reduce.get(key)
        if hit is not None:
            return hit
        n = self.web.n
        if any(e < 0 for e in L) or len(L) != n:
            raise ValueError(f"bad multi-index {L} for n={n}")
        if all(e == 0 for e in L[: n - 1]):
            out = (ZERO,) * L[n - 1] + (const(QC(1)),)
        else:
            alpha = next(s + 1 for s, e in enumerate(L[: n - 1]) if e)
            lower = tuple(e - 1 if s == alpha - 1 else e for s, e in enumerate(L))
            out = self._reduce_step(i, self.reduce(i, lower), alpha)
        self._reduce[key] = out
        return out

    def reduce_with_order(self, i: int, L: MultiIndex, strip_order) -> tuple:
        """Reduction stripping the non-n slots in an explicit order; used to
        check that the result does not depend on the order."""
        n = self.web.n
        remaining = list(L)
        coeffs = (ZERO,) * L[n - 1] + (const(QC(1)),)
        for alpha in strip_order:
            if not 1 <= alpha <= n - 1 or remaining[alpha - 1] <= 0:
                raise ValueError(f"invalid strip {alpha} for remaining {tuple(remaining)}")
            remaining[alpha - 1] -= 1
            coeffs = self._reduce_step(i, coeffs, alpha)
        if any(remaining[s] for s in range(n - 1)):
            raise ValueError("strip order does not exhaust the multi-index")
        return coeffs

    # -- constraint rows ----------------------------------------------------

    def moment_entry(self, i: int, H: MultiIndex) -> Expr:
        """Symbolic moment-matrix entry: the H-monomial of leaf i's covector."""
        factors = [
            power(self.web.slope(i, lam), e)
            for lam, e in zip(range(1, self.web.n + 1), H)
            if e
        ]
        return mul(*factors) if factors else const(QC(1))

    def canonical_split(self, H: MultiIndex) -> int:
        """Split off an x_n derivative when possible (its slope is constant,
        which keeps the Leibniz expansion short)."""
        n = self.web.n
        if H[n - 1] > 0:
            return n
        return next(s + 1 for s, e in enumerate(H) if e)

    def row(self, H: MultiIndex, split: int | None = None) -> dict:
        """The reduced constraint row for total derivative multi-index H.

        Returns {(leaf i, pure-derivative order m): coefficient expression};
        the equation is `sum of coeff * (f_i)'_{n^m} = 0`.  Orders m run up
        to |H| - 1.  The result is independent of the split for integrable
        webs (checked by the property tests, not assumed here).
        """
        lam = self.canonical_split(H) if split is None else split
        key = (H, lam)
        hit = self._rows.get(key)
        if hit is not None:
            return hit
        if H[lam - 1] < 1:
            raise ValueError(f"split {lam} not present in {H}")
        L = index_sub(H, unit_index(self.web.n, lam))
        pieces: dict = {}
        for i in range(1, self.web.d + 1):
            for J in indices_below(L):
                sd = self.slope_derivative(i, lam, index_sub(L, J))
                if is_zero_constant(sd):
                    continue
                mb = index_binomial(L, J)
                red = self.reduce(i, J)
                for m, coeff in enumerate(red):
                    if is_zero_constant(coeff):
                        continue
                    term = mul(const(QC(mb)), sd, coeff)
                    slot = (i, m)
                    if slot in pieces:
                        pieces[slot] = add(pieces[slot], term)
                    else:
                        pieces[slot] = term
        out = {}
        for slot, e in pieces.items():
            if not is_zero_constant(e):
                out[slot] = e
        self._rows[key] = out
        return out

    # -- evaluation ---------------------------------------------------------

    def evaluated_rows(self, p: Point, max_height: int, cache: dict | None = None):
        """[(H, {slot: value})] for all constraint rows of height <= max_height."""
        if cache is None:
            cache = {}
        out = []
        for h in range(1, max_height + 1):
            for H in enumerate_partitions(self.web.n, h):
                row = self.row(H)
                vals = {slot: evaluate(e, p, cache=cache) for slot, e in row.items()}
                out.append((H, vals))
        return out


def _stack(rows_vals, d: int, n_layers: int):
    """Dense matrix over the stacked coordinates (layer-major columns)."""
    out = []
    for _, vals in rows_vals:
        vec = [QC(0)] * (d * n_layers)
        numeric = any(not isinstance(v, QC) for v in vals.values())
        if numeric:
            vec = [0j] * (d * n_layers)
        for (i, m), v in vals.items():
            vec[m * d + (i - 1)] = v if not numeric else complex(v)
        out.append(vec)
    return out


def _matrix_mode(rows) -> str:
    for row in rows:
        for v in row:
            if not isinstance(v, QC):
                return "numeric"
    return "exact"


@dataclass(frozen=True)
class JetFiber:
    """Solution space of the stacked jet constraints at a point."""

    point: Point
    k: int  # fiber of formal relations at order k + 1
    dimension: int
    basis: tuple
    d: int
    layers: int  # k + 2 coordinate layers (f, f', ..., f^(k+1))


def order_one_system(w: Web, p: Point):
    """Rows of the stacked order-one system over (f, f') used to define the
    singular locus in the small-d regime."""
    system = get_system(w)
    rows_vals = system.evaluated_rows(p, 2)
    return _stack(rows_vals, w.d, 2)


def jet_fiber(
    w: Web,
    p: Point,
    k: int,
    tol: float = 1e-9,
    check_singular: bool = True,
    system: JetSystem | None = None,
) -> JetFiber:
    """Kernel of the full constraint stack through total order k + 2."""
    if check_singular:
        _require_off_s(w, p, tol)
    if system is None:
        system = get_system(w)
    layers = k + 2
    rows_vals = system.evaluated_rows(p, k + 2)
    rows = _stack(rows_vals, w.d, layers)
    mode = _matrix_mode(rows)
    n_cols = w.d * layers
    if mode == "exact":
        basis = linalg.exact_nullspace(rows, n_cols)
    else:
        basis = linalg.numeric_nullspace(rows, n_cols, tol)
    return JetFiber(
        point=p, k=k, dimension=len(basis), basis=tuple(tuple(v) for v in basis),
        d=w.d, layers=layers,
    )


def fiber_dimensions(
    w: Web, p: Point, k_max: int, tol: float = 1e-9, check_singular: bool = True
) -> list[int]:
    """Dimensions of the fibers of formal relations for k = -1 .. k_max."""
    if check_singular:
        _require_off_s(w, p, tol)
    system = get_system(w)
    cache: dict = {}
    all_rows = system.evaluated_rows(p, k_max + 2, cache=cache)
    dims = []
    for k in range(-1, k_max + 1):
        layers = k + 2
        rows_vals = [(H, vals) for H, vals in all_rows if sum(H) <= k + 2]
        rows = _stack(rows_vals, w.d, layers)
        dims.append(linalg.nullity(rows, w.d * layers, mode=_matrix_mode(rows), tol=tol))
    return dims


def build_sigma(w: Web, p: Point, k: int, lower, tol: float = 1e-9, system: JetSystem | None = None):
    """The linear system determining the next pure-derivative layer.

    `lower` is the flat coordinate vector of an order-(k) jet at p: layers
    (f_i, ..., (f_i)'_{n^k}), layer-major, length d*(k+1).  Returns
    (matrix, rhs): the degree-(k+2) moment rows and the right-hand side
    obtained by evaluating all reduced lower-order terms on `lower`.
    Raises InconsistentLowerJet when `lower` violates a constraint of total
    order <= k + 1.
    """
    if k < 0:
        raise ValueError("need k >= 0")
    d = w.d
    if len(lower) != d * (k + 1):
        raise ValueError(f"lower jet must have length {d * (k + 1)}")
    if system is None:
        system = get_system(w)
    cache: dict = {}
    rows_vals = system.evaluated_rows(p, k + 2, cache=cache)
    for H, vals in rows_vals:
        if sum(H) > k + 1:
            continue
        acc = None
        scale = 0.0
        for (i, m), v in vals.items():
            term = _mul_sc(v, lower[m * d + (i - 1)])
            acc = term if acc is None else _add_sc(acc, term)
            scale = max(scale, abs(complex(term)))
        if acc is None:
            continue
        if isinstance(acc, QC):
            bad = not acc.is_zero
        else:
            bad = abs(acc) > tol * max(1.0, scale)
        if bad:
            raise InconsistentLowerJet(
                f"lower jet violates the constraint for multi-index {H}"
            )
    sign = QC(-1) ** (k + 1)
    matrix = []
    rhs = []
    for H in enumerate_partitions(w.n, k + 2):
        vals = next(v for HH, v in rows_vals if HH == H)
        row = []
        for i in range(1, d + 1):
            c = vals.get((i, k + 1), QC(0))
            row.append(_mul_sc(sign, c))
        acc = QC(0)
        for (i, m), v in vals.items():
            if m <= k:
                acc = _add_sc(acc, _mul_sc(v, lower[m * d + (i - 1)]))
        rhs.append(_mul_sc(QC(-1) * sign, acc))
        matrix.append(row)
    return matrix, rhs


def _mul_sc(a, b):
    if isinstance(a, QC) and isinstance(b, QC):
        return a * b
    return complex(a) * complex(b)


def _add_sc(a, b):
    if isinstance(a, QC) and isinstance(b, QC):
        return a + b
    return complex(a) + complex(b)


@dataclass(frozen=True)
class RankEstimate:
    point: Point
    estimate: int
    dims: tuple  # fiber dimensions for k = -1 .. k_top
    k_top: int
    stable: bool
    first_drop: int | None


def formal_rank_estimate(w: Web, p: Point, tol: float = 1e-9) -> RankEstimate:
    """dim of the fiber at the critical order, plus a stabilization report
    for a few extra prolongation steps (strict drops are evidence that the
    web's rank is below the ordinary bound)."""
    _require_off_s(w, p, tol)
    n, d = w.n, w.d
    k0 = height_cap(n, d)
    if d < monomial_count(n, 2):
        dims = fiber_dimensions(w, p, 0, tol=tol, check_singular=False)
        return RankEstimate(
            point=p, estimate=0, dims=tuple(dims), k_top=0, stable=True, first_drop=None
        )
    k_top = k0 + 2
    dims = fiber_dimensions(w, p, k_top, tol=tol, check_singular=False)
    estimate = dims[(k0 - 2) + 1]
    tail = dims[(k0 - 2) + 1 :]
    stable = all(v == estimate for v in tail)
    first_drop = None
    for offset, v in enumerate(tail):
        if v < estimate:
            first_drop = (k0 - 2) + offset
            break
    return RankEstimate(
        point=p,
        estimate=estimate,
        dims=tuple(dims),
        k_top=k_top,
        stable=stable,
        first_drop=first_drop,
    )


def reduce(w: Web, i: int, L: MultiIndex) -> ReducedDerivative:
    """Public wrapper returning the reduction of (f_i)'_L for web w."""
    system = get_system(w)
    return ReducedDerivative(leaf=i, index=tuple(L), coeffs=system.reduce(i, tuple(L)))


def _require_off_s(w: Web, p: Point, tol: float) -> None:
    from .moments import ordinariness

    verdict = ordinariness(w, p, tol=tol)
    if verdict.in_S:
        raise PointInS(f"point {p.coords} lies in the singular locus")
