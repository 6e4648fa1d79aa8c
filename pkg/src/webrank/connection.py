"""The adapted connection and its curvature for webs with d = c(n, k0).

In the square case the degree-k0 moment matrix is invertible off the
singular locus, so every jet of order k0 - 2 lifts uniquely one more order.
The connection measures how an actual section of the order-(k0 - 2) fiber
bundle deviates from its unique lift: parallel sections are exactly the jets
of abelian relations, and the curvature obstructs the rank from reaching the
ordinary bound.

The frame convention eliminates, for each coordinate layer m, the first
c(n, m + 1) leaves' coordinates via the order-(m + 1) constraint block
(validated invertible at a basepoint); the remaining unit coordinates extend
to frame sections by the triangular symbolic solve.  For k0 = 2 this is the
classical picture: eliminate f_1..f_n by the trace equations and frame by
the remaining leaves.
"""

from __future__ import annotations

from dataclasses import dataclass

from .combinatorics import enumerate_partitions, height_cap, monomial_count
from .errors import NotSquareCase, PoleAtPoint, SingularAtPoint
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
    simplify,
)
from .jets import JetSystem, get_system
from .moments import moment_matrix, ordinariness
from .web import Web, sample_points, _all_slopes
from . import linalg


@dataclass(frozen=True)
class FrameInfo:
    """Free jet coordinates (leaf, layer) and the per-layer eliminated leaves."""

    free: tuple  # ordered tuple of (leaf, layer) pairs; the frame order
    dependents: dict  # layer -> tuple of eliminated leaves

    def describe(self) -> str:
        parts = [f"f{i}^({m})" for i, m in self.free]
        return ", ".join(parts)


@dataclass(frozen=True)
class ConnectionMatrix:
    """Square matrix of 1-forms in the chosen frame; entry (s, r) is the
    coefficient tuple over dx_1..dx_n of the covariant derivative of frame
    section r along section s."""

    web: Web
    k0: int
    basepoint: Point
    frame: FrameInfo
    entries: tuple  # r x r of n-tuples of expressions
    sections: tuple  # per frame section: dict (leaf, layer) -> expression

    @property
    def size(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class CurvatureMatrix:
    """Square matrix of 2-forms; coefficients indexed by `pairs` (lam < mu)."""

    web: Web
    pairs: tuple
    entries: tuple  # r x r of tuples of expressions, one per pair

    @property
    def size(self) -> int:
        return len(self.entries)

    def is_symbolically_zero(self) -> bool:
        return all(
            is_zero_constant(coeff)
            for row in self.entries
            for entry in row
            for coeff in entry
        )


def _choose_dependents(moment_rows, d: int, count: int, preferred=None) -> tuple:
    """Leaves whose degree-h moment columns form an invertible minor.

    `moment_rows` is the h-block of constraints as a c x d matrix (one row
    per partition).  Greedy Gaussian elimination over leaf columns; the
    preferred leaves are tried first and validated.
    """
    c = len(moment_rows)
    if preferred is not None:
        if len(preferred) != count:
            raise ValueError(f"need {count} dependent leaves, got {len(preferred)}")
        sub = [[row[i - 1] for i in preferred] for row in moment_rows]
        if _minor_is_singular(sub):
            raise SingularAtPoint(
                f"requested dependent leaves {preferred} give a singular minor"
            )
        return tuple(preferred)
    order = list(range(1, d + 1))
    chosen: list[int] = []
    work = [list(row) for row in moment_rows]
    used_rows: set = set()
    for leaf in order:
        if len(chosen) == count:
            break
        col = leaf - 1
        pivot_row = None
        for r in range(c):
            if r in used_rows:
                continue
            v = work[r][col]
            if (isinstance(v, QC) and not v.is_zero) or (
                not isinstance(v, QC) and abs(v) > 1e-12
            ):
                pivot_row = r
                break
        if pivot_row is None:
            continue
        pivot = work[pivot_row][col]
        for r in range(c):
            if r == pivot_row or r in used_rows:
                continue
            v = work[r][col]
            if isinstance(v, QC) and v.is_zero:
                continue
            factor = _div_sc(v, pivot)
            work[r] = [_sub_sc(a, _mul_sc(factor, b)) for a, b in zip(work[r], work[pivot_row])]
        used_rows.add(pivot_row)
        chosen.append(leaf)
    if len(chosen) < count:
        raise SingularAtPoint("no invertible dependent minor at the basepoint")
    return tuple(chosen)


def _minor_is_singular(sub) -> bool:
    if all(isinstance(v, QC) for row in sub for v in row):
        return linalg.exact_det(sub).is_zero
    rank, _ = linalg.numeric_rank(sub)
    return rank < len(sub)


def _mul_sc(a, b):
    if isinstance(a, QC) and isinstance(b, QC):
        return a * b
    return complex(a) * complex(b)


def _sub_sc(a, b):
    if isinstance(a, QC) and isinstance(b, QC):
        return a - b
    return complex(a) - complex(b)


def _div_sc(a, b):
    if isinstance(a, QC) and isinstance(b, QC):
        return a / b
    return complex(a) / complex(b)


def connection_matrix(
    w: Web,
    frame=None,
    basepoint: Point | None = None,
    seed: int = 5,
) -> ConnectionMatrix:
    """Construct the adapted connection in a frame of jet-coordinate sections.

    `frame` may be None (auto), a sequence of free leaves (k0 = 2 only), or a
    {layer: dependent-leaf tuple} dict.  The basepoint fixes pivot choices;
    it must avoid the singular locus.
    """
    n, d = w.n, w.d
    k0 = height_cap(n, d)
    if d != monomial_count(n, k0):
        raise NotSquareCase(
            f"adapted connection needs d = c(n, k0); got d={d}, c({n},{k0})={monomial_count(n, k0)}"
        )
    if basepoint is None:
        basepoint = _find_basepoint(w, seed)
    verdict = ordinariness(w, basepoint)
    if verdict.in_S:
        raise SingularAtPoint("basepoint lies in the singular locus")

    system = get_system(w)
    layers = k0 - 1  # coordinate layers 0 .. k0-2
    cache: dict = {}

    def norm_frame():
        if frame is None:
            return {m: None for m in range(layers)}
        if isinstance(frame, dict):
            return {m: frame.get(m) for m in range(layers)}
        if k0 != 2:
            raise ValueError("a flat list frame is only meaningful for k0 = 2")
        free_set = set(frame)
        if len(free_set) != d - n:
            raise ValueError(f"need {d - n} free leaves for the k0=2 frame")
        return {0: tuple(i for i in range(1, d + 1) if i not in free_set)}

    preferred = norm_frame()
    dependents: dict = {}
    for m in range(layers):
        h = m + 1
        block = [
            [_row_top_coefficient(system, H, i, m, cache, basepoint) for i in range(1, d + 1)]
            for H in enumerate_partitions(n, h)
        ]
        dependents[m] = _choose_dependents(block, d, monomial_count(n, h), preferred[m])

    free_slots = [
        (i, m)
        for m in range(layers)
        for i in range(1, d + 1)
        if i not in dependents[m]
    ]
    r_size = len(free_slots)

    # triangular symbolic solve: dependent coordinates of the frame sections
    sections = [{slot: (const(QC(1)) if slot == fs else ZERO) for slot in free_slots} for fs in free_slots]
    for m in range(layers):
        h = m + 1
        parts = enumerate_partitions(n, h)
        dep = dependents[m]
        a_rows = [[None] * len(dep) for _ in parts]
        b_cols = [[None] * len(parts) for _ in range(r_size)]
        for rr, H in enumerate(parts):
            row = system.row(H)
            for cc, leaf in enumerate(dep):
                a_rows[rr][cc] = row.get((leaf, m), ZERO)
            for sec_idx in range(r_size):
                acc = []
                for (i, mm), coeff in row.items():
                    if mm > m or (mm == m and i in dep):
                        continue
                    known = sections[sec_idx].get((i, mm), ZERO)
                    if is_zero_constant(known) or is_zero_constant(coeff):
                        continue
                    acc.append(mul(coeff, known))
                b_cols[sec_idx][rr] = neg(add(*acc)) if acc else ZERO
        solved = linalg.solve_symbolic(a_rows, b_cols, basepoint)
        for sec_idx in range(r_size):
            for cc, leaf in enumerate(dep):
                sections[sec_idx][(leaf, m)] = solved[sec_idx][cc]

    # lift: the unique next layer (order k0 - 1) for each frame section
    parts = enumerate_partitions(n, k0)
    a_rows = [[None] * d for _ in parts]
    b_cols = [[None] * len(parts) for _ in range(r_size)]
    for rr, H in enumerate(parts):
        row = system.row(H)
        for i in range(1, d + 1):
            a_rows[rr][i - 1] = row.get((i, k0 - 1), ZERO)
        for sec_idx in range(r_size):
            acc = []
            for (i, mm), coeff in row.items():
                if mm >= k0 - 1:
                    continue
                known = sections[sec_idx].get((i, mm), ZERO)
                if is_zero_constant(known) or is_zero_constant(coeff):
                    continue
                acc.append(mul(coeff, known))
            b_cols[sec_idx][rr] = neg(add(*acc)) if acc else ZERO
    lifts = linalg.solve_symbolic(a_rows, b_cols, basepoint)
    full = []
    for sec_idx in range(r_size):
        coords = dict(sections[sec_idx])
        for i in range(1, d + 1):
            coords[(i, k0 - 1)] = lifts[sec_idx][i - 1]
        full.append(coords)

    # covariant derivative: actual derivative of the section minus the
    # derivative the lift predicts, read off at the free slots.
    diff_memo = system._diff
    entries = []
    for s_idx, (leaf_s, m_s) in enumerate(free_slots):
        row_entries = []
        for r_idx in range(r_size):
            coeffs = []
            for lam in range(1, n + 1):
                L = tuple(
                    (m_s if slot == n - 1 else 0) + (1 if slot == lam - 1 else 0)
                    for slot in range(n)
                )
                red = system.reduce(leaf_s, L)
                predicted = []
                for j, c in enumerate(red):
                    if is_zero_constant(c):
                        continue
                    val = full[r_idx].get((leaf_s, j), ZERO)
                    if is_zero_constant(val):
                        continue
                    predicted.append(mul(c, val))
                # actual derivative of a free coordinate of the section is 0
                coeffs.append(simplify(neg(add(*predicted))) if predicted else ZERO)
            row_entries.append(tuple(coeffs))
        entries.append(tuple(row_entries))
    # entries[s][r] currently indexed (section slot s as row)  -- matches
    # nabla sigma_r = sum_s omega[s][r] sigma_s
    return ConnectionMatrix(
        web=w,
        k0=k0,
        basepoint=basepoint,
        frame=FrameInfo(free=tuple(free_slots), dependents=dependents),
        entries=tuple(entries),
        sections=tuple(full),
    )


def _row_top_coefficient(system: JetSystem, H, i, m, cache, p):
    e = system.row(H).get((i, m), ZERO)
    return evaluate(e, p, cache=cache)


def _find_basepoint(w: Web, seed: int) -> Point:
    for p in sample_points(w.n, 25, seed, avoid_poles_of=_all_slopes(w)):
        try:
            if not ordinariness(w, p).in_S:
                return p
        except PoleAtPoint:
            continue
    raise SingularAtPoint("no basepoint off the singular locus in the sample budget")


def curvature(cm: ConnectionMatrix) -> CurvatureMatrix:
    """Exact exterior derivative plus wedge square of the connection form."""
    n = cm.web.n
    r = cm.size
    pairs = [(lam, mu) for lam in range(1, n + 1) for mu in range(lam + 1, n + 1)]
    memo: dict = {}
    entries = []
    for s in range(r):
        row = []
        for t in range(r):
            coeffs = []
            for lam, mu in pairs:
                d_part = add(
                    differentiate(cm.entries[s][t][mu - 1], lam, memo),
                    neg(differentiate(cm.entries[s][t][lam - 1], mu, memo)),
                )
                wedge = []
                for q in range(r):
                    a = cm.entries[s][q]
                    b = cm.entries[q][t]
                    if not (is_zero_constant(a[lam - 1]) and is_zero_constant(a[mu - 1])):
                        wedge.append(
                            add(
                                mul(a[lam - 1], b[mu - 1]),
                                neg(mul(a[mu - 1], b[lam - 1])),
                            )
                        )
                coeffs.append(simplify(add(d_part, *wedge)))
            row.append(tuple(coeffs))
        entries.append(tuple(row))
    return CurvatureMatrix(web=cm.web, pairs=tuple(pairs), entries=tuple(entries))


@dataclass(frozen=True)
class FlatnessVerdict:
    flat: bool
    exact_zero: bool
    max_ratio: float
    tol: float
    points_used: tuple


def flatness_test(
    w: Web,
    points=None,
    tol: float = 1e-8,
    seed: int = 17,
    trials: int = 10,
    connection: ConnectionMatrix | None = None,
) -> FlatnessVerdict:
    """Flat iff every curvature coefficient is below tol at every sample
    point, after normalizing by the largest connection coefficient (floored
    at 1).  A symbolic all-zero curvature short-circuits the sampling."""
    if connection is None:
        basepoint = points[0] if points else None
        connection = connection_matrix(w, basepoint=basepoint, seed=seed)
    curv = curvature(connection)
    if curv.is_symbolically_zero():
        return FlatnessVerdict(True, True, 0.0, tol, ())
    if points is None:
        points = sample_points(w.n, trials, seed, avoid_poles_of=_all_slopes(w), exact=not w.has_exp)
    max_ratio = 0.0
    used = []
    for p in points:
        cache: dict = {}
        try:
            omega_scale = 1.0
            for row in connection.entries:
                for entry in row:
                    for coeff in entry:
                        omega_scale = max(omega_scale, abs(complex(evaluate(coeff, p, cache=cache))))
            worst = 0.0
            for row in curv.entries:
                for entry in row:
                    for coeff in entry:
                        worst = max(worst, abs(complex(evaluate(coeff, p, cache=cache))))
        except PoleAtPoint:
            continue
        used.append(p)
        max_ratio = max(max_ratio, worst / omega_scale)
    if not used:
        raise SingularAtPoint("all sample points hit poles of the connection")
    return FlatnessVerdict(max_ratio < tol, False, max_ratio, tol, tuple(used))


def frame_change(cm_from: ConnectionMatrix, cm_to: ConnectionMatrix):
    """Matrix of expressions G with sections_to = sections_from . G, i.e.
    G[s][r] = coordinate of to-section r at from-frame slot s."""
    if cm_from.size != cm_to.size:
        raise ValueError("frames have different ranks")
    g = []
    for (leaf, layer) in cm_from.frame.free:
        g.append([cm_to.sections[r].get((leaf, layer), ZERO) for r in range(cm_to.size)])
    return g
