"""Command-line surface.

Commands: bounds, check, affine-rank, abelian, jets, curvature, example.
Web documents come from a file path argument or stdin ("-").  Exit codes:
0 success (and positive verdict), 1 negative verdict (point in S /
extraordinary / not flat), 2 usage or document errors, 3 computation errors
such as pole-resample exhaustion.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .affine import AffineWeb, affine_rank, is_ordinary_affine, solve_abelian_relations, veronese_rank
from .combinatorics import bounds_report, height_cap, monomial_count
from .connection import connection_matrix, curvature, flatness_test
from .documents import (
    WebDocument,
    document_web,
    example_document,
    load_document,
    render_report,
)
from .errors import DocumentError, InvalidParameters, WebrankError
from .expr import to_text
from .jets import fiber_dimensions, formal_rank_estimate
from .moments import ordinariness, sample_ordinariness
from .web import Web, sample_points, _all_slopes

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_ERROR = 3


def _read_document(path: str) -> WebDocument:
    if path == "-":
        return load_document(sys.stdin.read())
    with open(path, "r", encoding="utf-8") as fh:
        return load_document(fh.read())


def _common_flags(sub: argparse.ArgumentParser, with_doc: bool = True) -> None:
    if with_doc:
        sub.add_argument("document", help="web document path, or - for stdin")
    sub.add_argument("--seed", type=int, default=None, help="sampling seed (overrides the document)")
    sub.add_argument("--trials", type=int, default=None, help="sample point count")
    sub.add_argument("--tol", type=float, default=None, help="numeric tolerance")
    sub.add_argument(
        "--format",
        choices=("structured", "table"),
        default="structured",
        help="report rendering",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="webrank",
        description="rank bounds, ordinariness, jets, and curvature for codimension-one webs",
    )
    parser.add_argument("--version", action="version", version=f"webrank {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("bounds", help="print both rank bounds and the dimension table")
    p.add_argument("n", type=int)
    p.add_argument("d", type=int)
    p.add_argument("--format", choices=("structured", "table"), default="structured")

    p = subs.add_parser("check", help="ordinariness verdict at sampled points")
    _common_flags(p)

    p = subs.add_parser("affine-rank", help="exact rank of an affine web")
    _common_flags(p)

    p = subs.add_parser("abelian", help="independent abelian-relation solver for affine webs")
    _common_flags(p)
    p.add_argument("--degree-cap", type=int, default=None, help="polynomial degree cap (default k0-1)")
    p.add_argument("--show-basis", action="store_true", help="include the exact basis in the report")

    p = subs.add_parser("jets", help="prolongation fiber dimensions at sampled points")
    _common_flags(p)
    p.add_argument("--order", type=int, default=None, help="largest prolongation order k (default k0+2 report)")

    p = subs.add_parser("curvature", help="adapted connection and flatness verdict")
    _common_flags(p)
    p.add_argument("--show-matrix", action="store_true", help="include symbolic connection entries")

    p = subs.add_parser("example", help="emit a built-in example web document")
    p.add_argument("name", choices=("six_web", "fifteen_web", "conic_affine"))
    p.add_argument("--param", action="append", default=[], metavar="NAME=VALUE")
    p.add_argument("--off-conic", action="store_true", help="move the sixth point off the conic")
    p.add_argument("--seed", type=int, default=7)

    return parser


def _sampling(doc: WebDocument, args) -> tuple[int, int, float]:
    seed = args.seed if args.seed is not None else doc.sampling.seed
    trials = args.trials if args.trials is not None else doc.sampling.trials
    tol = args.tol if args.tol is not None else 1e-9
    return seed, trials, tol


def _doc_header(doc: WebDocument, seed: int, trials: int, tol: float) -> dict:
    return {
        "input_digest": doc.digest(),
        "n": doc.n,
        "source": doc.kind,
        "seed": seed,
        "trials": trials,
        "tolerance": tol,
    }


def _need_slope_web(obj) -> Web:
    if isinstance(obj, AffineWeb):
        raise DocumentError(
            "this command needs a slope-form web; affine_forms documents are for "
            "affine-rank/abelian"
        )
    return obj


def _need_affine(obj) -> AffineWeb:
    if not isinstance(obj, AffineWeb):
        raise DocumentError("this command needs an affine_forms document")
    return obj


def cmd_bounds(args) -> int:
    rep = bounds_report(args.n, args.d)
    report = {
        "command": "bounds",
        "n": rep.n,
        "d": rep.d,
        "k0": rep.k0,
        "c_table": rep.c_table,
        "castelnuovo_bound": rep.castelnuovo,
        "ordinary_bound": rep.ordinary,
    }
    print(render_report(report, args.format), end="")
    return EXIT_OK


def cmd_check(args) -> int:
    doc = _read_document(args.document)
    seed, trials, tol = _sampling(doc, args)
    obj, change = document_web(doc)
    if isinstance(obj, AffineWeb):
        ordinary = is_ordinary_affine(obj)
        report = {
            "command": "check",
            **_doc_header(doc, seed, trials, tol),
            "regime": "affine",
            "ordinary": ordinary,
            "veronese_ranks": {
                h: veronese_rank(obj, h) for h in range(1, height_cap(obj.n, obj.d) + 1)
            },
        }
        print(render_report(report, args.format), end="")
        return EXIT_OK if ordinary else EXIT_NEGATIVE
    web = obj
    verdict = sample_ordinariness(web, trials=trials, seed=seed, tol=tol)
    per_point = []
    for p in verdict.witnesses + verdict.in_s_points:
        v = ordinariness(web, p, tol=tol)
        per_point.append(
            {
                "point": [repr(c) for c in p.coords],
                "in_S": v.in_S,
                "regime": v.regime,
                "ranks": v.ranks,
                "expected": v.expected,
                "fiber_dim": v.fiber_dim,
            }
        )
    report = {
        "command": "check",
        **_doc_header(doc, seed, trials, tol),
        "coordinate_change": _change_record(change),
        "ordinary": verdict.ordinary,
        "points": per_point,
    }
    print(render_report(report, args.format), end="")
    return EXIT_OK if verdict.ordinary else EXIT_NEGATIVE


def _change_record(change):
    if change is None:
        return None
    return [[str(v) for v in row] for row in change]


def cmd_affine_rank(args) -> int:
    doc = _read_document(args.document)
    seed, trials, tol = _sampling(doc, args)
    aw = _need_affine(document_web(doc)[0])
    k0 = height_cap(aw.n, aw.d)
    ranks = {h: veronese_rank(aw, h) for h in range(1, k0 + 1)}
    report = {
        "command": "affine-rank",
        **_doc_header(doc, seed, trials, tol),
        "d": aw.d,
        "k0": k0,
        "veronese_ranks": ranks,
        "rank": affine_rank(aw),
        "ordinary": is_ordinary_affine(aw),
        "ordinary_bound": bounds_report(aw.n, aw.d).ordinary,
    }
    print(render_report(report, args.format), end="")
    return EXIT_OK


def cmd_abelian(args) -> int:
    doc = _read_document(args.document)
    seed, trials, tol = _sampling(doc, args)
    aw = _need_affine(document_web(doc)[0])
    basis = solve_abelian_relations(aw, args.degree_cap)
    report = {
        "command": "abelian",
        **_doc_header(doc, seed, trials, tol),
        "degree_cap": basis.degree_cap,
        "dimension": basis.dimension,
    }
    if args.show_basis:
        report["basis"] = [
            [[str(c) for c in poly] for poly in element] for element in basis.basis
        ]
    print(render_report(report, args.format), end="")
    return EXIT_OK


def cmd_jets(args) -> int:
    doc = _read_document(args.document)
    seed, trials, tol = _sampling(doc, args)
    web = _need_slope_web(document_web(doc)[0])
    change = document_web(doc)[1]
    points = sample_points(
        web.n, trials, seed, avoid_poles_of=_all_slopes(web), exact=not web.has_exp
    )
    per_point = []
    ok = True
    for p in points:
        if args.order is not None:
            dims = fiber_dimensions(web, p, args.order, tol=tol)
            per_point.append(
                {"point": [repr(c) for c in p.coords], "dims": dims}
            )
        else:
            est = formal_rank_estimate(web, p, tol=tol)
            ok = ok and est.stable
            per_point.append(
                {
                    "point": [repr(c) for c in p.coords],
                    "estimate": est.estimate,
                    "dims": list(est.dims),
                    "stable": est.stable,
                    "first_drop": est.first_drop,
                }
            )
    report = {
        "command": "jets",
        **_doc_header(doc, seed, trials, tol),
        "coordinate_change": _change_record(change),
        "order": args.order,
        "points": per_point,
    }
    print(render_report(report, args.format), end="")
    return EXIT_OK


def cmd_curvature(args) -> int:
    doc = _read_document(args.document)
    seed, trials, tol = _sampling(doc, args)
    if args.tol is None:
        tol = 1e-8
    web = _need_slope_web(document_web(doc)[0])
    points = sample_points(
        web.n, trials, seed, avoid_poles_of=_all_slopes(web), exact=not web.has_exp
    )
    cm = connection_matrix(web, basepoint=points[0], seed=seed)
    verdict = flatness_test(web, points=points, tol=tol, connection=cm)
    report = {
        "command": "curvature",
        **_doc_header(doc, seed, trials, tol),
        "k0": cm.k0,
        "frame": cm.frame.describe(),
        "flat": verdict.flat,
        "exact_zero": verdict.exact_zero,
        "max_curvature_ratio": verdict.max_ratio,
    }
    if args.show_matrix:
        report["connection"] = [
            [[to_text(c) for c in entry] for entry in row] for row in cm.entries
        ]
    print(render_report(report, args.format), end="")
    return EXIT_OK if verdict.flat else EXIT_NEGATIVE


def cmd_example(args) -> int:
    options: dict = {"seed": args.seed}
    for item in args.param:
        if "=" not in item:
            raise InvalidParameters(f"--param needs NAME=VALUE, got {item!r}")
        name, value = item.split("=", 1)
        options[name.strip()] = value.strip()
    if args.name == "conic_affine":
        options["off_conic"] = args.off_conic
    print(example_document(args.name, **options), end="")
    return EXIT_OK


_HANDLERS = {
    "bounds": cmd_bounds,
    "check": cmd_check,
    "affine-rank": cmd_affine_rank,
    "abelian": cmd_abelian,
    "jets": cmd_jets,
    "curvature": cmd_curvature,
    "example": cmd_example,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return _HANDLERS[args.command](args)
    except (DocumentError, InvalidParameters, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WebrankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
