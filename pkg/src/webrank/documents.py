"""Web-description documents, built-in example generators, and reports.

A document is a single YAML mapping with `n`, optional `parameters` (name ->
rational, written as integers or "p/q" strings), exactly one web source
(`first_integrals`, `slopes`, or `affine_forms`), and optional `sampling`
settings.  Parameters are bound into the expressions at load time, so
everything downstream sees closed expressions.

Reports are plain dict trees rendered either as sorted YAML (byte-identical
for a fixed input and seed) or as a human-readable table.  Timing fields are
deliberately excluded from the structured form to keep it deterministic.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction

import yaml

from .affine import AffineWeb, affine_web
from .errors import DocumentError, InvalidParameters
from .expr import Expr, QC, parse_expression, substitute, to_text
from .web import FirstIntegralWeb, Web, build_web

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Sampling:
    seed: int = 7
    trials: int = 10
    bound: int = 97


@dataclass(frozen=True)
class WebDocument:
    n: int
    kind: str  # "first_integrals" | "slopes" | "affine_forms"
    payload: tuple
    parameters: dict = field(default_factory=dict)
    sampling: Sampling = Sampling()
    source_text: str = ""

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]

    def canonical_text(self) -> str:
        data = {
            "n": self.n,
            self.kind: _payload_as_plain(self.kind, self.payload),
            "parameters": {k: str(v) for k, v in sorted(self.parameters.items())},
            "sampling": {
                "seed": self.sampling.seed,
                "trials": self.sampling.trials,
                "bound": self.sampling.bound,
            },
        }
        return yaml.safe_dump(data, sort_keys=True)


def _payload_as_plain(kind: str, payload):
    if kind == "affine_forms":
        return [[str(c) for c in row] for row in payload]
    if kind == "slopes":
        return [[to_text(e) for e in row] for row in payload]
    return [to_text(e) for e in payload]


def _as_rational(value, what: str) -> Fraction:
    if isinstance(value, bool):
        raise DocumentError(f"{what} must be rational, got a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise DocumentError(f"{what} is not a rational: {value!r}") from exc
    raise DocumentError(f"{what} must be an integer or 'p/q' string, got {value!r}")


def load_document(text: str) -> WebDocument:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise DocumentError(f"invalid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise DocumentError("document must be a mapping")
    if "n" not in raw:
        raise DocumentError("document needs the dimension field 'n'")
    n = raw["n"]
    if not isinstance(n, int) or n < 2:
        raise DocumentError(f"'n' must be an integer >= 2, got {n!r}")
    params = {}
    for name, value in (raw.get("parameters") or {}).items():
        params[str(name)] = _as_rational(value, f"parameter {name!r}")

    sources = [k for k in ("first_integrals", "slopes", "affine_forms") if k in raw]
    if len(sources) != 1:
        raise DocumentError(
            "document needs exactly one of first_integrals | slopes | affine_forms"
        )
    kind = sources[0]
    binding = {name: QC(v) for name, v in params.items()}

    if kind == "affine_forms":
        rows = raw[kind]
        if not isinstance(rows, list) or not rows:
            raise DocumentError("affine_forms must be a non-empty list")
        payload = tuple(
            tuple(_as_rational(c, "form coefficient") for c in row) for row in rows
        )
        for row in payload:
            if len(row) != n:
                raise DocumentError(f"each affine form needs {n} coefficients")
    elif kind == "slopes":
        rows = raw[kind]
        if not isinstance(rows, list) or not rows:
            raise DocumentError("slopes must be a non-empty list")
        payload = []
        for row in rows:
            if not isinstance(row, list) or len(row) != n - 1:
                raise DocumentError(f"each slope row needs {n - 1} expressions")
            payload.append(
                tuple(substitute(parse_expression(str(e), n), param_map=binding) for e in row)
            )
        payload = tuple(payload)
    else:
        exprs = raw[kind]
        if not isinstance(exprs, list) or not exprs:
            raise DocumentError("first_integrals must be a non-empty list")
        payload = tuple(
            substitute(parse_expression(str(e), n), param_map=binding) for e in exprs
        )

    sampling_raw = raw.get("sampling") or {}
    sampling = Sampling(
        seed=int(sampling_raw.get("seed", 7)),
        trials=int(sampling_raw.get("trials", 10)),
        bound=int(sampling_raw.get("bound", 97)),
    )
    doc = WebDocument(
        n=n,
        kind=kind,
        payload=payload,
        parameters=params,
        sampling=sampling,
        source_text=text,
    )
    _check_unbound(doc)
    return doc


def _check_unbound(doc: WebDocument) -> None:
    from .expr import free_parameters

    if doc.kind == "affine_forms":
        return
    rows = doc.payload if doc.kind == "first_integrals" else [e for row in doc.payload for e in row]
    for e in rows:
        missing = free_parameters(e)
        if missing:
            raise DocumentError(f"unbound parameters {sorted(missing)}; add them to 'parameters'")


def document_web(doc: WebDocument, auto_change: bool = True):
    """(Web | AffineWeb, coordinate-change record or None)."""
    if doc.kind == "affine_forms":
        return affine_web(doc.payload), None
    if doc.kind == "slopes":
        return Web(n=doc.n, slopes=doc.payload), None
    fw = FirstIntegralWeb(n=doc.n, integrals=doc.payload)
    return build_web(fw, auto_change=auto_change, seed=doc.sampling.seed)


# ---------------------------------------------------------------------------
# built-in examples
# ---------------------------------------------------------------------------

SIX_WEB_DEFAULTS = {"a": 2, "b": 3, "c": 5, "e": 7, "h": 11}

FIFTEEN_WEB_INTEGRALS = [
    "x",
    "y",
    "z",
    "z/(z-y)",
    "z/(z-x)",
    "y/(y-x)",
    "(1-z)/(y-z)",
    "(1-z)/(z-x)",
    "(1-y)/(y-x)",
    "(x-y)/(z-y)",
    "z*(1-y)/(z-y)",
    "z*(1-x)/(z-x)",
    "y*(1-x)/(y-x)",
    "z*(x-y)/(x*(z-y))",
    "(1-z)*(y-x)/((1-x)*(y-z))",
]


def example_document(name: str, **options) -> str:
    """YAML text of a built-in example web document."""
    if name == "six_web":
        return _six_web_document(**options)
    if name == "fifteen_web":
        seed = int(options.pop("seed", 7))
        if options:
            raise InvalidParameters(f"unknown options {sorted(options)} for fifteen_web")
        data = {
            "n": 3,
            "first_integrals": FIFTEEN_WEB_INTEGRALS,
            "sampling": {"seed": seed, "trials": 10, "bound": 97},
        }
        return yaml.safe_dump(data, sort_keys=False)
    if name == "conic_affine":
        return _conic_affine_document(**options)
    raise InvalidParameters(f"unknown example {name!r}")


def _six_web_document(a=2, b=3, c=5, e=7, h=11, psi="13", seed=7) -> str:
    values = {"a": a, "b": b, "c": c, "e": e, "h": h}
    fracs = {k: Fraction(str(v)) for k, v in values.items()}
    if len(set(fracs.values())) != 5 or any(v == 0 for v in fracs.values()):
        raise InvalidParameters("a, b, c, e, h must be five distinct nonzero numbers")
    psi_text = str(psi)
    try:
        parse_expression(psi_text, 3)
    except Exception as exc:
        raise InvalidParameters(f"psi is not a valid expression: {exc}") from exc
    slopes = [["0", "0"]]
    for key in ("a", "b", "c", "e"):
        slopes.append([key, f"{key}^2"])
    slopes.append(["h", psi_text])
    data = {
        "n": 3,
        "parameters": {k: str(v) for k, v in fracs.items()},
        "slopes": slopes,
        "sampling": {"seed": int(seed), "trials": 10, "bound": 97},
    }
    return yaml.safe_dump(data, sort_keys=False)


def _conic_affine_document(a=2, b=3, c=5, e=7, h=11, off_conic=False, seed=7) -> str:
    values = [Fraction(str(v)) for v in (a, b, c, e, h)]
    if len(set(values)) != 5 or any(v == 0 for v in values):
        raise InvalidParameters("a, b, c, e, h must be five distinct nonzero numbers")
    forms = [["0", "0", "1"]]
    for v in values[:4]:
        forms.append([str(-v), str(-v * v), "1"])
    last = values[4]
    q = last * last + 1 if off_conic else last * last
    forms.append([str(-last), str(-q), "1"])
    data = {
        "n": 3,
        "affine_forms": forms,
        "sampling": {"seed": int(seed), "trials": 10, "bound": 97},
    }
    return yaml.safe_dump(data, sort_keys=False)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def render_report(report: dict, fmt: str = "structured") -> str:
    if fmt == "structured":
        data = {k: v for k, v in report.items() if k != "timings"}
        data["schema_version"] = SCHEMA_VERSION
        return yaml.safe_dump(_plain(data), sort_keys=True)
    lines = []
    _render_table(report, lines, 0)
    return "\n".join(lines) + "\n"


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, QC):
        return repr(value)
    if isinstance(value, complex):
        return f"{value.real:.12g}{value.imag:+.12g}j"
    if isinstance(value, Expr):
        return to_text(value)
    if isinstance(value, (bool, int, float, str)) or value is None:
        return value
    return str(value)


def _render_table(value, lines: list, depth: int, label: str = "") -> None:
    pad = "  " * depth
    if isinstance(value, dict):
        if label:
            lines.append(f"{pad}{label}:")
        for k, v in value.items():
            _render_table(v, lines, depth + (1 if label else 0), str(k))
        return
    plain = _plain(value)
    if isinstance(plain, list):
        if all(not isinstance(v, (list, dict)) for v in plain):
            lines.append(f"{pad}{label}: {', '.join(str(v) for v in plain)}")
        else:
            lines.append(f"{pad}{label}:")
            for v in plain:
                _render_table(v, lines, depth + 1, "-")
        return
    lines.append(f"{pad}{label}: {plain}")
