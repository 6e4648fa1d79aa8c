"""Computational toolkit for codimension-one webs: rank bounds,
ordinariness, jet prolongation, affine-web ranks, and the adapted
connection with its curvature."""

__version__ = "0.1.0"

from .combinatorics import (
    BoundsReport,
    bounds_report,
    castelnuovo_bound,
    enumerate_partitions,
    height_cap,
    monomial_count,
    ordinary_rank_bound,
)
from .expr import (
    Expr,
    Point,
    QC,
    differentiate,
    evaluate,
    parse_expression,
    rational_point,
    simplify,
    to_text,
)
from .web import (
    FirstIntegralWeb,
    Web,
    build_web,
    from_first_integrals,
    integrability_residual,
    is_integrable,
    position_check,
    sample_points,
)
from .moments import (
    MomentMatrix,
    OrdinarinessVerdict,
    moment_matrix,
    ordinariness,
    rank_of,
    sample_ordinariness,
)
from .affine import (
    AbelianRelationBasis,
    AffineWeb,
    affine_rank,
    affine_web,
    is_ordinary_affine,
    solve_abelian_relations,
    veronese_rank,
)
from .jets import (
    JetFiber,
    JetSystem,
    ReducedDerivative,
    build_sigma,
    fiber_dimensions,
    formal_rank_estimate,
    jet_fiber,
    reduce,
)
from .connection import (
    ConnectionMatrix,
    CurvatureMatrix,
    connection_matrix,
    curvature,
    flatness_test,
    frame_change,
)
from .documents import WebDocument, document_web, example_document, load_document

__all__ = [name for name in dir() if not name.startswith("_")]
