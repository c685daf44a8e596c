"""Numerical Hartogs extension: lattice Cauchy contours, fiber integrals and gluing checks."""
from .complexcore import Polydisc, project_component, project_skip
from .errors import (EvaluationError, HartogsError, HypothesisViolation, PreconditionError, SceneError,
                     SingularityError, ToleranceError)
from .expr import Expression, evaluate, parse, wirtinger_residual
from .extension import Extender, Tolerances, extend_at, glue_check, path_chain, stable_neighborhood
from .geometry import (PolygonalContour, build_lattice_contour, closed_polydisc_set, fiber, hartogs_figure,
                       polydisc_domain)
from .quadrature import QuadratureConfig, cauchy_compact, cauchy_rectangle, winding_number

__all__ = [
    "Polydisc", "project_component", "project_skip",
    "EvaluationError", "HartogsError", "HypothesisViolation", "PreconditionError", "SceneError",
    "SingularityError", "ToleranceError",
    "Expression", "evaluate", "parse", "wirtinger_residual",
    "Extender", "Tolerances", "extend_at", "glue_check", "path_chain", "stable_neighborhood",
    "PolygonalContour", "build_lattice_contour", "closed_polydisc_set", "fiber", "hartogs_figure",
    "polydisc_domain",
    "QuadratureConfig", "cauchy_compact", "cauchy_rectangle", "winding_number",
]
