"""Higher-order binary polynomials for the periodic cell energy."""

from .build import build_hubo, candidate_tuples, clamp_pairs, min_image_distances, variable_atoms
from .penalty import PenaltySpec, add_absolute_penalty, add_penalty, add_relative_penalty
from .polynomial import (
    HuboPolynomial,
    PolynomialFormatError,
    evaluate,
    evaluate_many,
    export_poly,
    import_poly,
)
from .reduce import ReductionReport, deduc_reduc

__all__ = [
    "HuboPolynomial",
    "PenaltySpec",
    "PolynomialFormatError",
    "ReductionReport",
    "add_absolute_penalty",
    "add_penalty",
    "add_relative_penalty",
    "build_hubo",
    "candidate_tuples",
    "clamp_pairs",
    "deduc_reduc",
    "evaluate",
    "evaluate_many",
    "export_poly",
    "import_poly",
    "min_image_distances",
    "variable_atoms",
]
