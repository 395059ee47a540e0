"""Special linear cell decompositions and explicit deformation retractions over exact rationals."""

from .cells import Band, Graph, HalfCell, Interval, Point, cell_from_json, half_cell, sigma_face
from .decomposition import (
    Decomposition,
    SemiLinearSet,
    check_frontier,
    clip_to_box,
    decompose,
    refine_special,
    star,
    validate_special,
)
from .pl import PLPath
from .retraction import (
    HypothesisError,
    RetractionError,
    UnboundedCarrierError,
    c_retraction,
    canonical_retraction,
    common_corner,
    contract,
    corner_transform,
    glue_star_retraction,
    half_cell_contraction,
    loop_homotopy,
    verify_homotopy,
    verify_retraction,
)
from .scalar import AffineMap, Q, scalar

__all__ = [
    "AffineMap", "Band", "Decomposition", "Graph", "HalfCell", "HypothesisError", "Interval",
    "PLPath", "Point", "Q", "RetractionError", "SemiLinearSet", "UnboundedCarrierError",
    "c_retraction", "canonical_retraction", "cell_from_json", "check_frontier", "clip_to_box",
    "common_corner", "contract", "corner_transform", "decompose", "glue_star_retraction",
    "half_cell", "half_cell_contraction", "loop_homotopy", "refine_special", "scalar",
    "sigma_face", "star", "validate_special", "verify_homotopy", "verify_retraction",
]
