"""C^2 cubic simplex splines on Wang-Shi splits of triangles and triangulations."""

from .geometry import Triangle, ws_split, ws_dimension, crosscut_dimension
from .local_basis import LocalBasis, LocalCoeffs, build_local_basis, eval_basis

__all__ = [
    "Triangle",
    "ws_split",
    "ws_dimension",
    "crosscut_dimension",
    "LocalBasis",
    "LocalCoeffs",
    "build_local_basis",
    "eval_basis",
]
