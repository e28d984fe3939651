"""Geometric statistics and shape dynamics workbench."""

from .errors import *  # noqa: F401,F403
from .manifolds import (  # noqa: F401
    SPD,
    Euclidean,
    Hyperbolic,
    Manifold,
    NumericSurface,
    Sphere,
    parse_manifold,
)

__version__ = "0.1.0"
