"""Numerics for piecewise hyperbolic maps of the square with countably many branches."""
from .map_model import (
    ESCAPE, BranchMap, FullHeightRect, FullWidthStrip, Jet2, MapFamily, Point, TailModel,
    Vector2, apply_F, locate_branch, make_dyadic_family, make_perturbed_family,
    slope_transport, unstable_derivative,
)

__version__ = "0.1.0"
