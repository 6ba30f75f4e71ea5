"""
geometry: planar convex bodies, ellipsoids and John ellipsoids.
"""

from .bodies import (
    ConvexBody,
    affine_image,
    barycenter,
    boundary_distance,
    boundary_points,
    clip_box,
    clip_halfplane,
    contains_body,
    dilate,
    intersect,
    nearest_boundary,
    polygon_area_centroid,
    random_convex_polygon,
)
from .ellipsoids import (
    JOHN_FACTOR,
    Ellipsoid,
    JohnEllipsoidError,
    containment_factor,
    john_ellipsoid,
)

__all__ = [
    "ConvexBody",
    "Ellipsoid",
    "JOHN_FACTOR",
    "JohnEllipsoidError",
    "affine_image",
    "barycenter",
    "boundary_distance",
    "boundary_points",
    "clip_box",
    "clip_halfplane",
    "containment_factor",
    "contains_body",
    "dilate",
    "intersect",
    "john_ellipsoid",
    "nearest_boundary",
    "polygon_area_centroid",
    "random_convex_polygon",
]
