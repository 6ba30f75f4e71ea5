"""
Tests for planar convex bodies and ellipsoids.

Covers:
  - ConvexBody constructors, validation and dict literals
  - barycenter against a sampled centroid, boundary distance (1-Lipschitz),
    nearest boundary points and boundary sampling
  - halfplane clipping, intersection, dilation and affine images
  - John ellipsoids on randomized polygons, ellipses and the equilateral triangle
  - the normalizing map
"""

import math

import numpy as np
import pytest

from geometry import (
    JOHN_FACTOR,
    ConvexBody,
    Ellipsoid,
    affine_image,
    barycenter,
    boundary_distance,
    boundary_points,
    clip_halfplane,
    containment_factor,
    contains_body,
    dilate,
    intersect,
    john_ellipsoid,
    nearest_boundary,
    random_convex_polygon,
)


def _unit_square() -> ConvexBody:
    return ConvexBody.box(0.0, 0.0, 1.0, 1.0)


# ---------------------------------------------------------------------------
# ConvexBody
# ---------------------------------------------------------------------------

class TestConvexBody:
    def test_box_area_and_bounds(self):
        b = ConvexBody.box(-1.0, 0.0, 1.0, 1.0)
        assert b.area == pytest.approx(2.0)
        assert b.bounds == (-1.0, 0.0, 1.0, 1.0)
        assert b.diameter == pytest.approx(math.sqrt(5.0))

    def test_empty_box_rejected(self):
        with pytest.raises(ValueError, match="Empty box"):
            ConvexBody.box(0.0, 0.0, 0.0, 1.0)

    def test_clockwise_polygon_rejected(self):
        with pytest.raises(ValueError, match="counter-clockwise"):
            ConvexBody.polygon([[0, 0], [0, 1], [1, 1], [1, 0]])

    def test_from_points_drops_interior_points(self):
        pts = [[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5], [0.5, 0.0]]
        b = ConvexBody.from_points(pts)
        assert len(b.vertices) == 4
        assert b.area == pytest.approx(1.0)

    def test_from_points_degenerate(self):
        with pytest.raises(ValueError, match="Degenerate"):
            ConvexBody.from_points([[0, 0], [1, 1], [2, 2]])

    def test_disk_area_close_to_pi(self):
        d = ConvexBody.disk(radius=1.0, resolution=512)
        assert d.area == pytest.approx(math.pi, rel=1e-4)
        assert d.area < math.pi  # inscribed polygon

    def test_polygonalization_error_small(self):
        e = ConvexBody.ellipse((0.0, 0.0), (2.0, 1.0), 0.3, resolution=256)
        assert e.polygonalization_error() < 1e-3
        assert _unit_square().polygonalization_error() == 0.0

    def test_superellipse_requires_exponent_at_least_two(self):
        with pytest.raises(ValueError, match="exponent"):
            ConvexBody.superellipse(exponent=1.5)

    def test_dict_literal_roundtrip(self):
        e = ConvexBody.superellipse((0.5, -0.25), (2.0, 1.0), 4.0, 0.2, 128)
        restored = ConvexBody.from_dict(e.to_dict())
        assert restored.kind == "superellipse"
        assert restored.semi_axes == (2.0, 1.0)
        np.testing.assert_allclose(restored.vertices, e.vertices)

    def test_contains_with_tolerance(self):
        sq = _unit_square()
        pts = np.array([[0.5, 0.5], [1.0, 0.5], [1.001, 0.5]])
        assert sq.contains(pts).tolist() == [True, True, False]
        assert sq.contains(pts, tol=0.01).tolist() == [True, True, True]


# ---------------------------------------------------------------------------
# Distances and boundary samples
# ---------------------------------------------------------------------------

class TestBoundaryQueries:
    def test_boundary_distance_inside_and_outside(self):
        sq = _unit_square()
        assert boundary_distance(sq, np.array([0.25, 0.5])) == pytest.approx(0.25)
        d = boundary_distance(sq, np.array([[0.5, 0.5], [2.0, 2.0]]))
        np.testing.assert_allclose(d, [0.5, 0.0])

    def test_nearest_boundary_point_and_outward_normal(self):
        closest, normal = nearest_boundary(_unit_square(), np.array([[0.5, 0.1]]))
        np.testing.assert_allclose(closest[0], [0.5, 0.0], atol=1e-12)
        np.testing.assert_allclose(normal[0], [0.0, -1.0], atol=1e-12)

    def test_boundary_points_have_inner_normals(self):
        d = ConvexBody.disk(radius=2.0, resolution=256)
        pts, inner = boundary_points(d, 40, phase=0.5)
        assert pts.shape == (40, 2)
        np.testing.assert_allclose(np.linalg.norm(inner, axis=1), 1.0)
        assert np.all(d.contains(pts + 1e-3 * inner))
        # inner normals of a disk point at the center
        assert np.all(np.einsum("ij,ij->i", inner, -pts) > 0)

    def test_barycenter_of_triangle(self):
        t = ConvexBody.polygon([[0, 0], [3, 0], [0, 3]])
        np.testing.assert_allclose(barycenter(t), [1.0, 1.0])

    def test_barycenter_matches_sampled_centroid(self):
        rng = np.random.default_rng(21)
        body = random_convex_polygon(rng, 7)
        xmin, ymin, xmax, ymax = body.bounds
        pts = rng.uniform((xmin, ymin), (xmax, ymax), size=(1_000_000, 2))
        inside = pts[body.contains(pts)]
        np.testing.assert_allclose(barycenter(body), inside.mean(axis=0), atol=2e-3)

    def test_boundary_distance_is_one_lipschitz(self):
        rng = np.random.default_rng(8)
        for _ in range(5):
            body = random_convex_polygon(rng, 8)
            x = rng.uniform(-1.5, 1.5, size=(2000, 2))
            y = x + rng.normal(scale=0.3, size=x.shape)
            gap = np.abs(boundary_distance(body, x) - boundary_distance(body, y))
            assert np.all(gap <= np.linalg.norm(x - y, axis=1) + 1e-12)


# ---------------------------------------------------------------------------
# Set operations
# ---------------------------------------------------------------------------

class TestSetOperations:
    def test_clip_halfplane_halves_square(self):
        half = clip_halfplane(_unit_square(), (1.0, 0.0), 0.5)
        assert half is not None
        assert half.area == pytest.approx(0.5)

    def test_clip_halfplane_empty_and_whole(self):
        sq = _unit_square()
        assert clip_halfplane(sq, (1.0, 0.0), -0.1) is None
        assert clip_halfplane(sq, (1.0, 0.0), 5.0) is sq

    def test_intersect_overlapping_and_disjoint(self):
        a = ConvexBody.box(0, 0, 2, 2)
        b = ConvexBody.box(1, 1, 3, 3)
        assert intersect(a, b).area == pytest.approx(1.0)
        assert intersect(a, ConvexBody.box(5, 5, 6, 6)) is None

    def test_dilate_scales_area(self):
        t = ConvexBody.polygon([[0, 0], [2, 0], [0, 1]])
        assert dilate(t, 2.0).area == pytest.approx(4.0 * t.area)
        np.testing.assert_allclose(barycenter(dilate(t, 0.5)), barycenter(t))
        with pytest.raises(ValueError, match="positive"):
            dilate(t, 0.0)

    def test_dilation_nests_inside_body(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            body = random_convex_polygon(rng, int(rng.integers(3, 12)))
            r = float(rng.uniform(0.05, 1.0))
            small = dilate(body, r)
            assert contains_body(body, small, tol=1e-9)
            assert small.area == pytest.approx(r * r * body.area, rel=1e-12)

    def test_affine_image_with_reflection(self):
        img = affine_image(_unit_square(), np.diag([-2.0, 1.0]), (1.0, 0.0))
        assert img.area == pytest.approx(2.0)
        assert img.bounds == pytest.approx((-1.0, 0.0, 1.0, 1.0))

    def test_contains_body(self):
        outer = ConvexBody.box(-1, -1, 1, 1)
        assert contains_body(outer, ConvexBody.disk(radius=0.9, resolution=64))
        assert not contains_body(outer, ConvexBody.disk(radius=1.1, resolution=64))

    def test_random_convex_polygon_is_valid(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            p = random_convex_polygon(rng, 7, center=(1.0, 2.0), radius=0.5)
            assert p.area > 0
            assert p.diameter <= 1.0 + 1e-12


# ---------------------------------------------------------------------------
# Ellipsoids
# ---------------------------------------------------------------------------

class TestEllipsoids:
    def test_normalizing_map_sends_boundary_to_unit_circle(self):
        E = Ellipsoid.from_axes((1.0, -1.0), (3.0, 0.5), rotation=0.7)
        A, b = E.normalizing_map()
        pts = E.to_body(128).vertices
        np.testing.assert_allclose(np.linalg.norm(pts @ A.T + b, axis=1), 1.0, atol=1e-9)

    def test_area_and_dilation(self):
        E = Ellipsoid.from_axes((0.0, 0.0), (2.0, 1.0))
        assert E.area == pytest.approx(2.0 * math.pi)
        assert E.dilate(0.5).area == pytest.approx(0.5 * math.pi)
        assert E.semi_axes == pytest.approx((2.0, 1.0))

    def test_non_symmetric_generator_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            Ellipsoid(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_john_ellipsoid_of_square_is_inscribed_disk(self):
        E = john_ellipsoid(ConvexBody.box(-1, -1, 1, 1))
        assert E.semi_axes == pytest.approx((1.0, 1.0), abs=1e-3)
        np.testing.assert_allclose(E.center, [0.0, 0.0], atol=1e-12)

    def test_john_ellipsoid_inclusions(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            body = random_convex_polygon(rng, 9)
            E = john_ellipsoid(body)
            assert contains_body(body, E.to_body(64), tol=1e-9)
            assert containment_factor(body, E) <= JOHN_FACTOR + 1e-9

    @pytest.mark.slow
    def test_john_ellipsoid_inclusions_on_many_polygons(self):
        rng = np.random.default_rng(29)
        for _ in range(300):
            body = random_convex_polygon(rng, int(rng.integers(3, 16)), radius=float(rng.uniform(0.1, 5.0)))
            E = john_ellipsoid(body)
            assert np.all(body.contains(E.to_body(64).vertices, tol=1e-9 * body.diameter))
            assert np.all(E.gauge(body.vertices) <= JOHN_FACTOR + 1e-9)

    def test_john_ellipsoid_of_ellipse_is_itself(self):
        body = ConvexBody.ellipse((1.0, -0.5), (2.0, 0.7), rotation=0.4, resolution=512)
        E = john_ellipsoid(body)
        assert E.semi_axes == pytest.approx((2.0, 0.7), rel=1e-3)
        np.testing.assert_allclose(E.center, [1.0, -0.5], atol=1e-9)
        np.testing.assert_allclose(E.gauge(body.vertices), 1.0, atol=1e-3)

    def test_john_ellipsoid_of_equilateral_triangle_is_incircle(self):
        tri = ConvexBody.polygon([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3.0) / 2.0]])
        E = john_ellipsoid(tri)
        inradius = math.sqrt(3.0) / 6.0
        np.testing.assert_allclose(E.center, [0.5, inradius], atol=1e-12)
        assert E.semi_axes == pytest.approx((inradius, inradius), rel=1e-6)
        assert containment_factor(tri, E) == pytest.approx(2.0, rel=1e-6)
        assert containment_factor(tri, E) <= JOHN_FACTOR
