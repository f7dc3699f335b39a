import numpy as np
import pytest

from riskscene.geometry import (
    point_in_polygon,
    polygon_centroid,
    polygon_intersects_rect,
    polygon_is_simple,
    polygon_signed_area,
)

UNIT_SQUARE = np.array([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
L_SHAPE = np.array([(0, 0), (4, 0), (4, 1), (1, 1), (1, 3), (0, 3)], dtype=float)


def fan_triangulation_centroid(poly):
    """Oracle: split into fan triangles from vertex 0, area-weight their centroids."""
    total_area = 0.0
    acc = np.zeros(2)
    for i in range(1, len(poly) - 1):
        a, b, c = poly[0], poly[i], poly[i + 1]
        area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
        acc += area * (a + b + c) / 3.0
        total_area += area
    return acc / total_area


def winding_number_contains(point, poly):
    """Oracle containment via summed signed angles (independent of the
    crossing-number implementation)."""
    vecs = poly - np.asarray(point, dtype=float)
    angles = np.arctan2(vecs[:, 1], vecs[:, 0])
    diffs = np.diff(np.concatenate([angles, angles[:1]]))
    diffs = (diffs + np.pi) % (2 * np.pi) - np.pi
    return abs(diffs.sum()) > 1.0  # ~2*pi inside, ~0 outside


class TestCentroid:
    def test_unit_square(self):
        np.testing.assert_allclose(polygon_centroid(UNIT_SQUARE), [0.5, 0.5], atol=1e-15)

    def test_l_shape_matches_triangulation_oracle(self):
        np.testing.assert_allclose(
            polygon_centroid(L_SHAPE), fan_triangulation_centroid(L_SHAPE), atol=1e-12
        )

    def test_orientation_independent(self):
        np.testing.assert_allclose(
            polygon_centroid(L_SHAPE), polygon_centroid(L_SHAPE[::-1]), atol=1e-12
        )

    def test_degenerate_falls_back_to_vertex_mean(self):
        line = np.array([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)])
        np.testing.assert_allclose(polygon_centroid(line), [1.0, 0.0])


class TestContainment:
    def test_interior_and_exterior(self):
        assert point_in_polygon((0.5, 0.5), UNIT_SQUARE)
        assert not point_in_polygon((1.5, 0.5), UNIT_SQUARE)

    def test_edge_points_count_as_inside(self):
        assert point_in_polygon((0.5, 0.0), UNIT_SQUARE)
        assert point_in_polygon((1.0, 1.0), UNIT_SQUARE)

    def test_concave_polygon_against_winding_oracle(self):
        rng = np.random.default_rng(11)
        pts = rng.uniform(-1, 5, size=(300, 2))
        for p in pts:
            expected = winding_number_contains(p, L_SHAPE)
            # skip points essentially on the boundary, where the oracles
            # legitimately disagree
            if min(abs(p[0] - v) for v in (0, 1, 4)) < 1e-9:
                continue
            assert point_in_polygon(p, L_SHAPE) == expected, p


class TestSimplicity:
    def test_convex_is_simple(self):
        assert polygon_is_simple(UNIT_SQUARE)
        assert polygon_is_simple(L_SHAPE)

    def test_bowtie_is_not(self):
        bowtie = np.array([(0, 0), (2, 2), (2, 0), (0, 2)], dtype=float)
        assert not polygon_is_simple(bowtie)

    def test_too_few_vertices(self):
        assert not polygon_is_simple(np.array([(0, 0), (1, 1)], dtype=float))


class TestRectIntersection:
    @pytest.mark.parametrize(
        "rect,expected",
        [
            ((0.2, 0.2, 0.8, 0.8), True),  # rect inside polygon
            ((-2, -2, 3, 3), True),  # polygon inside rect
            ((0.9, 0.9, 1.5, 1.5), True),  # overlap
            ((2.0, 2.0, 3.0, 3.0), False),  # disjoint
            ((1.0, 0.0, 2.0, 1.0), True),  # touching edge counts
        ],
    )
    def test_cases(self, rect, expected):
        assert polygon_intersects_rect(UNIT_SQUARE, rect) == expected

    def test_concave_near_miss(self):
        # rect sits in the notch of the L, outside the polygon itself
        rect = (1.5, 1.5, 3.5, 2.5)
        assert not polygon_intersects_rect(L_SHAPE, rect)


def test_signed_area_orientation():
    assert polygon_signed_area(UNIT_SQUARE) == pytest.approx(1.0)
    assert polygon_signed_area(UNIT_SQUARE[::-1]) == pytest.approx(-1.0)
