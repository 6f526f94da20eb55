"""Shape constructors, measures, nesting and distances."""
import math

import numpy as np
import pytest

import nlperim.geometry as geo


def test_volume_box_ball_segment():
    assert geo.volume(geo.make_box([0, 0], [2, 3])) == pytest.approx(6.0)
    assert geo.volume(geo.make_ball([1.0, -2.0], 0.5)) == pytest.approx(
        math.pi * 0.25)
    assert geo.volume(geo.make_ball([0, 0, 0], 1.0)) == pytest.approx(
        4.0 * math.pi / 3.0)
    assert geo.volume(geo.make_segment(-1.0, 3.0)) == pytest.approx(4.0)


def test_volume_simplex():
    # unit right simplex in R^3 has volume 1/6
    pts = np.vstack([np.zeros(3), np.eye(3)])
    assert geo.volume(geo.make_polytope(pts)) == pytest.approx(1.0 / 6.0)


def test_volume_cone_profile():
    cone = geo.build_cone(apex=[0, 0, 2.0], base_center=[0, 0, 0],
                          base_radius=1.0)
    assert geo.volume(cone) == pytest.approx(math.pi * 2.0 / 3.0, rel=1e-9)


def test_profile_body_volume_matches_solid_of_revolution():
    # R(t) = sqrt(1 - t^2) describes the unit ball
    t = np.linspace(-1.0, 1.0, 4001)
    r = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    body = geo.make_profile_body([0, 0, 1.0], [0, 0, 0], t, r)
    assert geo.volume(body) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-5)


def test_euclidean_perimeter():
    assert geo.euclidean_perimeter(geo.make_box([0, 0], [1, 1])) == \
        pytest.approx(4.0)
    assert geo.euclidean_perimeter(geo.make_ball([0, 0], 2.0)) == \
        pytest.approx(4.0 * math.pi)
    assert geo.euclidean_perimeter(geo.make_ball([0, 0, 0], 1.5)) == \
        pytest.approx(4.0 * math.pi * 2.25)


def test_contains_and_membership_tolerance():
    box = geo.make_box([0, 0], [1, 1])
    assert geo.contains(box, [0.5, 0.5])
    assert geo.contains(box, [1.0, 1.0])
    assert not geo.contains(box, [1.1, 0.5])
    inside = geo.contains_many(box, np.array([[0.2, 0.2], [2.0, 0.2]]))
    assert inside.tolist() == [True, False]


def test_is_nested():
    small = geo.make_ball([0.1, 0.0], 0.5)
    big = geo.make_ball([0.0, 0.0], 1.0)
    assert geo.is_nested(small, big)
    assert not geo.is_nested(big, small)
    assert geo.is_nested(geo.make_box([0, 0], [1, 1]),
                         geo.make_box([-0.5, -0.5], [1.5, 1.5]))


def test_intersect_halfspace_halves_box():
    box = geo.make_box([0, 0], [1, 1])
    hs = geo.HalfSpace(normal=np.array([1.0, 0.0]), offset=0.5)
    cut = geo.intersect_halfspace(box, hs)
    assert geo.volume(cut) == pytest.approx(0.5)


def test_intersect_halfspace_empty():
    box = geo.make_box([0, 0], [1, 1])
    hs = geo.HalfSpace(normal=np.array([1.0, 0.0]), offset=-0.2)
    with pytest.raises(geo.EmptyIntersection):
        geo.intersect_halfspace(box, hs)


def test_support_interval_ball():
    ball = geo.make_ball([1.0, 2.0], 0.5)
    nu = np.array([0.0, 1.0])
    lo, hi = geo.support_interval(ball, nu)
    assert lo == pytest.approx(1.5)
    assert hi == pytest.approx(2.5)


def test_slice_measure():
    ball = geo.make_ball([0, 0, 0], 1.0)
    # disc of radius sqrt(1 - t^2)
    assert geo.slice_measure(ball, [0, 0, 1.0], 0.6) == pytest.approx(
        math.pi * 0.64, rel=1e-9)
    box = geo.make_box([0, 0], [2, 3])
    assert geo.slice_measure(box, [1.0, 0.0], 1.0) == pytest.approx(3.0)


def test_hausdorff_distance_concentric_balls():
    A = geo.make_ball([0.0, 0.0], 0.5)
    B = geo.make_ball([0.0, 0.0], 1.25)
    h, a, b = geo.hausdorff_distance(A, B)
    assert h == pytest.approx(0.75, rel=1e-6)
    # witnesses: a on the small sphere, b on the big one, radially aligned
    assert np.linalg.norm(a) == pytest.approx(0.5, abs=1e-6)
    assert np.linalg.norm(b) == pytest.approx(1.25, abs=1e-6)


def test_hausdorff_distance_boxes():
    A = geo.make_box([0, 0], [1, 1])
    B = geo.make_box([-1, -1], [2, 2])
    h, a, b = geo.hausdorff_distance(A, B)
    assert h == pytest.approx(math.sqrt(2.0), rel=1e-6)


def test_translate_and_scale():
    ball = geo.make_ball([0.0, 0.0], 1.0)
    moved = geo.translate(ball, [3.0, 4.0])
    assert geo.contains(moved, [3.0, 4.0])
    assert not geo.contains(moved, [0.0, 0.0])
    doubled = geo.scale(ball, 2.0)
    assert geo.volume(doubled) == pytest.approx(4.0 * geo.volume(ball))
    tri = geo.make_polytope(np.array([[0.0, 0], [1, 0], [0, 1]]))
    assert geo.volume(geo.scale(tri, 3.0)) == pytest.approx(9.0 * 0.5)


def test_point_distance_and_projection():
    ball = geo.make_ball([0.0, 0.0], 1.0)
    assert geo.point_distance(ball, [3.0, 0.0]) == pytest.approx(2.0)
    assert geo.point_distance(ball, [0.2, 0.0]) == 0.0
    p = geo.project_point(ball, [0.0, 5.0])
    assert np.allclose(p, [0.0, 1.0], atol=1e-9)
    box = geo.make_box([0, 0], [1, 1])
    p = geo.project_point(box, [2.0, 0.5])
    assert np.allclose(p, [1.0, 0.5], atol=1e-9)


def test_body_distance_balls():
    A = geo.make_ball([0.0, 0.0], 1.0)
    B = geo.make_ball([4.0, 0.0], 1.5)
    assert geo.body_distance(A, B) == pytest.approx(1.5)
    assert geo.body_distance(B, A) == pytest.approx(1.5)
    C = geo.make_ball([1.0, 0.0], 1.0)
    assert geo.body_distance(A, C) == 0.0


def test_body_distance_coaxial_profiles():
    # cylinders along z with an axial gap of 0.5
    E = geo.make_profile_body([0, 0, 1.0], [0, 0, 0.0],
                              np.array([0.0, 1.0]), np.array([0.7, 0.7]))
    F = geo.make_profile_body([0, 0, 1.0], [0, 0, 1.5],
                              np.array([0.0, 1.0]), np.array([0.7, 0.7]))
    assert geo.body_distance(E, F) == pytest.approx(0.5, rel=1e-9)
    # same pair with one axis reversed
    Fr = geo.make_profile_body([0, 0, -1.0], [0, 0, 2.5],
                               np.array([0.0, 1.0]), np.array([0.7, 0.7]))
    assert geo.body_distance(E, Fr) == pytest.approx(0.5, rel=1e-9)


def test_body_distance_cones_apex_to_apex():
    E = geo.build_cone(apex=[0, 0, 1.0], base_center=[0, 0, 0],
                       base_radius=1.0)
    F = geo.build_cone(apex=[0, 0, 2.0], base_center=[0, 0, 3.0],
                       base_radius=1.0)
    assert geo.body_distance(E, F) == pytest.approx(1.0, rel=1e-9)


def test_body_distance_containment_and_overlap():
    inner = geo.make_box([0.2, 0.2], [0.4, 0.4])
    outer = geo.make_box([0, 0], [1, 1])
    assert geo.body_distance(inner, outer) == 0.0
    shifted = geo.make_box([0.5, 0.5], [1.5, 1.5])
    assert geo.body_distance(outer, shifted) == 0.0


def test_body_distance_separated_boxes():
    A = geo.make_box([0, 0, 0], [1, 1, 1])
    B = geo.make_box([2.5, 0, 0], [3.5, 1, 1])
    # face-normal gap is exact for axis-aligned boxes
    assert geo.body_distance(A, B) == pytest.approx(1.5, rel=1e-9)


def test_body_distance_is_a_lower_bound():
    # oblique polytopes: the reported value never exceeds the true
    # distance between sampled vertices
    rng = np.random.default_rng(3)
    P = geo.make_polytope(rng.normal(size=(12, 3)) * 0.4)
    Q = geo.make_polytope(rng.normal(size=(12, 3)) * 0.4 + [3.0, 0.2, -0.1])
    d = geo.body_distance(P, Q)
    pair_min = np.min(np.linalg.norm(
        P.shape.points[:, None, :] - Q.shape.points[None, :, :], axis=2))
    assert 0.0 < d <= pair_min + 1e-9


def test_body_serialization_roundtrip():
    bodies = [
        geo.make_ball([0.5, -1.0], 2.0),
        geo.make_box([0, 0, 0], [1, 2, 3]),
        geo.make_segment(0.0, 2.0),
        geo.make_polytope(np.array([[0.0, 0], [1, 0], [0, 1], [1, 1]])),
        geo.build_cone(apex=[0, 0, 1.0], base_center=[0, 0, 0],
                       base_radius=0.5),
        geo.make_profile_body([0, 0, 1.0], [0, 0, 0],
                              np.array([0.0, 0.5, 1.0]),
                              np.array([0.2, 0.5, 0.2])),
    ]
    for body in bodies:
        back = geo.body_from_dict(geo.body_to_dict(body))
        assert back.dim == body.dim
        assert geo.volume(back) == pytest.approx(geo.volume(body), rel=1e-12)


def test_body_from_dict_rejects_malformed():
    with pytest.raises(geo.GeometryError):
        geo.body_from_dict({"type": "ball", "centre": [0, 0], "radius": 1.0})
    with pytest.raises(geo.GeometryError):
        geo.body_from_dict({"type": "nonagon"})


def test_make_polytope_rejects_degenerate_input():
    with pytest.raises(geo.GeometryError):
        geo.make_polytope(np.array([[0.0, 0.0], [1.0, 1.0]]))


def test_as_polytope_inscribes_ball():
    ball = geo.make_ball([0.0, 0.0], 1.0)
    poly = geo.as_polytope(ball, resolution=256)
    r = np.linalg.norm(poly.shape.points, axis=1)
    assert np.max(r) <= 1.0 + 1e-9
    assert geo.volume(poly) == pytest.approx(math.pi, rel=1e-3)


def test_scaling_volume_law_3d():
    rng = np.random.default_rng(7)
    P = geo.make_polytope(rng.normal(size=(15, 3)))
    lam = 1.7
    assert geo.volume(geo.scale(P, lam)) == pytest.approx(
        lam ** 3 * geo.volume(P), rel=1e-9)
