import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from dasplace.scenario import (
    ApPose,
    RegionSpec,
    centralized_placement,
    geometry,
    make_grid,
    on_boundary,
    rotate_placement,
    symmetric_placement,
)


@pytest.mark.parametrize(
    "L, spacing, count",
    [(400, 1.0, 160_801), (2, 1.0, 9), (10, 2.5, 25), (0.3, 0.1, 16)],
)
def test_grid_size(L, spacing, count):
    region = RegionSpec(L, spacing)
    pts = make_grid(region)
    assert pts.shape == (count, 2)
    assert region.size == count


def test_grid_order_and_corners():
    pts = make_grid(RegionSpec(2, 1.0))
    expected = [(x, y) for y in range(3) for x in range(3)]
    assert [tuple(p) for p in pts] == expected
    pts = make_grid(RegionSpec(10, 2.5))
    for corner in [(0, 0), (10, 0), (0, 10), (10, 10)]:
        assert any(np.allclose(p, corner) for p in pts)


def test_grid_deterministic_and_read_only():
    a = make_grid(RegionSpec(7, 0.5))
    b = make_grid(RegionSpec(7, 0.5))
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        a[0, 0] = 1.0


@pytest.mark.parametrize("L, s", [(0, 1), (-1, 1), (10, 0), (1, 2)])
def test_region_rejects_bad_geometry(L, s):
    with pytest.raises(ValueError):
        RegionSpec(L, s)


def _positions(placement):
    return [p.position for p in placement.poses]


def test_symmetric_placement_corners():
    assert _positions(symmetric_placement(RegionSpec(400), 0)) == [
        (0, 400), (400, 400), (400, 0), (0, 0)]


def test_symmetric_placement_midpoints():
    p = symmetric_placement(RegionSpec(400), 200)
    assert _positions(p) == [(200, 400), (400, 200), (200, 0), (0, 200)]
    assert p.ratio == 0.5


def test_symmetric_placement_offset_100():
    p = symmetric_placement(RegionSpec(400), 100)
    assert _positions(p) == [(100, 400), (400, 300), (300, 0), (0, 100)]
    assert [q.inward_normal for q in p.poses] == [(0, -1), (-1, 0), (0, 1), (1, 0)]
    assert p.ratio == 0.25


@pytest.mark.parametrize("D", [-1e-6, 400.1])
def test_symmetric_placement_domain(D):
    with pytest.raises(ValueError):
        symmetric_placement(RegionSpec(400), D)


@given(st.floats(0, 1))
def test_symmetric_poses_on_boundary_and_rotate_into_each_other(frac):
    region = RegionSpec(50)
    p = symmetric_placement(region, 50 * frac)
    assert all(on_boundary(region, q) for q in p.poses)
    rot = rotate_placement(region, p)
    # rotating AP t gives AP t+1
    for t in range(4):
        a, b = rot.poses[t], p.poses[(t + 1) % 4]
        assert np.allclose(a.position, b.position, atol=1e-9)
        assert np.allclose(a.inward_normal, b.inward_normal)


def test_centralized_placement():
    p = centralized_placement(RegionSpec(400))
    assert len(p) == 1
    assert p.poses[0].position == (200, 400)
    assert p.poses[0].inward_normal == (0, -1)


def test_pose_rejects_non_unit_normal():
    with pytest.raises(ValueError):
        ApPose((0, 0), (1, 1))


def test_geometry_broadside():
    d, th = geometry(ApPose((200, 400), (0, -1)), (200, 0), 3.0)
    assert d == 400 and th == 0


def test_geometry_farfield_clamp():
    d, _ = geometry(ApPose((200, 400), (0, -1)), (200, 399), 3.0)
    assert d == 3.0


def test_geometry_endfire():
    _, th = geometry(ApPose((0, 400), (0, -1)), (300, 400), 3.0)
    assert th == pytest.approx(math.pi / 2, abs=0)


def test_geometry_sign_and_coincident():
    pose = ApPose((200, 400), (0, -1))
    _, right = geometry(pose, (300, 300), 3.0)
    _, left = geometry(pose, (100, 300), 3.0)
    assert right == pytest.approx(math.pi / 4) and left == pytest.approx(-math.pi / 4)
    assert geometry(pose, (200, 400), 3.0) == (3.0, 0.0)


def _rot_cw(pt, c):
    dx, dy = pt[0] - c, pt[1] - c
    return (c + dy, c - dx)


@settings(max_examples=60)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_geometry_rotation_invariance(frac, fx, fy):
    L = 100.0
    region = RegionSpec(L)
    p = symmetric_placement(region, L * frac)
    loc = (L * fx, L * fy)
    # the angle to a point within rounding distance of an AP is ill-conditioned
    assume(min(math.dist(pose.position, loc) for pose in p.poses) > 1e-6)
    for t in range(4):
        # AP t+1 sees the clockwise-rotated location as AP t sees the original
        rotated = _rot_cw(loc, L / 2)
        d0, th0 = geometry(p.poses[t], loc, 3.0)
        d1, th1 = geometry(p.poses[(t + 1) % 4], rotated, 3.0)
        assert d1 == pytest.approx(d0, rel=1e-12, abs=1e-9)
        assert abs(th1) == pytest.approx(abs(th0), abs=1e-9)


@given(st.floats(0, 1))
def test_reflection_pairs(frac):
    L = 80.0
    a = symmetric_placement(RegionSpec(L), L * frac)
    b = symmetric_placement(RegionSpec(L), L - L * frac)
    mirrored = sorted((L - x, y) for x, y in _positions(a))
    assert np.allclose(mirrored, sorted(_positions(b)), atol=1e-9)
