from __future__ import annotations

import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unitrig.geometry import (
    DegenerateAnchorError,
    IrrationalPoseError,
    Isometry,
    ModeMismatchError,
    Point,
    are_collinear,
    canonical_pose,
    format_scalar,
    parse_scalar,
    pose_frame,
    squared_distance,
)

H = math.sqrt(3) / 2


def test_squared_distance_examples():
    assert squared_distance((0, 0), (0, 0)) == 0
    assert squared_distance((0, 0), (1, 0)) == 1
    d = squared_distance((F(0), F(0)), (F(3, 5), F(4, 5)))
    assert d == 1 and isinstance(d, F)


def test_squared_distance_rejects_mixed_modes():
    with pytest.raises(ModeMismatchError):
        squared_distance((F(0), F(0)), (1.0, 0.0))


def test_parse_and_format_roundtrip():
    assert parse_scalar("5/4") == F(5, 4)
    assert parse_scalar("1.25") == F(5, 4)
    assert parse_scalar("1.25", "float") == 1.25
    assert format_scalar(F(5, 4)) == "5/4"
    assert format_scalar(3) == "3"
    assert float(format_scalar(0.1)) == 0.1


def _close(a, b, tol=1e-12):
    return all(abs(p[0] - q[0]) < tol and abs(p[1] - q[1]) < tol for p, q in zip(a, b))


def test_canonical_pose_examples():
    tri = [Point(0.0, 0.0), Point(1.0, 0.0), Point(0.5, H)]
    assert _close(canonical_pose(tri, (0, 1, 2)), tri)
    moved = [Point(x + 5, y + 7) for x, y in tri]
    assert _close(canonical_pose(moved, (0, 1, 2)), tri)
    refl = [Point(x, -y) for x, y in tri]
    assert _close(canonical_pose(refl, (0, 1, 2)), tri)


def test_canonical_pose_errors():
    with pytest.raises(DegenerateAnchorError):
        canonical_pose([Point(0.0, 0.0), Point(0.0, 0.0), Point(1.0, 1.0)], (0, 1, 2))
    with pytest.raises(IndexError):
        canonical_pose([Point(0.0, 0.0), Point(1.0, 0.0)], (0, 1, 5))
    with pytest.raises(IrrationalPoseError):
        canonical_pose([Point(F(0), F(0)), Point(F(1), F(1)), Point(F(0), F(1))], (0, 1, 2))


def test_exact_pose_with_rational_anchor_stays_exact():
    pts = [Point(F(1), F(2)), Point(F(4), F(6)), Point(F(1), F(7))]  # anchor length 5
    pose = canonical_pose(pts, (0, 1, 2))
    assert pose[0] == (0, 0) and pose[1] == (5, 0)
    assert all(isinstance(c, F) for p in pose for c in p)
    assert pose[2][1] > 0


def test_collinear_examples():
    assert are_collinear([(0, 0), (1, 1), (2, 2)])
    assert not are_collinear([(0, 0), (1, 0), (0, 1)])
    assert are_collinear([(3, 4)])
    assert are_collinear([(0.0, 0.0), (5.0, 1.0)])


def test_collinear_float_tolerance_is_scale_relative():
    pts = [(0.0, 0.0), (1.0, 0.0), (2.0, 1e-7)]
    for s in (1e-6, 1.0, 1e6):
        assert are_collinear([(x * s, y * s) for x, y in pts]) is False
    near = [(0.0, 0.0), (1.0, 0.0), (2.0, 1e-12)]
    for s in (1e-6, 1.0, 1e6):
        assert are_collinear([(x * s, y * s) for x, y in near]) is True


def test_isometry_rejects_non_orthogonal():
    with pytest.raises(ValueError):
        Isometry(1, 1, 0, 1)


rat = st.fractions(min_value=-20, max_value=20, max_denominator=12)
pt = st.tuples(rat, rat).map(lambda t: Point(*t))
# rational rotations from Pythagorean triples keep exact arithmetic
triples = st.sampled_from([(3, 4, 5), (5, 12, 13), (8, 15, 17), (1, 0, 1), (0, 1, 1)])


def _rat_isometry(tr, flip, tx, ty):
    a, b, c = tr
    cs, sn = F(a, c), F(b, c)
    if flip:
        return Isometry(cs, sn, sn, -cs, tx, ty)
    return Isometry(cs, -sn, sn, cs, tx, ty)


@settings(max_examples=60, deadline=None)
@given(st.lists(pt, min_size=3, max_size=7, unique=True), triples, st.booleans(), rat, rat)
def test_pose_frame_invariant_under_exact_isometry(pts, tr, flip, tx, ty):
    iso = _rat_isometry(tr, flip, tx, ty)
    moved = iso.apply(pts)
    # pick a non-collinear anchor triple if one exists
    k = next((k for k in range(2, len(pts)) if not are_collinear([pts[0], pts[1], pts[k]])), None)
    if k is None or pts[0] == pts[1]:
        return
    a = pose_frame(pts, 0, 1, k)
    b = pose_frame(moved, 0, 1, k)
    assert a[0] == b[0] and a[1] == b[1]


@settings(max_examples=60, deadline=None)
@given(st.lists(pt, min_size=0, max_size=6), triples, st.booleans(), rat, rat, st.randoms())
def test_collinearity_invariant_under_isometry_and_permutation(pts, tr, flip, tx, ty, rnd):
    iso = _rat_isometry(tr, flip, tx, ty)
    perm = list(pts)
    rnd.shuffle(perm)
    v = are_collinear(pts)
    assert are_collinear(iso.apply(pts)) == v
    assert are_collinear(perm) == v


@settings(max_examples=60, deadline=None)
@given(pt, pt)
def test_squared_distance_symmetric_and_zero_iff_equal(p, q):
    assert squared_distance(p, q) == squared_distance(q, p)
    assert (squared_distance(p, q) == 0) == (p == q)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=3, max_size=6),
       st.floats(0, 2 * math.pi), st.floats(-50, 50), st.floats(-50, 50))
def test_float_canonical_pose_invariant_and_idempotent(raw, th, tx, ty):
    pts = [Point(x, y) for x, y in raw]
    if squared_distance(pts[0], pts[1]) < 1e-3 or are_collinear(pts[:3], 1e-3):
        return
    base = canonical_pose(pts, (0, 1, 2))
    moved = Isometry.rotation(th, tx, ty).apply(pts)
    assert _close(canonical_pose(moved, (0, 1, 2)), base, 1e-7)
    assert _close(canonical_pose(base, (0, 1, 2)), base, 1e-9)
