"""Planar primitives shared by every other module.

Coordinates are either exact rationals (:class:`fractions.Fraction`, with
``int`` accepted as a rational) or binary64 floats.  A container records its
mode once; mixing modes inside one predicate is an error rather than a silent
promotion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence, Union

EXACT = "exact"
FLOAT = "float"
MODES = (EXACT, FLOAT)

DEFAULT_TOL = 1e-9

Scalar = Union[Fraction, int, float]


class ModeMismatchError(TypeError):
    """Raised when exact and float quantities meet in one predicate."""


class DegenerateAnchorError(ValueError):
    """Raised when the anchors of a canonical pose coincide."""


class IrrationalPoseError(ValueError):
    """Exact canonical pose needs a rational anchor length."""


class Point(NamedTuple):
    x: Scalar
    y: Scalar


def scalar_mode(v: Scalar) -> str:
    if isinstance(v, bool):
        raise TypeError("booleans are not coordinates")
    if isinstance(v, (Fraction, int)):
        return EXACT
    if isinstance(v, float):
        return FLOAT
    raise TypeError(f"unsupported scalar type {type(v).__name__}")


def point_mode(p: Sequence[Scalar]) -> str:
    mx, my = scalar_mode(p[0]), scalar_mode(p[1])
    if mx != my:
        raise ModeMismatchError(f"point {p!r} mixes {mx} and {my} coordinates")
    return mx


def common_mode(points: Iterable[Sequence[Scalar]]) -> str:
    mode = None
    for p in points:
        m = point_mode(p)
        if mode is None:
            mode = m
        elif m != mode:
            raise ModeMismatchError(f"mixed numeric modes: {mode} and {m}")
    return mode or EXACT


def parse_scalar(text: str, mode: str = EXACT) -> Scalar:
    """Parse ``"1.25"`` or ``"5/4"``; exact mode keeps decimals exact."""
    text = text.strip()
    if mode == EXACT:
        return Fraction(text)
    if "/" in text:
        return float(Fraction(text))
    return float(text)


def format_scalar(v: Scalar) -> str:
    if isinstance(v, float):
        return repr(v)
    v = Fraction(v)
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def to_mode(v: Scalar, mode: str) -> Scalar:
    if mode == EXACT:
        return Fraction(v)
    return float(v)


def squared_distance(p: Sequence[Scalar], q: Sequence[Scalar]) -> Scalar:
    """``(p.x - q.x)**2 + (p.y - q.y)**2``, exact for rational input."""
    if point_mode(p) != point_mode(q):
        raise ModeMismatchError("squared_distance of exact and float points")
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    return dx * dx + dy * dy


def orient(a, b, c) -> Scalar:
    """Twice the signed area of triangle abc."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def are_collinear(points: Sequence[Sequence[Scalar]], tol: float = DEFAULT_TOL) -> bool:
    """True iff all points lie on a common line.

    Float mode compares each orientation determinant with ``tol`` times the
    squared diameter of its triple, so the verdict does not change under
    uniform scaling.
    """
    pts = list(points)
    if len(pts) <= 2:
        return True
    mode = common_mode(pts)
    # anchor on the farthest pair from the first point to keep the float test stable
    a = pts[0]
    b = max(pts[1:], key=lambda p: float(squared_distance(a, p)))
    if mode == EXACT:
        if a == b:
            # every point equals a
            return True
        return all(orient(a, b, c) == 0 for c in pts)
    if squared_distance(a, b) == 0.0:
        return True
    for c in pts:
        det = orient(a, b, c)
        scale = max(squared_distance(a, b), squared_distance(a, c), squared_distance(b, c))
        if abs(det) > tol * scale:
            return False
    return True


@dataclass(frozen=True)
class Isometry:
    """``x -> M x + t`` with ``M`` orthogonal (entries a, b, c, d row-major)."""

    a: Scalar
    b: Scalar
    c: Scalar
    d: Scalar
    tx: Scalar = 0
    ty: Scalar = 0
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        a, b, c, d = self.a, self.b, self.c, self.d
        cols = (a * a + c * c - 1, b * b + d * d - 1, a * b + c * d)
        if any(isinstance(v, float) for v in (a, b, c, d)):
            if any(abs(v) > self.tol for v in cols):
                raise ValueError("matrix is not orthogonal within tolerance")
        elif any(v != 0 for v in cols):
            raise ValueError("matrix is not exactly orthogonal")

    @property
    def determinant(self) -> Scalar:
        return self.a * self.d - self.b * self.c

    @classmethod
    def rotation(cls, theta: float, tx: float = 0.0, ty: float = 0.0) -> "Isometry":
        c, s = math.cos(theta), math.sin(theta)
        return cls(c, -s, s, c, tx, ty)

    @classmethod
    def reflection_x(cls) -> "Isometry":
        return cls(1, 0, 0, -1)

    def __call__(self, p: Sequence[Scalar]) -> Point:
        x, y = p[0], p[1]
        return Point(self.a * x + self.b * y + self.tx, self.c * x + self.d * y + self.ty)

    def apply(self, points: Iterable[Sequence[Scalar]]) -> list[Point]:
        return [self(p) for p in points]


def _rational_sqrt(v: Fraction) -> Fraction | None:
    v = Fraction(v)
    if v < 0:
        return None
    n, d = v.numerator, v.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def pose_frame(points, i: int, j: int, k: int | None = None):
    """Scaled canonical coordinates needing no square root.

    Returns ``(L2, coords, flipped)`` where ``L2`` is the squared anchor length
    and ``coords[m] = (dot, cross)`` of ``points[m] - points[i]`` against the
    anchor direction.  The true canonical coordinates are ``coords / sqrt(L2)``.
    """
    pi, pj = points[i], points[j]
    ux, uy = pj[0] - pi[0], pj[1] - pi[1]
    L2 = ux * ux + uy * uy
    if L2 == 0:
        raise DegenerateAnchorError(f"anchor points {i} and {j} coincide")
    coords = []
    for p in points:
        vx, vy = p[0] - pi[0], p[1] - pi[1]
        coords.append((ux * vx + uy * vy, ux * vy - uy * vx))
    flipped = False
    if k is not None and coords[k][1] < 0:
        flipped = True
        coords = [(dx, -cy) for dx, cy in coords]
    return L2, coords, flipped


def canonical_pose(points: Sequence[Sequence[Scalar]], anchors: tuple[int, int, int]) -> list[Point]:
    """Move ``points[i]`` to the origin, ``points[j]`` onto the positive x-axis,
    and reflect if needed so ``points[k]`` has ``y >= 0``.

    Exact input stays exact only when the anchor length is rational; otherwise
    :class:`IrrationalPoseError` is raised (use :func:`pose_frame` instead).
    """
    i, j, k = anchors
    n = len(points)
    if not all(0 <= a < n for a in anchors):
        raise IndexError(f"anchor triple {anchors} out of range for {n} points")
    mode = common_mode(points)
    L2, coords, _ = pose_frame(points, i, j, k)
    if mode == EXACT:
        L = _rational_sqrt(L2)
        if L is None:
            raise IrrationalPoseError(f"anchor length sqrt({L2}) is irrational")
    else:
        L = math.sqrt(L2)
    return [Point(dx / L, cy / L) for dx, cy in coords]


def bounding_box(points: Sequence[Sequence[Scalar]]) -> tuple[float, float, float, float]:
    xs = [float(p[0]) for p in points]
    ys = [float(p[1]) for p in points]
    return min(xs), min(ys), max(xs), max(ys)
