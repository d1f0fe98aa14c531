"""Unit-distance graphs, point/unit-circle incidences and incidence bounds.

The fast path buckets points on a grid whose side is at least the unit
length, so a unit pair always lands in the same or an adjacent bucket.  Exact
inputs are first brought to a common denominator so every predicate runs on
integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .geometry import (
    DEFAULT_TOL,
    EXACT,
    FLOAT,
    ModeMismatchError,
    Point,
    Scalar,
    common_mode,
    squared_distance,
    to_mode,
)

_INT64_SAFE = 2**30


class DuplicatePointError(ValueError):
    pass


@dataclass(frozen=True)
class PointSet:
    """An ordered set of distinct planar points.

    ``unit_sq`` is the squared length counted as "unit"; scaled grids keep
    integer coordinates and set it to the popular squared distance.
    """

    points: tuple[Point, ...]
    mode: str = EXACT
    unit_sq: Scalar = 1
    tol: float = DEFAULT_TOL
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        pts = tuple(Point(*p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if pts:
            m = common_mode(pts)
            if m != self.mode:
                raise ModeMismatchError(f"points are {m} but set is tagged {self.mode}")
        object.__setattr__(self, "unit_sq", to_mode(self.unit_sq, self.mode))
        if self.unit_sq <= 0:
            raise ValueError("unit_sq must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.check:
            dup = _first_duplicate(pts, self.mode, self.tol)
            if dup is not None:
                raise DuplicatePointError(f"points {dup[0]} and {dup[1]} coincide")

    @classmethod
    def from_coords(cls, coords: Iterable[Sequence], mode: str = EXACT, unit_sq: Scalar = 1,
                    tol: float = DEFAULT_TOL) -> "PointSet":
        pts = tuple(Point(to_mode(x, mode), to_mode(y, mode)) for x, y in coords)
        return cls(pts, mode=mode, unit_sq=unit_sq, tol=tol)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    @property
    def unit_length(self) -> float:
        return math.sqrt(float(self.unit_sq))

    def subset(self, indices: Sequence[int]) -> "PointSet":
        return PointSet(tuple(self.points[i] for i in indices), self.mode, self.unit_sq, self.tol,
                        check=False)

    def as_array(self) -> np.ndarray:
        return np.array([[float(x), float(y)] for x, y in self.points], dtype=float).reshape(-1, 2)

    def is_unit(self, i: int, j: int) -> bool:
        return is_unit_pair(self.points[i], self.points[j], self.unit_sq, self.mode, self.tol)


def is_unit_pair(p, q, unit_sq, mode, tol=DEFAULT_TOL) -> bool:
    d2 = squared_distance(p, q)
    if mode == EXACT:
        return d2 == unit_sq
    return abs(d2 - unit_sq) <= 2 * tol


def _first_duplicate(pts, mode, tol):
    if mode == EXACT:
        seen = {}
        for i, p in enumerate(pts):
            if p in seen:
                return seen[p], i
            seen[p] = i
        return None
    if len(pts) < 2:
        return None
    from scipy.spatial import cKDTree

    arr = np.array(pts, dtype=float)
    pairs = cKDTree(arr).query_pairs(r=tol, output_type="ndarray")
    if len(pairs):
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
        return int(pairs[0, 0]), int(pairs[0, 1])
    return None


@dataclass(frozen=True)
class UnitDistanceGraph:
    n: int
    edges: tuple[tuple[int, int], ...]
    points: PointSet

    def __len__(self):
        return len(self.edges)

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return adj

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}


@dataclass(frozen=True)
class IncidenceStructure:
    points: PointSet
    centers: PointSet
    pairs: tuple[tuple[int, int], ...]  # (point index, center index)

    def __len__(self):
        return len(self.pairs)

    def to_json(self) -> dict:
        return {
            "n_points": len(self.points),
            "n_centers": len(self.centers),
            "incidences": [list(p) for p in self.pairs],
        }


# --- integer / float coordinate staging -------------------------------------


def _integerize(points: Sequence[Point], unit_sq: Fraction):
    """Scale exact coordinates to integers.

    Returns ``(xs, ys, target)`` with ``target = unit_sq * L**2`` or ``None``
    when no integer pair can reach it.  Arrays are int64 when overflow is
    impossible, Python-int object arrays otherwise.
    """
    lcm = 1
    for x, y in points:
        lcm = math.lcm(lcm, Fraction(x).denominator, Fraction(y).denominator)
    target = Fraction(unit_sq) * lcm * lcm
    xs = [int(Fraction(x) * lcm) for x, _ in points]
    ys = [int(Fraction(y) * lcm) for _, y in points]
    big = max((abs(v) for v in xs + ys), default=0)
    dtype = np.int64 if big < _INT64_SAFE and target < 2**61 else object
    target = int(target) if target.denominator == 1 else None
    return np.array(xs, dtype=dtype), np.array(ys, dtype=dtype), target


def _bucket_side_exact(target: int) -> int:
    return math.isqrt(target) + 1


def _candidate_pairs(bx: np.ndarray, by: np.ndarray, cx: np.ndarray, cy: np.ndarray, same: bool):
    """Yield index arrays ``(i, j)`` of all (left, right) pairs in adjacent buckets.

    ``same`` means left and right are the same set; then only ``i < j`` pairs
    are produced, each once.
    """
    span = int(max(by.max(initial=0), cy.max(initial=0))) + 3
    key_l = bx.astype(np.int64) * span + by.astype(np.int64)
    key_r = cx.astype(np.int64) * span + cy.astype(np.int64)
    order = np.argsort(key_r, kind="stable")
    sorted_keys = key_r[order]
    offsets = [(ox, oy) for ox in (-1, 0, 1) for oy in (-1, 0, 1)]
    for ox, oy in offsets:
        if same and (ox, oy) < (0, 0):
            continue
        probe = key_l + ox * span + oy
        lo = np.searchsorted(sorted_keys, probe, side="left")
        hi = np.searchsorted(sorted_keys, probe, side="right")
        counts = hi - lo
        total = int(counts.sum())
        if total == 0:
            continue
        i = np.repeat(np.arange(len(key_l)), counts)
        starts = np.repeat(lo, counts)
        within = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        j = order[starts + within]
        if same and (ox, oy) == (0, 0):
            keep = i < j
            i, j = i[keep], j[keep]
        yield i, j


def _hashed_pairs(left: PointSet, right: PointSet, same: bool) -> list[tuple[int, int]]:
    if left.mode != right.mode:
        raise ModeMismatchError("incidence inputs must share a numeric mode")
    if len(left) == 0 or len(right) == 0:
        return []
    unit_sq = left.unit_sq
    if left.mode == EXACT:
        xs, ys, target = _integerize(list(left.points) + list(right.points), unit_sq)
        if target is None:
            return []
        side = _bucket_side_exact(target)
        bxs = (xs // side).astype(np.int64)
        bys = (ys // side).astype(np.int64)
    else:
        arr = np.vstack([left.as_array(), right.as_array()])
        xs, ys = arr[:, 0], arr[:, 1]
        side = math.sqrt(float(unit_sq) + 2 * left.tol) * (1 + 1e-9)
        bxs = np.floor(xs / side).astype(np.int64)
        bys = np.floor(ys / side).astype(np.int64)
    shift_x, shift_y = bxs.min() - 1, bys.min() - 1
    bxs -= shift_x
    bys -= shift_y
    nl = len(left)
    out = []
    for i, j in _candidate_pairs(bxs[:nl], bys[:nl], bxs[nl:], bys[nl:], same):
        jj = j + nl
        dx = xs[i] - xs[jj]
        dy = ys[i] - ys[jj]
        d2 = dx * dx + dy * dy
        if left.mode == EXACT:
            hit = d2 == target
        else:
            hit = np.abs(d2 - float(unit_sq)) <= 2 * left.tol
        hit = np.asarray(hit, dtype=bool)
        out.extend(zip(i[hit].tolist(), j[hit].tolist()))
    if same:
        out = [(a, b) if a < b else (b, a) for a, b in out]
    out.sort()
    return out


def build_unit_graph(P: PointSet) -> UnitDistanceGraph:
    """All unit pairs of ``P`` via grid hashing; edges sorted lexicographically."""
    edges = _hashed_pairs(P, P, same=True)
    return UnitDistanceGraph(len(P), tuple(edges), P)


def count_unit_distances(P: PointSet) -> int:
    return len(build_unit_graph(P).edges)


def incidences(P: PointSet, C: PointSet) -> IncidenceStructure:
    """Pairs ``(p, c)`` with ``p`` on the unit circle centred at ``c``."""
    if P.mode != C.mode:
        raise ModeMismatchError("P and C must share a numeric mode")
    if P.unit_sq != C.unit_sq:
        raise ValueError("P and C disagree on the unit length")
    pairs = _hashed_pairs(P, C, same=False)
    return IncidenceStructure(P, C, tuple(pairs))


# --- brute-force oracle ------------------------------------------------------


def oracle_unit_edges(P: PointSet, unit_sq: Scalar | None = None) -> list[tuple[int, int]]:
    """O(n^2) reference: test every unordered pair directly.

    Uses no bucketing; exact inputs go through integer arithmetic (numpy when
    int64 is safe, Python ints otherwise).
    """
    target_sq = P.unit_sq if unit_sq is None else to_mode(unit_sq, P.mode)
    n = len(P)
    if n < 2:
        return []
    edges: list[tuple[int, int]] = []
    if P.mode == EXACT:
        xs, ys, target = _integerize(P.points, target_sq)
        if target is None:
            return []
        if xs.dtype == object:
            for i in range(n):
                for j in range(i + 1, n):
                    dx, dy = xs[i] - xs[j], ys[i] - ys[j]
                    if dx * dx + dy * dy == target:
                        edges.append((i, j))
            return edges
        for i in range(n - 1):
            dx = xs[i + 1:] - xs[i]
            dy = ys[i + 1:] - ys[i]
            hits = np.nonzero(dx * dx + dy * dy == target)[0]
            edges.extend((i, i + 1 + int(k)) for k in hits)
        return edges
    arr = P.as_array()
    u = float(target_sq)
    for i in range(n - 1):
        d = arr[i + 1:] - arr[i]
        hits = np.nonzero(np.abs((d * d).sum(axis=1) - u) <= 2 * P.tol)[0]
        edges.extend((i, i + 1 + int(k)) for k in hits)
    return edges


def oracle_count_unit_distances(P: PointSet) -> int:
    return len(oracle_unit_edges(P))


def oracle_incidences(P: PointSet, C: PointSet) -> list[tuple[int, int]]:
    """O(|P||C|) reference for :func:`incidences`."""
    out = []
    for i, p in enumerate(P.points):
        for j, c in enumerate(C.points):
            if is_unit_pair(p, c, P.unit_sq, P.mode, P.tol):
                out.append((i, j))
    return out


# --- Szemeredi-Trotter shaped monitor -----------------------------------------


@dataclass(frozen=True)
class BoundReport:
    passed: bool
    ratio: float
    bound: float
    tight: bool

    def to_json(self) -> dict:
        return {"passed": self.passed, "ratio": self.ratio, "bound": self.bound, "tight": self.tight}


def st_bound_check(m_points: int, n_curves: int, incidence_count: int, constant: float = 1.0,
                   tight_threshold: float = 0.5) -> BoundReport:
    """Compare a count with ``constant * (m^(2/3) n^(2/3) + m + n)``.

    ``tight`` flags the regime where the count is within ``tight_threshold``
    of the bound.  A sanity monitor only.
    """
    if min(m_points, n_curves, incidence_count) < 0:
        raise ValueError("counts must be nonnegative")
    bound = constant * ((m_points * n_curves) ** (2.0 / 3.0) + m_points + n_curves)
    ratio = incidence_count / bound if bound > 0 else (0.0 if incidence_count == 0 else math.inf)
    return BoundReport(incidence_count <= bound, ratio, bound, ratio >= tight_threshold)
