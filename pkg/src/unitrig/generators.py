"""Point-set and realization generators.

All generators are deterministic functions of their arguments and seed.
Randomized realizations are only *pseudo*-generic: seeded floats cannot be
certified algebraically independent, so generic-rigidity verdicts built on
them are Monte Carlo (a failure needs the coordinates to hit a proper
algebraic subset, which happens with probability ~0).
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import asdict, dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .geometry import EXACT, FLOAT, Point
from .unit_graph import PointSet

KINDS = ("integer_grid", "scaled_grid_unit", "random_disk", "pseudo_generic")


class NoUnitPairsWarning(UserWarning):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str = "integer_grid"
    m: int = 3
    d: int = 1
    seed: int = 0
    epsilon: float = 0.0
    mode: str = EXACT

    def validate(self) -> list[str]:
        errs = []
        if self.kind not in KINDS:
            errs.append(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.m < 1:
            errs.append("m must be >= 1")
        if self.d < 1:
            errs.append("d must be >= 1")
        if self.epsilon < 0:
            errs.append("epsilon must be >= 0")
        if not 0 <= self.seed < 2**64:
            errs.append("seed must fit in 64 unsigned bits")
        return errs

    def to_json(self) -> dict:
        return asdict(self)


def integer_grid(m: int) -> PointSet:
    if m < 1:
        raise ValueError("m must be >= 1")
    return PointSet.from_coords([(x, y) for x in range(m) for y in range(m)], mode=EXACT)


def is_sum_of_two_squares(d: int) -> bool:
    a = 0
    while a * a <= d:
        b = math.isqrt(d - a * a)
        if b * b == d - a * a:
            return True
        a += 1
    return False


def square_distance_histogram(m: int) -> Counter:
    """Pair counts by squared distance in the m x m grid, via difference vectors.

    A difference vector (a, b) occurs in (m - |a|)(m - |b|) pairs; only one
    vector of each +/- pair is counted.
    """
    hist: Counter = Counter()
    for a in range(m):
        for b in range(-(m - 1), m):
            if a == 0 and b <= 0:
                continue
            hist[a * a + b * b] += (m - a) * (m - abs(b))
    return hist


def best_popular_square_distance(m: int) -> tuple[int, int]:
    """Most frequent squared distance of the m x m grid, ties toward smaller d."""
    if m < 2:
        raise ValueError("m must be >= 2")
    hist = square_distance_histogram(m)
    best = max(hist.values())
    return min(d for d, c in hist.items() if c == best), best


def brute_force_popular_square_distance(m: int) -> tuple[int, int]:
    """O(m^4) reference for :func:`best_popular_square_distance`."""
    pts = [(x, y) for x in range(m) for y in range(m)]
    hist = Counter((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 for p, q in combinations(pts, 2))
    best = max(hist.values())
    return min(d for d, c in hist.items() if c == best), best


def scaled_grid_unit(m: int, d: int, mode: str = EXACT) -> PointSet:
    """The m x m grid with squared distance ``d`` promoted to the unit.

    Exact mode keeps integer coordinates and tags ``unit_sq = d``; float mode
    divides coordinates by sqrt(d) so the unit is literally 1.
    """
    if d < 1:
        raise ValueError("d must be a positive integer")
    if not is_sum_of_two_squares(d):
        warnings.warn(f"{d} is not a sum of two squares; the grid has no unit pairs",
                      NoUnitPairsWarning, stacklevel=2)
    coords = [(x, y) for x in range(m) for y in range(m)]
    if mode == EXACT:
        return PointSet.from_coords(coords, mode=EXACT, unit_sq=d)
    s = math.sqrt(d)
    return PointSet.from_coords([(x / s, y / s) for x, y in coords], mode=FLOAT, unit_sq=1.0)


def random_disk(n: int, radius: float, seed: int) -> PointSet:
    """``n`` float points uniform in the disk of the given radius."""
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.random(n))
    th = 2 * np.pi * rng.random(n)
    return PointSet.from_coords(np.column_stack([r * np.cos(th), r * np.sin(th)]).tolist(), mode=FLOAT)


def pseudo_generic_realization(n_vertices: int, seed: int, coordinate_range: float = 1000.0) -> list[Point]:
    """Seeded uniform floats in ``[-coordinate_range, coordinate_range]^2``."""
    if n_vertices < 1:
        raise ValueError("graph must have at least one vertex")
    rng = np.random.default_rng(seed)
    xy = rng.uniform(-coordinate_range, coordinate_range, size=(n_vertices, 2))
    return [Point(float(x), float(y)) for x, y in xy]


def perturb(P: PointSet, epsilon: float, seed: int) -> PointSet:
    """Move every point by an independent uniform offset in [-eps, eps]^2.

    Exact sets stay exact: each float offset is converted to the rational it
    represents.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if epsilon == 0:
        return P
    rng = np.random.default_rng(seed)
    off = rng.uniform(-epsilon, epsilon, size=(len(P), 2))
    if P.mode == EXACT:
        pts = [Point(x + Fraction(float(a)), y + Fraction(float(b))) for (x, y), (a, b) in zip(P.points, off)]
    else:
        pts = [Point(x + float(a), y + float(b)) for (x, y), (a, b) in zip(P.points, off)]
    return PointSet(tuple(pts), P.mode, P.unit_sq, P.tol)


def generate(spec: GeneratorSpec) -> PointSet:
    errs = spec.validate()
    if errs:
        raise ValueError("; ".join(errs))
    if spec.kind == "integer_grid":
        P = integer_grid(spec.m)
        if spec.mode == FLOAT:
            P = PointSet.from_coords(P.points, mode=FLOAT)
    elif spec.kind == "scaled_grid_unit":
        P = scaled_grid_unit(spec.m, spec.d, spec.mode)
    elif spec.kind == "random_disk":
        # m points in a disk sized to keep the unit density moderate
        P = random_disk(spec.m, max(1.0, math.sqrt(spec.m) / 2), spec.seed)
    else:
        P = PointSet.from_coords(pseudo_generic_realization(spec.m, spec.seed), mode=FLOAT)
    return perturb(P, spec.epsilon, spec.seed)
