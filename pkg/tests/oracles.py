"""Independent reference computations used only by the tests.

Nothing here imports the package's own algorithms; each oracle is a
brute-force restatement of a definition.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations

# Frozen before the main build by exhaustive enumeration (see the ledger).
POPULAR_10 = (5, 288)
POPULAR_12 = (25, 456)
SCALED_GRID_10_25_U = 268
GRID3_SQRT2_PAIRS = 8


def brute_pairs(coords, unit_sq):
    """Unordered index pairs at squared distance ``unit_sq``, exact arithmetic."""
    pts = [(Fraction(x), Fraction(y)) for x, y in coords]
    u = Fraction(unit_sq)
    return [(i, j) for i, j in combinations(range(len(pts)), 2)
            if (pts[i][0] - pts[j][0]) ** 2 + (pts[i][1] - pts[j][1]) ** 2 == u]


def brute_popular(m):
    pts = [(x, y) for x in range(m) for y in range(m)]
    counts = {}
    for (a, b), (c, d) in combinations(pts, 2):
        s = (a - c) ** 2 + (b - d) ** 2
        counts[s] = counts.get(s, 0) + 1
    best = max(counts.values())
    return min(s for s, c in counts.items() if c == best), best


def laman_rank(n, edges):
    """Size of a maximal (2,3)-sparse edge subset, greedy with brute-force sparsity."""
    ind = []
    for e in edges:
        trial = ind + [e]
        ok = True
        for k in range(2, n + 1):
            for S in combinations(range(n), k):
                s = set(S)
                if sum(1 for a, b in trial if a in s and b in s) > 2 * k - 3:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            ind = trial
    return len(ind)


def laman_rigid(n, edges):
    return n <= 1 or laman_rank(n, edges) == 2 * n - 3


def exact_rank(rows):
    """Rank over the rationals by Gaussian elimination."""
    m = [[Fraction(v) for v in r] for r in rows]
    rank = 0
    cols = len(m[0]) if m else 0
    for c in range(cols):
        piv = next((r for r in range(rank, len(m)) if m[r][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for r in range(len(m)):
            if r != rank and m[r][c] != 0:
                f = m[r][c] / m[rank][c]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
    return rank


def exact_rigidity_rows(n, edges, pts):
    rows = []
    for i, j in edges:
        r = [Fraction(0)] * (2 * n)
        dx, dy = Fraction(pts[i][0]) - Fraction(pts[j][0]), Fraction(pts[i][1]) - Fraction(pts[j][1])
        r[2 * i], r[2 * i + 1], r[2 * j], r[2 * j + 1] = dx, dy, -dx, -dy
        rows.append(r)
    return rows


def collinear_exact(pts):
    pts = [(Fraction(x), Fraction(y)) for x, y in pts]
    for a, b, c in combinations(pts, 3):
        if (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) != 0:
            return False
    return True


def line_arrangement_faces(k):
    """Faces of k lines in general position (Euler's formula)."""
    return 1 + k + math.comb(k, 2)


def generic_lines(k, seed, box=8.0, min_angle=0.3, min_gap=0.5):
    """k lines ``(c, a, b)`` meaning ``c + a x + b y = 0``, in resolvable general position.

    Rejection-sampled so directions differ by >= ``min_angle``, every crossing
    lies in ``[-box, box]^2`` and crossings are >= ``min_gap`` apart.
    """
    import numpy as np

    rng = np.random.default_rng(seed)
    while True:
        th = rng.uniform(0, math.pi, size=k)
        off = rng.uniform(-3, 3, size=k)
        a = np.column_stack([-np.sin(th), np.cos(th)])
        ok = True
        cross = []
        for i, j in combinations(range(k), 2):
            d = abs(th[i] - th[j])
            if min(d, math.pi - d) < min_angle:
                ok = False
                break
            cross.append(np.linalg.solve(a[[i, j]], off[[i, j]]))
        if not ok:
            continue
        if cross and max(abs(c).max() for c in cross) > box:
            continue
        if any(np.linalg.norm(p - q) < min_gap for p, q in combinations(cross, 2)):
            continue
        return [(-float(o), float(x), float(y)) for o, (x, y) in zip(off, a)]
