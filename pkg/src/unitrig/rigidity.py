"""Planar framework rigidity.

Two views of the same question:

* combinatorial -- the (2,3) pebble game decides generic rigidity and finds
  maximal rigid components;
* at a concrete realization -- the rank of the rigidity matrix.  Full rank
  ``2|V| - 3`` certifies infinitesimal, hence local, rigidity.  A rank gap is
  only called "flexible" when it survives random perturbations of the
  realization; otherwise the verdict is "inconclusive", because rank alone
  cannot decide rigidity at non-regular placements.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .geometry import Point, are_collinear, common_mode

RIGID = "rigid"
FLEXIBLE = "flexible"
INCONCLUSIVE = "inconclusive"

DEFAULT_RANK_TOL = 1e-8
SEARCH_CAP = 12


def _norm_edges(edges: Iterable[Sequence[int]]) -> tuple[tuple[int, int], ...]:
    out = set()
    for i, j in edges:
        i, j = int(i), int(j)
        if i == j:
            raise ValueError(f"self-loop at vertex {i}")
        out.add((i, j) if i < j else (j, i))
    return tuple(sorted(out))


@dataclass(frozen=True)
class Framework:
    n: int
    edges: tuple[tuple[int, int], ...]
    realization: tuple[Point, ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", _norm_edges(self.edges))
        object.__setattr__(self, "realization", tuple(Point(*p) for p in self.realization))
        if len(self.realization) != self.n:
            raise ValueError(f"realization has {len(self.realization)} points for {self.n} vertices")
        if any(not 0 <= v < self.n for e in self.edges for v in e):
            raise ValueError("edge endpoint out of range")

    def induced(self, vertices: Sequence[int]) -> "Framework":
        """Subframework on ``vertices``, relabelled ``0..k-1`` in the given order."""
        idx = {v: i for i, v in enumerate(vertices)}
        edges = [(idx[a], idx[b]) for a, b in self.edges if a in idx and b in idx]
        return Framework(len(vertices), tuple(edges), tuple(self.realization[v] for v in vertices))

    def adjacency(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in range(self.n)]
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def as_array(self) -> np.ndarray:
        return np.array([[float(x), float(y)] for x, y in self.realization], dtype=float).reshape(-1, 2)

    def to_json(self) -> dict:
        from .geometry import format_scalar

        return {
            "n": self.n,
            "edges": [list(e) for e in self.edges],
            "realization": [[format_scalar(x) if not isinstance(x, float) else x,
                             format_scalar(y) if not isinstance(y, float) else y]
                            for x, y in self.realization],
        }

    @classmethod
    def from_json(cls, d: dict) -> "Framework":
        from fractions import Fraction

        def conv(v):
            if isinstance(v, str):
                return Fraction(v)
            if isinstance(v, int):
                return Fraction(v)
            return float(v)

        real = [Point(conv(x), conv(y)) for x, y in d["realization"]]
        modes = {type(c) for p in real for c in p}
        if float in modes and Fraction in modes:
            real = [Point(float(x), float(y)) for x, y in real]
        return cls(int(d["n"]), tuple(tuple(e) for e in d["edges"]), tuple(real))


# --- rigidity matrix ----------------------------------------------------------


def rigidity_matrix(fw: Framework, coords: np.ndarray | None = None) -> np.ndarray:
    """``|E| x 2|V|`` matrix; row ``{i,j}`` holds ``p_i - p_j`` at i and ``p_j - p_i`` at j."""
    p = fw.as_array() if coords is None else coords
    R = np.zeros((len(fw.edges), 2 * fw.n))
    for row, (i, j) in enumerate(fw.edges):
        d = p[i] - p[j]
        R[row, 2 * i:2 * i + 2] = d
        R[row, 2 * j:2 * j + 2] = -d
    return R


def numerical_rank(R: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> tuple[int, np.ndarray]:
    if R.size == 0:
        return 0, np.zeros(0)
    sv = np.linalg.svd(R, compute_uv=False)
    smax = sv[0] if len(sv) else 0.0
    if smax == 0.0:
        return 0, sv
    return int((sv >= tol * smax).sum()), sv


def target_rank(n: int) -> int:
    return max(2 * n - 3, 0) if n >= 2 else 0


@dataclass
class RigidityVerdict:
    verdict: str
    rank: int
    target: int
    flex_dim: int
    notes: list[str] = field(default_factory=list)
    perturbed_ranks: list[int] = field(default_factory=list)

    @property
    def rigid(self) -> bool:
        return self.verdict == RIGID

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "rank": self.rank, "target": self.target,
                "flex_dim": self.flex_dim, "notes": list(self.notes),
                "perturbed_ranks": list(self.perturbed_ranks)}


def infinitesimal_rigidity_test(fw: Framework, tol: float = DEFAULT_RANK_TOL, seed: int = 0,
                                n_perturb: int = 3, perturb_scale: float | None = None) -> RigidityVerdict:
    """Rank test of the rigidity matrix at the framework's realization.

    Perturbations have radius ``perturb_scale * diameter``; the default
    ``1e4 * tol`` keeps induced singular values well above the rank threshold.
    """
    if fw.n < 2:
        raise ValueError("rigidity test needs at least two vertices")
    p = fw.as_array()
    R = rigidity_matrix(fw, p)
    rank, _ = numerical_rank(R, tol)
    target = target_rank(fw.n)
    notes = []
    if any(not R[k].any() for k in range(len(fw.edges))):
        notes.append("degenerate edge: coincident endpoints give an all-zero row")
    flex = 2 * fw.n - 3 - rank
    if rank >= target:
        return RigidityVerdict(RIGID, rank, target, 0, notes)
    rng = np.random.default_rng(seed)
    diam = float(np.ptp(p, axis=0).max()) if fw.n else 0.0
    radius = (perturb_scale if perturb_scale is not None else 1e4 * tol) * (diam if diam > 0 else 1.0)
    ranks = []
    for _ in range(n_perturb):
        q = p + rng.uniform(-radius, radius, size=p.shape)
        ranks.append(numerical_rank(rigidity_matrix(fw, q), tol)[0])
    verdict = FLEXIBLE if all(r < target for r in ranks) else INCONCLUSIVE
    if verdict == INCONCLUSIVE:
        notes.append("rank gap vanishes under perturbation: realization is not a regular point")
    return RigidityVerdict(verdict, rank, target, flex, notes, ranks)


# --- pebble game ----------------------------------------------------------------


class PebbleGame:
    """(2,3) pebble game on a growing multigraph."""

    def __init__(self, n: int):
        self.n = n
        self.pebbles = [2] * n
        self.out: list[list[int]] = [[] for _ in range(n)]
        self.independent: list[tuple[int, int]] = []
        self.redundant: list[tuple[int, int]] = []

    def _find_pebble(self, start: int, blocked: set[int]) -> bool:
        """Move one free pebble to ``start`` along a reversed path, if any."""
        parent = {start: None}
        stack = [start]
        seen = set(blocked) | {start}
        while stack:
            x = stack.pop()
            for y in self.out[x]:
                if y in seen:
                    continue
                seen.add(y)
                parent[y] = x
                if self.pebbles[y] > 0:
                    # reverse the path y <- ... <- start
                    self.pebbles[y] -= 1
                    self.pebbles[start] += 1
                    while parent[y] is not None:
                        px = parent[y]
                        self.out[px].remove(y)
                        self.out[y].append(px)
                        y = px
                    return True
                stack.append(y)
        return False

    def gather(self, u: int, v: int, want: int) -> int:
        """Collect up to ``want`` pebbles on ``{u, v}``; returns how many are there."""
        for a, b in ((u, v), (v, u)):
            while self.pebbles[a] < 2 and self.pebbles[a] + self.pebbles[b] < want:
                if not self._find_pebble(a, {a, b}):
                    break
        return self.pebbles[u] + self.pebbles[v]

    def add_edge(self, u: int, v: int) -> bool:
        if self.gather(u, v, 4) >= 4:
            src = u if self.pebbles[u] > 0 else v
            dst = v if src == u else u
            self.pebbles[src] -= 1
            self.out[src].append(dst)
            self.independent.append((u, v))
            return True
        self.redundant.append((u, v))
        return False

    def _reaches_free(self, w: int, pinned: set[int]) -> bool:
        seen = set(pinned) | {w}
        stack = [w]
        if self.pebbles[w] > 0:
            return True
        while stack:
            x = stack.pop()
            for y in self.out[x]:
                if y in seen:
                    continue
                if self.pebbles[y] > 0:
                    return True
                seen.add(y)
                stack.append(y)
        return False

    def components(self, edges: Sequence[tuple[int, int]]) -> list[tuple[int, ...]]:
        """Maximal rigid components (vertex sets) covering every edge."""
        comps: list[set[int]] = []
        covered: set[tuple[int, int]] = set()
        for u, v in edges:
            if (u, v) in covered:
                continue
            self.gather(u, v, 3)
            comp = {u, v}
            for w in range(self.n):
                if w in comp:
                    continue
                if not self._reaches_free(w, {u, v}):
                    comp.add(w)
            comps.append(comp)
            for a, b in edges:
                if a in comp and b in comp:
                    covered.add((a, b))
        # a vertex set can be reached through different seed edges; keep maximal ones
        uniq = sorted({tuple(sorted(c)) for c in comps})
        return [c for c in uniq if not any(set(c) < set(o) for o in uniq)]


@dataclass
class PebbleReport:
    n: int
    independent: list[tuple[int, int]]
    redundant: list[tuple[int, int]]
    components: list[tuple[int, ...]]
    rigid: bool

    def to_json(self) -> dict:
        return {"n": self.n, "independent": [list(e) for e in self.independent],
                "redundant": [list(e) for e in self.redundant],
                "components": [list(c) for c in self.components], "rigid": self.rigid}


def pebble_game_2_3(n: int, edges: Iterable[Sequence[int]], components: bool = True) -> PebbleReport:
    """Generic rigidity of a simple graph via (2,3)-sparsity."""
    es = _norm_edges(edges)
    game = PebbleGame(n)
    for u, v in es:
        game.add_edge(u, v)
    comps = game.components(es) if components else []
    rigid = True if n <= 1 else len(game.independent) == 2 * n - 3
    return PebbleReport(n, list(game.independent), list(game.redundant), comps, rigid)


def is_generically_rigid(n: int, edges) -> bool:
    return pebble_game_2_3(n, edges, components=False).rigid


def _induced_edges(edges, vertices):
    vs = set(vertices)
    return [(a, b) for a, b in edges if a in vs and b in vs]


def _relabel(edges, vertices):
    idx = {v: i for i, v in enumerate(vertices)}
    return [(idx[a], idx[b]) for a, b in edges]


def find_rigid_subgraph_generic(n: int, edges, min_vertices: int = 3):
    """A small generically rigid subgraph with at least ``min_vertices`` vertices.

    Starts from the smallest large-enough rigid component and greedily drops
    vertices while the induced subgraph stays rigid.  Returns
    ``(vertices, edges)`` or ``None``.
    """
    if min_vertices < 3:
        raise ValueError("min_vertices must be >= 3")
    es = _norm_edges(edges)
    rep = pebble_game_2_3(n, es)
    cands = sorted((c for c in rep.components if len(c) >= min_vertices), key=lambda c: (len(c), c))
    if not cands:
        return None
    verts = list(cands[0])
    changed = True
    while changed and len(verts) > min_vertices:
        changed = False
        for v in sorted(verts, reverse=True):
            trial = [w for w in verts if w != v]
            sub = _relabel(_induced_edges(es, trial), trial)
            if is_generically_rigid(len(trial), sub):
                verts = trial
                changed = True
                break
    return tuple(verts), tuple(_induced_edges(es, verts))


@dataclass
class RigidWitness:
    vertices: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    verdict: RigidityVerdict
    source: str  # "component" or "search"

    def to_json(self) -> dict:
        return {"vertices": list(self.vertices), "edges": [list(e) for e in self.edges],
                "verdict": self.verdict.to_json(), "source": self.source}


@dataclass
class SearchStats:
    components_tried: int = 0
    subsets_tried: int = 0
    exhausted: bool = True


def find_rigid_subframework(fw: Framework, min_vertices: int = 4, tol: float = DEFAULT_RANK_TOL,
                            cap: int = SEARCH_CAP, max_subsets: int = 20000, seed: int = 0,
                            stats: SearchStats | None = None) -> RigidWitness | None:
    """First subframework with ``>= min_vertices`` vertices certified rigid at ``fw``'s realization.

    Candidates are the generic rigid components (any infinitesimally rigid
    subgraph lies inside one); failing those, induced subgraphs of the
    components with up to ``cap`` vertices are tried, smallest first.
    """
    if min_vertices < 4:
        raise ValueError("min_vertices must be >= 4")
    stats = stats if stats is not None else SearchStats()
    rep = pebble_game_2_3(fw.n, fw.edges)
    comps = sorted((c for c in rep.components if len(c) >= min_vertices), key=lambda c: (len(c), c))
    for comp in comps:
        stats.components_tried += 1
        sub = fw.induced(comp)
        ver = infinitesimal_rigidity_test(sub, tol, seed)
        if ver.rigid:
            return RigidWitness(tuple(comp), tuple(_induced_edges(fw.edges, comp)), ver, "component")
    adj = fw.adjacency()
    for comp in comps:
        for k in range(min_vertices, min(cap, len(comp)) + 1):
            for subset in combinations(comp, k):
                if stats.subsets_tried >= max_subsets:
                    stats.exhausted = False
                    return None
                stats.subsets_tried += 1
                es = _induced_edges(fw.edges, subset)
                if len(es) < 2 * k - 3:
                    continue
                if any(not (adj[v] & set(subset)) for v in subset):
                    continue
                if not is_generically_rigid(k, _relabel(es, subset)):
                    continue
                ver = infinitesimal_rigidity_test(fw.induced(subset), tol, seed)
                if ver.rigid:
                    return RigidWitness(tuple(subset), tuple(es), ver, "search")
    return None


def shrink_witness(fw: Framework, w: RigidWitness, min_vertices: int = 4, tol: float = DEFAULT_RANK_TOL,
                   seed: int = 0) -> RigidWitness:
    """One greedy pass dropping vertices (highest first) while the induced
    subframework stays certified rigid."""
    verts = list(w.vertices)
    ver = w.verdict
    for v in sorted(w.vertices, reverse=True):
        if len(verts) <= min_vertices:
            break
        trial = [x for x in verts if x != v]
        es = _induced_edges(fw.edges, trial)
        if len(es) < 2 * len(trial) - 3 or not is_generically_rigid(len(trial), _relabel(es, trial)):
            continue
        tv = infinitesimal_rigidity_test(fw.induced(trial), tol, seed)
        if tv.rigid:
            verts, ver = trial, tv
    return RigidWitness(tuple(verts), tuple(_induced_edges(fw.edges, verts)), ver, w.source)


def neighbors_collinear_violations(fw: Framework, tol: float = 1e-9, strict: bool = False) -> list[int]:
    """Vertices of degree >= 2 whose neighbours lie on one line.

    Two neighbours always span a line, so by default a degree-2 vertex is only
    flagged when it lies on that line too (opposite neighbours).  ``strict``
    flags every degree-2 vertex.
    """
    adj = fw.adjacency()
    out = []
    for v in range(fw.n):
        nb = [fw.realization[w] for w in sorted(adj[v])]
        if len(nb) < 2:
            continue
        if len(nb) == 2 and not strict:
            nb = nb + [fw.realization[v]]
        if are_collinear(nb, tol):
            out.append(v)
    return out


# --- conjecture experiment -----------------------------------------------------


RANDOM_MODEL = "random"
UNIT_MODEL = "unit"


def target_edge_count(n: int, alpha: float) -> int:
    return int(math.ceil(n ** (1.0 + alpha) - 1e-9))


@dataclass
class TrialRow:
    trial: int
    edges: int
    hypothesis_ok: bool
    witness_found: bool
    witness_size: int

    def tsv(self) -> str:
        return f"{self.trial}\t{self.edges}\t{int(self.hypothesis_ok)}\t{int(self.witness_found)}\t{self.witness_size}"


@dataclass
class ExperimentResult:
    n: int
    alpha: float
    model: str
    target_edges: int
    rows: list[TrialRow]

    @property
    def witness_fraction(self) -> float:
        return sum(r.witness_found for r in self.rows) / len(self.rows) if self.rows else 0.0

    @property
    def violation_rate(self) -> float:
        return sum(not r.hypothesis_ok for r in self.rows) / len(self.rows) if self.rows else 0.0

    def size_distribution(self) -> dict[int, int]:
        return dict(sorted(Counter(r.witness_size for r in self.rows if r.witness_found).items()))

    def tsv(self) -> str:
        head = "trial\tedges\thypothesis_ok\twitness_found\twitness_size"
        return "\n".join([head] + [r.tsv() for r in self.rows]) + "\n"

    def summary(self) -> dict:
        return {"n": self.n, "alpha": self.alpha, "model": self.model,
                "target_edges": self.target_edges, "trials": len(self.rows),
                "witness_fraction": self.witness_fraction,
                "hypothesis_violation_rate": self.violation_rate,
                "witness_sizes": {str(k): v for k, v in self.size_distribution().items()}}


def _unit_model_framework(n, m_edges, rng):
    from .generators import best_popular_square_distance
    from .unit_graph import PointSet, build_unit_graph

    side = max(2, math.ceil(math.sqrt(2 * n)))
    d, _ = best_popular_square_distance(side)
    cells = rng.choice(side * side, size=n, replace=False)
    cells.sort()
    P = PointSet.from_coords([(int(c) // side, int(c) % side) for c in cells], unit_sq=d)
    edges = list(build_unit_graph(P).edges)
    if len(edges) > m_edges:
        pick = np.sort(rng.choice(len(edges), size=m_edges, replace=False))
        edges = [edges[i] for i in pick]
    return Framework(n, tuple(edges), P.points)


def _random_model_framework(n, m_edges, rng, coordinate_range=1000.0):
    pairs = list(combinations(range(n), 2))
    pick = np.sort(rng.choice(len(pairs), size=m_edges, replace=False))
    edges = [pairs[i] for i in pick]
    xy = rng.uniform(-coordinate_range, coordinate_range, size=(n, 2))
    return Framework(n, tuple(edges), tuple(Point(float(x), float(y)) for x, y in xy))


def conjecture_experiment(n: int, alpha: float, trials: int, model: str = RANDOM_MODEL, seed: int = 0,
                          tol: float = DEFAULT_RANK_TOL, cap: int = SEARCH_CAP,
                          max_subsets: int = 2000) -> ExperimentResult:
    """Trials of: build a graph with ``ceil(n^(1+alpha))`` edges, realize it,
    check the non-collinear-neighbours hypothesis, search a rigid subframework."""
    if n < 8:
        raise ValueError("n must be >= 8")
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if model not in (RANDOM_MODEL, UNIT_MODEL):
        raise ValueError(f"unknown model {model!r}")
    m_edges = target_edge_count(n, alpha)
    if m_edges > n * (n - 1) // 2:
        raise ValueError(f"{m_edges} edges exceed C({n},2) = {n * (n - 1) // 2}")
    rows = []
    for t, ss in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        rng = np.random.default_rng(ss)
        if model == RANDOM_MODEL:
            fw = _random_model_framework(n, m_edges, rng)
        else:
            fw = _unit_model_framework(n, m_edges, rng)
        ok = not neighbors_collinear_violations(fw)
        w = find_rigid_subframework(fw, 4, tol, cap, max_subsets, seed=int(rng.integers(2**32)))
        rows.append(TrialRow(t, len(fw.edges), ok, w is not None, len(w.vertices) if w else 0))
    return ExperimentResult(n, alpha, model, m_edges, rows)
