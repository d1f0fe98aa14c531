"""Congruence of frameworks and the counting machinery built on it.

Exact realizations are keyed with :func:`pose_frame` (anchor length squared
plus dot/cross coordinates), which needs no square root, so exact keys are
exact.  Float keys quantize the canonical pose at ``q_tol``; a lookup miss
falls back to direct comparison, so rounding at a quantization boundary can
not split a class.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .geometry import (
    DEFAULT_TOL,
    EXACT,
    FLOAT,
    Point,
    are_collinear,
    canonical_pose,
    common_mode,
    pose_frame,
    squared_distance,
)
from .rigidity import Framework, RigidWitness, find_rigid_subframework, shrink_witness

MAX_ENUM_VERTICES = 6


class GraphMismatchError(ValueError):
    pass


def _points(x) -> list[Point]:
    if isinstance(x, Framework):
        return list(x.realization)
    return [Point(*p) for p in x]


def _close(a, b, tol: float) -> bool:
    return abs(a - b) <= tol * (1.0 + max(abs(a), abs(b)))


def _eq(a, b, exact: bool, tol: float) -> bool:
    return a == b if exact else _close(float(a), float(b), tol)


def _both_exact(p, q) -> bool:
    try:
        return common_mode(p) == EXACT and common_mode(q) == EXACT
    except TypeError:
        return False


def _sqd(p, q, exact):
    if exact:
        return squared_distance(p, q)
    return (float(p[0]) - float(q[0])) ** 2 + (float(p[1]) - float(q[1])) ** 2


def are_equivalent(fw1: Framework, fw2: Framework, tol: float = DEFAULT_TOL) -> bool:
    """Same squared length on every edge."""
    if fw1.n != fw2.n or set(fw1.edges) != set(fw2.edges):
        raise GraphMismatchError("frameworks have different graphs")
    p, q = fw1.realization, fw2.realization
    exact = _both_exact(p, q)
    return all(_eq(_sqd(p[i], p[j], exact), _sqd(q[i], q[j], exact), exact, tol) for i, j in fw1.edges)


def are_congruent(a, b, tol: float = DEFAULT_TOL) -> bool:
    """Same squared distance on every vertex pair (frameworks or point lists)."""
    p, q = _points(a), _points(b)
    if len(p) != len(q):
        return False
    exact = _both_exact(p, q)
    n = len(p)
    return all(_eq(_sqd(p[i], p[j], exact), _sqd(q[i], q[j], exact), exact, tol)
               for i in range(n) for j in range(i + 1, n))


def anchor_triple(points: Sequence[Point], tol: float = DEFAULT_TOL):
    """Lowest-index anchors: first distinct pair ``(i, j)`` then the first
    ``k`` off their line.  ``k`` is ``None`` for collinear sets; ``None``
    overall when every point coincides."""
    n = len(points)
    exact = common_mode(points) == EXACT if n else True
    for i in range(n):
        for j in range(i + 1, n):
            d = _sqd(points[i], points[j], exact)
            if d == 0 or (not exact and d <= tol * tol):
                continue
            for k in range(n):
                if k not in (i, j) and not are_collinear([points[i], points[j], points[k]], tol):
                    return i, j, k
            return i, j, None
    return None


def congruence_key(x, tol: float = DEFAULT_TOL, q_tol: float | None = None):
    """Hashable key equal for congruent inputs (same vertex order)."""
    pts = _points(x)
    if not pts:
        return ("empty",)
    q_tol = 10 * tol if q_tol is None else q_tol
    anc = anchor_triple(pts, tol)
    if anc is None:
        return ("point", len(pts))
    i, j, k = anc
    if common_mode(pts) == EXACT:
        L2, coords, _ = pose_frame(pts, i, j, k)
        return ("exact", i, j, k, Fraction(L2), tuple((Fraction(a), Fraction(b)) for a, b in coords))
    pts = [Point(float(a), float(b)) for a, b in pts]
    if k is None:
        # collinear: pose via the pair only
        L2, coords, _ = pose_frame(pts, i, j, None)
        L = math.sqrt(L2)
        pose = [(a / L, 0.0) for a, _ in coords]
    else:
        pose = canonical_pose(pts, (i, j, k))
    return ("float", i, j, k, tuple((round(a / q_tol), round(b / q_tol)) for a, b in pose))


@dataclass
class CongruenceClasses:
    classes: list[list[int]]  # member indices, largest class first

    @property
    def sizes(self) -> list[int]:
        return [len(c) for c in self.classes]

    def class_of(self) -> dict[int, int]:
        return {m: ci for ci, c in enumerate(self.classes) for m in c}

    def to_json(self) -> dict:
        return {"classes": self.classes, "sizes": self.sizes}


def congruence_classes(frameworks: Sequence, tol: float = DEFAULT_TOL, q_tol: float | None = None) -> CongruenceClasses:
    """Partition into congruence classes; ties in size keep first-appearance order."""
    if not frameworks:
        return CongruenceClasses([])
    n0 = len(_points(frameworks[0]))
    if any(len(_points(f)) != n0 for f in frameworks):
        raise ValueError("frameworks must share a vertex count")
    reps: list[int] = []
    members: list[list[int]] = []
    by_key: dict = defaultdict(list)
    for idx, fw in enumerate(frameworks):
        key = congruence_key(fw, tol, q_tol)
        hit = next((c for c in by_key[key] if are_congruent(frameworks[reps[c]], fw, tol)), None)
        if hit is None and key[0] == "float":
            hit = next((c for c in range(len(reps)) if are_congruent(frameworks[reps[c]], fw, tol)), None)
        if hit is None:
            hit = len(reps)
            reps.append(idx)
            members.append([])
        if hit not in by_key[key]:
            by_key[key].append(hit)
        members[hit].append(idx)
    order = sorted(range(len(members)), key=lambda c: (-len(members[c]), members[c][0]))
    return CongruenceClasses([members[c] for c in order])


# --- realization enumeration -----------------------------------------------------


@dataclass
class EnumerationResult:
    flexible: bool
    realizations: list[list[Point]]
    milnor_bound: int

    @property
    def count(self) -> int:
        return len(self.realizations)

    def to_json(self) -> dict:
        return {"flexible": self.flexible, "count": self.count, "milnor_bound": self.milnor_bound,
                "realizations": [[[x, y] for x, y in r] for r in self.realizations]}


def _circle_points(a, ra, b, rb, tol):
    dx, dy = b[0] - a[0], b[1] - a[1]
    d2 = dx * dx + dy * dy
    d = math.sqrt(d2)
    scale = max(1.0, ra, rb)
    if d <= tol * scale:
        return None  # concentric: 0 or a continuum
    x = (ra * ra - rb * rb + d2) / (2 * d)
    h2 = ra * ra - x * x
    if h2 < -tol * scale * scale:
        return []
    h = math.sqrt(max(h2, 0.0))
    ux, uy = dx / d, dy / d
    bx, by = a[0] + x * ux, a[1] + x * uy
    if h <= math.sqrt(tol) * scale:
        return [(bx, by)]
    return [(bx - h * uy, by + h * ux), (bx + h * uy, by - h * ux)]


def enumerate_realizations(n: int, edges: Sequence[tuple[int, int]], lengths: Sequence[float],
                           max_vertices: int = MAX_ENUM_VERTICES, tol: float = 1e-9) -> EnumerationResult:
    """All non-congruent placements with the given edge lengths (distances).

    Works on orderings where each new vertex has two placed neighbours;
    otherwise the graph is reported flexible.  The ordering is fixed: always
    place the lowest-index vertex with the most placed neighbours.
    """
    if n > max_vertices:
        raise ValueError(f"{n} vertices exceed max_vertices={max_vertices}")
    if len(edges) != len(lengths):
        raise ValueError("one length per edge required")
    milnor = 9 ** n
    if n == 0:
        return EnumerationResult(False, [[]], milnor)
    L: dict[tuple[int, int], float] = {}
    for (a, b), ln in zip(edges, lengths):
        if ln < 0:
            raise ValueError("lengths must be non-negative")
        L[(a, b)] = L[(b, a)] = float(ln)
    adj = defaultdict(set)
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    if n == 1:
        return EnumerationResult(False, [[Point(0.0, 0.0)]], milnor)
    # connectivity
    seen, stack = {0}, [0]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    if len(seen) != n:
        raise ValueError("graph must be connected")

    u, v = min((min(e), max(e)) for e in edges)
    # fixed placement order (depends only on the graph)
    order = [u, v]
    placed = {u, v}
    while len(order) < n:
        cands = [(len(adj[w] & placed), w) for w in range(n) if w not in placed]
        best = max(c for c, _ in cands)
        if best < 2:
            return EnumerationResult(True, [], milnor)
        w = min(w for c, w in cands if c == best)
        order.append(w)
        placed.add(w)

    scale = max(max(L.values()), 1.0)
    out: list[list[Point]] = []
    flexible = False

    def check(pos, w):
        for x in adj[w]:
            if x in pos:
                d = math.dist(pos[w], pos[x])
                if abs(d - L[(w, x)]) > 1e3 * tol * scale:
                    return False
        return True

    def place(idx, pos):
        nonlocal flexible
        if flexible:
            return
        if idx == n:
            out.append([Point(*pos[i]) for i in range(n)])
            return
        w = order[idx]
        nb = [x for x in order[:idx] if x in adj[w]]
        a = nb[0]
        b = next((x for x in nb[1:] if math.dist(pos[x], pos[a]) > tol * scale), None)
        if b is None:
            flexible = True  # all placed neighbours coincide
            return
        cand = _circle_points(pos[a], L[(w, a)], pos[b], L[(w, b)], tol)
        for c in cand or []:
            pos[w] = c
            if check(pos, w):
                place(idx + 1, pos)
            del pos[w]

    place(2, {u: (0.0, 0.0), v: (L[(u, v)], 0.0)})
    if flexible:
        return EnumerationResult(True, [], milnor)
    classes = congruence_classes(out, tol=1e-7) if out else CongruenceClasses([])
    reals = [out[c[0]] for c in sorted(classes.classes, key=lambda c: c[0])]
    assert len(reals) <= milnor, "Milnor bound violated"
    return EnumerationResult(False, reals, milnor)


# --- repeated distances ------------------------------------------------------------


def repeated_distance_count(P, a_sq) -> int:
    """Unordered pairs of ``P`` at squared distance ``a_sq``."""
    from .unit_graph import count_unit_distances, oracle_unit_edges

    if a_sq <= 0:
        raise ValueError("distance must be positive")
    if a_sq == P.unit_sq:
        return count_unit_distances(P)
    return len(oracle_unit_edges(P, unit_sq=a_sq))


# --- canonical labelling --------------------------------------------------------------


def _refine(n, adj, colors):
    """Colour refinement to a stable, isomorphism-invariant ordered partition."""
    colors = list(colors)
    while True:
        sig = [(colors[v], tuple(sorted(colors[w] for w in adj[v]))) for v in range(n)]
        ranks = {s: i for i, s in enumerate(sorted(set(sig)))}
        new = [ranks[sig[v]] for v in range(n)]
        if len(set(new)) == len(set(colors)):
            return new
        colors = new


def canonical_form(n: int, edges: Sequence[tuple[int, int]], colors: Sequence[int] | None = None,
                   leaf_limit: int = 200000):
    """Canonical certificate and labelling of a vertex-coloured graph.

    Returns ``(certificate, order, complete)``: ``order[i]`` is the vertex put
    at canonical position ``i``.  ``complete`` is False if the search hit
    ``leaf_limit`` (the certificate may then separate isomorphic graphs).
    """
    adj = [set() for _ in range(n)]
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    base = list(colors) if colors is not None else [0] * n
    best = None
    leaves = 0

    def cert_of(order):
        pos = {v: i for i, v in enumerate(order)}
        es = tuple(sorted((min(pos[a], pos[b]), max(pos[a], pos[b])) for a, b in edges))
        return (tuple(base[v] for v in order), es)

    def search(col):
        nonlocal best, leaves
        if leaves >= leaf_limit:
            return
        if len(set(col)) == n:
            leaves += 1
            order = sorted(range(n), key=lambda v: col[v])
            c = cert_of(order)
            if best is None or c < best[0]:
                best = (c, order)
            return
        cnt = Counter(col)
        target = min(c for c, k in cnt.items() if k > 1)
        for v in [w for w in range(n) if col[w] == target]:
            nc = [2 * c for c in col]
            nc[v] -= 1
            search(_refine(n, adj, nc))

    search(_refine(n, adj, base))
    return best[0], best[1], leaves < leaf_limit


# --- pigeonhole simulation -------------------------------------------------------------


@dataclass
class Witness:
    """A certified rigid bipartite subframework, in point indices of ``P``."""

    graph_id: int
    U: tuple[int, ...]
    V: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]  # (u, v) point indices

    def vertices(self) -> list[tuple[int, int]]:
        return [(0, u) for u in self.U] + [(1, v) for v in self.V]


@dataclass
class PigeonholeReport:
    k: int
    witnesses: int
    isomorphism_groups: list[int]
    largest_group: int
    largest_class: int
    class_sizes: list[int]
    classes_checked: int
    pair_counts_max: int
    violations: list[dict]
    a_sq: str | None
    derived_lower_bound: int
    direct_count: int
    lower_bound_ok: bool
    chain_log2: float
    chain_ok: bool
    canonical_complete: bool
    notes: list[str] = field(default_factory=list)
    skipped_large: int = 0

    @property
    def two_index_ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        d = dict(self.__dict__)
        d["two_index_ok"] = self.two_index_ok
        return d


MAX_GRAPH_VERTICES = 400


def witness_from_graph(g, P, seed: int = 0, max_subsets: int = 2000, shrink: bool = True) -> Witness | None:
    """Certify a rigid subframework inside one bipartite cell graph."""
    fw = g.framework(P)
    w: RigidWitness | None = find_rigid_subframework(fw, 4, seed=seed, max_subsets=max_subsets)
    if w is None:
        return None
    if shrink:
        w = shrink_witness(fw, w, seed=seed)
    nU = len(g.U)
    labels = list(g.U) + list(g.V)
    U = tuple(sorted(labels[i] for i in w.vertices if i < nU))
    V = tuple(sorted(labels[i] for i in w.vertices if i >= nU))
    edges = tuple(sorted((labels[a], labels[b]) if a < nU else (labels[b], labels[a]) for a, b in w.edges))
    return Witness(g.cell_id, U, V, edges)


def chain_log2(k: int, h: float) -> float:
    """log2 of ``k / (4 * 2^(h^12) * 9^(2 h^6))``."""
    if k <= 0:
        return float("-inf")
    return math.log2(k) - 2 - h ** 12 - 2 * h ** 6 * math.log2(9)


def pigeonhole_from_witnesses(witnesses: Sequence[Witness], P, h: float, k: int | None = None,
                              tol: float = DEFAULT_TOL, Pprime=None) -> PigeonholeReport:
    """Isomorphism grouping, congruence grouping and the two-index check."""
    from .geometry import format_scalar

    k = len(witnesses) if k is None else k
    notes = []
    complete = True
    groups: dict = defaultdict(list)
    orders = {}
    for wi, w in enumerate(witnesses):
        verts = w.vertices()
        idx = {v: i for i, v in enumerate(verts)}
        es = [(idx[(0, a)], idx[(1, b)]) for a, b in w.edges]
        cert, order, ok = canonical_form(len(verts), es, [s for s, _ in verts])
        complete &= ok
        groups[cert].append(wi)
        orders[wi] = [verts[i] for i in order]
    group_list = sorted(groups.values(), key=lambda g: (-len(g), g[0]))
    best_class: list[int] = []
    best_group = None
    all_sizes = []
    all_classes = []
    for g in group_list:
        frames = [[P.points[p] for _, p in orders[wi]] for wi in g]
        cl = congruence_classes(frames, tol)
        all_sizes.extend(cl.sizes)
        all_classes.extend([g[i] for i in c] for c in cl.classes)
        if cl.classes and len(cl.classes[0]) > len(best_class):
            best_class = [g[i] for i in cl.classes[0]]
            best_group = g
    violations = []
    pair_max = 0
    for ci, cls in enumerate(all_classes):
        # images of the first two V-side vertices in canonical order
        first = orders[cls[0]]
        vpos = [i for i, (s, _) in enumerate(first) if s == 1][:2]
        pairs: dict = defaultdict(list)
        for wi in cls:
            o = orders[wi]
            pairs[(o[vpos[0]][1], o[vpos[1]][1])].append(witnesses[wi].graph_id)
        pair_max = max(pair_max, max(len(v) for v in pairs.values()))
        for (p, q), ids in sorted(pairs.items()):
            if len(ids) > 2:
                violations.append({"class": ci, "pair": [p, q], "graphs": ids[:3], "count": len(ids)})
    a_sq = None
    lower = 0
    direct = 0
    if best_class:
        first = orders[best_class[0]]
        vpos = [i for i, (s, _) in enumerate(first) if s == 1][:2]
        p0, q0 = first[vpos[0]][1], first[vpos[1]][1]
        a = squared_distance(P.points[p0], P.points[q0])
        a_sq = format_scalar(a)
        lower = math.ceil(len(best_class) / 4)
        target = Pprime if Pprime is not None else P
        direct = repeated_distance_count(target, a)
    else:
        notes.append("no certified witnesses")
    c2 = chain_log2(k, h)
    return PigeonholeReport(
        k=k, witnesses=len(witnesses), isomorphism_groups=[len(g) for g in group_list],
        largest_group=len(best_group) if best_group else 0, largest_class=len(best_class),
        class_sizes=sorted(all_sizes, reverse=True), classes_checked=len(all_classes),
        pair_counts_max=pair_max, violations=violations,
        a_sq=a_sq, derived_lower_bound=lower, direct_count=direct, lower_bound_ok=direct >= lower,
        chain_log2=c2, chain_ok=direct >= 2.0 ** min(c2, 1023.0) if math.isfinite(c2) else True,
        canonical_complete=complete, notes=notes)


def pigeonhole_simulation(graphs: Sequence, P, h: float, Pprime=None, seed: int = 0,
                          max_subsets: int = 2000, tol: float = DEFAULT_TOL, shrink: bool = True,
                          max_graph_vertices: int = MAX_GRAPH_VERTICES):
    """Certify a rigid witness in each graph, then run the counting chain."""
    witnesses = []
    skipped = 0
    for i, g in enumerate(graphs):
        if len(g.U) + len(g.V) > max_graph_vertices:
            skipped += 1
            continue
        w = witness_from_graph(g, P, seed=seed + i, max_subsets=max_subsets, shrink=shrink)
        if w is not None:
            witnesses.append(w)
    rep = pigeonhole_from_witnesses(witnesses, P, h, k=len(graphs), tol=tol, Pprime=Pprime)
    rep.skipped_large = skipped
    if skipped:
        rep.notes.append(f"{skipped} graphs above {max_graph_vertices} vertices were not searched")
    return rep, witnesses
