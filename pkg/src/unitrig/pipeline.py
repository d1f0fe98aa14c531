"""Two-stage partitioning that turns a point set with many unit distances
into many small bipartite unit-distance graphs.

Stage one partitions ``P`` with a degree-``r`` polynomial and keeps the cell
``w0`` carrying the most point/circle incidences.  Its points become ``P'``;
the centres of unit circles crossing ``w0`` become ``Q``.  Stage two
partitions ``Q`` with a degree-``t`` polynomial; each cell ``pi`` with enough
incidences between ``Q_pi`` and the circles centred in ``P'`` that cross
``pi`` yields one graph.

Incidences on either zero set are discarded and logged against their budget.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .geometry import EXACT, squared_distance
from .partition import (
    C_CELLS,
    C_CROSS,
    C_OCC,
    PartitionResult,
    circles_crossing_cell,
    padded_bbox,
    partition_points,
    zero_set_budget,
)
from .rigidity import Framework
from .unit_graph import PointSet, incidences

log = logging.getLogger(__name__)


def default_degree(n: int, h: float) -> int:
    return max(1, round(n ** (1.0 / 3.0) / h ** 2))


@dataclass
class PipelineParams:
    n: int | None = None
    h: float = 1.0
    r: int | None = None
    t: int | None = None
    c_thresh: float = 1.0
    c1: float = 10.0
    c2: float = 0.1
    c3: float = 10.0
    c4: float = 1.0
    c5: float = 4.0
    c_occ: float = C_OCC
    c_cross: float = C_CROSS
    c_cells: float = C_CELLS
    seed: int = 0
    resolution: int = 256
    max_resolution: int = 2048
    tol: float = 1e-9

    def validate(self) -> list[str]:
        errs = []
        if not self.h > 0:
            errs.append("h must be > 0")
        if not self.tol > 0:
            errs.append("tol must be > 0")
        for name in ("r", "t"):
            v = getattr(self, name)
            if v is not None and v < 1:
                errs.append(f"{name} must be >= 1")
        for name in ("c_thresh", "c1", "c2", "c3", "c4", "c5", "c_occ", "c_cross", "c_cells"):
            if not getattr(self, name) > 0:
                errs.append(f"{name} must be > 0")
        if self.c1 < 1:
            errs.append("c1 must be >= 1")
        if self.resolution < 64:
            errs.append("resolution must be >= 64")
        if self.max_resolution < self.resolution:
            errs.append("max_resolution must be >= resolution")
        return errs

    def filled(self, n: int) -> "PipelineParams":
        """Copy with ``n`` and the default degrees filled in."""
        p = PipelineParams(**asdict(self))
        p.n = n
        if p.r is None:
            p.r = default_degree(n, p.h)
        if p.t is None:
            p.t = default_degree(n, p.h)
        return p

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class BipartiteCellGraph:
    cell_id: int
    U: tuple[int, ...]
    V: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]  # (u, v) indices into P

    def framework(self, P: PointSet) -> Framework:
        """Framework on ``U`` then ``V`` (local labels), realized at ``P``."""
        idx = {u: i for i, u in enumerate(self.U)}
        off = len(self.U)
        idx_v = {v: off + i for i, v in enumerate(self.V)}
        es = tuple((idx[u], idx_v[v]) for u, v in self.edges)
        real = tuple(P.points[i] for i in self.U + self.V)
        return Framework(len(self.U) + len(self.V), es, real)

    def to_json(self) -> dict:
        return {"cell_id": self.cell_id, "U": list(self.U), "V": list(self.V),
                "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, d: dict) -> "BipartiteCellGraph":
        return cls(int(d["cell_id"]), tuple(d["U"]), tuple(d["V"]), tuple(tuple(e) for e in d["edges"]))


@dataclass
class StructureReport:
    n: int
    params: dict
    P_prime: int
    k: int
    sizes: list[tuple[int, int, int]]
    checks: dict = field(default_factory=dict)
    cap_check: dict = field(default_factory=dict)
    stages: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        d = asdict(self)
        d["sizes"] = [list(s) for s in self.sizes]
        return d


@dataclass
class StructureOutput:
    P: PointSet
    P_prime: tuple[int, ...]
    Q: tuple[int, ...]
    graphs: list[BipartiteCellGraph]
    report: StructureReport


def heavy_cell_select(cell_ids: Sequence[int], counts: Sequence[int]) -> int:
    """Cell with the largest count; ties go to the smallest id."""
    if len(cell_ids) == 0:
        raise ValueError("no cells to select from")
    if len(cell_ids) != len(counts):
        raise ValueError("one count per cell required")
    return min(zip(cell_ids, counts), key=lambda ic: (-ic[1], ic[0]))[0]


def _stage(P: PointSet, idx: Sequence[int], degree: int, params: PipelineParams, seed: int, pad: float):
    xy = P.as_array()[list(idx)]
    bbox = padded_bbox(P.as_array(), pad)
    return partition_points(xy, degree, seed=seed, resolution=params.resolution, tol=params.tol,
                            c_occ=params.c_occ, c_cells=params.c_cells, bbox=bbox,
                            max_resolution=params.max_resolution)


def _crossing(P: PointSet, centers: Sequence[int], part: PartitionResult):
    """Per cell: set of circle centres (indices into P) whose circle meets it."""
    xy = P.as_array()[list(centers)]
    per_circle, per_cell, unstable = circles_crossing_cell(xy, P.unit_length, part.decomposition)
    return [set(centers[i] for i in cs) for cs in per_cell], per_circle, len(unstable)


def run_structure_extraction(P: PointSet, params: PipelineParams | None = None) -> StructureOutput:
    params = (params or PipelineParams()).filled(len(P))
    errs = params.validate()
    if errs:
        raise ValueError("; ".join(errs))
    n = len(P)
    notes: list[str] = []
    rng = np.random.default_rng(params.seed)
    s1, s2 = (int(x) for x in rng.integers(2**63, size=2))
    pad = P.unit_length

    # (1) incidences between P and the unit circles centred at P
    I = incidences(P, P).pairs
    total_I = len(I)
    if total_I == 0:
        raise ValueError("P has no unit pairs")

    # (2) first partition
    part1 = _stage(P, range(n), params.r, params, s1, pad)
    cell1 = part1.cell_of()
    zero1 = set(part1.zero_set)
    crossing1, per_circle1, unstable1 = _crossing(P, list(range(n)), part1)
    I0 = [(p, c) for p, c in I if p in zero1]
    budget1 = zero_set_budget(n, params.r)
    # incident circles trivially meet their point's cell
    for p, c in I:
        if cell1[p] >= 0:
            crossing1[cell1[p]].add(c)
    counts1 = [0] * len(part1.cells)
    for p, c in I:
        if cell1[p] >= 0:
            counts1[cell1[p]] += 1
    max_cross1 = max((len(cs) for cs in per_circle1), default=0)

    # (3) heavy cell
    ids = [c.id for c in part1.cells]
    w0 = heavy_cell_select(ids, counts1)
    nonempty = [cnt for c, cnt in zip(part1.cells, counts1) if c.members]
    mean1 = sum(counts1) / len(nonempty) if nonempty else 0.0

    # (4) P' and Q
    Pp = tuple(sorted(part1.cells[w0].members))
    Q = tuple(sorted(crossing1[w0]))
    Pp_set = set(Pp)
    Q_set = set(Q)
    ID = [(q, d) for q, d in I if q in Q_set and d in Pp_set]

    # (5) second partition of Q
    stage2: dict = {"n_Q": len(Q), "incidences": len(ID)}
    graphs: list[BipartiteCellGraph] = []
    dropped_small = 0
    kept_cells = 0
    overlap_removed = 0
    if Q:
        part2 = _stage(P, Q, params.t, params, s2, pad)
        cell2_local = part2.cell_of()
        cell2 = {Q[i]: int(c) for i, c in enumerate(cell2_local)}
        zero2 = {Q[i] for i in part2.zero_set}
        crossing2, _, unstable2 = _crossing(P, list(Pp), part2)
        for q, d in ID:
            if cell2[q] >= 0:
                crossing2[cell2[q]].add(d)
        I0_2 = [(q, d) for q, d in ID if q in zero2]
        by_cell = defaultdict(list)
        for q, d in ID:
            if cell2[q] >= 0:
                by_cell[cell2[q]].append((q, d))
        thresh = params.c_thresh * params.h ** 7
        for cell in part2.cells:
            es = by_cell.get(cell.id, [])
            if len(es) < thresh:
                continue
            kept_cells += 1
            U = tuple(sorted(Q[i] for i in cell.members))
            Uset = set(U)
            Vall = crossing2[cell.id]
            V = tuple(sorted(Vall - Uset))
            overlap_removed += len(Vall) - len(V)
            Vset = set(V)
            E = tuple(sorted((q, d) for q, d in es if d in Vset))
            if len(U) < 2 or len(V) < 2:
                dropped_small += 1
                continue
            graphs.append(BipartiteCellGraph(cell.id, U, V, E))
        stage2.update({
            "degree": params.t,
            "cells": len(part2.cells),
            "zero_set_points": len(zero2),
            "zero_set_incidences": len(I0_2),
            "zero_set_budget": zero_set_budget(len(Q), params.t),
            "zero_set_fraction": len(I0_2) / len(ID) if ID else 0.0,
            "half_budget_ok": len(I0_2) <= 0.5 * len(ID),
            "threshold": thresh,
            "kept_cells": kept_cells,
            "dropped_small_sides": dropped_small,
            "overlap_removed_from_V": overlap_removed,
            "unstable_circles": unstable2,
            "partition": part2.stats,
        })
    else:
        notes.append("heavy cell is crossed by no circles; nothing to emit")
    if not graphs:
        notes.append("pipeline emitted no graphs")

    stage1 = {
        "degree": params.r,
        "incidences": total_I,
        "cells": len(part1.cells),
        "zero_set_points": len(zero1),
        "zero_set_incidences": len(I0),
        "zero_set_budget": budget1,
        "zero_set_budget_ok": len(I0) <= budget1,
        "zero_set_fraction": len(I0) / total_I,
        "half_budget_ok": len(I0) <= 0.5 * total_I,
        "heavy_cell": w0,
        "heavy_count": counts1[w0],
        "mean_count": mean1,
        "heavy_ge_mean": counts1[w0] >= mean1,
        "max_cells_per_circle": max_cross1,
        "cross_bound": params.c_cross * params.r,
        "unstable_circles": unstable1,
        "partition": part1.stats,
    }
    report = StructureReport(n, params.to_json(), len(Pp), len(graphs),
                             [(len(g.U), len(g.V), len(g.edges)) for g in graphs],
                             stages={"first": stage1, "second": stage2}, notes=notes)
    out = StructureOutput(P, Pp, Q, graphs, report)
    verify_structure_theorem(out, params)
    report.cap_check = st_cell_cap_check(graphs, params.c5)
    if n < 1000:
        notes.append("n is below desk scale; asymptotic bounds are not meaningful here")
    return out


def _check(ok: bool, measured, constant) -> dict:
    return {"pass": bool(ok), "measured": measured, "constant": constant}


def verify_structure_theorem(out: StructureOutput, params: PipelineParams) -> StructureReport:
    """Instance-level checks of the structure bounds with explicit constants."""
    rep = out.report
    P = out.P
    n, h = len(P), params.h
    graphs = out.graphs
    k = len(graphs)
    checks = {}
    base = n ** (1 / 3) * h ** 4
    ratio = len(out.P_prime) / base
    checks["P_prime_size"] = _check(1 / params.c1 <= ratio <= params.c1, ratio, params.c1)
    kr = k / (n ** (2 / 3) / h ** 5)
    checks["k_lower"] = _check(kr >= params.c2, kr, params.c2)
    side_max = max((max(len(g.U), len(g.V)) for g in graphs), default=0)
    side_min = min((min(len(g.U), len(g.V)) for g in graphs), default=2)
    checks["side_sizes"] = _check(side_min >= 2 and side_max <= params.c3 * h ** 6,
                                  side_max / h ** 6, params.c3)
    e_min = min((len(g.edges) for g in graphs), default=0)
    checks["edge_lower"] = _check(all(len(g.edges) >= params.c4 * h ** 7 for g in graphs),
                                  e_min / h ** 7 if graphs else None, params.c4)
    seen: dict[int, int] = {}
    clash = None
    for g in graphs:
        for u in g.U:
            if u in seen and clash is None:
                clash = [u, seen[u], g.cell_id]
            seen.setdefault(u, g.cell_id)
    checks["U_disjoint"] = _check(clash is None, clash, None)
    Pp = set(out.P_prime)
    bad_v = [v for g in graphs for v in g.V if v not in Pp]
    checks["V_in_P_prime"] = _check(not bad_v, len(bad_v), None)
    bad_e = [(u, v) for g in graphs for u, v in g.edges if not P.is_unit(u, v)]
    checks["unit_edges"] = _check(not bad_e, len(bad_e), None)
    checks["U_V_disjoint"] = _check(all(not set(g.U) & set(g.V) for g in graphs), None, None)
    rep.checks = checks
    return rep


def st_cell_cap_check(graphs: Sequence[BipartiteCellGraph], c5: float = 4.0) -> dict:
    """``|E| <= c5 (|U||V|)^(2/3) + |U| + |V|`` per graph, with the c5 each one needs."""
    rows = []
    for g in graphs:
        a, b, e = len(g.U), len(g.V), len(g.edges)
        core = (a * b) ** (2 / 3)
        need = max(0.0, (e - a - b) / core) if core else 0.0
        rows.append({"cell_id": g.cell_id, "U": a, "V": b, "E": e,
                     "ratio": e / (c5 * core + a + b), "c5_needed": need, "pass": e <= c5 * core + a + b})
    return {"c5": c5, "pass": all(r["pass"] for r in rows), "graphs": rows,
            "c5_needed_max": max((r["c5_needed"] for r in rows), default=0.0)}


def summary_tsv(out: StructureOutput) -> str:
    lines = ["cell_id\tU\tV\tE"]
    for g in out.graphs:
        lines.append(f"{g.cell_id}\t{len(g.U)}\t{len(g.V)}\t{len(g.edges)}")
    return "\n".join(lines) + "\n"


def edges_exactly_unit(out: StructureOutput) -> bool:
    """Re-verify every emitted edge with the coordinate arithmetic of ``P``."""
    P = out.P
    if P.mode != EXACT:
        return all(P.is_unit(u, v) for g in out.graphs for u, v in g.edges)
    return all(squared_distance(P.points[u], P.points[v]) == P.unit_sq for g in out.graphs for u, v in g.edges)
