from __future__ import annotations

import math
from fractions import Fraction

import pytest

from unitrig.formats import dumps
from unitrig.generators import best_popular_square_distance, integer_grid, scaled_grid_unit
from unitrig.geometry import FLOAT
from unitrig.pipeline import (BipartiteCellGraph, PipelineParams, StructureOutput, StructureReport,
                              default_degree, edges_exactly_unit, heavy_cell_select,
                              run_structure_extraction, st_cell_cap_check, summary_tsv,
                              verify_structure_theorem)
from unitrig.unit_graph import PointSet


def test_default_degree():
    assert default_degree(1000, 1.0) == 10
    assert default_degree(10_000, 1.5) == round(10_000 ** (1 / 3) / 2.25)
    assert default_degree(8, 10.0) == 1
    assert PipelineParams().filled(1000).r == 10


def test_params_validation():
    assert PipelineParams(h=0).validate()
    assert PipelineParams(tol=0).validate()
    assert PipelineParams(r=0).validate()
    assert not PipelineParams().validate()


def test_triangle_smoke():
    P = PointSet.from_coords([(0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3) / 2)], mode=FLOAT)
    out = run_structure_extraction(P, PipelineParams(h=1.0, r=1, t=1))
    assert out.report.n == 3
    assert any("not meaningful" in n for n in out.report.notes)
    assert edges_exactly_unit(out)


def test_grid_edges_exactly_unit():
    P = integer_grid(10)
    out = run_structure_extraction(P, PipelineParams(h=1.0))
    for g in out.graphs:
        for u, v in g.edges:
            (a, b), (c, d) = P.points[u], P.points[v]
            assert (Fraction(a) - c) ** 2 + (Fraction(b) - d) ** 2 == 1
    checks = out.report.checks
    for name in ("U_disjoint", "V_in_P_prime", "unit_edges", "U_V_disjoint"):
        assert checks[name]["pass"], name


@pytest.fixture(scope="module")
def grid32():
    d, _ = best_popular_square_distance(32)
    P = scaled_grid_unit(32, d)
    return P, run_structure_extraction(P, PipelineParams(h=1.0, seed=3))


def test_grid32_invariants(grid32):
    P, out = grid32
    rep = out.report
    assert rep.k == len(out.graphs) > 0
    assert rep.sizes == [(len(g.U), len(g.V), len(g.edges)) for g in out.graphs]
    assert edges_exactly_unit(out)
    Pp = set(out.P_prime)
    us = [u for g in out.graphs for u in g.U]
    assert len(us) == len(set(us))
    assert all(v in Pp for g in out.graphs for v in g.V)
    assert all(len(g.U) >= 2 and len(g.V) >= 2 for g in out.graphs)
    assert all(len(g.edges) >= 1.0 for g in out.graphs)
    first = rep.stages["first"]
    assert first["heavy_ge_mean"]
    assert first["zero_set_incidences"] <= first["zero_set_budget"]
    assert rep.cap_check["pass"]


def test_grid32_frameworks_are_unit(grid32):
    P, out = grid32
    g = out.graphs[0]
    fw = g.framework(P)
    assert fw.n == len(g.U) + len(g.V)
    for i, j in fw.edges:
        (a, b), (c, d) = fw.realization[i], fw.realization[j]
        assert (a - c) ** 2 + (b - d) ** 2 == P.unit_sq


def test_graph_json_roundtrip(grid32):
    _, out = grid32
    g = out.graphs[0]
    assert BipartiteCellGraph.from_json(g.to_json()) == g


def test_determinism(grid32):
    P, out = grid32
    again = run_structure_extraction(P, PipelineParams(h=1.0, seed=3))
    assert dumps(again.report.to_json()) == dumps(out.report.to_json())
    assert [g.to_json() for g in again.graphs] == [g.to_json() for g in out.graphs]
    assert summary_tsv(again) == summary_tsv(out)


def test_heavy_cell_select():
    assert heavy_cell_select([4], [0]) == 4
    assert heavy_cell_select([0, 1, 2], [5, 9, 9]) == 1
    with pytest.raises(ValueError):
        heavy_cell_select([], [])


def _fake_output(graphs, P=None):
    P = P or integer_grid(4)
    rep = StructureReport(len(P), {}, len(P), len(graphs), [])
    return StructureOutput(P, tuple(range(len(P))), tuple(range(len(P))), list(graphs), rep)


def test_verify_empty_graph_list():
    out = _fake_output([])
    rep = verify_structure_theorem(out, PipelineParams())
    assert not rep.checks["k_lower"]["pass"]
    assert rep.checks["U_disjoint"]["pass"]


def test_verify_detects_shared_u_index():
    g1 = BipartiteCellGraph(0, (0, 1), (4, 5), ((0, 4), (1, 5)))
    g2 = BipartiteCellGraph(1, (1, 2), (5, 6), ((1, 5), (2, 6)))
    rep = verify_structure_theorem(_fake_output([g1, g2]), PipelineParams())
    assert not rep.checks["U_disjoint"]["pass"]
    assert rep.checks["U_disjoint"]["measured"][0] == 1
    assert rep.checks["unit_edges"]["pass"]


def test_cap_check_small():
    g = BipartiteCellGraph(0, (0, 1), (2, 3), ((0, 2), (0, 3), (1, 2), (1, 3)))
    rep = st_cell_cap_check([g], c5=4.0)
    row = rep["graphs"][0]
    core = 4 ** (2 / 3)
    assert row["ratio"] == pytest.approx(4 / (4 * core + 4))
    assert row["c5_needed"] == 0.0 and rep["pass"]


def test_cap_check_flags_complete_bipartite():
    a = b = 40
    U, V = tuple(range(a)), tuple(range(a, a + b))
    g = BipartiteCellGraph(0, U, V, tuple((u, v) for u in U for v in V))
    rep = st_cell_cap_check([g], c5=4.0)
    need = (a * b - a - b) / (a * b) ** (2 / 3)
    assert not rep["pass"]
    assert rep["c5_needed_max"] == pytest.approx(need)
