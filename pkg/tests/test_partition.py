from __future__ import annotations

import math

import numpy as np
import pytest

from oracles import generic_lines, line_arrangement_faces
from unitrig.partition import (BivariatePoly, Factor, InfeasibleBudgetError, bisection_imbalance,
                               cells_of_complement, certificate_holds, circles_crossing_cell,
                               incidences_on_zero_set, min_degree_for, n_monomials,
                               partition_points, polynomial_ham_sandwich, zero_set_budget)

BOX = (-2.0, -2.0, 2.0, 2.0)


def _halves(vals):
    return int((vals > 0).sum()), int((vals < 0).sum())


def test_square_corners_bisected_by_a_line():
    sq = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=float)
    f = polynomial_ham_sandwich([sq], 1, seed=0)
    pos, neg = _halves(f(sq))
    assert pos <= 2 and neg <= 2


def test_collinear_set_split_at_median():
    pts = np.column_stack([np.arange(7.0), 2 * np.arange(7.0)])
    f = polynomial_ham_sandwich([pts], 1, seed=3)
    pos, neg = _halves(f(pts))
    assert pos <= 4 and neg <= 4


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_three_sets_at_degree_two(seed):
    rng = np.random.default_rng(seed)
    sets = [rng.normal(size=(50, 2)) + off for off in ((0, 0), (5, 1), (-3, 4))]
    f = polynomial_ham_sandwich(sets, 2, seed=seed)
    assert f.degree == 2
    assert certificate_holds(f, sets)
    for s in sets:
        pos, neg = _halves(f(s))
        assert pos <= 25 and neg <= 25


def test_too_many_sets_for_budget():
    sets = [np.random.default_rng(i).normal(size=(5, 2)) for i in range(3)]
    with pytest.raises(InfeasibleBudgetError):
        polynomial_ham_sandwich(sets, 1)


def test_degree_counts():
    assert [n_monomials(d) for d in range(4)] == [1, 3, 6, 10]
    assert [min_degree_for(k) for k in (1, 2, 3, 5, 6, 9)] == [1, 1, 2, 2, 3, 3]


def test_bisection_imbalance():
    assert bisection_imbalance(np.array([1.0, -1.0, 0.0])) == 0
    assert bisection_imbalance(np.array([1.0, 1.0, 1.0, -1.0])) == 1


def test_single_point_partition():
    res = partition_points([(0.3, 0.4)], 2)
    assert res.n_points == 1
    assert sum(len(c.members) for c in res.cells) + len(res.zero_set) == 1


def _cells(factors, bbox=BOX, res=256):
    return cells_of_complement(BivariatePoly(tuple(factors)), bbox, res)


def test_cell_counts_small():
    assert len(_cells([Factor.line(0, 1, 0)]).cells) == 2                       # x
    assert len(_cells([Factor.line(0, 1, 0), Factor.line(0, 0, 1)]).cells) == 4  # xy


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_generic_lines_match_euler_count(k, seed):
    lines = [Factor.line(*c) for c in generic_lines(k, seed)]
    assert len(_cells(lines, (-10.0, -10.0, 10.0, 10.0), 512).cells) == line_arrangement_faces(k)


def test_thin_wedge_stays_one_cell():
    # two nearly parallel lines crossing in the box leave sub-pixel slivers
    lines = [Factor.line(0, 0, 1), Factor.line(0, -0.02, 1)]
    assert len(_cells(lines, (-6.0, -6.0, 6.0, 6.0), 256).cells) == 4


def test_three_generic_lines_seven_cells():
    lines = [Factor.line(0, 1, 0), Factor.line(0, 0, 1), Factor.line(-1, 1, 1)]
    assert len(_cells(lines).cells) == 7


def test_circles_crossing_examples():
    dec = _cells([Factor.line(0, 1, 0)])
    per_circle, per_cell, unstable = circles_crossing_cell([(0.0, 0.0), (50.0, 50.0)], 1.0, dec)
    assert len(per_circle[0]) == 2
    assert per_circle[1] == []
    assert not unstable
    assert sorted(c for cs in per_cell for c in cs) == [0, 0]


def test_zero_set_counts():
    assert incidences_on_zero_set([(0, 1), (2, 3), (2, 0)], [2]) == 2
    assert zero_set_budget(10, 2) == 10 * 2 + 10 + 4


def test_partition_is_sound():
    rng = np.random.default_rng(5)
    xy = rng.uniform(-1, 1, size=(400, 2))
    res = partition_points(xy, 4, seed=5)
    keys = res.f.sign_keys(xy)
    seen = set(res.zero_set)
    for c in res.cells:
        assert not seen & set(c.members)
        seen |= set(c.members)
        assert all(keys[i] == c.sign_key for i in c.members)
    assert seen == set(range(400))
    assert all(keys[i] < 0 for i in res.zero_set) or res.zero_set == ()
    assert res.certificates and all(res.certificates)
    assert res.stats["cell_count_ok"]


def test_partition_deterministic():
    xy = np.random.default_rng(9).uniform(size=(200, 2))
    a = partition_points(xy, 3, seed=1).to_json()
    b = partition_points(xy, 3, seed=1).to_json()
    assert a == b


def test_random_crossings_bounded_by_4d():
    rng = np.random.default_rng(12)
    xy = rng.uniform(-3, 3, size=(400, 2))
    res = partition_points(xy, 5, seed=12)
    centers = rng.uniform(-3, 3, size=(100, 2))
    per_circle, _, _ = circles_crossing_cell(centers, 1.0, res.decomposition)
    assert max(len(c) for c in per_circle) <= 4 * 5


def test_random_occupancy_bound():
    # Iterated halving cannot reach n/8 parts below 8 per cell at D=5; see the ledger.
    xy = np.random.default_rng(0).uniform(size=(400, 2))
    res = partition_points(xy, 5, seed=0)
    assert res.stats["max_occupancy"] <= 2 * 400 / 25, res.stats["c_occ_measured"]


def test_degree_must_be_positive():
    with pytest.raises(ValueError):
        partition_points([(0.0, 0.0)], 0)
