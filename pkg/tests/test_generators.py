from __future__ import annotations

import math
import warnings

import pytest

from oracles import (GRID3_SQRT2_PAIRS, POPULAR_10, POPULAR_12, SCALED_GRID_10_25_U, brute_pairs,
                     brute_popular)
from unitrig.generators import (GeneratorSpec, NoUnitPairsWarning, best_popular_square_distance,
                                generate, integer_grid, is_sum_of_two_squares, perturb,
                                pseudo_generic_realization, random_disk, scaled_grid_unit,
                                square_distance_histogram)
from unitrig.geometry import EXACT, FLOAT
from unitrig.rigidity import Framework, infinitesimal_rigidity_test
from unitrig.unit_graph import count_unit_distances


@pytest.mark.parametrize("m", [1, 2, 5])
def test_integer_grid_size(m):
    P = integer_grid(m)
    assert len(P) == m * m and P.mode == EXACT


def test_integer_grid_rejects_zero():
    with pytest.raises(ValueError):
        integer_grid(0)


def test_popular_small_grids():
    assert best_popular_square_distance(2) == (1, 4)
    assert best_popular_square_distance(3) == (1, 12)


def test_popular_frozen_values():
    assert best_popular_square_distance(10) == POPULAR_10
    assert best_popular_square_distance(12) == POPULAR_12


@pytest.mark.parametrize("m", range(2, 13))
def test_popular_matches_bruteforce(m):
    assert best_popular_square_distance(m) == brute_popular(m)


def test_histogram_totals_all_pairs():
    m = 7
    assert sum(square_distance_histogram(m).values()) == math.comb(m * m, 2)


def test_sum_of_two_squares():
    assert [d for d in range(1, 30) if is_sum_of_two_squares(d)] == \
        [1, 2, 4, 5, 8, 9, 10, 13, 16, 17, 18, 20, 25, 26, 29]


@pytest.mark.parametrize("m,d,u", [(2, 1, 4), (3, 2, 8), (10, 25, SCALED_GRID_10_25_U)])
def test_scaled_grid_counts(m, d, u):
    P = scaled_grid_unit(m, d)
    assert count_unit_distances(P) == u
    assert len(brute_pairs(P.points, d)) == u


def test_scaled_grid_sqrt2_frozen():
    assert count_unit_distances(scaled_grid_unit(3, 2)) == GRID3_SQRT2_PAIRS


def test_scaled_grid_float_mode_agrees():
    a = scaled_grid_unit(10, 25, EXACT)
    b = scaled_grid_unit(10, 25, FLOAT)
    assert b.unit_sq == 1.0
    assert count_unit_distances(a) == count_unit_distances(b)


def test_scaled_grid_warns_without_unit_pairs():
    with pytest.warns(NoUnitPairsWarning):
        P = scaled_grid_unit(4, 3)
    assert count_unit_distances(P) == 0
    with pytest.raises(ValueError):
        scaled_grid_unit(4, 0)


def test_perturbed_grid_has_no_unit_pairs():
    P = perturb(integer_grid(3), 0.01, seed=1)
    assert P.mode == EXACT
    assert count_unit_distances(P) == 0


def test_perturb_zero_is_identity_and_negative_rejected():
    P = integer_grid(3)
    assert perturb(P, 0.0, 0) == P
    with pytest.raises(ValueError):
        perturb(P, -1.0, 0)


def test_random_disk_deterministic_and_inside():
    a = random_disk(300, 5.0, seed=3)
    b = random_disk(300, 5.0, seed=3)
    assert a.points == b.points
    assert all(x * x + y * y <= 25.0 + 1e-12 for x, y in a.points)
    assert random_disk(300, 5.0, seed=4).points != a.points


def test_pseudo_generic_realization_is_rigid_on_k4_minus_edge():
    pts = pseudo_generic_realization(4, seed=11)
    fw = Framework(4, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)], pts)
    assert infinitesimal_rigidity_test(fw).verdict == "rigid"
    assert pseudo_generic_realization(4, seed=11) == pts
    with pytest.raises(ValueError):
        pseudo_generic_realization(0, seed=1)


def test_generate_dispatch():
    P = generate(GeneratorSpec(kind="scaled_grid_unit", m=10, d=25))
    assert count_unit_distances(P) == SCALED_GRID_10_25_U
    with pytest.raises(ValueError):
        generate(GeneratorSpec(kind="nope"))
    with pytest.raises(ValueError):
        generate(GeneratorSpec(m=0))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert len(generate(GeneratorSpec(kind="random_disk", m=50, seed=2))) == 50
