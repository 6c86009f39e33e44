# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest

from errors import InfeasibleInstance, Uncoverable
from set_cover import checked_greedy_cover, fractional_set_cover_value, greedy_set_cover


def test_fractional_value_of_triangle():
    assert fractional_set_cover_value({0, 1, 2}, [{0, 1}, {1, 2}, {0, 2}]) == pytest.approx(1.5, abs=1e-6)


def test_fractional_value_ignores_elements_outside_universe():
    assert fractional_set_cover_value([0], [[0, 5], [5, 6]]) == pytest.approx(1.0, abs=1e-6)


def test_fractional_value_edge_cases():
    assert fractional_set_cover_value([], [[0]]) == 0.0
    assert math.isinf(fractional_set_cover_value([0, 1], [[0]]))


def test_greedy_takes_largest_gain_first():
    assert greedy_set_cover(range(5), [[0], [0, 1, 2], [3, 4], [2, 3]]) == [1, 2]


def test_greedy_ties_break_on_lowest_index():
    assert greedy_set_cover([0, 1], [[0], [1], [0]]) == [0, 1]


def test_greedy_uncoverable_is_an_infeasibility():
    with pytest.raises(Uncoverable):
        greedy_set_cover([0, 1, 2], [[0], [1]])
    assert issubclass(Uncoverable, InfeasibleInstance)


def test_greedy_within_log_factor_of_fractional_cover():
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(2, 10))
        sets = [sorted(rng.choice(n, int(rng.integers(1, n + 1)), replace=False).tolist())
                for _ in range(int(rng.integers(2, 8)))]
        for e in set(range(n)) - {e for s in sets for e in s}:
            sets[int(rng.integers(len(sets)))].append(e)
        chosen, bound = checked_greedy_cover(range(n), sets)
        assert set().union(*(sets[i] for i in chosen)) == set(range(n))
        assert len(chosen) <= bound + 1e-6
        assert bound == pytest.approx((1 + math.log(n)) * fractional_set_cover_value(range(n), sets))


def test_pairwise_triangle_cover_fits_log_bound():
    chosen, bound = checked_greedy_cover({0, 1, 2}, [{0, 1}, {1, 2}, {0, 2}])
    assert len(chosen) == 2
    assert bound == pytest.approx((1 + math.log(3)) * 1.5, abs=1e-5)
