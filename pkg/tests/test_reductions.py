# -*- coding: utf-8 -*-
"""Min k-Union -> RBSC 帰着と反復ソルバー"""
import math

import pytest

from errors import InfeasibleInstance, InvalidParameter
from generators import gen_random_mku
from instance_model import MinKUnionInstance, validate
from oracles import bruteforce_mku
from rbsc_approx import RbscSolver
from reductions import (MkuReport, blue_sample_uniformity, per_blue_miss_rate, property_one_holds,
                        reduce_mku_to_rbsc, reduction_params, round_bound, solve_mku_via_rbsc,
                        union_size, validate_reduction_success)


@pytest.mark.parametrize('k, ell, k_prime', [(1, 1, 1), (2, 2, 1), (3, 3, 1), (7, 3, 2), (10, 4, 2)])
def test_reduction_params(k, ell, k_prime):
    params = reduction_params(k)
    assert (params.ell, params.k_prime) == (ell, k_prime)


def test_reduction_params_rejects_zero():
    with pytest.raises(InvalidParameter):
        reduction_params(0)


def test_reduced_instance_shape(mku_small):
    rbsc, params = reduce_mku_to_rbsc(mku_small, seed=4)
    validate(rbsc)
    assert rbsc.k == mku_small.k and rbsc.n == mku_small.n and rbsc.m == mku_small.m
    assert rbsc.red_adj == mku_small.sets
    assert all(1 <= len(b) <= params.ell for b in rbsc.blue_adj)
    assert reduce_mku_to_rbsc(mku_small, seed=4)[0] == rbsc


def test_k_equal_one_gives_single_blue():
    inst = MinKUnionInstance(4, 1, ((0, 1), (2,), (1, 3)))
    rbsc, params = reduce_mku_to_rbsc(inst, seed=0)
    assert params.k_prime == 1
    assert rbsc.blue_adj == ((0,), (0,), (0,))


def test_first_k_prime_sets_of_any_cover_fit_in_its_cost(mku_small):
    checked = 0
    for seed in range(20):
        rbsc, params = reduce_mku_to_rbsc(mku_small, seed=seed)
        try:
            solution = RbscSolver(rbsc).solve()
        except InfeasibleInstance:
            continue
        assert property_one_holds(mku_small, rbsc, params, solution.chosen_sets)
        checked += 1
    assert checked > 0


def test_property_check_needs_a_cover(mku_small):
    rbsc, params = reduce_mku_to_rbsc(mku_small, seed=0)
    with pytest.raises(InvalidParameter):
        property_one_holds(mku_small, rbsc, params, [])


def test_iterative_solver_picks_exactly_k_sets(mku_small):
    report = MkuReport()
    chosen = solve_mku_via_rbsc(mku_small, seed=0, report=report)
    assert len(chosen) == len(set(chosen)) == mku_small.k
    assert union_size(mku_small, chosen) >= bruteforce_mku(mku_small)[0]
    assert report.cost == union_size(mku_small, chosen)
    assert sum(len(r.picked) for r in report.rounds) == mku_small.k
    assert report.round_count <= mku_small.k


@pytest.mark.parametrize('seed', range(8))
def test_round_count_within_shrink_bound(seed):
    k = 2 + seed % 4
    inst = gen_random_mku(10, 7, k, 3, seed)
    report = MkuReport()
    chosen = solve_mku_via_rbsc(inst, seed=seed, report=report)
    assert len(set(chosen)) == k
    assert report.round_bound == pytest.approx(4 * reduction_params(k).ell * math.log2(k))
    assert report.round_count <= report.round_bound
    assert round_bound(1) == 1.0


def test_k_equal_m_takes_every_set():
    inst = gen_random_mku(10, 4, 4, 3, 2)
    report = MkuReport()
    assert sorted(solve_mku_via_rbsc(inst, report=report)) == [0, 1, 2, 3]
    assert report.round_count == 1


def test_failing_rbsc_solver_uses_fallback(mku_small):
    def refuse(instance):
        raise InfeasibleInstance("refused")

    report = MkuReport()
    chosen = solve_mku_via_rbsc(mku_small, rbsc_solver=refuse, report=report)
    assert len(set(chosen)) == mku_small.k
    assert any(r.fallback for r in report.rounds)


def test_analytic_miss_rate():
    assert per_blue_miss_rate(3, 3) == pytest.approx((2 / 3) ** 9)
    assert per_blue_miss_rate(10, 4) < 1 / math.e ** 3


@pytest.mark.slow
def test_reduction_success_frequency(mku_small):
    stats = validate_reduction_success(mku_small, trials=2000, seed=0)
    assert stats.success_rate >= 0.55
    assert stats.success_rate >= stats.success_bound - 0.05
    assert abs(stats.miss_rate - stats.analytic_miss_rate) <= 3 * stats.miss_rate_sigma()
    assert stats.opt_cost == bruteforce_mku(mku_small)[0]


def test_reduction_trials_independent_of_jobs(mku_small):
    one = validate_reduction_success(mku_small, trials=200, seed=1, jobs=1)
    many = validate_reduction_success(mku_small, trials=200, seed=1, jobs=4)
    assert one == many


@pytest.mark.slow
def test_blue_samples_are_uniform():
    assert blue_sample_uniformity(5, 8, 500, seed=0) > 1e-3


def test_uniformity_needs_two_blues():
    with pytest.raises(InvalidParameter):
        blue_sample_uniformity(1, 8, 10, seed=0)
