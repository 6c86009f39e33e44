# -*- coding: utf-8 -*-
"""RBSC 近似: 分割・LP・丸め・ドライバ"""
import math

import numpy as np
import pytest

from errors import InfeasibleInstance, InvalidParameter, RoundingFailure
from generators import gen_random_rbsc
from instance_model import RbscInstance, is_rbsc_feasible
from lp_engine import LpSolution, LpStatus, solve
from oracles import bruteforce_partial_rbsc, bruteforce_rbsc
from rbsc_approx import (Bucket, RbscParams, RbscSolver, approximation_factor, build_progress_lp,
                         exhaustive_expectation, expected_potential, partition_by_red_degree,
                         potential_coefficient, round_conditional_expectation, solve_partial_rbsc,
                         solve_rbsc)


def test_approximation_factor_formula():
    expected = 8.0 * 27 ** (1 / 3) * math.log2(16) ** (4 / 3) * math.log2(4)
    assert approximation_factor(27, 16, 4) == pytest.approx(expected)
    assert approximation_factor(27, 16, 4, log_k_power=2) == pytest.approx(expected * 2)


@pytest.mark.parametrize('n0', [1, 3, 10])
def test_partition_satisfies_its_invariants(rbsc_small, n0):
    partition = partition_by_red_degree(rbsc_small, n0)
    assert partition.check(rbsc_small) == []
    assert len(partition.excluded) <= n0


@pytest.mark.parametrize('seed', range(20))
def test_partition_invariants_on_random_instances(seed):
    inst = gen_random_rbsc(12, 15, 6, 2, 1 + seed % 4, seed)
    for n0 in (1, 2, 5, 20, 100):
        partition = partition_by_red_degree(inst, n0)
        assert partition.check(inst) == [], (seed, n0)
        assert len(partition.excluded) <= n0


def test_partition_rejects_zero_budget(rbsc_small):
    with pytest.raises(InvalidParameter):
        partition_by_red_degree(rbsc_small, 0)


def test_expected_potential_matches_enumeration(rbsc_small):
    rng = np.random.default_rng(3)
    probs = {j: float(p) for j, p in enumerate(rng.random(rbsc_small.m))}
    reds = frozenset(range(rbsc_small.n))
    blues = frozenset(range(rbsc_small.k))
    exact = expected_potential(rbsc_small, probs, reds, blues, 1.7)
    assert exact == pytest.approx(exhaustive_expectation(rbsc_small, probs, reds, blues, 1.7), abs=1e-9)


def test_progress_lp_value_bounded_by_blue_count(rbsc_small):
    partition = partition_by_red_degree(rbsc_small, 1)
    bucket = partition.buckets[0]
    i0 = min(i for i in bucket.reds if any(i in rbsc_small.red_adj[j] for j in bucket.sets))
    model = build_progress_lp(rbsc_small, bucket, i0, 2, frozenset(range(rbsc_small.k)))
    result = solve(model)
    assert result.is_optimal
    assert 0.0 < result.objective <= rbsc_small.k + 1e-9
    assert sum(result.group('y').values()) <= 2 + 1e-6


def test_solver_is_feasible_and_within_bound(rbsc_small):
    solver = RbscSolver(rbsc_small, RbscParams(seed=0))
    solution = solver.solve()
    opt, _ = bruteforce_rbsc(rbsc_small)
    assert is_rbsc_feasible(rbsc_small, solution)
    assert opt <= solution.cost <= solver.report.factor_log_k * opt
    assert solver.report.opt_guess is not None
    assert solver.report.cost == solution.cost


def test_solver_is_deterministic_across_job_counts(rbsc_small):
    one = solve_rbsc(rbsc_small, RbscParams(seed=5, jobs=1))
    many = solve_rbsc(rbsc_small, RbscParams(seed=5, jobs=4))
    assert one == many


@pytest.mark.parametrize('k_hat', [1, 3, 5])
def test_partial_cover_reaches_k_hat(rbsc_small, k_hat):
    solution = solve_partial_rbsc(rbsc_small, k_hat)
    assert is_rbsc_feasible(rbsc_small, solution, k_hat)
    solver = RbscSolver(rbsc_small)
    assert solver.solve(k_hat) == solution
    opt = bruteforce_partial_rbsc(rbsc_small, k_hat)[0]
    assert opt <= solution.cost <= solver.report.factor_log_k * opt


def test_partial_cover_of_zero_blues_is_free(rbsc_small):
    solution = solve_partial_rbsc(rbsc_small, 0)
    assert solution.cost == 0 and solution.chosen_sets == ()


def test_invalid_k_hat(rbsc_small):
    with pytest.raises(InvalidParameter):
        solve_partial_rbsc(rbsc_small, rbsc_small.k + 1)


def test_uncoverable_blue_is_infeasible():
    inst = RbscInstance(2, 2, ((0,), (0,)), ((0,), (1,)))
    with pytest.raises(InfeasibleInstance):
        solve_rbsc(inst)


def test_sets_without_reds_are_taken_for_free():
    inst = RbscInstance(3, 2, ((0, 1), (2,), (2,)), ((), (0, 1), (1,)))
    solution = solve_rbsc(inst)
    assert 0 in solution.chosen_sets
    assert solution.cost == 1


def test_rounding_keeps_an_integral_set():
    inst = RbscInstance(2, 2, ((0, 1), (1,)), ((0,), (1,)))
    bucket = Bucket(0, 1, (0, 1), frozenset({0, 1}))
    lp = LpSolution(LpStatus.OPTIMAL, {('x', 0): 1.0, ('y', 0): 1.0, ('z', 0): 1.0, ('z', 1): 1.0}, 2.0)
    step = round_conditional_expectation(inst, lp, bucket, 0, 1, frozenset({0, 1}))
    assert step.chosen == (0,)
    assert (step.new_red, step.new_blue) == (1, 2)
    assert step.potential < 0


def test_rounding_rejects_vanishing_lp_value():
    inst = RbscInstance(2, 2, ((0, 1), (1,)), ((0,), (1,)))
    bucket = Bucket(0, 1, (0, 1), frozenset({0, 1}))
    lp = LpSolution(LpStatus.OPTIMAL, {('x', 0): 1e-10, ('z', 0): 1e-10}, 1e-10)
    with pytest.raises(RoundingFailure):
        round_conditional_expectation(inst, lp, bucket, 0, 1, frozenset({0, 1}))


def test_solver_rounds_progress_lps_with_nonpositive_potential(rbsc_small):
    instances = [rbsc_small] + [gen_random_rbsc(14, 16, 8, 2, 3, seed) for seed in range(5)]
    lp_steps = 0
    for inst in instances:
        solver = RbscSolver(inst)
        solution = solver.solve()
        assert is_rbsc_feasible(inst, solution)
        assert solver.report.excluded_reds <= solver.report.n0
        for step in solver.report.steps:
            if step.kind != 'lp':
                continue
            lp_steps += 1
            c = potential_coefficient(inst.m, inst.n, step.opt_guess, step.remaining_blue)
            assert step.new_blue >= 1
            assert step.new_red - c * step.new_blue <= 1e-7
    assert lp_steps > 0


def test_opt_guess_success_is_monotone():
    # 青1は赤2個の集合でしか覆えないので g = 1 は失敗する
    inst = RbscInstance(2, 3, ((0,), (1,)), ((0,), (1, 2)))
    solver = RbscSolver(inst)
    with pytest.raises(RoundingFailure):
        solver.run_guess(1)
    for g in (2, 4, 8):
        chosen, steps = solver.run_guess(g)
        assert sorted(chosen) == [0, 1]
        assert [s.kind for s in steps] == ['lp', 'lp']
