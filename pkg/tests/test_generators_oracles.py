# -*- coding: utf-8 -*-
"""インスタンス生成と総当たりオラクル"""
import itertools

import pytest

from errors import (DegenerateGraph, InfeasibleInstance, InvalidParameter, SizeLimit)
from generators import (CANONICAL_NAMES, GapParams, build_gap_instance, canonical_instance,
                        gen_gap_instance, gen_planted_rbsc, gen_random_mku, gen_random_mmsa,
                        gen_random_rbsc)
from instance_model import (MinKUnionInstance, RbscInstance, evaluate_circuit, instance_digest,
                            is_rbsc_feasible, rbsc_solution, rbsc_to_mmsa3, validate)
from oracles import (bruteforce_mku, bruteforce_mmsa, bruteforce_partial_rbsc, bruteforce_rbsc,
                     oracle_caps)


def test_generators_are_deterministic():
    assert gen_random_rbsc(10, 12, 6, 2, 3, 5) == gen_random_rbsc(10, 12, 6, 2, 3, 5)
    assert gen_random_rbsc(10, 12, 6, 2, 3, 5) != gen_random_rbsc(10, 12, 6, 2, 3, 6)
    assert gen_random_mku(9, 6, 2, 3, 1) == gen_random_mku(9, 6, 2, 3, 1)
    assert gen_random_mmsa([3, 4, 5], 2, 8) == gen_random_mmsa([3, 4, 5], 2, 8)


@pytest.mark.parametrize('name', CANONICAL_NAMES)
def test_canonical_instances_are_valid(name):
    inst = canonical_instance(name)
    validate(inst)
    assert instance_digest(inst) == instance_digest(canonical_instance(name))


def test_unknown_canonical_name():
    with pytest.raises(InvalidParameter):
        canonical_instance('rbsc-huge-9')


def test_random_rbsc_covers_every_blue():
    inst = gen_random_rbsc(5, 8, 12, 1, 2, 3)
    assert all(inst.blue_to_sets[b] for b in range(inst.k))


def test_random_rbsc_parameter_checks():
    with pytest.raises(InvalidParameter):
        gen_random_rbsc(5, 4, 3, 4, 1, 0)
    with pytest.raises(InvalidParameter):
        gen_random_rbsc(0, 4, 3, 1, 1, 0)


def test_zero_red_size_has_zero_optimum():
    inst = gen_random_rbsc(6, 5, 4, 2, 0, 1)
    cost, chosen = bruteforce_rbsc(inst)
    assert cost == 0
    assert is_rbsc_feasible(inst, rbsc_solution(inst, chosen))


@pytest.mark.parametrize('seed', [0, 1, 2])
def test_planted_cover_is_feasible(seed):
    inst, planted = gen_planted_rbsc(16, 20, 10, 4, seed)
    solution = rbsc_solution(inst, planted)
    assert is_rbsc_feasible(inst, solution)
    assert solution.cost == 4
    assert bruteforce_rbsc(inst)[0] <= 4


def test_mmsa_generator_is_satisfiable_with_all_variables():
    inst = gen_random_mmsa([2, 3, 4, 5], 3, 4)
    assert evaluate_circuit(inst, range(inst.variable_count))
    assert all(1 <= len(ch) <= 3 for layer in inst.edges for ch in layer)


def test_gap_instance_structure():
    params = GapParams(n=12, eps=0.5, t=5, seed=3)
    inst = gen_gap_instance(params)
    assert inst.t == 5
    assert inst.layers[0] == params.top_size
    assert inst.layers[2] == inst.layers[4] == 12
    for d in (2, 4):
        assert all(len(ch) == 2 and ch[0] < ch[1] for ch in inst.edges[d - 1])
    for d in (1, 3):
        children = sorted(c for ch in inst.edges[d - 1] for c in ch)
        assert children == list(range(inst.layers[d]))


def test_gap_gate_count_close_to_expectation():
    params = GapParams(n=40, eps=0.5, t=3, seed=0)
    mean, sd = params.expected_gates()
    counts = [gen_gap_instance(GapParams(40, 0.5, 3, seed)).layers[1] for seed in range(10)]
    average = sum(counts) / len(counts)
    assert abs(average - mean) <= 4 * sd / len(counts) ** 0.5


def test_gap_parameter_checks():
    with pytest.raises(InvalidParameter):
        gen_gap_instance(GapParams(10, 0.5, 4))
    with pytest.raises(InvalidParameter):
        gen_gap_instance(GapParams(10, 1.0, 3))


def test_degenerate_graph_detected():
    # 2頂点のグラフは辺が高々1本で、2個の OR ゲートに割り振れない
    params = GapParams(n=2, eps=0.05, t=3)
    assert params.top_size == 2
    with pytest.raises(DegenerateGraph):
        build_gap_instance(params, seed=0)
    with pytest.raises(DegenerateGraph):
        gen_gap_instance(params)
    with pytest.raises(DegenerateGraph, match="within 3 seeds"):
        gen_gap_instance(params, max_reseeds=3)


def test_rbsc_oracle_matches_circuit_oracle(rbsc_small):
    cost, chosen = bruteforce_rbsc(rbsc_small)
    assert is_rbsc_feasible(rbsc_small, rbsc_solution(rbsc_small, chosen))
    assert rbsc_solution(rbsc_small, chosen).cost == cost
    assert bruteforce_mmsa(rbsc_to_mmsa3(rbsc_small))[0] == cost


def test_partial_oracle_is_monotone(rbsc_small):
    costs = [bruteforce_partial_rbsc(rbsc_small, k_hat)[0] for k_hat in range(rbsc_small.k + 1)]
    assert costs[0] == 0
    assert costs == sorted(costs)


def test_mku_oracle_against_enumeration(mku_small):
    cost, combo = bruteforce_mku(mku_small)
    best = min(len(set().union(*(mku_small.sets[i] for i in c)))
               for c in itertools.combinations(range(mku_small.m), mku_small.k))
    assert cost == best
    assert len(combo) == mku_small.k


def test_mku_oracle_with_k_one():
    inst = MinKUnionInstance(5, 1, ((0, 1, 2), (3,), (1, 4)))
    assert bruteforce_mku(inst) == (1, (1,))


def test_oracle_caps():
    big = gen_random_rbsc(30, 5, 4, 1, 1, 0)
    with pytest.raises(SizeLimit):
        bruteforce_rbsc(big)
    with pytest.raises(SizeLimit):
        bruteforce_mku(gen_random_mku(10, 30, 15, 2, 0))
    assert oracle_caps({'oracles': {'rbsc_sets': 5}})['rbsc_sets'] == 5
    assert oracle_caps()['mmsa_variables'] == 24


def test_oracle_infeasible_cover():
    inst = RbscInstance(2, 1, ((0,),), ((0,),))
    with pytest.raises(InfeasibleInstance):
        bruteforce_rbsc(inst)
    assert bruteforce_partial_rbsc(inst, 1) == (1, (0,))
