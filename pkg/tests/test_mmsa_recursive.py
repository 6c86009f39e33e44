# -*- coding: utf-8 -*-
"""MMSA_t 再帰: A 値の表、基本LP、カット、ドライバ、深さによる振り分け"""
import math

import pytest

import mmsa_recursive
from errors import CutLoopExhausted, InfeasibleInstance, InvalidParameter, NotViolated, StructuralError
from generators import gen_random_mmsa
from instance_model import MmsaInstance, evaluate_layers, is_mmsa_feasible
from lp_engine import Constraint
from mmsa4_approx import mmsa4_factor
from mmsa_recursive import (MmsaTParams, MmsaTSolver, RecursionFrame, approximation_table,
                            build_recursion_lp, cut_oracle, delta_exponent, next_a, solve_mmsa,
                            solve_mmsa_t, solve_mmsa_with_report)
from oracles import bruteforce_mmsa


@pytest.mark.parametrize('depth, exponent', [(4, 1 / 3), (6, 2 / 3), (8, 5 / 6), (7, 5 / 6)])
def test_exponent_ladder(depth, exponent):
    assert 1.0 - delta_exponent(depth) == pytest.approx(exponent)


def test_exponent_needs_depth_four():
    with pytest.raises(InvalidParameter):
        delta_exponent(3)


def test_table_follows_recurrence():
    table = approximation_table(50, 8)
    assert table.values[4] == pytest.approx(mmsa4_factor(50))
    assert table.values[6] == pytest.approx(2 * (1 + math.log(50)) * math.sqrt(50 * table.values[4]))
    assert table.values[8] == pytest.approx(next_a(50, table.values[6]))
    assert table.factor(7) == table.factor(8)
    assert table.exponent(6) == pytest.approx(2 / 3)


def test_table_override_propagates():
    table = approximation_table(50, 8, overrides={6: 3.0})
    assert table.values[6] == 3.0
    assert table.values[8] == pytest.approx(next_a(50, 3.0))
    assert approximation_table(50, 4, a4=7.0).values == {4: 7.0}


def test_table_rejects_tiny_circuit():
    with pytest.raises(InvalidParameter):
        approximation_table(1, 6)


def test_recursion_lp_shape(mmsa6_small):
    model = build_recursion_lp(mmsa6_small, 3)
    layers = mmsa6_small.layers
    assert model.sense == 'min'
    assert model.num_variables == layers[3] + layers[4] + layers[5]
    and_rows = sum(len(ch) for ch in mmsa6_small.edges[3])
    assert model.num_constraints == 1 + layers[4] + and_rows


def _frame(a_value: float, a_sub: float) -> RecursionFrame:
    return RecursionFrame(depth=6, level=0, N=100, opt_guess=2, a_value=a_value, a_sub=a_sub)


def test_frame_thresholds():
    frame = _frame(100.0, 1.0)
    log_term = 1.0 + math.log(100)
    assert frame.threshold == pytest.approx(2 * log_term / 100)
    assert frame.accept_size == pytest.approx(100 / (2 * log_term))
    assert frame.cut_rhs == math.floor(100 / (2 * log_term)) + 1
    assert frame.cover_bound == pytest.approx(100.0)


def test_cut_oracle_accepts_small_solution():
    assert cut_oracle(_frame(100.0, 1.0), 5, {0: 0.2}, []) is None


def test_cut_oracle_returns_violated_cut():
    frame = _frame(100.0, 1.0)
    cut = cut_oracle(frame, 20, {0: 1.0, 1: 0.5, 2: 0.2}, [0])
    assert cut.sense == '>='
    assert cut.rhs == float(frame.cut_rhs)
    assert [name for name, _ in cut.coeffs] == [('x', 1), ('x', 2)]
    assert cut.label == 'cut_0'


def test_cut_oracle_reports_satisfied_point():
    frame = _frame(10.0, 1.0)
    assert frame.cut_rhs == 1
    with pytest.raises(NotViolated):
        cut_oracle(frame, 3, {1: 0.6, 2: 0.5}, [])


def test_params_from_config_converts_json_keys():
    config = {'mmsa_t': {'cut_factor': 3, 'a_overrides': {'6': 2}}, 'rbsc': {'accept_constant': 4.0}}
    params = MmsaTParams.from_config(config, seed=9)
    assert params.cut_factor == 3
    assert params.a_overrides == {6: 2.0}
    assert params.rbsc.accept_constant == 4.0
    assert params.rbsc.seed == 9 and params.mmsa4.seed == 9


def test_depth_six_solution_is_feasible_and_bounded(mmsa6_small):
    solver = MmsaTSolver(mmsa6_small, MmsaTParams())
    solution = solver.solve()
    opt, _ = bruteforce_mmsa(mmsa6_small)
    assert is_mmsa_feasible(mmsa6_small, solution)
    assert opt <= solution.cost <= solver.table.factor(6) * opt
    assert solver.report.opt_guess is not None
    assert solver.report.frames[-1].accepted


def test_small_a_value_triggers_valid_cuts(mmsa6_small):
    solver = MmsaTSolver(mmsa6_small, MmsaTParams(a_overrides={6: 1.0}))
    solution = solver.solve()
    assert is_mmsa_feasible(mmsa6_small, solution)

    frames = [f for f in solver.report.frames if f.depth == 6]
    assert any(f.cuts or f.not_violated for f in frames)
    assert all(c.rhs == 1 for f in frames for c in f.cuts)
    for frame in frames:
        if frame.not_violated:
            assert frame.a_value > frame.a_initial

    # 推定値が OPT 以上のフレームのカットは最適解を切らない
    opt, optimum = bruteforce_mmsa(mmsa6_small)
    gates = evaluate_layers(mmsa6_small, optimum)[3]
    for frame in (f for f in frames if f.opt_guess >= opt):
        for cut in frame.cuts:
            assert sum(gates[j] for j in cut.support) >= cut.rhs


def test_odd_depth_is_embedded():
    inst = gen_random_mmsa([3, 4, 5, 5, 8], 2, 11)
    solver = MmsaTSolver(inst)
    solution = solver.solve()
    assert is_mmsa_feasible(inst, solution)
    assert solver.circuit.t == 6
    assert solver.report.depth == 5
    assert all(f.depth == 6 for f in solver.report.frames)


def test_cut_cap_exhausts(mmsa6_small):
    with pytest.raises(CutLoopExhausted):
        solve_mmsa_t(mmsa6_small, MmsaTParams(cut_factor=0))


def test_binding_cut_cap_is_reported_not_accepted(mmsa6_small, monkeypatch):
    def slack_cut(frame, sub_solution_size, x_values, plus, tol=1e-7):
        return Constraint(((('x', min(x_values)), 1.0),), '>=', 0.0, f'cut_{len(frame.cuts)}')

    monkeypatch.setattr(mmsa_recursive, 'cut_oracle', slack_cut)
    solver = MmsaTSolver(mmsa6_small, MmsaTParams(cut_factor=1, a_overrides={6: 0.01}))
    with pytest.raises(CutLoopExhausted):
        solver.solve()
    assert solver.report.opt_guess is None
    assert solver.report.cost is None
    assert not any(f.accepted for f in solver.report.frames)
    assert any(f.rounds == solver.N for f in solver.report.frames)


def test_recursion_rejects_shallow_circuit(mmsa4_small):
    with pytest.raises(StructuralError):
        MmsaTSolver(mmsa4_small)


def test_unsatisfiable_deep_circuit():
    inst = MmsaInstance(5, (1, 1, 1, 1, 1), (((),), ((0,),), ((0,),), ((0,),)))
    with pytest.raises(InfeasibleInstance):
        solve_mmsa_t(inst)


@pytest.mark.parametrize('layers, method', [
    ([3, 5], 'greedy'),
    ([3, 4, 5], 'rbsc'),
    ([4, 6, 6, 8], 'mmsa4'),
    ([3, 4, 5, 5, 6, 8], 'recursion'),
])
def test_dispatch_by_depth(layers, method):
    inst = gen_random_mmsa(layers, 2, 21)
    solution, report = solve_mmsa_with_report(inst)
    assert report['method'] == method
    assert is_mmsa_feasible(inst, solution)
    assert solve_mmsa(inst) == solution
