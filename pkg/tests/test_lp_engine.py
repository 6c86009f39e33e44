# -*- coding: utf-8 -*-
"""LPエンジン: 単体法と HiGHS の一致、状態、出力"""
import pytest

import lp_engine
from errors import InvalidParameter, UnknownVariable
from lp_engine import Constraint, LpModel, LpStatus, add_constraint, check_solution, solve


def _knapsack() -> LpModel:
    # max 3a + 2b  s.t.  a + b <= 4, a + 3b <= 6, a <= 3
    model = LpModel('knapsack', sense='max')
    model.add_variable(('v', 'a'), 0.0, 3.0)
    model.add_variable(('v', 'b'), 0.0, float('inf'))
    model.add_constraint({('v', 'a'): 1, ('v', 'b'): 1}, '<=', 4)
    model.add_constraint({('v', 'a'): 1, ('v', 'b'): 3}, '<=', 6)
    model.set_objective({('v', 'a'): 3, ('v', 'b'): 2})
    return model


def _cover() -> LpModel:
    # min x0 + x1 + x2  s.t.  x0 + x1 >= 1, x1 + x2 >= 1, x0 + x2 >= 1
    model = LpModel('triangle', sense='min')
    for j in range(3):
        model.add_variable(('x', j))
    for a, b in ((0, 1), (1, 2), (0, 2)):
        model.add_constraint({('x', a): 1, ('x', b): 1}, '>=', 1)
    model.set_objective({('x', j): 1 for j in range(3)})
    return model


@pytest.mark.parametrize('backend', ['simplex', 'highs'])
def test_knapsack_optimum(backend):
    result = solve(_knapsack(), backend=backend)
    assert result.is_optimal
    assert result.objective == pytest.approx(11.0, abs=1e-6)
    assert result.value(('v', 'a')) == pytest.approx(3.0, abs=1e-6)
    assert result.value(('v', 'b')) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize('backend', ['simplex', 'highs'])
def test_fractional_triangle_cover(backend):
    model = _cover()
    result = solve(model, backend=backend)
    assert result.objective == pytest.approx(1.5, abs=1e-6)
    assert check_solution(model, result) <= 1e-6
    assert set(result.group('x')) == {0, 1, 2}


@pytest.mark.parametrize('backend', ['simplex', 'highs'])
def test_infeasible_model(backend):
    model = LpModel('bad', sense='min')
    model.add_variable('x')
    model.add_constraint({'x': 1}, '>=', 2)
    model.set_objective({'x': 1})
    assert solve(model, backend=backend).status == LpStatus.INFEASIBLE


@pytest.mark.parametrize('backend', ['simplex', 'highs'])
def test_unbounded_model(backend):
    model = LpModel('open', sense='max')
    model.add_variable('x', 0.0, float('inf'))
    model.add_constraint({'x': 1}, '>=', 1)
    model.set_objective({'x': 1})
    assert solve(model, backend=backend).status == LpStatus.UNBOUNDED


def test_equality_and_lower_bounds_agree_across_backends():
    model = LpModel('eq', sense='min')
    model.add_variable('a', 0.5, 2.0)
    model.add_variable('b', 0.0, 2.0)
    model.add_constraint({'a': 1, 'b': 1}, '==', 2)
    model.set_objective({'a': 2, 'b': 1})
    simplex, highs = solve(model, backend='simplex'), solve(model, backend='highs')
    assert simplex.objective == pytest.approx(highs.objective, abs=1e-6)
    assert simplex.objective == pytest.approx(2.5, abs=1e-6)


def test_unknown_variable_rejected():
    model = LpModel()
    model.add_variable('x')
    with pytest.raises(UnknownVariable):
        model.add_constraint({'y': 1}, '<=', 1)


def test_duplicate_variable_and_bad_sense_rejected():
    model = LpModel()
    model.add_variable('x')
    with pytest.raises(InvalidParameter):
        model.add_variable('x')
    with pytest.raises(InvalidParameter):
        model.add_constraint({'x': 1}, '<', 1)
    with pytest.raises(InvalidParameter):
        LpModel(sense='maximize')


def test_clone_is_independent():
    model = _cover()
    other = model.clone()
    add_constraint(other, Constraint(((('x', 0), 1.0),), '>=', 1.0, 'cut_0'))
    assert model.num_constraints == 3
    assert other.num_constraints == 4
    assert solve(other, backend='simplex').objective == pytest.approx(2.0, abs=1e-6)


def test_lp_text_dump(tmp_path):
    text = _knapsack().to_lp_text()
    assert text.startswith('Maximize')
    assert 'Subject To' in text and text.rstrip().endswith('End')
    assert 'v_b >= 0' in text

    settings = lp_engine.LpSettings(dump_dir=str(tmp_path))
    solve(_knapsack(), backend='simplex', settings=settings)
    assert len(list(tmp_path.glob('knapsack_*.lp'))) == 1


def test_configure_rejects_unknown_backend():
    saved = lp_engine.SETTINGS.backend
    try:
        with pytest.raises(InvalidParameter):
            lp_engine.configure({'backend': 'glpk'})
    finally:
        lp_engine.SETTINGS.backend = saved
