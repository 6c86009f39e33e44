# -*- coding: utf-8 -*-
"""インスタンスモデル: 検証・回路評価・簡約・JSON入出力"""
import pytest

from errors import ParseError, StructuralError
from instance_model import (STATUS_OPEN, STATUS_SATISFIED, STATUS_UNSATISFIABLE,
                            MinKUnionInstance, MmsaInstance, RbscInstance, embed_odd_depth,
                            evaluate_circuit, evaluate_layers, instance_digest, instance_to_bytes,
                            is_mmsa_feasible, is_rbsc_feasible, mmsa3_to_rbsc, mmsa_solution,
                            parse_instance, rbsc_solution, rbsc_to_mmsa3, read_instance,
                            simplify_circuit, validate)

# OR(0) <- AND{0,1}, OR(1) <- AND{2}; AND0 = x0∧x1, AND1 = x1, AND2 = x2∧x3
DEPTH3 = MmsaInstance(3, (2, 3, 4), (((0, 1), (2,)), ((0, 1), (1,), (2, 3))))


def test_validate_rejects_unsorted_adjacency():
    bad = RbscInstance(2, 2, ((1, 0),), ((0,),))
    with pytest.raises(StructuralError):
        validate(bad)


def test_validate_rejects_out_of_range_red():
    with pytest.raises(StructuralError):
        validate(RbscInstance(1, 2, ((0,),), ((2,),)))


def test_validate_mku_k_above_m():
    with pytest.raises(StructuralError):
        validate(MinKUnionInstance(3, 2, ((0,),)))


def test_validate_childless_gate_only_in_strict_mode():
    inst = MmsaInstance(2, (2, 2), (((0,), ()),))
    validate(inst, strict=False)
    with pytest.raises(StructuralError):
        validate(inst)


@pytest.mark.parametrize('assignment, expected', [
    ({0, 1}, False),
    ({2, 3}, False),
    ({1, 2, 3}, True),
    ({0, 1, 2, 3}, True),
])
def test_evaluate_circuit(assignment, expected):
    assert evaluate_circuit(DEPTH3, assignment) is expected


def test_evaluate_layers_exposes_every_layer():
    layers = evaluate_layers(DEPTH3, {1, 2, 3})
    assert layers[2] == [False, True, True, True]
    assert layers[1] == [False, True, True]
    assert layers[0] == [True, True]


def test_simplify_false_variable_makes_circuit_unsatisfiable():
    assert simplify_circuit(DEPTH3, false_vertices={3: [2]}).status == STATUS_UNSATISFIABLE


def test_simplify_satisfying_assignment():
    assert simplify_circuit(DEPTH3, true_vertices={3: [1, 2, 3]}).status == STATUS_SATISFIED


def test_simplify_residual_keeps_only_open_part():
    res = simplify_circuit(DEPTH3, true_vertices={3: [1]})
    assert res.status == STATUS_OPEN
    assert res.instance.layers == (1, 1, 2)
    assert res.to_original(1, [0]) == [1]
    assert res.to_original(2, [0]) == [2]
    assert res.to_original(3, [0, 1]) == [2, 3]


def test_rbsc_mmsa3_roundtrip(rbsc_small):
    circuit = rbsc_to_mmsa3(rbsc_small)
    assert circuit.layers == (rbsc_small.k, rbsc_small.m, rbsc_small.n)
    assert mmsa3_to_rbsc(circuit) == rbsc_small


def test_rbsc_cover_matches_circuit_satisfaction(rbsc_small):
    circuit = rbsc_to_mmsa3(rbsc_small)
    solution = rbsc_solution(rbsc_small, range(rbsc_small.m))
    assert evaluate_circuit(circuit, solution.covered_red)


def test_embed_odd_depth_preserves_satisfaction():
    embedded = embed_odd_depth(DEPTH3)
    assert embedded.t == 4
    assert embedded.layers == (2, 3, 4, 4)
    for assignment in ({0, 1}, {1, 2, 3}, {2, 3}):
        assert evaluate_circuit(embedded, assignment) == evaluate_circuit(DEPTH3, assignment)


def test_embed_even_depth_is_identity(mmsa4_small):
    assert embed_odd_depth(mmsa4_small) is mmsa4_small


def test_rbsc_solution_deduplicates_and_checks_feasibility():
    inst = RbscInstance(2, 3, ((0,), (1,), (0, 1)), ((0,), (1, 2), (0, 1, 2)))
    sol = rbsc_solution(inst, [0, 1, 0])
    assert sol.chosen_sets == (0, 1)
    assert sol.cost == 3
    assert is_rbsc_feasible(inst, sol)
    partial = rbsc_solution(inst, [0])
    assert not is_rbsc_feasible(inst, partial)
    assert is_rbsc_feasible(inst, partial, k_hat=1)


def test_mmsa_solution_is_sorted_and_unique():
    sol = mmsa_solution(DEPTH3, [3, 1, 2, 1])
    assert sol.true_variables == (1, 2, 3)
    assert sol.cost == 3
    assert is_mmsa_feasible(DEPTH3, sol)


def test_parse_normalizes_unsorted_lists():
    loaded = parse_instance(b'{"kind":"mku","n":3,"k":1,"sets":[[2,0,0]]}')
    assert loaded.normalized
    assert loaded.instance.sets == ((0, 2),)


def test_missing_instance_file_is_a_parse_error(tmp_path):
    with pytest.raises(ParseError, match="cannot read"):
        read_instance(tmp_path / 'absent.json')


def test_parse_rejects_malformed_json():
    with pytest.raises(ParseError):
        parse_instance(b'{"kind": "rbsc"')


def test_parse_rejects_wrong_kind(rbsc_small):
    with pytest.raises(ParseError):
        parse_instance(instance_to_bytes(rbsc_small), kind='mmsa')


def test_parse_rejects_boolean_ids():
    with pytest.raises(ParseError):
        parse_instance(b'{"kind":"mku","n":3,"k":1,"sets":[[true]]}')


def test_bytes_roundtrip_and_digest(mmsa6_small):
    loaded = parse_instance(instance_to_bytes(mmsa6_small))
    assert not loaded.normalized
    assert loaded.instance == mmsa6_small
    assert instance_digest(loaded.instance) == instance_digest(mmsa6_small)
    assert len(instance_digest(mmsa6_small)) == 64
