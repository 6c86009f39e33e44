# -*- coding: utf-8 -*-
"""ベンチマークハーネスと CLI"""
from pathlib import Path

import orjson
import pytest

from benchmark import build_instance, run_bench, summarize, write_report
from data_loader import DEFAULT_CONFIG, PROJECT_DIR, load_config, load_suite
from errors import ParseError
from instance_model import read_instance
from main import main
from result_formatter import ResultFormatter

INFEASIBLE = {'name': 'rbsc-infeasible', 'kind': 'file', 'path': 'data/rbsc_infeasible.json'}


def _write_suite(tmp_path: Path, entries) -> Path:
    path = tmp_path / 'suite.json'
    path.write_bytes(orjson.dumps({'instances': entries}))
    return path


def test_empty_suite(tmp_path):
    suite = load_suite(_write_suite(tmp_path, []))
    report = run_bench(suite, seed=0, config=DEFAULT_CONFIG)
    assert report.rows == []
    assert report.summary['rows'] == 0 and report.summary['violations'] == 0


def test_suite_format_errors(tmp_path):
    bad = tmp_path / 'bad.json'
    bad.write_bytes(b'{"entries": []}')
    with pytest.raises(ParseError):
        load_suite(bad)
    with pytest.raises(ParseError):
        load_suite(_write_suite(tmp_path, [{'name': 'x', 'kind': 'sat'}]))
    with pytest.raises(ParseError):
        load_suite(tmp_path / 'missing.json')


def test_missing_config_falls_back_to_defaults(tmp_path):
    assert load_config(tmp_path / 'none.json') == DEFAULT_CONFIG
    assert load_config()['rbsc']['accept_constant'] == 8.0


def test_planted_entry_reports_planted_cost():
    entry = {'name': 'p', 'kind': 'planted', 'params': {'m': 8, 'n': 10, 'k': 5, 'opt_target': 3}}
    instance, planted = build_instance(entry, seed=1)
    assert planted == 3
    assert instance.m == 8


def test_small_bench_rows(tmp_path):
    suite = [{'name': 'rbsc-small-1'}, INFEASIBLE,
             {'name': 'mku-small-1', 'kind': 'canonical'}]
    report = run_bench(suite, seed=0, jobs=2, config=DEFAULT_CONFIG)
    rows = {r['name']: r for r in report.rows}
    assert rows['rbsc-infeasible']['status'] == 'infeasible'
    assert rows['rbsc-small-1']['status'] == 'ok'
    assert rows['rbsc-small-1']['opt_source'] == 'oracle'
    assert rows['rbsc-small-1']['ratio'] >= 1.0
    assert rows['mku-small-1']['status'] == 'ok'
    assert report.summary['violations'] == 0
    assert [r['digest'] for r in report.rows] == sorted(r['digest'] for r in report.rows)

    out = write_report(report, tmp_path / 'bench.json')
    data = orjson.loads(out.read_bytes())
    assert data['schema_version'] == 1
    assert len(data['rows']) == 3

    table = ResultFormatter().format_bench_table(report.to_dict())
    assert 'rbsc-infeasible' in table and '上界違反: 0' in table


def test_summary_counts_violations():
    rows = [{'ratio': 2.0, 'violation': True, 'status': 'ok'},
            {'ratio': None, 'violation': False, 'status': 'infeasible'}]
    summary = summarize(rows)
    assert summary['violations'] == 1
    assert summary['max_ratio'] == 2.0
    assert summary['status_counts'] == {'infeasible': 1, 'ok': 1}


@pytest.mark.slow
def test_canonical_suite_has_no_bound_violations():
    suite = load_suite(PROJECT_DIR / 'config' / 'bench_suite.json')
    report = run_bench(suite, seed=0, config=load_config())
    assert report.summary['violations'] == 0
    statuses = {r['name']: r['status'] for r in report.rows}
    assert statuses.pop('rbsc-infeasible') == 'infeasible'
    assert set(statuses.values()) == {'ok'}


# ============================================================
# CLI
# ============================================================

def test_cli_generate_solve_and_report(tmp_path):
    instance_path = tmp_path / 'rbsc.json'
    report_path = tmp_path / 'report.json'
    assert main(['gen', 'rbsc', '--m', '6', '--n', '8', '--k', '4', '--blue-size', '2',
                 '--red-size', '2', '--seed', '3', '--out', str(instance_path)]) == 0
    assert read_instance(instance_path, kind='rbsc').instance.m == 6
    assert main(['solve', 'rbsc', '--in', str(instance_path), '--seed', '0',
                 '--report', str(report_path)]) == 0
    report = orjson.loads(report_path.read_bytes())
    assert report['schema_version'] == 1
    assert report['problem'] == 'rbsc'
    assert report['cost'] >= 1


def test_cli_partial_and_oracle(tmp_path):
    path = tmp_path / 'c.json'
    assert main(['gen', 'canonical', '--name', 'rbsc-small-1', '--out', str(path)]) == 0
    assert main(['solve', 'rbsc', '--in', str(path), '--seed', '0', '--partial', '2']) == 0
    assert main(['oracle', 'rbsc', '--in', str(path), '--partial', '2']) == 0


def test_cli_mku_pipeline(tmp_path):
    path = tmp_path / 'mku.json'
    reduced = tmp_path / 'reduced.json'
    assert main(['gen', 'mku', '--n', '10', '--m', '6', '--k', '3', '--set-size', '3',
                 '--seed', '1', '--out', str(path)]) == 0
    assert main(['solve', 'mku', '--in', str(path), '--seed', '0']) == 0
    assert main(['oracle', 'mku', '--in', str(path)]) == 0
    assert main(['reduce', 'mku', '--in', str(path), '--seed', '2', '--out', str(reduced)]) == 0
    assert read_instance(reduced, kind='rbsc').instance.k == 3


def test_cli_exit_codes(tmp_path):
    infeasible = str(PROJECT_DIR / 'data' / 'rbsc_infeasible.json')
    assert main(['solve', 'rbsc', '--in', infeasible, '--seed', '0']) == 2
    broken = tmp_path / 'broken.json'
    broken.write_bytes(b'{"kind": "rbsc", "k": 1')
    assert main(['solve', 'rbsc', '--in', str(broken), '--seed', '0']) == 3
    assert main(['gen', 'gap', '--n', '10', '--eps', '0.5', '--t', '4', '--seed', '0']) == 3
    assert main(['solve', 'mmsa', '--in', infeasible, '--seed', '0']) == 3
    assert main(['solve', 'rbsc', '--in', str(tmp_path / 'missing.json'), '--seed', '0']) == 3


def test_cli_bench(tmp_path):
    suite = _write_suite(tmp_path, [{'name': 'rbsc-small-1'}])
    out = tmp_path / 'bench.json'
    assert main(['bench', '--suite', str(suite), '--seed', '0', '--out', str(out)]) == 0
    assert orjson.loads(out.read_bytes())['summary']['rows'] == 1
