#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
rbsc-kit - ベンチマークハーネス
スイートの各インスタンスを解き、厳密解（または埋め込み解）との比と理論上界を比較する
"""

import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd

sys.path.insert(0, str(Path(__file__).parent))
from data_loader import PROJECT_DIR, load_config, load_suite, write_json
from errors import InfeasibleInstance, RbscKitError, SizeLimit
from generators import (GapParams, canonical_instance, gen_gap_instance, gen_planted_rbsc,
                        gen_random_mku, gen_random_mmsa, gen_random_rbsc)
from instance_model import (Instance, MmsaInstance, RbscInstance,
                            instance_digest, is_mmsa_feasible, is_rbsc_feasible, mmsa3_to_rbsc,
                            read_instance)
from mmsa4_approx import mmsa4_factor
from mmsa_recursive import MmsaTParams, approximation_table, solve_mmsa
from oracles import bruteforce_mku, bruteforce_mmsa, bruteforce_partial_rbsc, oracle_caps
from rbsc_approx import RbscParams, RbscSolver, approximation_factor
from reductions import solve_mku_via_rbsc, union_size

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


@dataclass
class BenchReport:
    seed: int
    rows: List[Dict[str, Any]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"schema_version": SCHEMA_VERSION, "seed": self.seed,
                "rows": self.rows, "summary": self.summary}


# ============================================================
# スイート項目 -> インスタンス
# ============================================================

def build_instance(entry: Dict[str, Any], seed: int) -> Tuple[Instance, Optional[int]]:
    """
    スイート項目からインスタンスを作る

    Returns:
        (インスタンス, 埋め込み解のコスト（あれば）)
    """
    kind = entry.get('kind', 'canonical')
    params = dict(entry.get('params', {}))
    params.setdefault('seed', seed)
    if kind == 'canonical':
        return canonical_instance(entry['name']), None
    if kind == 'rbsc':
        return gen_random_rbsc(**params), None
    if kind == 'planted':
        instance, _ = gen_planted_rbsc(**params)
        return instance, params['opt_target']
    if kind == 'mku':
        return gen_random_mku(**params), None
    if kind == 'mmsa':
        return gen_random_mmsa(**params), None
    if kind == 'gap':
        return gen_gap_instance(GapParams(**params)), None
    path = Path(entry['path'])
    return read_instance(path if path.is_absolute() else PROJECT_DIR / path).instance, None


# ============================================================
# 行の実行
# ============================================================

def _ratio(cost: int, opt: Optional[int]) -> Optional[float]:
    if opt is None:
        return None
    if opt == 0:
        return 1.0 if cost == 0 else math.inf
    return cost / opt


def _mmsa_bound(instance: MmsaInstance, params: MmsaTParams) -> float:
    t = instance.t
    if t == 2:
        return 1.0 + math.log(max(instance.N, 2))
    if t == 3:
        rbsc = mmsa3_to_rbsc(instance)
        return approximation_factor(rbsc.m, rbsc.n, rbsc.k, params.rbsc.accept_constant)
    if t == 4:
        return mmsa4_factor(instance.N, params.mmsa4.accept_constant)
    table = approximation_table(instance.N, t, constant=params.accept_constant,
                                overrides=params.a_overrides)
    return table.factor(t)


def _solve_row(instance: Instance, entry: Dict[str, Any], seed: int, config: Dict,
               planted: Optional[int]) -> Dict[str, Any]:
    caps = oracle_caps(config)
    if isinstance(instance, RbscInstance):
        k_hat = entry.get('k_hat')
        params = RbscParams.from_config(config, seed=seed)
        solution = RbscSolver(instance, params).solve(k_hat)
        feasible = is_rbsc_feasible(instance, solution, k_hat)
        opt = planted
        source = 'planted' if planted is not None else None
        if opt is None and instance.m <= caps['rbsc_sets']:
            opt = bruteforce_partial_rbsc(instance, instance.k if k_hat is None else k_hat,
                                          caps['rbsc_sets'])[0]
            source = 'oracle'
        bound = approximation_factor(instance.m, instance.n, instance.k, params.accept_constant)
        return {'solver': 'rbsc', 'cost': solution.cost, 'feasible': feasible,
                'opt': opt, 'opt_source': source, 'bound': bound}
    if isinstance(instance, MmsaInstance):
        params_t = MmsaTParams.from_config(config, seed=seed)
        solution = solve_mmsa(instance, params_t)
        feasible = is_mmsa_feasible(instance, solution)
        opt, source = None, None
        if instance.variable_count <= caps['mmsa_variables']:
            opt, source = bruteforce_mmsa(instance, caps['mmsa_variables'])[0], 'oracle'
        return {'solver': f'mmsa{instance.t}', 'cost': solution.cost, 'feasible': feasible,
                'opt': opt, 'opt_source': source, 'bound': _mmsa_bound(instance, params_t)}
    chosen = solve_mku_via_rbsc(instance, seed=seed)
    feasible = len(set(chosen)) == instance.k
    opt, source = None, None
    try:
        opt, source = bruteforce_mku(instance, caps['mku_combinations'])[0], 'oracle'
    except SizeLimit:
        pass
    k = instance.k
    bound = (approximation_factor(instance.m, instance.n, k, RbscParams.from_config(config).accept_constant)
             * 16.0 * max(math.log(k), 1.0) ** 2)
    return {'solver': 'mku', 'cost': union_size(instance, chosen), 'feasible': feasible,
            'opt': opt, 'opt_source': source, 'bound': bound}


def run_row(entry: Dict[str, Any], seed: int, config: Dict) -> Dict[str, Any]:
    """一行分（生成 -> 求解 -> 実行可能性確認 -> 厳密解との比）。エラーは行に記録する"""
    row: Dict[str, Any] = {'name': entry['name'], 'kind': entry.get('kind', 'canonical'),
                           'seed': seed, 'digest': '', 'solver': '', 'status': 'ok',
                           'cost': None, 'opt': None, 'opt_source': None, 'ratio': None,
                           'bound': None, 'violation': False, 'wall_time': 0.0}
    start = time.perf_counter()
    try:
        instance, planted = build_instance(entry, seed)
        row['digest'] = instance_digest(instance)
        result = _solve_row(instance, entry, seed, config, planted)
        row.update(result)
        if not result['feasible']:
            row['status'] = 'error:InfeasibleSolution'
            row['violation'] = True
        else:
            row['ratio'] = _ratio(result['cost'], result['opt'])
            row['violation'] = row['ratio'] is not None and row['ratio'] > result['bound']
    except InfeasibleInstance as e:
        row['status'] = 'infeasible'
        logger.info(f"{entry['name']}: infeasible ({e})")
    except RbscKitError as e:
        row['status'] = f'error:{type(e).__name__}'
        logger.warning(f"{entry['name']}: {type(e).__name__}: {e}")
    row.pop('feasible', None)
    row['wall_time'] = time.perf_counter() - start
    return row


def summarize(rows: List[Dict[str, Any]]) -> Dict[str, Any]:
    """比の最大・平均、上界違反数、状態ごとの件数"""
    if not rows:
        return {'rows': 0, 'max_ratio': None, 'mean_ratio': None, 'violations': 0, 'status_counts': {}}
    df = pd.DataFrame(rows)
    ratios = pd.to_numeric(df['ratio'], errors='coerce').dropna()
    finite = ratios[ratios.map(math.isfinite)]
    return {
        'rows': int(len(df)),
        'max_ratio': float(ratios.max()) if len(ratios) else None,
        'mean_ratio': float(finite.mean()) if len(finite) else None,
        'violations': int(df['violation'].astype(bool).sum()),
        'status_counts': {str(k): int(v) for k, v in df['status'].value_counts().items()},
    }


def run_bench(suite: List[Dict[str, Any]], seed: int, jobs: Optional[int] = None,
              config: Optional[Dict] = None) -> BenchReport:
    """
    スイート全体を実行する

    行は並列に実行し、インスタンスのダイジェスト順（同じなら名前順）に並べる。
    """
    config = config or load_config()
    jobs = jobs or config.get('bench', {}).get('jobs') or os.cpu_count()
    logger.info(f"bench: {len(suite)} instances, seed {seed}, {jobs} jobs")
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        rows = list(executor.map(lambda entry: run_row(entry, seed, config), suite))
    rows.sort(key=lambda r: (r['digest'], r['name']))
    report = BenchReport(seed, rows, summarize(rows))
    logger.info(f"bench done: {report.summary['violations']} bound violations")
    return report


def write_report(report: BenchReport, path: Path) -> Path:
    return write_json(path, report.to_dict())


if __name__ == "__main__":
    from result_formatter import ResultFormatter

    suite_file = sys.argv[1] if len(sys.argv) > 1 else str(PROJECT_DIR / 'config' / 'bench_suite.json')
    bench = run_bench(load_suite(suite_file), seed=0)
    print(ResultFormatter().format_bench_table(bench.to_dict()))
