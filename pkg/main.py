#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
rbsc-kit - メイン実行ファイル
Red-Blue Set Cover / MMSA / Min k-Union の生成・求解・厳密解・帰着・ベンチマーク
"""
import argparse
import logging
import os
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

import lp_engine
from benchmark import run_bench, write_report
from data_loader import load_config, load_suite, write_json
from errors import InvalidParameter, RbscKitError
from generators import (GAP_MAX_RESEEDS, GapParams, canonical_instance, gen_gap_instance, gen_planted_rbsc,
                        gen_random_mku, gen_random_mmsa, gen_random_rbsc)
from instance_model import Instance, MinKUnionInstance, instance_to_bytes, read_instance, write_instance
from mmsa4_approx import Mmsa4Params, Mmsa4Solver
from mmsa_recursive import MmsaTParams, solve_mmsa_with_report
from oracles import bruteforce_mku, bruteforce_mmsa, bruteforce_partial_rbsc, oracle_caps
from rbsc_approx import RbscParams, RbscSolver
from reductions import MkuReport, reduce_mku_to_rbsc, solve_mku_via_rbsc, union_size
from result_formatter import ResultFormatter

# Windows環境での文字化け対策
if sys.platform == 'win32':
    import io
    sys.stdout = io.TextIOWrapper(sys.stdout.buffer, encoding='utf-8')
    sys.stderr = io.TextIOWrapper(sys.stderr.buffer, encoding='utf-8')

BASE_DIR = Path(__file__).parent
LOG_DIR = BASE_DIR / 'logs'

logger = logging.getLogger(__name__)

EXIT_OK = 0


def setup_logging(config: Dict[str, Any], verbose: bool = False) -> None:
    """ログ設定（RBSC_KIT_LOG > config.json > INFO、-v で DEBUG）"""
    level_name = os.environ.get('RBSC_KIT_LOG') or config.get('logging', {}).get('level', 'INFO')
    level = logging.DEBUG if verbose else getattr(logging, str(level_name).upper(), logging.INFO)
    LOG_DIR.mkdir(exist_ok=True)
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(LOG_DIR / 'rbsc_kit.log', encoding='utf-8'),
            logging.StreamHandler()
        ],
        force=True,
    )


def _load(path: str, kind: str) -> Instance:
    loaded = read_instance(path, kind=kind)
    if loaded.normalized:
        print(f"[WARNING] {path}: adjacency lists were sorted/deduplicated on load")
    return loaded.instance


def _save(instance: Instance, out: Optional[str]) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        write_instance(instance, out)
        print(f"[OK] インスタンス出力: {out}")
    else:
        print(instance_to_bytes(instance).decode('utf-8'))


def _write_report(path: Optional[str], data: Dict[str, Any]) -> None:
    if path:
        write_json(path, {"schema_version": 1, **data})
        print(f"[OK] レポート: {path}")


# ============================================================
# サブコマンド
# ============================================================

def cmd_gen(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    print(f"* [STEP 1] 生成: {args.kind}")
    if args.kind == 'rbsc':
        instance: Instance = gen_random_rbsc(args.m, args.n, args.k, args.blue_size, args.red_size, args.seed)
    elif args.kind == 'planted':
        instance, planted = gen_planted_rbsc(args.m, args.n, args.k, args.opt, args.seed)
        print(f"[OK] 埋め込み解: {list(planted)} (赤 {args.opt} 個)")
    elif args.kind == 'mku':
        instance = gen_random_mku(args.n, args.m, args.k, args.set_size, args.seed)
    elif args.kind == 'gap':
        reseeds = config.get('generators', {}).get('gap_max_reseeds', GAP_MAX_RESEEDS)
        instance = gen_gap_instance(GapParams(args.n, args.eps, args.t, args.seed), reseeds)
    elif args.kind == 'mmsa':
        sizes = [int(s) for s in args.layers.split(',') if s.strip()]
        instance = gen_random_mmsa(sizes, args.degree, args.seed)
    else:
        instance = canonical_instance(args.name)
    _save(instance, args.out)
    return EXIT_OK


def cmd_solve(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    formatter = ResultFormatter()
    start = time.time()
    print(f"* [STEP 1] 読み込み: {args.input}")
    if args.problem == 'rbsc':
        instance = _load(args.input, 'rbsc')
        params = RbscParams.from_config(config, seed=args.seed, jobs=args.jobs)
        solver = RbscSolver(instance, params)
        print("* [STEP 2] RBSC 近似")
        solution = solver.solve(args.partial)
        report = solver.report.to_dict()
        cost, chosen = solution.cost, list(solution.chosen_sets)
        details = {'OPT推定値': report['opt_guess'], '上界 (log k)': report['factor_log_k']}
    elif args.problem == 'mmsa4':
        instance4 = _load(args.input, 'mmsa')
        solver4 = Mmsa4Solver(instance4, Mmsa4Params.from_config(config, seed=args.seed))
        print("* [STEP 2] MMSA4 近似")
        solution4 = solver4.solve()
        report = solver4.report.to_dict()
        cost, chosen = solution4.cost, list(solution4.true_variables)
        details = {'上界 (N)': report['factor_N'], 'fallbacks': report['fallbacks']}
    elif args.problem == 'mmsa':
        instance_m = _load(args.input, 'mmsa')
        params_t = MmsaTParams.from_config(config, seed=args.seed, jobs=args.jobs)
        print(f"* [STEP 2] MMSA 近似 (深さ {instance_m.t})")
        solution_m, report = solve_mmsa_with_report(instance_m, params_t)
        cost, chosen = solution_m.cost, list(solution_m.true_variables)
        details = {'method': report.get('method'), 'OPT推定値': report.get('opt_guess')}
    else:
        instance_k = _load(args.input, 'mku')
        mku_report = MkuReport()
        params = RbscParams.from_config(config, seed=args.seed, jobs=args.jobs)
        chosen = solve_mku_via_rbsc(instance_k, lambda inst: RbscSolver(inst, params).solve(),
                                    seed=args.seed, report=mku_report)
        report = mku_report.to_dict()
        cost = union_size(instance_k, chosen)
        details = {'rounds': mku_report.round_count}
    print(formatter.format_solution(f"solve {args.problem}", cost, chosen, details))
    _write_report(args.report, {"problem": args.problem, "seed": args.seed, "cost": cost,
                                "chosen": chosen, "report": report})
    print(f"[OK] 完了 ({time.time() - start:.2f}秒)")
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    caps = oracle_caps(config)
    if args.problem == 'rbsc':
        instance = _load(args.input, 'rbsc')
        k_hat = instance.k if args.partial is None else args.partial
        cost, chosen = bruteforce_partial_rbsc(instance, k_hat, caps['rbsc_sets'])
    elif args.problem == 'mku':
        cost, chosen = bruteforce_mku(_load(args.input, 'mku'), caps['mku_combinations'])
    else:
        cost, chosen = bruteforce_mmsa(_load(args.input, 'mmsa'), caps['mmsa_variables'])
    print(ResultFormatter().format_solution(f"oracle {args.problem}", cost, list(chosen)))
    return EXIT_OK


def cmd_reduce(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    instance = _load(args.input, 'mku')
    if not isinstance(instance, MinKUnionInstance):
        raise InvalidParameter("reduce mku expects a Min k-Union instance")
    rbsc, params = reduce_mku_to_rbsc(instance, seed=args.seed)
    print(f"[OK] 帰着: ℓ={params.ell}, k′={params.k_prime}, 集合 {rbsc.m}, 青 {rbsc.k}, 赤 {rbsc.n}")
    _save(rbsc, args.out)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    suite = load_suite(args.suite)
    print(f"* [STEP 1] ベンチ実行: {len(suite)}件 (seed={args.seed})")
    report = run_bench(suite, args.seed, jobs=args.jobs, config=config)
    print(ResultFormatter().format_bench_table(report.to_dict()))
    if args.out:
        write_report(report, Path(args.out))
        print(f"[OK] ベンチレポート: {args.out}")
    return EXIT_OK


# ============================================================
# 引数
# ============================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='rbsc-kit',
        description='Red-Blue Set Cover / MMSA / Min k-Union 近似ツールキット',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
使用例:
  python main.py gen rbsc --m 8 --n 10 --k 6 --blue-size 2 --red-size 3 --seed 42 --out data/rbsc.json
  python main.py solve rbsc --in data/rbsc.json --seed 0 --report output/rbsc_report.json
  python main.py solve mmsa --in data/mmsa6.json --seed 0
  python main.py oracle mku --in data/mku.json
  python main.py bench --suite config/bench_suite.json --seed 0 --out output/bench.json
        """
    )
    parser.add_argument('-v', '--verbose', action='store_true', help='DEBUGログを出力')
    parser.add_argument('--config', default=None, help='設定ファイル（既定: config.json）')
    sub = parser.add_subparsers(dest='command', required=True)

    gen = sub.add_parser('gen', help='インスタンス生成')
    gen_sub = gen.add_subparsers(dest='kind', required=True)
    g = gen_sub.add_parser('rbsc', help='一様ランダム RBSC')
    for name in ('--m', '--n', '--k', '--blue-size', '--red-size'):
        g.add_argument(name, type=int, required=True)
    g = gen_sub.add_parser('planted', help='埋め込み解つき RBSC')
    for name in ('--m', '--n', '--k', '--opt'):
        g.add_argument(name, type=int, required=True)
    g = gen_sub.add_parser('mku', help='ランダム Min k-Union')
    for name in ('--n', '--m', '--k', '--set-size'):
        g.add_argument(name, type=int, required=True)
    g = gen_sub.add_parser('gap', help='積分ギャップ回路')
    g.add_argument('--n', type=int, required=True)
    g.add_argument('--eps', type=float, required=True)
    g.add_argument('--t', type=int, required=True)
    g = gen_sub.add_parser('mmsa', help='ランダム回路')
    g.add_argument('--layers', required=True, help='層サイズ（カンマ区切り、例: 4,6,6,8）')
    g.add_argument('--degree', type=int, default=3)
    g = gen_sub.add_parser('canonical', help='標準インスタンス')
    g.add_argument('--name', required=True)
    for p in gen_sub.choices.values():
        if p.prog.split()[-1] != 'canonical':
            p.add_argument('--seed', type=int, required=True)
        p.add_argument('--out', default=None)

    solve = sub.add_parser('solve', help='近似求解')
    solve.add_argument('problem', choices=['rbsc', 'mmsa4', 'mmsa', 'mku'])
    solve.add_argument('--in', dest='input', required=True)
    solve.add_argument('--seed', type=int, required=True)
    solve.add_argument('--partial', type=int, default=None, help='部分RBSC: 覆う青の数 k̂')
    solve.add_argument('--report', default=None, help='JSONレポートの出力先')
    solve.add_argument('--dump-lp', default=None, help='LPをCPLEX形式で書き出すディレクトリ')
    solve.add_argument('--jobs', type=int, default=None)

    oracle = sub.add_parser('oracle', help='総当たりの厳密解')
    oracle.add_argument('problem', choices=['rbsc', 'mku', 'mmsa'])
    oracle.add_argument('--in', dest='input', required=True)
    oracle.add_argument('--partial', type=int, default=None)

    reduce = sub.add_parser('reduce', help='Min k-Union -> RBSC 帰着')
    reduce.add_argument('problem', choices=['mku'])
    reduce.add_argument('--in', dest='input', required=True)
    reduce.add_argument('--seed', type=int, required=True)
    reduce.add_argument('--out', default=None)

    bench = sub.add_parser('bench', help='ベンチマーク')
    bench.add_argument('--suite', required=True)
    bench.add_argument('--seed', type=int, required=True)
    bench.add_argument('--out', default=None)
    bench.add_argument('--jobs', type=int, default=None)
    return parser


COMMANDS = {'gen': cmd_gen, 'solve': cmd_solve, 'oracle': cmd_oracle,
            'reduce': cmd_reduce, 'bench': cmd_bench}


def main(argv: Optional[List[str]] = None) -> int:
    """メイン処理（終了コードを返す）"""
    args = build_parser().parse_args(argv)
    config = load_config(args.config)
    setup_logging(config, args.verbose)
    try:
        lp_engine.configure(config.get('lp', {}), dump_dir=getattr(args, 'dump_lp', None))
        return COMMANDS[args.command](args, config)
    except RbscKitError as e:
        print(f"[ERROR] {type(e).__name__}: {e}")
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:
        print(f"[ERROR] {type(e).__name__}: {e}")
        logger.error(f"エラー: {type(e).__name__}: {e}", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
