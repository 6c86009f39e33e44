# -*- coding: utf-8 -*-
"""
rbsc-kit - Min k-Union 帰着
Min k-Union -> RBSC の乱択帰着、RBSC 近似を使った反復ソルバー、帰着の性質の検証
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from errors import InfeasibleInstance, InvalidParameter
from instance_model import MinKUnionInstance, RbscInstance, RbscSolution, validate
from oracles import bruteforce_mku
from rbsc_approx import RbscParams, RbscSolver

logger = logging.getLogger(__name__)

Seed = Union[int, Sequence[int]]
RbscSolverFn = Callable[[RbscInstance], RbscSolution]

# 成功頻度の Monte-Carlo は固定数のチャンクに分ける（jobs によらず結果が同じ）
TRIAL_CHUNKS = 8


@dataclass(frozen=True)
class ReductionParams:
    """ell: 集合ごとの青サンプル数, k_prime: 1ラウンドで確定させる集合数"""
    ell: int
    k_prime: int
    seed: Optional[Seed] = None


def reduction_params(k: int, seed: Optional[Seed] = None) -> ReductionParams:
    """ℓ = ⌈ln k⌉ + 1, k′ = ⌊k/ℓ⌋"""
    if k < 1:
        raise InvalidParameter(f"k must be positive, got {k}")
    ell = math.ceil(math.log(k)) + 1
    return ReductionParams(ell, k // ell, seed)


def round_bound(k: int) -> float:
    """縮小ラウンド数の上界 4ℓ log₂k（k = 1 では 1）"""
    return max(1.0, 4 * reduction_params(k).ell * math.log2(k))


def _sample_blues(rng: np.random.Generator, m: int, k: int, ell: int) -> np.ndarray:
    """(m, ℓ) の一様復元抽出"""
    return rng.integers(0, k, size=(m, ell))


def reduce_mku_to_rbsc(instance: MinKUnionInstance,
                       seed: Optional[Seed] = None) -> Tuple[RbscInstance, ReductionParams]:
    """
    Min k-Union を RBSC に帰着する

    赤 = 台集合、青 = [k]、集合 i の赤近傍 = S_i、青近傍 = [k] から ℓ 個の復元抽出（重複除去）

    Returns:
        (RBSCインスタンス, パラメータ)
    """
    params = reduction_params(instance.k, seed)
    rng = np.random.default_rng(seed)
    samples = _sample_blues(rng, instance.m, instance.k, params.ell)
    blue_adj = tuple(tuple(int(b) for b in np.unique(row)) for row in samples)
    rbsc = RbscInstance(instance.k, instance.n, blue_adj, tuple(instance.sets))
    return rbsc, params


def union_size(instance: MinKUnionInstance, chosen: Sequence[int]) -> int:
    return len(set().union(*(instance.sets[i] for i in chosen))) if chosen else 0


def property_one_holds(mku: MinKUnionInstance, rbsc: RbscInstance, params: ReductionParams,
                       chosen: Sequence[int]) -> bool:
    """
    RBSC の実行可能解（選択順）について、集合数 ≥ k′ かつ先頭 k′ 個の和集合 ≤ RBSC コスト

    Raises:
        InvalidParameter: chosen が全ての青を覆わない
    """
    blues = {b for j in chosen for b in rbsc.blue_adj[j]}
    if len(blues) < rbsc.k:
        raise InvalidParameter(f"chosen sets cover {len(blues)} of {rbsc.k} blue elements")
    distinct = list(dict.fromkeys(chosen))
    if len(distinct) < params.k_prime:
        return False
    rbsc_cost = len({r for j in distinct for r in rbsc.red_adj[j]})
    return union_size(mku, distinct[:params.k_prime]) <= rbsc_cost


# ============================================================
# 反復ソルバー
# ============================================================

@dataclass
class MkuRound:
    k_remaining: int
    k_prime: int
    remaining: Tuple[int, ...]
    picked: Tuple[int, ...]
    cost: int
    repeats: int
    fallback: bool = False


@dataclass
class MkuReport:
    rounds: List[MkuRound] = field(default_factory=list)
    cost: Optional[int] = None
    round_bound: Optional[float] = None

    @property
    def round_count(self) -> int:
        return len(self.rounds)

    def to_dict(self) -> dict:
        data = asdict(self)
        data['round_count'] = self.round_count
        return data


def _default_solver(seed: Seed) -> RbscSolverFn:
    params = RbscParams(seed=seed if isinstance(seed, int) else 0)

    def run(instance: RbscInstance) -> RbscSolution:
        return RbscSolver(instance, params).solve()
    return run


def _fallback_pick(instance: MinKUnionInstance, remaining: Sequence[int], count: int) -> List[int]:
    """和集合の増分が最小の集合を順に選ぶ"""
    union: set = set()
    pool = list(remaining)
    picked: List[int] = []
    for _ in range(count):
        best = min(pool, key=lambda i: (len(set(instance.sets[i]) - union), i))
        picked.append(best)
        pool.remove(best)
        union.update(instance.sets[best])
    return picked


def solve_mku_via_rbsc(instance: MinKUnionInstance, rbsc_solver: Optional[RbscSolverFn] = None,
                       seed: int = 0, report: Optional[MkuReport] = None) -> List[int]:
    """
    RBSC 近似を使って Min k-Union を解く

    各ラウンドで残りの集合族（残り k）を帰着し、⌈ln n⌉ 回の繰り返しのうち先頭 k′ 個の
    和集合が最小のものを確定させる。k 個揃うまで繰り返す。

    Args:
        instance: Min k-Union インスタンス
        rbsc_solver: RBSC ソルバー（省略時は RbscSolver）
        seed: 乱数シード
        report: ラウンドごとの記録先

    Returns:
        選んだ k 個の集合の添字（確定順）
    """
    validate(instance)
    solver = rbsc_solver or _default_solver(seed)
    report = report if report is not None else MkuReport()
    repeats = max(1, math.ceil(math.log(max(instance.n, 1))))

    chosen: List[int] = []
    remaining = list(range(instance.m))
    k_rem = instance.k
    round_no = 0
    while k_rem > 0:
        if k_rem == len(remaining):
            picked = list(remaining)
            report.rounds.append(MkuRound(k_rem, k_rem, tuple(remaining), tuple(picked),
                                          union_size(instance, picked), 0))
        else:
            sub = MinKUnionInstance(instance.n, k_rem, tuple(instance.sets[i] for i in remaining))
            params = reduction_params(k_rem)
            best: Optional[List[int]] = None
            best_cost = math.inf
            for rep in range(repeats):
                rbsc, _ = reduce_mku_to_rbsc(sub, seed=[seed, round_no, rep])
                try:
                    solution = solver(rbsc)
                except InfeasibleInstance as e:
                    logger.debug(f"round {round_no} repeat {rep}: {e}")
                    continue
                head = list(dict.fromkeys(solution.chosen_sets))[:params.k_prime]
                if len(head) < params.k_prime:
                    continue
                candidate = [remaining[j] for j in head]
                cost = union_size(instance, candidate)
                if cost < best_cost:
                    best, best_cost = candidate, cost
            fallback = best is None
            if fallback:
                logger.warning(f"round {round_no}: no repeat produced {params.k_prime} sets; "
                               f"using the smallest-increment fallback")
                best = _fallback_pick(instance, remaining, params.k_prime)
            picked = best
            report.rounds.append(MkuRound(k_rem, params.k_prime, tuple(remaining), tuple(picked),
                                          union_size(instance, picked), repeats, fallback))
        chosen.extend(picked)
        taken = set(picked)
        remaining = [i for i in remaining if i not in taken]
        k_rem -= len(picked)
        logger.debug(f"* [STEP {round_no + 1}] fixed {len(picked)} sets, {k_rem} to go")
        round_no += 1

    report.cost = union_size(instance, chosen)
    report.round_bound = round_bound(instance.k)
    if round_no > report.round_bound:
        logger.warning(f"Min k-Union took {round_no} rounds, above the bound {report.round_bound:.1f}")
    logger.info(f"Min k-Union: {len(chosen)} sets, union {report.cost}, {round_no} rounds")
    return chosen


# ============================================================
# 性質の検証
# ============================================================

def per_blue_miss_rate(k: int, ell: int) -> float:
    """最適解の k 集合が特定の青を一度も引かない確率 (1−1/k)^{kℓ}"""
    return (1.0 - 1.0 / k) ** (k * ell)


@dataclass(frozen=True)
class ReductionTrialStats:
    trials: int
    success_rate: float
    miss_rate: float
    analytic_miss_rate: float
    optimum: Tuple[int, ...]
    opt_cost: int

    @property
    def success_bound(self) -> float:
        return 1.0 - 1.0 / math.e

    def miss_rate_sigma(self) -> float:
        p = self.analytic_miss_rate
        return math.sqrt(max(p * (1.0 - p), 0.0) / max(self.trials, 1))


def _trial_chunk(k: int, size: int, ell: int, count: int, seq: np.random.SeedSequence) -> np.ndarray:
    """count 回分の青ヒット行列 (count, k)"""
    rng = np.random.default_rng(seq)
    samples = rng.integers(0, k, size=(count, size * ell))
    hits = np.zeros((count, k), dtype=bool)
    hits[np.arange(count)[:, None], samples] = True
    return hits


def validate_reduction_success(instance: MinKUnionInstance, trials: int, seed: int,
                               jobs: Optional[int] = None) -> ReductionTrialStats:
    """
    最適な k 集合の青サンプルが [k] 全体を覆う頻度を測る

    最適解は総当たりで求め、その k 集合にだけ青サンプルを引く（他の集合のサンプルとは独立）。
    """
    if trials < 1:
        raise InvalidParameter(f"trials must be positive, got {trials}")
    opt_cost, optimum = bruteforce_mku(instance)
    params = reduction_params(instance.k)
    sizes = [trials // TRIAL_CHUNKS + (1 if c < trials % TRIAL_CHUNKS else 0) for c in range(TRIAL_CHUNKS)]
    seqs = np.random.SeedSequence(seed).spawn(TRIAL_CHUNKS)
    tasks = [(count, seq) for count, seq in zip(sizes, seqs) if count]

    def run(task: Tuple[int, np.random.SeedSequence]) -> np.ndarray:
        count, seq = task
        return _trial_chunk(instance.k, len(optimum), params.ell, count, seq)

    with ThreadPoolExecutor(max_workers=jobs or os.cpu_count()) as executor:
        hits = np.vstack(list(executor.map(run, tasks)))
    success = float(hits.all(axis=1).mean())
    miss = float(1.0 - hits.mean())
    analytic = per_blue_miss_rate(instance.k, params.ell)
    logger.info(f"reduction success {success:.3f} over {trials} trials "
                f"(per-blue miss {miss:.4f}, analytic {analytic:.4f})")
    return ReductionTrialStats(trials, success, miss, analytic, tuple(optimum), opt_cost)


def blue_sample_uniformity(k: int, m: int, trials: int, seed: int) -> float:
    """
    帰着の青サンプルが [k] 上一様かのカイ二乗検定

    Returns:
        p値
    """
    if k < 2:
        raise InvalidParameter("uniformity needs at least two blue elements")
    ell = reduction_params(k).ell
    counts = np.zeros(k, dtype=np.int64)
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        counts += np.bincount(_sample_blues(rng, m, k, ell).ravel(), minlength=k)
    return float(stats.chisquare(counts).pvalue)
