# -*- coding: utf-8 -*-
"""
rbsc-kit - Red-Blue Set Cover 近似
赤次数による分割、進捗LP、条件付き期待値法による丸め、OPT推定値の倍々探索
（部分被覆版を含む）
"""

import itertools
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import AbstractSet, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from errors import (DegenerateInput, InfeasibleInstance, InvalidParameter,
                    RoundingFailure, SizeLimit)
from instance_model import RbscInstance, RbscSolution, rbsc_solution, validate
from lp_engine import LpModel, LpSolution, solve

logger = logging.getLogger(__name__)

ONE_MINUS_INV_E = 1.0 - 1.0 / math.e


def log2c(x: float) -> float:
    """log2(max(x, 2))"""
    return math.log2(max(x, 2))


def approximation_factor(m: int, n: int, k: int, constant: float = 8.0,
                         log_k_power: int = 1) -> float:
    """C·m^{1/3}·log^{4/3} n·log^p k（p=1: 反復回数の慣習, p=2: n0 の慣習）"""
    return constant * m ** (1 / 3) * log2c(n) ** (4 / 3) * log2c(k) ** log_k_power


def potential_coefficient(m: int, n: int, opt_guess: float, remaining_blue: int) -> float:
    """ポテンシャル Φ = |Γ_R| − c·|Γ_B| の係数 c"""
    return (2.0 * (4.0 * m * log2c(n) ** 4) ** (1 / 3) * opt_guess
            / (ONE_MINUS_INV_E * max(remaining_blue, 1)))


@dataclass
class RbscParams:
    """RBSCソルバーの設定（config.json の rbsc セクション）"""
    accept_constant: float = 8.0
    n0_scale: float = 0.01
    partial_trials: int = 200
    seed: int = 0
    jobs: Optional[int] = None
    lp_backend: Optional[str] = None
    tolerance: float = 1e-7

    @classmethod
    def from_config(cls, config: Optional[Dict] = None, **overrides) -> 'RbscParams':
        section = dict((config or {}).get('rbsc', {}))
        section.update({k: v for k, v in overrides.items() if v is not None})
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in section.items() if k in known})


# ============================================================
# 赤次数による分割
# ============================================================

@dataclass(frozen=True)
class Bucket:
    alpha_index: int
    r_alpha: int
    sets: Tuple[int, ...]
    reds: FrozenSet[int]


@dataclass
class RedDegreePartition:
    """
    partition_by_red_degree の結果

    residual は全ての赤要素が除外された集合（制限ビューでは無料）。
    view_sets / view_reds は分割に使った集合と赤要素。
    """
    buckets: List[Bucket]
    excluded: FrozenSet[int]
    residual: Tuple[int, ...]
    n0: int
    view_sets: Tuple[int, ...]
    view_reds: FrozenSet[int]

    def degree_bound(self, r_alpha: int) -> float:
        return 2.0 * len(self.view_sets) * r_alpha * log2c(len(self.view_reds)) / self.n0

    def check(self, instance: RbscInstance) -> List[str]:
        """分割の4条件を整数で検査し、違反メッセージの一覧を返す"""
        problems: List[str] = []
        seen: List[int] = []
        for b in self.buckets:
            seen.extend(b.sets)
        if sorted(seen + list(self.residual)) != sorted(self.view_sets):
            problems.append("buckets and residual do not partition the sets")
        if len(self.excluded) > self.n0:
            problems.append(f"{len(self.excluded)} reds excluded, budget {self.n0}")
        for prev, cur in zip(self.buckets, self.buckets[1:]):
            if not cur.reds <= prev.reds:
                problems.append(f"red sets of buckets {prev.alpha_index} and {cur.alpha_index} not nested")
        if self.buckets and len(self.buckets[-1].reds) < len(self.view_reds) - self.n0:
            problems.append("intersection of red sets smaller than n - n0")
        for b in self.buckets:
            degree: Dict[int, int] = {}
            for j in b.sets:
                hits = [i for i in instance.red_adj[j] if i in b.reds]
                if not b.r_alpha <= len(hits) <= 2 * b.r_alpha:
                    problems.append(f"set {j} has degree {len(hits)} outside [{b.r_alpha}, {2 * b.r_alpha}]")
                for i in hits:
                    degree[i] = degree.get(i, 0) + 1
            bound = self.degree_bound(b.r_alpha)
            for i, d in degree.items():
                if d > bound:
                    problems.append(f"red {i} has degree {d} in bucket {b.alpha_index} above {bound:.3f}")
        return problems


def _degree_range(r: int) -> Tuple[int, int]:
    return (1, 2) if r == 1 else (r + 1, 2 * r)


def partition_by_red_degree(instance: RbscInstance, n0: int,
                            sets: Optional[Iterable[int]] = None,
                            reds: Optional[AbstractSet[int]] = None) -> RedDegreePartition:
    """
    集合を赤次数のスケール r = 2^s ごとに分割する

    上位のスケールから順に、そのスケールの候補集合での次数が
    2·m·r·log n / n0 を超える赤要素を削除し、残りの赤要素に関する次数が
    範囲に入る未分類集合をバケットに入れる。

    Args:
        instance: RBSCインスタンス
        n0: 除外予算
        sets: 対象集合（省略時は全集合）
        reds: 有効な赤要素（省略時は全赤要素）

    Raises:
        InvalidParameter: n0 < 1
        DegenerateInput: 有効な赤要素を持つ集合がない
    """
    if n0 < 1:
        raise InvalidParameter(f"n0 must be positive, got {n0}")
    active = frozenset(range(instance.n)) if reds is None else frozenset(reds)
    view = tuple(range(instance.m)) if sets is None else tuple(sorted(set(sets)))
    red_of = {j: {i for i in instance.red_adj[j] if i in active} for j in view}
    if not any(red_of[j] for j in view):
        raise DegenerateInput("every set has an empty red neighborhood; take free sets first")

    m, n = len(view), len(active)
    log_n = log2c(n)
    dmax = max(len(r) for r in red_of.values())
    top = 1
    while 2 * top < dmax:
        top *= 2

    remaining = set(active)
    unassigned = set(view)
    excluded: set = set()
    buckets: List[Bucket] = []
    r = top
    while r >= 1:
        low, high = _degree_range(r)
        current = [j for j in sorted(unassigned) if low <= len(red_of[j] & remaining) <= high]
        threshold = 2.0 * m * r * log_n / n0
        counts: Dict[int, int] = {}
        for j in current:
            for i in red_of[j] & remaining:
                counts[i] = counts.get(i, 0) + 1
        dropped = {i for i, c in counts.items() if c > threshold}
        if dropped:
            remaining -= dropped
            excluded |= dropped
        members = tuple(j for j in current if low <= len(red_of[j] & remaining) <= high)
        if members:
            buckets.append(Bucket(len(buckets), r, members, frozenset(remaining)))
            unassigned -= set(members)
        r //= 2

    residual = tuple(sorted(unassigned))
    logger.debug(f"partition: {len(buckets)} buckets, {len(excluded)} excluded reds, "
                 f"{len(residual)} residual sets (n0={n0})")
    return RedDegreePartition(buckets, frozenset(excluded), residual, n0, view, active)


# ============================================================
# 進捗LPと丸め
# ============================================================

@dataclass
class ProgressStep:
    """一回の反復で選んだ集合族 J* と、その新規赤・青数"""
    chosen: Tuple[int, ...]
    new_red: int
    new_blue: int
    kind: str
    opt_guess: int
    alpha: Optional[int] = None
    i0: Optional[int] = None
    lp_value: Optional[float] = None
    potential: Optional[float] = None
    added_cost: int = 0
    remaining_blue: Optional[int] = None

    @property
    def ratio(self) -> float:
        return self.new_red / self.new_blue if self.new_blue else math.inf


def lp_support(instance: RbscInstance, bucket: Bucket, i0: int) -> Tuple[int, ...]:
    """Γ_{J_α}(i0)"""
    return tuple(j for j in bucket.sets if i0 in instance.red_adj[j])


def build_progress_lp(instance: RbscInstance, bucket: Bucket, i0: int, opt_guess: float,
                      uncovered_blue: AbstractSet[int]) -> LpModel:
    """
    (α, i0) に対する進捗LP

    max Σ z_ℓ  s.t.  Σ y_i ≤ OPT,  z_ℓ ≤ Σ_{j∈Γ(ℓ)} x_j,  x_j ≤ y_i (i ∈ Γ_{R_α}(j))
    """
    if i0 not in bucket.reds:
        raise InvalidParameter(f"red {i0} is not in bucket {bucket.alpha_index}")
    support = lp_support(instance, bucket, i0)
    model = LpModel(f"rbsc_a{bucket.alpha_index}_i{i0}", sense='max')
    touched = sorted({i for j in support for i in instance.red_adj[j] if i in bucket.reds})
    for j in support:
        model.add_variable(('x', j))
    for i in touched:
        model.add_variable(('y', i))
    blues = sorted(uncovered_blue)
    for ell in blues:
        model.add_variable(('z', ell))

    model.add_constraint({('y', i): 1.0 for i in touched}, '<=', opt_guess, 'budget')
    support_set = set(support)
    for ell in blues:
        coeffs = {('z', ell): 1.0}
        for j in instance.blue_to_sets[ell]:
            if j in support_set:
                coeffs[('x', j)] = -1.0
        model.add_constraint(coeffs, '<=', 0.0, f"cover_{ell}")
    for j in support:
        for i in instance.red_adj[j]:
            if i in bucket.reds:
                model.add_constraint({('x', j): 1.0, ('y', i): -1.0}, '<=', 0.0, f"pay_{j}_{i}")
    model.set_objective({('z', ell): 1.0 for ell in blues})
    return model


def _incidence(instance: RbscInstance, support: Sequence[int], reds: AbstractSet[int],
               blues: AbstractSet[int]) -> Tuple[np.ndarray, np.ndarray]:
    red_ids = sorted({i for j in support for i in instance.red_adj[j] if i in reds})
    blue_ids = sorted({b for j in support for b in instance.blue_adj[j] if b in blues})
    red_pos = {i: p for p, i in enumerate(red_ids)}
    blue_pos = {b: p for p, b in enumerate(blue_ids)}
    mr = np.zeros((len(red_ids), len(support)), dtype=bool)
    mb = np.zeros((len(blue_ids), len(support)), dtype=bool)
    for col, j in enumerate(support):
        for i in instance.red_adj[j]:
            if i in red_pos:
                mr[red_pos[i], col] = True
        for b in instance.blue_adj[j]:
            if b in blue_pos:
                mb[blue_pos[b], col] = True
    return mr, mb


def _hit_probability(incidence: np.ndarray, probs: np.ndarray) -> np.ndarray:
    if incidence.shape[0] == 0:
        return np.zeros(0)
    return 1.0 - np.prod(np.where(incidence, 1.0 - probs, 1.0), axis=1)


def expected_potential(instance: RbscInstance, probs: Dict[int, float], reds: AbstractSet[int],
                       blues: AbstractSet[int], coefficient: float) -> float:
    """
    各集合 j を確率 probs[j] で独立に選んだときの E[|Γ_R(J)| − c·|Γ_B(J)|]

    各要素が少なくとも一つの選択集合に含まれる確率（生存確率の積の補数）の和で厳密に計算する。
    """
    support = sorted(probs)
    mr, mb = _incidence(instance, support, reds, blues)
    p = np.clip(np.array([probs[j] for j in support], dtype=float), 0.0, 1.0)
    return float(_hit_probability(mr, p).sum() - coefficient * _hit_probability(mb, p).sum())


def exhaustive_expectation(instance: RbscInstance, probs: Dict[int, float], reds: AbstractSet[int],
                           blues: AbstractSet[int], coefficient: float, limit: int = 10) -> float:
    """全ての選択結果（最大 2^limit 通り）を列挙して E[Φ] を求める検証用オラクル"""
    support = sorted(probs)
    if len(support) > limit:
        raise SizeLimit(f"{len(support)} sets exceed exhaustive limit {limit}")
    total = 0.0
    for outcome in itertools.product((0, 1), repeat=len(support)):
        weight = 1.0
        picked = []
        for j, bit in zip(support, outcome):
            pj = min(max(probs[j], 0.0), 1.0)
            weight *= pj if bit else 1.0 - pj
            if bit:
                picked.append(j)
        if weight == 0.0:
            continue
        red = {i for j in picked for i in instance.red_adj[j] if i in reds}
        blue = {b for j in picked for b in instance.blue_adj[j] if b in blues}
        total += weight * (len(red) - coefficient * len(blue))
    return total


def round_conditional_expectation(instance: RbscInstance, lp_solution: LpSolution, bucket: Bucket,
                                  i0: int, opt_guess: int, uncovered_blue: AbstractSet[int],
                                  tol: float = 1e-7) -> ProgressStep:
    """
    条件付き期待値法で LP 解を J* ⊆ Γ_{J_α}(i0) に丸める

    j の昇順に確率を 1 と 0 に固定した場合の E[Φ] を比べ、小さい方を採る（同値なら 0）。

    Raises:
        RoundingFailure: LP値が 0、または非正のポテンシャルを実現できない
    """
    if lp_solution.objective is None or lp_solution.objective <= tol:
        raise RoundingFailure(f"progress LP value {lp_solution.objective} is not positive")
    support = lp_support(instance, bucket, i0)
    coefficient = potential_coefficient(instance.m, instance.n, opt_guess, len(uncovered_blue))
    mr, mb = _incidence(instance, support, bucket.reds, uncovered_blue)
    p = np.clip(np.array([lp_solution.value(('x', j)) for j in support], dtype=float), 0.0, 1.0)

    def potential(q: np.ndarray) -> float:
        return float(_hit_probability(mr, q).sum() - coefficient * _hit_probability(mb, q).sum())

    for col in range(len(support)):
        with_j, without_j = p.copy(), p.copy()
        with_j[col], without_j[col] = 1.0, 0.0
        p = with_j if potential(with_j) < potential(without_j) else without_j

    chosen = tuple(j for col, j in enumerate(support) if p[col] == 1.0)
    new_red = int(mr[:, p == 1.0].any(axis=1).sum()) if chosen else 0
    new_blue = int(mb[:, p == 1.0].any(axis=1).sum()) if chosen else 0
    phi = new_red - coefficient * new_blue
    if new_blue == 0:
        raise RoundingFailure("rounded family covers no uncovered blue element")
    if phi > tol:
        raise RoundingFailure(f"rounded potential {phi:.4f} is positive (OPT guess {opt_guess} too small)")
    return ProgressStep(chosen, new_red, new_blue, 'lp', opt_guess, bucket.alpha_index, i0,
                        float(lp_solution.objective), phi, remaining_blue=len(uncovered_blue))


# ============================================================
# ドライバ
# ============================================================

@dataclass
class RbscReport:
    """反復ログと上界の記録"""
    opt_guess: Optional[int] = None
    n0: Optional[int] = None
    excluded_reds: int = 0
    failed_guesses: List[int] = field(default_factory=list)
    steps: List[ProgressStep] = field(default_factory=list)
    factor_log_k: float = 0.0
    factor_log2_k: float = 0.0
    accept_constant: float = 8.0
    cost: Optional[int] = None

    def to_dict(self) -> Dict:
        data = asdict(self)
        for step, raw in zip(self.steps, data['steps']):
            raw['ratio'] = step.ratio
        return data


class RbscSolver:
    """
    RBSC / 部分RBSC の近似ソルバー

    OPT推定値 g = 1, 2, 4, ... の各値で全体を走らせ、最初に完了した g の解を返す。
    赤次数の分割は推定値ごとに一度だけ作り、除外した赤要素は全体で n0 個までとする。
    """

    def __init__(self, instance: RbscInstance, params: Optional[RbscParams] = None):
        validate(instance)
        self.instance = instance
        self.params = params or RbscParams()
        self.report = RbscReport(accept_constant=self.params.accept_constant)

    def solve(self, k_hat: Optional[int] = None) -> RbscSolution:
        inst = self.instance
        need = self._need(k_hat)
        self.report.factor_log_k = approximation_factor(inst.m, inst.n, inst.k, self.params.accept_constant, 1)
        self.report.factor_log2_k = approximation_factor(inst.m, inst.n, inst.k, self.params.accept_constant, 2)
        if need == 0:
            self.report.cost = 0
            return rbsc_solution(inst, [])

        coverable = {b for b in range(inst.k) if inst.blue_to_sets[b]}
        if len(coverable) < need:
            missing = sorted(set(range(inst.k)) - coverable)
            raise InfeasibleInstance(f"only {len(coverable)} of {need} required blue elements are coverable "
                                     f"(uncoverable: {missing[:5]})")

        free_step = self._free_sets()
        covered_blue = {b for j in free_step for b in inst.blue_adj[j]}
        if free_step:
            self.report.steps.append(ProgressStep(tuple(free_step), 0, len(covered_blue), 'free', 0))
        if len(covered_blue) >= need:
            return self._finish(free_step)

        top = 1
        while top < inst.n * max(inst.k, 1):
            top *= 2
        g = 1
        while True:
            try:
                picked, steps = self._run_guess(g, list(free_step), set(covered_blue), need)
            except RoundingFailure as e:
                logger.info(f"OPT guess {g} failed: {e}")
                self.report.failed_guesses.append(g)
                if g >= top:
                    raise
                g *= 2
                continue
            self.report.opt_guess = g
            self.report.steps.extend(steps)
            logger.info(f"OPT guess {g} succeeded after {len(steps)} steps")
            return self._finish(picked)

    def run_guess(self, g: int, k_hat: Optional[int] = None) -> Tuple[List[int], List[ProgressStep]]:
        """
        OPT推定値 g だけで最後まで走らせる（無料の集合を取った状態から）

        Raises:
            RoundingFailure: g では完了しない
        """
        free_step = self._free_sets()
        covered_blue = {b for j in free_step for b in self.instance.blue_adj[j]}
        return self._run_guess(g, list(free_step), covered_blue, self._need(k_hat))

    def _need(self, k_hat: Optional[int]) -> int:
        inst = self.instance
        if k_hat is not None and (k_hat < 0 or k_hat > inst.k):
            raise InvalidParameter(f"k_hat={k_hat} must lie in [0, {inst.k}]")
        return inst.k if k_hat is None else k_hat

    def _free_sets(self) -> List[int]:
        inst = self.instance
        return [j for j in range(inst.m) if not inst.red_adj[j] and inst.blue_adj[j]]

    def _finish(self, chosen: List[int]) -> RbscSolution:
        solution = rbsc_solution(self.instance, chosen)
        self.report.cost = solution.cost
        return solution

    def n0(self, g: int) -> int:
        """除外予算 n0 = ⌈scale·g·m^{1/3}·log^{4/3} n·log² k⌉"""
        inst = self.instance
        raw = (self.params.n0_scale * g * inst.m ** (1 / 3) * log2c(inst.n) ** (4 / 3)
               * log2c(inst.k) ** 2)
        return max(1, math.ceil(raw))

    def _run_guess(self, g: int, chosen: List[int], covered_blue: set,
                   need: int) -> Tuple[List[int], List[ProgressStep]]:
        inst = self.instance
        taken = set(chosen)
        allowed = [j for j in range(inst.m) if len(inst.red_adj[j]) <= g and j not in taken]
        reachable = {b for j in allowed for b in inst.blue_adj[j]} - covered_blue
        if len(covered_blue) + len(reachable) < need:
            raise RoundingFailure(f"sets with at most {g} reds cannot reach {need} blue elements")
        covered_red = {i for j in chosen for i in inst.red_adj[j]}
        steps: List[ProgressStep] = []

        def take(family: Sequence[int]) -> Tuple[int, int]:
            before_red, before_blue = len(covered_red), len(covered_blue)
            for j in family:
                chosen.append(j)
                covered_red.update(inst.red_adj[j])
                covered_blue.update(inst.blue_adj[j])
            return len(covered_red) - before_red, len(covered_blue) - before_blue

        n0 = self.n0(g)
        self.report.n0 = n0
        priced = [j for j in allowed if inst.red_adj[j]]
        partition: Optional[RedDegreePartition] = None
        excluded: FrozenSet[int] = frozenset()
        if priced:
            partition = partition_by_red_degree(inst, n0, priced)
            excluded = partition.excluded
            self.report.excluded_reds = len(excluded)
            if partition.residual and len(covered_blue) < need:
                step = self._take_residual(partition.residual, covered_red, covered_blue, need, take, g)
                if step.chosen:
                    steps.append(step)

        iteration = 0
        while len(covered_blue) < need:
            iteration += 1
            candidates = [j for j in allowed if any(b not in covered_blue for b in inst.blue_adj[j])]
            if not candidates:
                raise RoundingFailure("no candidate set covers a remaining blue element")

            free = [j for j in candidates
                    if all(i in covered_red or i in excluded for i in inst.red_adj[j])]
            if free:
                _, gained = take(free)
                steps.append(ProgressStep(tuple(free), 0, gained, 'free', g))
                continue
            if partition is None:
                raise RoundingFailure("no priced set is left to make progress")

            uncovered_blue = frozenset(range(inst.k)) - covered_blue
            results = solve_progress_lps(inst, partition, uncovered_blue, g,
                                         self.params.jobs, self.params.lp_backend)
            best = None
            for alpha, i0, solution in results:
                score = (solution.objective or 0.0) / partition.buckets[alpha].r_alpha
                if best is None or score > best[0] + self.params.tolerance:
                    best = (score, alpha, i0, solution)
            if best is None or (best[3].objective or 0.0) <= self.params.tolerance:
                raise RoundingFailure("every progress LP has value 0")
            _, alpha, i0, solution = best
            bucket = partition.buckets[alpha]
            step = None
            if need < inst.k and solution.objective >= need - len(covered_blue) - self.params.tolerance:
                step = self._sample_partial(bucket, i0, solution, uncovered_blue, g, iteration)
            if step is None:
                step = round_conditional_expectation(inst, solution, bucket, i0, g, uncovered_blue,
                                                     self.params.tolerance)
            step.added_cost, _ = take(step.chosen)
            logger.debug(f"guess {g} step {iteration}: alpha={alpha} i0={i0} "
                         f"LP={solution.objective:.3f} -> {len(step.chosen)} sets, ratio {step.ratio:.3f}")
            steps.append(step)
        return chosen, steps

    def _take_residual(self, residual: Sequence[int], covered_red: set, covered_blue: set,
                       need: int, take, g: int) -> ProgressStep:
        """赤要素が全て除外された集合（除外予算で支払い済み）を、新規赤数の少ない順に取る"""
        inst = self.instance
        order = sorted(residual, key=lambda j: (len(set(inst.red_adj[j]) - covered_red), j))
        picked: List[int] = []
        added_red = added_blue = 0
        for j in order:
            if len(covered_blue) >= need:
                break
            if all(b in covered_blue for b in inst.blue_adj[j]):
                continue
            r, b = take([j])
            added_red += r
            added_blue += b
            picked.append(j)
        return ProgressStep(tuple(picked), added_red, added_blue, 'residual', g, added_cost=added_red)

    def _sample_partial(self, bucket: Bucket, i0: int, solution: LpSolution,
                        uncovered_blue: AbstractSet[int], g: int, iteration: int) -> Optional[ProgressStep]:
        """部分被覆の最終反復: 独立丸めを繰り返し、青・赤の集中条件を満たす最初の結果を採る"""
        inst = self.instance
        support = lp_support(inst, bucket, i0)
        mr, mb = _incidence(inst, support, bucket.reds, uncovered_blue)
        p = np.clip(np.array([solution.value(('x', j)) for j in support], dtype=float), 0.0, 1.0)
        expected_blue = float(_hit_probability(mb, p).sum())
        expected_red = float(_hit_probability(mr, p).sum())
        ln_n = math.log(max(inst.n, 2))
        red_cap = expected_red + 3.0 * math.sqrt(expected_red * ln_n) + ln_n
        rng = np.random.default_rng([self.params.seed, g, iteration])
        for trial in range(self.params.partial_trials):
            mask = rng.random(len(support)) < p
            new_blue = int(mb[:, mask].any(axis=1).sum())
            new_red = int(mr[:, mask].any(axis=1).sum())
            if new_blue >= 1 and new_blue >= expected_blue / 2 and new_red <= red_cap:
                chosen = tuple(j for j, bit in zip(support, mask) if bit)
                logger.debug(f"partial rounding accepted on trial {trial + 1}")
                return ProgressStep(chosen, new_red, new_blue, 'partial-trial', g, bucket.alpha_index,
                                    i0, float(solution.objective))
        logger.info("partial rounding trials exhausted; using derandomized rounding")
        return None


def solve_progress_lps(instance: RbscInstance, partition: RedDegreePartition,
                       uncovered_blue: AbstractSet[int], opt_guess: int,
                       jobs: Optional[int] = None,
                       backend: Optional[str] = None) -> List[Tuple[int, int, LpSolution]]:
    """全ての (α, i0) の進捗LPを並列に解き、(α, i0) の昇順で返す"""
    tasks = [(b.alpha_index, i0) for b in partition.buckets for i0 in sorted(b.reds)
             if lp_support(instance, b, i0)]

    def run(task: Tuple[int, int]) -> LpSolution:
        alpha, i0 = task
        model = build_progress_lp(instance, partition.buckets[alpha], i0, opt_guess, uncovered_blue)
        return solve(model, backend=backend)

    with ThreadPoolExecutor(max_workers=jobs or os.cpu_count()) as executor:
        solutions = list(executor.map(run, tasks))
    return [(alpha, i0, sol) for (alpha, i0), sol in zip(tasks, solutions)]


def solve_rbsc(instance: RbscInstance, params: Optional[RbscParams] = None) -> RbscSolution:
    """RBSC を近似的に解く（全青要素を被覆）"""
    return RbscSolver(instance, params).solve()


def solve_partial_rbsc(instance: RbscInstance, k_hat: int,
                       params: Optional[RbscParams] = None) -> RbscSolution:
    """k_hat 個以上の青要素を被覆する部分RBSC"""
    return RbscSolver(instance, params).solve(k_hat)
