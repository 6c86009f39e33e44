# -*- coding: utf-8 -*-
"""
rbsc-kit - MMSA4 近似
持ち上げLP、J0 / 近傍の二段バケット分け、2ケースの乱択丸め、直接被覆ルート、
進捗ステップを繰り返すドライバ

層の対応: 層1 = B (OR), 層2 = J (AND), 層3 = R (OR), 層4 = S (変数)
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import numpy as np

from errors import (InfeasibleInstance, InvalidParameter, LiftingDegenerate,
                    NumericalFailure, RoundingExhausted, StructuralError)
from instance_model import (STATUS_OPEN, STATUS_SATISFIED, STATUS_UNSATISFIABLE,
                            MmsaInstance, MmsaSolution, SimplifiedCircuit,
                            mmsa_solution, simplify_circuit, validate)
from lp_engine import LpModel, LpSolution, solve
from rbsc_approx import log2c
from set_cover import fractional_set_cover_value, greedy_set_cover

logger = logging.getLogger(__name__)

B_LAYER, J_LAYER, R_LAYER, S_LAYER = 1, 2, 3, 4


@dataclass
class Mmsa4Params:
    """MMSA4ソルバーの設定（config.json の mmsa4 セクション）"""
    accept_constant: float = 16.0
    epsilon: float = 1 / 3
    trial_cap: int = 100
    monte_carlo_trials: int = 10000
    seed: int = 0
    force_case: Optional[int] = None
    lp_backend: Optional[str] = None
    tolerance: float = 1e-7

    @classmethod
    def from_config(cls, config: Optional[Dict] = None, **overrides) -> 'Mmsa4Params':
        section = dict((config or {}).get('mmsa4', {}))
        section.update({k: v for k, v in overrides.items() if v is not None})
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in section.items() if k in known})


def mmsa4_factor(N: int, constant: float = 16.0) -> float:
    """C′·N^{1/3}·(log N)^3"""
    return constant * N ** (1 / 3) * log2c(N) ** 3


def _dyadic_index(value: float) -> int:
    """値が入る区間 [2^-s, 2^-(s-1)) の s（最上位は [1/2, 1]）"""
    return max(1, math.ceil(-math.log2(min(value, 1.0)) - 1e-9))


def _floor_pow2(count: int) -> int:
    return 1 << (count.bit_length() - 1)


def _dyadic_deltas(k: int) -> List[int]:
    out, d = [], 1
    while d <= max(k, 1):
        out.append(d)
        d *= 2
    return out


# ============================================================
# 前処理
# ============================================================

@dataclass
class Mmsa4Preprocessed:
    """前処理結果（circuit.id_maps で入力インスタンスの id に戻す）"""
    instance: MmsaInstance
    circuit: SimplifiedCircuit
    removed: Tuple[int, ...]
    fallback: bool


def preprocess_mmsa4(instance: MmsaInstance, opt_guess: float, delta_guess: Optional[int] = None,
                     epsilon: float = 1 / 3) -> Mmsa4Preprocessed:
    """
    赤近傍の分数集合被覆値が OPT 推定値を超える j を取り除く

    Args:
        instance: 深さ4の回路
        opt_guess: OPT推定値
        delta_guess: Δ推定値（k/m^ε を超えると fallback フラグを立てる）
        epsilon: 直接被覆ルートの指数

    Raises:
        InfeasibleInstance: ある青頂点の J 側の経路が全て失われた
    """
    if instance.t != 4:
        raise StructuralError(f"expected a depth-4 circuit, got depth {instance.t}")
    s_to_reds = instance.parents[S_LAYER - 1]
    removed = []
    for j in range(instance.layers[J_LAYER - 1]):
        reds = instance.children(J_LAYER, j)
        if fractional_set_cover_value(reds, s_to_reds) > opt_guess + 1e-9:
            removed.append(j)
    circuit = simplify_circuit(instance, false_vertices={J_LAYER: removed})
    if circuit.status == STATUS_UNSATISFIABLE:
        raise InfeasibleInstance(f"removing {len(removed)} J vertices with cover value above "
                                 f"{opt_guess} leaves a blue vertex uncoverable")
    if circuit.status != STATUS_OPEN:
        raise InvalidParameter("preprocessing expects an unsatisfied circuit")
    k, m = instance.layers[0], instance.layers[1]
    fallback = delta_guess is not None and delta_guess > k / max(m, 1) ** epsilon
    if removed:
        logger.debug(f"preprocess (OPT={opt_guess}): removed J vertices {removed}")
    return Mmsa4Preprocessed(circuit.instance, circuit, tuple(removed), fallback)


# ============================================================
# 持ち上げLP
# ============================================================

def _cond_w(h: int, h2: int) -> Tuple:
    return ('w', h) if h == h2 else ('Xw', h, h2)


def build_mmsa4_lp(instance: MmsaInstance, delta_guess: float, opt_guess: float,
                   lifted: bool = True) -> LpModel:
    """
    MMSA4 の LP 緩和（Δ, OPT を推定）と、J ∪ S の各頂点での条件付け

    基本変数: w_h, z_ℓ, x_j, y_i, e_(ℓ,j)。対称な持ち上げ変数 P_(j,h) = X_h^(j) = X_j^(h)。
    h での条件付けは基本LP全体を w_h で斉次化したもの、j での条件付けは
    Γ_R(j) の各赤要素の被覆制約（X_i^(j) = x_j）。
    """
    if instance.t != 4:
        raise StructuralError(f"expected a depth-4 circuit, got depth {instance.t}")
    k, m, n, ns = instance.layers
    blue_js = instance.edges[0]
    j_reds = instance.edges[1]
    red_s = instance.edges[2]
    j_blues = instance.parents[J_LAYER - 1]
    cap = 2.0 * math.e * math.log(2 * max(k, 1))
    lower = k / (log2c(k) * log2c(m))
    pairs = [(ell, j) for ell in range(k) for j in blue_js[ell]]

    model = LpModel(f"mmsa4_d{delta_guess}_g{opt_guess}", sense='max')
    for h in range(ns):
        model.add_variable(('w', h))
    for ell in range(k):
        model.add_variable(('z', ell))
    for j in range(m):
        model.add_variable(('x', j))
    for i in range(n):
        model.add_variable(('y', i))
    for ell, j in pairs:
        model.add_variable(('e', ell, j))

    model.add_constraint({('w', h): 1.0 for h in range(ns)}, '<=', opt_guess, 'opt')
    model.add_constraint({('z', ell): 1.0 for ell in range(k)}, '>=', lower, 'blue_weight')
    for ell in range(k):
        edge_sum = {('e', ell, j): 1.0 for j in blue_js[ell]}
        model.add_constraint({**edge_sum, ('z', ell): -1.0}, '>=', 0.0, 'blue_low')
        model.add_constraint({**edge_sum, ('z', ell): -cap}, '<=', 0.0, 'blue_high')
    for j in range(m):
        edge_sum = {('e', ell, j): 1.0 for ell in j_blues[j]}
        model.add_constraint({**edge_sum, ('x', j): -float(delta_guess)}, '>=', 0.0, 'deg_low')
        model.add_constraint({**edge_sum, ('x', j): -2.0 * delta_guess}, '<=', 0.0, 'deg_high')
    for ell, j in pairs:
        model.add_constraint({('e', ell, j): 1.0, ('x', j): -1.0}, '<=', 0.0, 'edge_x')
        model.add_constraint({('e', ell, j): 1.0, ('z', ell): -1.0}, '<=', 0.0, 'edge_z')
    for i in range(n):
        model.add_constraint({**{('w', h): 1.0 for h in red_s[i]}, ('y', i): -1.0}, '>=', 0.0, 'red_cover')
    for j in range(m):
        for i in j_reds[j]:
            model.add_constraint({('x', j): 1.0, ('y', i): -1.0}, '<=', 0.0, 'xy')
    model.set_objective({('z', ell): 1.0 for ell in range(k)})
    if not lifted:
        return model

    for j in range(m):
        for h in range(ns):
            model.add_variable(('P', j, h))
            model.add_constraint({('P', j, h): 1.0, ('x', j): -1.0}, '<=', 0.0, 'jcond_bound')
        for i in j_reds[j]:
            model.add_constraint({**{('P', j, h): 1.0 for h in red_s[i]}, ('x', j): -1.0},
                                 '>=', 0.0, 'jcond_cover')

    for h in range(ns):
        wh = ('w', h)
        owned = []
        for h2 in range(ns):
            if h2 != h:
                owned.append(model.add_variable(('Xw', h, h2)))
        for ell in range(k):
            owned.append(model.add_variable(('Xz', h, ell)))
        for i in range(n):
            owned.append(model.add_variable(('Xy', h, i)))
        for ell, j in pairs:
            owned.append(model.add_variable(('Xe', h, ell, j)))
        owned.extend(('P', j, h) for j in range(m))
        for name in owned:
            model.add_constraint({name: 1.0, wh: -1.0}, '<=', 0.0, 'hcond_bound')

        budget = {_cond_w(h, h2): 1.0 for h2 in range(ns)}
        budget[wh] = budget.get(wh, 0.0) - opt_guess
        model.add_constraint(budget, '<=', 0.0, 'hcond_opt')
        model.add_constraint({**{('Xz', h, ell): 1.0 for ell in range(k)}, wh: -lower},
                             '>=', 0.0, 'hcond_blue_weight')
        for ell in range(k):
            edge_sum = {('Xe', h, ell, j): 1.0 for j in blue_js[ell]}
            model.add_constraint({**edge_sum, ('Xz', h, ell): -1.0}, '>=', 0.0, 'hcond_blue_low')
            model.add_constraint({**edge_sum, ('Xz', h, ell): -cap}, '<=', 0.0, 'hcond_blue_high')
        for j in range(m):
            edge_sum = {('Xe', h, ell, j): 1.0 for ell in j_blues[j]}
            model.add_constraint({**edge_sum, ('P', j, h): -float(delta_guess)}, '>=', 0.0, 'hcond_deg_low')
            model.add_constraint({**edge_sum, ('P', j, h): -2.0 * delta_guess}, '<=', 0.0, 'hcond_deg_high')
        for ell, j in pairs:
            model.add_constraint({('Xe', h, ell, j): 1.0, ('P', j, h): -1.0}, '<=', 0.0, 'hcond_edge_x')
            model.add_constraint({('Xe', h, ell, j): 1.0, ('Xz', h, ell): -1.0}, '<=', 0.0, 'hcond_edge_z')
        for i in range(n):
            cover: Dict[Tuple, float] = {}
            for h2 in red_s[i]:
                cover[_cond_w(h, h2)] = cover.get(_cond_w(h, h2), 0.0) + 1.0
            cover[('Xy', h, i)] = cover.get(('Xy', h, i), 0.0) - 1.0
            model.add_constraint(cover, '>=', 0.0, 'hcond_red_cover')
        for j in range(m):
            for i in j_reds[j]:
                model.add_constraint({('P', j, h): 1.0, ('Xy', h, i): -1.0}, '<=', 0.0, 'hcond_xy')
    return model


def conditioned_solution(instance: MmsaInstance, solution: LpSolution, h: int) -> Dict[Tuple, float]:
    """h で条件付けた解 X^(h)/w_h を基本LPの変数名で返す"""
    k, m, n, ns = instance.layers
    w = solution.value(('w', h))
    if w <= 0:
        raise InvalidParameter(f"cannot condition on w_{h} = {w}")
    values: Dict[Tuple, float] = {}
    for h2 in range(ns):
        values[('w', h2)] = solution.value(_cond_w(h, h2)) / w
    for ell in range(k):
        values[('z', ell)] = solution.value(('Xz', h, ell)) / w
        for j in instance.edges[0][ell]:
            values[('e', ell, j)] = solution.value(('Xe', h, ell, j)) / w
    for j in range(m):
        values[('x', j)] = solution.value(('P', j, h)) / w
    for i in range(n):
        values[('y', i)] = solution.value(('Xy', h, i)) / w
    return values


# ============================================================
# バケット分け
# ============================================================

def bucket_J0(x_values: Dict[int, float], tol: float = 1e-7,
              floor: float = 0.0) -> Tuple[Tuple[int, ...], float]:
    """
    x の二進バケットのうち LP 重みが最大のもの（同重みなら x0 の大きい方）

    Args:
        x_values: j -> x_j
        tol: これ以下の x は 0 とみなす
        floor: これ未満の x は無視する（ソルバーは 1/m を渡す）

    Returns:
        (J0, x0)。残る x がなければ ((), 0.0)
    """
    weight: Dict[int, float] = {}
    members: Dict[int, List[int]] = {}
    for j in sorted(x_values):
        v = x_values[j]
        if v <= tol or v < floor:
            continue
        s = _dyadic_index(v)
        weight[s] = weight.get(s, 0.0) + v
        members.setdefault(s, []).append(j)
    if not weight:
        return (), 0.0
    best = min(weight, key=lambda s: (-weight[s], s))
    return tuple(members[best]), 2.0 ** -best


@dataclass(frozen=True)
class NeighborBucket:
    """(j, i) の近傍バケット: β_ji, γ_ji と Γ̂_j(i)"""
    j: int
    i: int
    beta: float
    gamma: float
    members: Tuple[int, ...]
    conditioned_mass: float
    beta_buckets: int = 1
    gamma_buckets: int = 1
    bucketed_mass: float = 0.0


def bucket_neighbors(instance: MmsaInstance, solution: LpSolution, j: int, i: int,
                     tol: float = 1e-7) -> NeighborBucket:
    """
    Γ_S(i) を条件付き重み ŵ^(j)_h で二進バケットに分け、重み最大のバケット（β）の中を
    さらに w_h で分けて要素数最大の部分バケット（γ）を Γ̂_j(i) とする

    Raises:
        LiftingDegenerate: Σ ŵ^(j)_h < 1
    """
    xj = solution.value(('x', j))
    if xj <= tol:
        raise InvalidParameter(f"x_{j} = {xj} is not positive")
    hat = {h: min(solution.value(('P', j, h)) / xj, 1.0) for h in instance.children(R_LAYER, i)}
    mass = sum(hat.values())
    if mass < 1.0 - 1e-6 / xj - 1e-6:
        raise LiftingDegenerate(f"conditioned cover of red {i} given j={j} is {mass:.6f} < 1")

    weight: Dict[int, float] = {}
    by_beta: Dict[int, List[int]] = {}
    for h in sorted(hat):
        if hat[h] <= tol:
            continue
        s = _dyadic_index(hat[h])
        weight[s] = weight.get(s, 0.0) + hat[h]
        by_beta.setdefault(s, []).append(h)
    beta_s = min(weight, key=lambda s: (-weight[s], s))

    by_gamma: Dict[int, List[int]] = {}
    for h in by_beta[beta_s]:
        by_gamma.setdefault(_dyadic_index(max(solution.value(('w', h)), tol)), []).append(h)
    gamma_s = min(by_gamma, key=lambda s: (-len(by_gamma[s]), s))
    return NeighborBucket(j, i, 2.0 ** -beta_s, 2.0 ** -gamma_s, tuple(by_gamma[gamma_s]), mass,
                          len(weight), len(by_gamma), sum(weight.values()))


@dataclass
class BucketTriple:
    """<β, γ, D> と J^D_{β,γ}、各 j の Γ^R_{β,γ}(j), Γ^S_{β,γ}(j)"""
    beta: float
    gamma: float
    D: int
    members: List[int] = field(default_factory=list)
    reds: Dict[int, Tuple[int, ...]] = field(default_factory=dict)
    neighbors: Dict[int, FrozenSet[int]] = field(default_factory=dict)

    @property
    def key(self) -> Tuple[float, float, int]:
        return self.beta, self.gamma, self.D


def build_triples(instance: MmsaInstance, solution: LpSolution, J0: Iterable[int],
                  tol: float = 1e-7) -> Tuple[List[BucketTriple], List[NeighborBucket]]:
    """J0 の全 (j, i) をバケット分けし、空でない三つ組を (β, γ, D) の降順で返す"""
    table: Dict[Tuple[float, float, int], BucketTriple] = {}
    buckets: List[NeighborBucket] = []
    for j in J0:
        grouped: Dict[Tuple[float, float], List[NeighborBucket]] = {}
        for i in instance.children(J_LAYER, j):
            nb = bucket_neighbors(instance, solution, j, i, tol)
            buckets.append(nb)
            grouped.setdefault((nb.beta, nb.gamma), []).append(nb)
        for (beta, gamma), nbs in grouped.items():
            union = frozenset(h for nb in nbs for h in nb.members)
            D = _floor_pow2(len(union))
            triple = table.setdefault((beta, gamma, D), BucketTriple(beta, gamma, D))
            triple.members.append(j)
            triple.reds[j] = tuple(nb.i for nb in nbs)
            triple.neighbors[j] = union
    ordered = [table[key] for key in sorted(table, reverse=True)]
    return ordered, buckets


def triple_count_bound(instance: MmsaInstance) -> float:
    ns, m = instance.layers[3], instance.layers[1]
    return 2.0 * log2c(ns) ** 2 * log2c(ns * ns * m)


# ============================================================
# 丸め
# ============================================================

@dataclass(frozen=True)
class RoundResult:
    j_alg: Tuple[int, ...]
    s_alg: Tuple[int, ...]
    trials: int


@dataclass(frozen=True)
class CaseTwoSelection:
    triple: Tuple[float, float, int]
    d_tilde: int
    s_tilde: Tuple[int, ...]
    h0: int
    j_alg: Tuple[int, ...]
    hat_x: Dict[int, float]


def satisfied_js(instance: MmsaInstance, js: Iterable[int], s_true: Iterable[int]) -> List[int]:
    """全ての赤要素が s_true のどれかで被覆される j"""
    chosen = set(s_true)
    return [j for j in js
            if all(any(h in chosen for h in instance.children(R_LAYER, i))
                   for i in instance.children(J_LAYER, j))]


def covered_blues(instance: MmsaInstance, js: Iterable[int]) -> Set[int]:
    parents = instance.parents[J_LAYER - 1]
    return {ell for j in js for ell in parents[j]}


def _accept(instance: MmsaInstance, j_alg: List[int], s_alg: List[int]) -> bool:
    if not j_alg:
        return False
    if len(satisfied_js(instance, j_alg, s_alg)) != len(j_alg):
        return False
    return bool(covered_blues(instance, j_alg))


def case1_probability(beta: float, ns: int, m: int, n: int) -> float:
    return min(1.0, beta * 12.0 * log2c(ns) * log2c(ns * ns * m) * math.log(max(n, 2)))


def case1_round(instance: MmsaInstance, J0: Iterable[int], J1: Set[int], triples: List[BucketTriple],
                x0: float, rng: np.random.Generator, trial_cap: int = 100) -> RoundResult:
    """
    J0∖J1 の各 j を確率 x0 で取り、各 β について S_β の各 h を
    確率 min{1, β·12 log|S| log(|S|²m) ln n} で取る

    Raises:
        RoundingExhausted: trial_cap 回で被覆条件を満たさない
    """
    k, m, n, ns = instance.layers
    pool = [j for j in J0 if j not in J1]
    betas = sorted({t.beta for t in triples}, reverse=True)
    for trial in range(1, trial_cap + 1):
        j_alg = [j for j, u in zip(pool, rng.random(len(pool))) if u < x0]
        s_alg: Set[int] = set()
        for beta in betas:
            s_beta = sorted({h for t in triples if t.beta == beta
                             for j in j_alg if j in t.neighbors for h in t.neighbors[j]})
            p = case1_probability(beta, ns, m, n)
            s_alg.update(h for h, u in zip(s_beta, rng.random(len(s_beta))) if u < p)
        if _accept(instance, j_alg, sorted(s_alg)):
            return RoundResult(tuple(j_alg), tuple(sorted(s_alg)), trial)
    raise RoundingExhausted(f"case 1 rounding failed {trial_cap} times")


def select_case_two(instance: MmsaInstance, solution: LpSolution,
                    candidates: List[BucketTriple], tol: float = 1e-7) -> CaseTwoSelection:
    """J2（要素数最大の三つ組）、D̃, S̃, h0 と J_ALG を決める"""
    if not candidates:
        raise InvalidParameter("case 2 needs at least one bucket triple")
    best = max(candidates, key=lambda t: len(t.members))
    J2 = best.members
    counts: Dict[int, int] = {}
    for j in J2:
        for h in best.neighbors[j]:
            counts[h] = counts.get(h, 0) + 1
    pair_count: Dict[int, int] = {}
    for h, c in counts.items():
        pair_count[_floor_pow2(c)] = pair_count.get(_floor_pow2(c), 0) + c
    d_tilde = max(pair_count, key=lambda d: (pair_count[d], d))
    s_tilde = tuple(sorted(h for h, c in counts.items() if _floor_pow2(c) == d_tilde))

    def hat_x(j: int, h: int) -> float:
        return solution.value(('P', j, h)) / max(solution.value(('w', h)), tol)

    def mass(h: int) -> float:
        return sum(hat_x(j, h) for j in J2 if h in best.neighbors[j])

    h0 = max(s_tilde, key=lambda h: (mass(h), -h))
    j_alg = tuple(j for j in J2 if h0 in best.neighbors[j])
    return CaseTwoSelection(best.key, d_tilde, s_tilde, h0, j_alg, {j: hat_x(j, h0) for j in j_alg})


def case2_probabilities(instance: MmsaInstance, solution: LpSolution, selection: CaseTwoSelection,
                        x0: float) -> Dict[int, float]:
    """Γ_S(Γ_R(J_ALG)) の各 h の採択確率 min{1, ŵ^(h0)_h·4γ ln n/(x0 β)}"""
    beta, gamma, _ = selection.triple
    n = instance.layers[2]
    h0 = selection.h0
    w0 = max(solution.value(('w', h0)), 1e-12)
    scale = 4.0 * gamma * math.log(max(n, 2)) / (x0 * beta)
    pool = sorted({h for j in selection.j_alg for i in instance.children(J_LAYER, j)
                   for h in instance.children(R_LAYER, i)})
    return {h: min(1.0, solution.value(_cond_w(h0, h)) / w0 * scale) for h in pool}


def case2_round(instance: MmsaInstance, solution: LpSolution, selection: CaseTwoSelection,
                x0: float, rng: np.random.Generator, trial_cap: int = 100) -> RoundResult:
    """h0 で条件付けた重みで S を標本化する（J_ALG は決定的）"""
    probs = case2_probabilities(instance, solution, selection, x0)
    pool = sorted(probs)
    p = np.array([probs[h] for h in pool])
    for trial in range(1, trial_cap + 1):
        s_alg = [h for h, keep in zip(pool, rng.random(len(pool)) < p) if keep]
        if _accept(instance, list(selection.j_alg), s_alg):
            return RoundResult(selection.j_alg, tuple(s_alg), trial)
    raise RoundingExhausted(f"case 2 rounding failed {trial_cap} times")


def direct_cover_step(instance: MmsaInstance) -> RoundResult:
    """B を J で貪欲被覆し、その赤近傍を S で貪欲被覆する"""
    k, m, n, ns = instance.layers
    j_blues = instance.parents[J_LAYER - 1]
    j_pick = greedy_set_cover(range(k), j_blues)
    reds = sorted({i for j in j_pick for i in instance.children(J_LAYER, j)})
    s_pick = greedy_set_cover(reds, instance.parents[S_LAYER - 1])
    return RoundResult(tuple(j_pick), tuple(sorted(s_pick)), 1)


# ============================================================
# 診断値
# ============================================================

def weight_sandwich(instance: MmsaInstance, solution: LpSolution, delta: float) -> Tuple[float, float, float]:
    """(Σz/(2Δ), Σx, 2e ln(2k)Σz/Δ)"""
    k = instance.layers[0]
    z = sum(solution.group('z').values())
    x = sum(solution.group('x').values())
    return z / (2 * delta), x, 2 * math.e * math.log(2 * max(k, 1)) * z / delta


def blue_neighborhood_bound(instance: MmsaInstance, solution: LpSolution,
                            subset: Iterable[int]) -> Tuple[int, float]:
    """(|Γ_B(Ĵ)|, x(Ĵ)/x(J)·|B|/(4e ln(2k) log k log m))"""
    k, m = instance.layers[0], instance.layers[1]
    x = solution.group('x')
    subset = list(subset)
    total = sum(x.values())
    share = sum(x.get(j, 0.0) for j in subset) / total if total > 0 else 0.0
    bound = share * k / (4 * math.e * math.log(2 * max(k, 1)) * log2c(k) * log2c(m))
    return len(covered_blues(instance, subset)), bound


def fractional_coverage_count(instance: MmsaInstance, solution: LpSolution,
                              subset: Iterable[int]) -> Tuple[int, float]:
    """Σ_{j∈Γ_Ĵ(ℓ)} e_(ℓ,j) ≥ share/(4 log k log m) を満たす ℓ の数と、その下界 ε|B|"""
    k, m = instance.layers[0], instance.layers[1]
    x = solution.group('x')
    subset = set(subset)
    total = sum(x.values())
    share = sum(x.get(j, 0.0) for j in subset) / total if total > 0 else 0.0
    threshold = share / (4 * log2c(k) * log2c(m))
    count = 0
    for ell in range(k):
        mass = sum(solution.value(('e', ell, j)) for j in instance.edges[0][ell] if j in subset)
        if mass >= threshold - 1e-9:
            count += 1
    eps = share / (8 * math.e * math.log(2 * max(k, 1)) * log2c(k) * log2c(m))
    return count, eps * k


def neighbor_bucket_bound(instance: MmsaInstance, nb: NeighborBucket) -> float:
    """|Γ̂_j(i)| の漸近的な下界 1/(6 β log|S| log(|S|²m))（記録のみ）"""
    ns, m = instance.layers[3], instance.layers[1]
    return 1.0 / (6 * nb.beta * log2c(ns) * log2c(ns * ns * m))


def neighbor_bucket_floor(nb: NeighborBucket) -> float:
    """
    |Γ̂_j(i)| の有限サイズでの下界 Σŵ/(2β · β バケット数 · γ バケット数)

    最重 β バケットの重みは Σŵ/(β バケット数) 以上、その要素は 2β 未満、
    γ は要素数最大の部分バケットなので常に成り立つ。
    """
    return nb.bucketed_mass / (2 * nb.beta * nb.beta_buckets * nb.gamma_buckets)


def j0_bucket_count(x_values: Dict[int, float], tol: float = 1e-7, floor: float = 0.0) -> Tuple[int, float]:
    """bucket_J0 と同じ規則で数えた (空でないバケット数, 対象となる x の総和)"""
    kept = [v for v in x_values.values() if v > tol and v >= floor]
    return len({_dyadic_index(v) for v in kept}), sum(kept)


def case_two_range(selection: CaseTwoSelection, x0: float) -> Tuple[float, float]:
    """J_ALG の x̂^(h0) が入るべき区間 [x0β/(2γ), 4x0β/γ]"""
    beta, gamma, _ = selection.triple
    return x0 * beta / (2 * gamma), 4 * x0 * beta / gamma


def diagnostic_violations(diagnostics: Dict, rel: float = 1e-6) -> List[str]:
    """lp_step の診断値のうち、成り立つべき不等式が破れている項目名"""
    def ge(a: float, b: float) -> bool:
        return a >= b - rel * max(1.0, abs(b))

    out = []
    low, mid, high = diagnostics['weight_sandwich']
    if not (ge(mid, low) and ge(high, mid)):
        out.append('weight_sandwich')
    if not ge(diagnostics['x0'], diagnostics['x_floor'] / 2):
        out.append('x0')
    if not ge(diagnostics['x_J0'] * diagnostics['x_buckets'], diagnostics['x_kept']):
        out.append('x_J0')
    if not ge(diagnostics['neighbor_floor_slack'], 0.0):
        out.append('neighbor_floor_slack')
    for key in ('blue_neighborhood_J0', 'blue_neighborhood_alg', 'fractional_coverage_J0'):
        count, bound = diagnostics[key]
        if not ge(count, bound):
            out.append(key)
    if 'case_two_range' in diagnostics:
        lo, hi, least, most = diagnostics['case_two_range']
        if not (ge(least, lo) and ge(hi, most)):
            out.append('case_two_range')
    return out


# ============================================================
# ドライバ
# ============================================================

@dataclass
class Mmsa4Step:
    case: str
    opt_guess: int
    delta: int
    j_alg: Tuple[int, ...]
    s_alg: Tuple[int, ...]
    new_blue: int
    trials: int = 1
    triple: Optional[Tuple[float, float, int]] = None
    h0: Optional[int] = None
    diagnostics: Dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return len(self.s_alg) / self.new_blue if self.new_blue else math.inf


@dataclass
class Mmsa4Report:
    steps: List[Mmsa4Step] = field(default_factory=list)
    fallbacks: int = 0
    factor_N: float = 0.0
    factor_m: float = 0.0
    accept_constant: float = 16.0
    cost: Optional[int] = None

    def to_dict(self) -> Dict:
        data = asdict(self)
        for step, raw in zip(self.steps, data['steps']):
            raw['ratio'] = step.ratio
        return data


class Mmsa4Solver:
    """
    MMSA4 の近似ソルバー

    残余回路に対して進捗ステップを繰り返す。各ステップでは OPT 推定値を倍々に、
    Δ を二進で走査し、最小の OPT 推定値で成功した候補のうち比 |S_ALG|/|Γ_B(J_ALG)| が
    最小のものを採る。
    """

    def __init__(self, instance: MmsaInstance, params: Optional[Mmsa4Params] = None):
        validate(instance, strict=False)
        if instance.t != 4:
            raise StructuralError(f"expected a depth-4 circuit, got depth {instance.t}")
        self.instance = instance
        self.params = params or Mmsa4Params()
        self.report = Mmsa4Report(accept_constant=self.params.accept_constant)

    def solve(self) -> MmsaSolution:
        inst = self.instance
        self.report.factor_N = mmsa4_factor(inst.N, self.params.accept_constant)
        self.report.factor_m = self.params.accept_constant * max(inst.layers[1], 1) ** (1 / 3)
        chosen: Set[int] = set()
        step_no = 0
        while True:
            circuit = simplify_circuit(inst, true_vertices={S_LAYER: chosen})
            if circuit.status == STATUS_SATISFIED:
                break
            if circuit.status == STATUS_UNSATISFIABLE:
                raise InfeasibleInstance("no assignment satisfies the circuit")
            step = self.progress_step(circuit.instance, step_no)
            picked = circuit.to_original(S_LAYER, step.s_alg)
            chosen.update(picked)
            self.report.steps.append(step)
            logger.info(f"* [STEP {step_no + 1}] {step.case}: +{len(picked)} vars, "
                        f"{step.new_blue} blue (OPT guess {step.opt_guess}, Δ={step.delta})")
            step_no += 1
        solution = mmsa_solution(inst, chosen)
        self.report.cost = solution.cost
        return solution

    def progress_step(self, residual: MmsaInstance, step_no: int) -> Mmsa4Step:
        """
        OPT 推定値 g = 1, 2, 4, ... と Δ ≤ k/m^ε の組で LP ステップを試し、
        成功する最小の g の候補から比最小のものを返す。g ≥ |S| まで全て失敗したときだけ
        直接被覆ステップを使う（k/m^ε を超える Δ が残っていれば 'direct'、なければ 'fallback'）。
        """
        k, m, n, ns = residual.layers
        limit = k / max(m, 1) ** self.params.epsilon
        deltas = [d for d in _dyadic_deltas(k) if d <= limit]
        g = 1
        while True:
            found: List[Mmsa4Step] = []
            for delta in deltas:
                rng = np.random.default_rng([self.params.seed, step_no, g, delta])
                try:
                    step = self.lp_step(residual, g, delta, rng)
                except (InfeasibleInstance, RoundingExhausted, LiftingDegenerate) as e:
                    logger.debug(f"OPT={g}, Δ={delta}: {e}")
                    continue
                except NumericalFailure as e:
                    logger.warning(f"OPT={g}, Δ={delta}: LP solve failed ({e})")
                    continue
                if step is not None:
                    found.append(step)
            if found:
                return min(found, key=lambda s: (s.ratio, s.delta))
            if g >= ns:
                break
            g *= 2
        if len(deltas) < len(_dyadic_deltas(k)):
            logger.info(f"no LP guess made progress; direct cover for Δ > {limit:.3f}")
            return self._direct(residual, g, _dyadic_deltas(k)[len(deltas)], 'direct')
        logger.warning("no (OPT, Δ) guess made progress; falling back to direct cover")
        self.report.fallbacks += 1
        return self._direct(residual, g, 0, 'fallback')

    def _direct(self, residual: MmsaInstance, g: int, delta: int, case: str) -> Mmsa4Step:
        result = direct_cover_step(residual)
        return Mmsa4Step(case, g, delta, result.j_alg, result.s_alg,
                         len(covered_blues(residual, result.j_alg)))

    def lp_step(self, residual: MmsaInstance, g: int, delta: int,
                rng: np.random.Generator) -> Optional[Mmsa4Step]:
        """一つの (OPT, Δ) 推定での LP + 丸め。LP が実行不能なら None"""
        tol = self.params.tolerance
        pre = preprocess_mmsa4(residual, g, delta, self.params.epsilon)
        inst = pre.instance
        model = build_mmsa4_lp(inst, delta, g)
        solution = solve(model, backend=self.params.lp_backend)
        if not solution.is_optimal:
            return None
        x = solution.group('x')
        x_floor = 1.0 / max(inst.layers[1], 1)
        J0, x0 = bucket_J0(x, tol, x_floor)
        if not J0:
            return None
        triples, neighbor_buckets = build_triples(inst, solution, J0, tol)
        A = inst.layers[1] ** (1 / 3)
        xJ0 = sum(x[j] for j in J0)
        p1 = [t for t in triples if t.beta / t.gamma > A and t.beta * t.D > A * g / xJ0]
        J1 = {j for t in p1 for j in t.members}

        x_buckets, x_kept = j0_bucket_count(x, tol, x_floor)
        diagnostics = {
            'weight_sandwich': list(weight_sandwich(inst, solution, delta)),
            'x_J': sum(x.values()), 'x_J0': xJ0, 'x0': x0, 'x_floor': x_floor,
            'x_buckets': x_buckets, 'x_kept': x_kept,
            'triples': len(triples), 'triple_bound': triple_count_bound(inst),
            'neighbor_slack': min((len(nb.members) - neighbor_bucket_bound(inst, nb)
                                   for nb in neighbor_buckets), default=0.0),
            'neighbor_floor_slack': min((len(nb.members) - neighbor_bucket_floor(nb)
                                         for nb in neighbor_buckets), default=0.0),
            'blue_neighborhood_J0': list(blue_neighborhood_bound(inst, solution, J0)),
            'fractional_coverage_J0': list(fractional_coverage_count(inst, solution, J0)),
        }
        case = self.params.force_case or (1 if len(J1) < len(J0) / 2 else 2)
        if case == 1:
            result = case1_round(inst, J0, J1, triples, x0, rng, self.params.trial_cap)
            triple, h0 = None, None
        else:
            selection = select_case_two(inst, solution, p1 or triples, tol)
            lo, hi = case_two_range(selection, x0)
            diagnostics['case_two_range'] = [lo, hi, min(selection.hat_x.values()),
                                             max(selection.hat_x.values())]
            result = case2_round(inst, solution, selection, x0, rng, self.params.trial_cap)
            triple, h0 = selection.triple, pre.circuit.to_original(S_LAYER, [selection.h0])[0]

        diagnostics['blue_neighborhood_alg'] = list(blue_neighborhood_bound(inst, solution, result.j_alg))
        violated = diagnostic_violations(diagnostics)
        if violated:
            logger.warning(f"OPT={g}, Δ={delta}: LP diagnostics out of range: {violated}")
        diagnostics['violations'] = violated
        j_alg = tuple(pre.circuit.to_original(J_LAYER, result.j_alg))
        s_alg = tuple(pre.circuit.to_original(S_LAYER, result.s_alg))
        new_blue = len(covered_blues(inst, result.j_alg))
        return Mmsa4Step(f"case{case}", g, delta, j_alg, s_alg, new_blue, result.trials,
                         triple, h0, diagnostics)


def solve_mmsa4(instance: MmsaInstance, params: Optional[Mmsa4Params] = None) -> MmsaSolution:
    """深さ4の MMSA を近似的に解く"""
    return Mmsa4Solver(instance, params).solve()
