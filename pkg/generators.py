# -*- coding: utf-8 -*-
"""
rbsc-kit - インスタンス生成
乱数 / 埋め込み解つき RBSC、Min k-Union、ランダム回路、G(n,p) を貼り合わせた積分ギャップ回路、
固定シードの標準インスタンス
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import networkx as nx
import numpy as np

from errors import DegenerateGraph, InvalidParameter
from instance_model import Instance, MinKUnionInstance, MmsaInstance, RbscInstance, validate

logger = logging.getLogger(__name__)

# 退化したグラフを引いたときにシードを進める回数の上限
GAP_MAX_RESEEDS = 100


def _sorted_ids(values) -> Tuple[int, ...]:
    return tuple(sorted(int(v) for v in values))


def _check(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidParameter(message)


# ============================================================
# RBSC
# ============================================================

def gen_random_rbsc(m: int, n: int, k: int, set_size_blue: int, set_size_red: int,
                    seed: int) -> RbscInstance:
    """
    一様ランダムな RBSC

    各集合は青 set_size_blue 個、赤 set_size_red 個を非復元で引く。
    どの集合にも入らなかった青はランダムな集合に追加する。
    """
    _check(m >= 1, f"m must be positive, got {m}")
    _check(n >= 0 and k >= 0, "element counts must be non-negative")
    _check(0 <= set_size_blue <= k, f"set_size_blue={set_size_blue} must lie in [0, {k}]")
    _check(0 <= set_size_red <= n, f"set_size_red={set_size_red} must lie in [0, {n}]")
    rng = np.random.default_rng(seed)
    blue = [set(rng.choice(k, set_size_blue, replace=False).tolist()) for _ in range(m)]
    red = [_sorted_ids(rng.choice(n, set_size_red, replace=False)) for _ in range(m)]
    covered = set().union(*blue)
    for b in range(k):
        if b not in covered:
            blue[int(rng.integers(m))].add(b)
    instance = RbscInstance(k, n, tuple(_sorted_ids(b) for b in blue), tuple(red))
    validate(instance)
    return instance


def gen_planted_rbsc(m: int, n: int, k: int, opt_target: int,
                     seed: int) -> Tuple[RbscInstance, Tuple[int, ...]]:
    """
    赤をちょうど opt_target 個使う被覆を埋め込んだ RBSC

    埋め込み族は m/4 個（最低1）の集合で青全体を分担し、赤はあらかじめ選んだ opt_target 個に限る。
    残りの集合（おとり）は opt_target より多くの赤に触れる。

    Returns:
        (インスタンス, 埋め込み解の集合 id)
    """
    _check(m >= 1, f"m must be positive, got {m}")
    _check(k >= 0, "k must be non-negative")
    _check(0 <= opt_target <= n, f"opt_target={opt_target} must lie in [0, {n}]")
    rng = np.random.default_rng(seed)
    q = min(m, max(1, m // 4))
    planted_reds = rng.choice(n, opt_target, replace=False).tolist()

    blue: List[Tuple[int, ...]] = []
    red: List[Tuple[int, ...]] = []
    perm = rng.permutation(k).tolist()
    red_groups: List[set] = [set() for _ in range(q)]
    for r in planted_reds:
        red_groups[int(rng.integers(q))].add(r)
    for j in range(q):
        blue.append(_sorted_ids(perm[j::q]))
        extra = rng.choice(planted_reds, int(rng.integers(0, opt_target + 1)), replace=False).tolist() \
            if opt_target else []
        red.append(_sorted_ids(red_groups[j] | set(extra)))

    decoy_reds = min(n, opt_target + 1)
    for _ in range(m - q):
        nb = int(rng.integers(1, k + 1)) if k else 0
        nr = min(n, decoy_reds + int(rng.integers(0, 3)))
        blue.append(_sorted_ids(rng.choice(k, nb, replace=False)))
        red.append(_sorted_ids(rng.choice(n, nr, replace=False)))

    order = rng.permutation(m).tolist()
    position = {old: new for new, old in enumerate(order)}
    instance = RbscInstance(k, n, tuple(blue[old] for old in order), tuple(red[old] for old in order))
    validate(instance)
    planted = tuple(sorted(position[j] for j in range(q)))
    return instance, planted


# ============================================================
# Min k-Union / 回路
# ============================================================

def gen_random_mku(n: int, m: int, k: int, set_size: int, seed: int) -> MinKUnionInstance:
    """各集合が台集合から set_size 個を非復元で引く Min k-Union"""
    _check(1 <= k <= m, f"k={k} must lie in [1, m={m}]")
    _check(0 <= set_size <= n, f"set_size={set_size} must lie in [0, {n}]")
    rng = np.random.default_rng(seed)
    sets = tuple(_sorted_ids(rng.choice(n, set_size, replace=False)) for _ in range(m))
    return MinKUnionInstance(n, k, sets)


def gen_random_mmsa(layer_sizes: Sequence[int], max_degree: int, seed: int) -> MmsaInstance:
    """
    ランダムな交互回路（各ゲートは次の層から 1..max_degree 個の子を引く）

    全ての変数を真にすれば必ず充足する。
    """
    layers = tuple(int(s) for s in layer_sizes)
    _check(len(layers) >= 2, "a circuit needs at least two layers")
    _check(all(s >= 1 for s in layers), "layer sizes must be positive")
    _check(max_degree >= 1, f"max_degree must be positive, got {max_degree}")
    rng = np.random.default_rng(seed)
    edges = []
    for d in range(len(layers) - 1):
        below = layers[d + 1]
        top = min(max_degree, below)
        edges.append(tuple(
            _sorted_ids(rng.choice(below, int(rng.integers(1, top + 1)), replace=False))
            for _ in range(layers[d])
        ))
    instance = MmsaInstance(len(layers), layers, tuple(edges))
    validate(instance)
    return instance


# ============================================================
# 積分ギャップ回路
# ============================================================

@dataclass(frozen=True)
class GapParams:
    """G(n,p) を (t-1)/2 枚貼り合わせる回路のパラメータ"""
    n: int
    eps: float
    t: int
    seed: int = 0

    @property
    def beta(self) -> float:
        return self.eps / (2.0 - self.eps)

    @property
    def p(self) -> float:
        return self.n ** (-(2.0 - 2.0 * self.eps) / (2.0 - self.eps))

    @property
    def top_size(self) -> int:
        """|U_1| = round(n^{(2-2ε)/(2-ε)})"""
        return max(1, round(self.n ** ((2.0 - 2.0 * self.eps) / (2.0 - self.eps))))

    @property
    def graph_count(self) -> int:
        return (self.t - 1) // 2

    def expected_gates(self) -> Tuple[float, float]:
        """AND ゲート総数（全グラフの辺数）の平均と標準偏差"""
        pairs = self.n * (self.n - 1) / 2
        mean = self.graph_count * pairs * self.p
        return mean, math.sqrt(self.graph_count * pairs * self.p * (1.0 - self.p))

    def check(self) -> None:
        _check(self.t >= 3 and self.t % 2 == 1, f"t must be odd and >= 3, got {self.t}")
        _check(0.0 < self.eps < 1.0, f"eps must lie in (0, 1), got {self.eps}")
        _check(self.n >= 2, f"n must be at least 2, got {self.n}")


def build_gap_instance(params: GapParams, seed: int) -> MmsaInstance:
    """
    一つのシードで積分ギャップ回路を組み立てる

    層 2i は G_i の辺（両端点の2つが子の AND）、層 2i+1 は G_i の頂点。
    層 2i-1 の各頂点は層 2i を巡回順に分けたクラスを子に持つ OR。

    Raises:
        DegenerateGraph: ある OR ゲートのクラスが空
    """
    rng = np.random.default_rng(seed)
    layers: List[int] = [params.top_size]
    edges: List[Tuple[Tuple[int, ...], ...]] = []
    for i in range(1, params.graph_count + 1):
        graph = nx.gnp_random_graph(params.n, params.p, seed=int(rng.integers(2 ** 31)))
        graph_edges = sorted(tuple(sorted(e)) for e in graph.edges())
        parents = layers[-1]
        if len(graph_edges) < parents:
            raise DegenerateGraph(f"G_{i} has {len(graph_edges)} edges for {parents} OR gates")
        edges.append(tuple(tuple(range(c, len(graph_edges), parents)) for c in range(parents)))
        edges.append(tuple(graph_edges))
        layers.extend([len(graph_edges), params.n])
    instance = MmsaInstance(params.t, tuple(layers), tuple(edges))
    validate(instance, strict=False)
    return instance


def gen_gap_instance(params: GapParams, max_reseeds: int = GAP_MAX_RESEEDS) -> MmsaInstance:
    """
    積分ギャップ回路を生成する（退化したらシードを1つ進めて引き直す）

    Args:
        params: 生成パラメータ
        max_reseeds: 引き直しの上限回数（config の generators.gap_max_reseeds）

    Raises:
        InvalidParameter: t が偶数など
        DegenerateGraph: 上限回数まで引き直しても退化した
    """
    params.check()
    for attempt in range(max(1, max_reseeds)):
        try:
            instance = build_gap_instance(params, params.seed + attempt)
        except DegenerateGraph as e:
            logger.warning(f"seed {params.seed + attempt}: {e}; regenerating with the next seed")
            continue
        if attempt:
            logger.info(f"gap instance generated with seed {params.seed + attempt}")
        return instance
    raise DegenerateGraph(f"no non-degenerate gap instance within {max_reseeds} seeds "
                          f"from {params.seed}")


# ============================================================
# 標準インスタンス
# ============================================================

CANONICAL_NAMES = ('rbsc-small-1', 'mku-small-1', 'mmsa4-small-1', 'mmsa6-small-1')


def canonical_instance(name: str) -> Instance:
    """固定シードの標準インスタンス"""
    if name == 'rbsc-small-1':
        return gen_random_rbsc(8, 10, 6, 2, 3, 42)
    if name == 'mku-small-1':
        return gen_random_mku(12, 8, 3, 3, 42)
    if name == 'mmsa4-small-1':
        return gen_random_mmsa([4, 6, 6, 8], 3, 42)
    if name == 'mmsa6-small-1':
        return gen_random_mmsa([3, 4, 5, 5, 6, 8], 2, 42)
    raise InvalidParameter(f"unknown canonical instance {name!r} (known: {', '.join(CANONICAL_NAMES)})")
