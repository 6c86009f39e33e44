# -*- coding: utf-8 -*-
"""
rbsc-kit - 集合被覆ユーティリティ
分数集合被覆値（LP緩和）と貪欲集合被覆
"""

import logging
import math
import threading
from typing import FrozenSet, Iterable, List, Sequence, Tuple

from cachetools import cached, LRUCache

from errors import Uncoverable
from lp_engine import LpModel, solve

logger = logging.getLogger(__name__)

# 分数被覆値のキャッシュ（MMSA前処理で同じ近傍を何度も評価する）
_fractional_cache = LRUCache(maxsize=4096)
_fractional_lock = threading.Lock()

CoverKey = Tuple[Tuple[int, ...], Tuple[Tuple[int, ...], ...]]


def _cover_key(universe: Iterable[int], sets: Sequence[Iterable[int]]) -> CoverKey:
    """被覆問題の正準キー（台集合に制限し、空集合と重複を除いた族）"""
    u = frozenset(universe)
    restricted = {tuple(sorted(u.intersection(s))) for s in sets}
    restricted.discard(())
    return tuple(sorted(u)), tuple(sorted(restricted))


@cached(cache=_fractional_cache, lock=_fractional_lock)
def _fractional_value(key: CoverKey) -> float:
    universe, family = key
    if not universe:
        return 0.0
    covered = {e for s in family for e in s}
    if len(covered) < len(universe):
        return float('inf')
    model = LpModel('fractional_cover', sense='min')
    for idx in range(len(family)):
        model.add_variable(('x', idx), 0.0, 1.0)
    for e in universe:
        model.add_constraint({('x', idx): 1.0 for idx, s in enumerate(family) if e in s}, '>=', 1.0)
    model.set_objective({('x', idx): 1.0 for idx in range(len(family))})
    result = solve(model)
    return float(result.objective)


def fractional_set_cover_value(universe: Iterable[int], sets: Sequence[Iterable[int]]) -> float:
    """
    分数集合被覆の最適値

    Args:
        universe: 被覆すべき要素
        sets: 集合族

    Returns:
        LP緩和の最適値（被覆不能なら +inf、空の台集合なら 0）
    """
    return _fractional_value(_cover_key(universe, sets))


def greedy_set_cover(universe: Iterable[int], sets: Sequence[Iterable[int]]) -> List[int]:
    """
    貪欲集合被覆（未被覆要素を最も多く含む集合から、同数なら添字の小さい方）

    Returns:
        選んだ集合の添字（選択順）

    Raises:
        Uncoverable: 族の和集合が台集合を覆わない
    """
    remaining = set(universe)
    family: List[FrozenSet[int]] = [frozenset(s) for s in sets]
    missing = remaining - set().union(*family) if family else remaining
    if missing:
        raise Uncoverable(f"{len(missing)} element(s) belong to no set, e.g. {min(missing)}")
    chosen: List[int] = []
    while remaining:
        best, best_gain = -1, 0
        for idx, s in enumerate(family):
            gain = len(remaining & s)
            if gain > best_gain:
                best, best_gain = idx, gain
        chosen.append(best)
        remaining -= family[best]
    logger.debug(f"greedy set cover: {len(chosen)} sets")
    return chosen


def checked_greedy_cover(universe: Iterable[int], sets: Sequence[Iterable[int]]) -> Tuple[List[int], float]:
    """
    貪欲被覆と、その大きさの上界 (1 + ln N)·分数被覆値（N = 台集合の大きさ）

    上界を超えた場合は警告を出す。
    """
    universe = set(universe)
    chosen = greedy_set_cover(universe, sets)
    bound = (1.0 + math.log(max(len(universe), 1))) * fractional_set_cover_value(universe, sets)
    if len(chosen) > bound + 1e-6:
        logger.warning(f"greedy cover uses {len(chosen)} sets, above (1 + ln N)·LP = {bound:.3f}")
    return chosen, bound
