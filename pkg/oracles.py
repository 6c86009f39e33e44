# -*- coding: utf-8 -*-
"""
rbsc-kit - 厳密解オラクル
小さなインスタンス向けの総当たり（ビットマスク）。RBSC / 部分RBSC / Min k-Union / MMSA
"""

import itertools
import logging
import math
from typing import Dict, List, Optional, Tuple

from errors import InfeasibleInstance, InvalidParameter, SizeLimit
from instance_model import MinKUnionInstance, MmsaInstance, RbscInstance, validate

logger = logging.getLogger(__name__)

DEFAULT_CAPS = {'rbsc_sets': 24, 'mmsa_variables': 24, 'mku_combinations': 1_000_000}


def oracle_caps(config: Optional[Dict] = None) -> Dict[str, int]:
    """config.json の oracles セクションを既定値に重ねた上限"""
    caps = dict(DEFAULT_CAPS)
    caps.update((config or {}).get('oracles', {}))
    return caps


def _mask(ids) -> int:
    mask = 0
    for e in ids:
        mask |= 1 << e
    return mask


def _popcount(mask: int) -> int:
    return bin(mask).count('1')


def bruteforce_partial_rbsc(instance: RbscInstance, k_hat: int,
                            max_sets: Optional[int] = None) -> Tuple[int, Tuple[int, ...]]:
    """
    部分RBSC の厳密解（k_hat 個以上の青を覆う族で赤の数が最小）

    集合を添字順に採る/採らないで分岐し、赤の数が現在の最良以上になった枝と
    残りの集合で必要な青数に届かない枝を刈る。

    Returns:
        (最適コスト, 最適な族)

    Raises:
        SizeLimit: 集合数が上限を超える
        InfeasibleInstance: k_hat 個を覆う族がない
    """
    validate(instance)
    cap = DEFAULT_CAPS['rbsc_sets'] if max_sets is None else max_sets
    if instance.m > cap:
        raise SizeLimit(f"exhaustive RBSC search is capped at {cap} sets, got {instance.m}")
    if k_hat < 0 or k_hat > instance.k:
        raise InvalidParameter(f"k_hat={k_hat} must lie in [0, {instance.k}]")
    m = instance.m
    blue = [_mask(b) for b in instance.blue_adj]
    red = [_mask(r) for r in instance.red_adj]
    suffix = [0] * (m + 1)
    for j in range(m - 1, -1, -1):
        suffix[j] = suffix[j + 1] | blue[j]

    best_cost = math.inf
    best: Tuple[int, ...] = ()
    picked: List[int] = []

    def search(j: int, bmask: int, rmask: int) -> None:
        nonlocal best_cost, best
        cost = _popcount(rmask)
        if cost >= best_cost:
            return
        if _popcount(bmask) >= k_hat:
            best_cost, best = cost, tuple(picked)
            return
        if j == m or _popcount(bmask | suffix[j]) < k_hat:
            return
        if blue[j] & ~bmask:
            picked.append(j)
            search(j + 1, bmask | blue[j], rmask | red[j])
            picked.pop()
        search(j + 1, bmask, rmask)

    search(0, 0, 0)
    if best_cost == math.inf:
        raise InfeasibleInstance(f"no family covers {k_hat} blue elements")
    return int(best_cost), best


def bruteforce_rbsc(instance: RbscInstance, max_sets: Optional[int] = None) -> Tuple[int, Tuple[int, ...]]:
    """RBSC の厳密解（全ての青を被覆）"""
    return bruteforce_partial_rbsc(instance, instance.k, max_sets)


def bruteforce_mku(instance: MinKUnionInstance,
                   max_combinations: Optional[int] = None) -> Tuple[int, Tuple[int, ...]]:
    """
    Min k-Union の厳密解（k 個の組を全列挙、同じコストなら辞書順で最初）

    Raises:
        SizeLimit: C(m, k) が上限を超える
    """
    validate(instance)
    cap = DEFAULT_CAPS['mku_combinations'] if max_combinations is None else max_combinations
    total = math.comb(instance.m, instance.k)
    if total > cap:
        raise SizeLimit(f"C({instance.m}, {instance.k}) = {total} exceeds the cap {cap}")
    masks = [_mask(s) for s in instance.sets]
    best_cost, best = math.inf, ()
    for combo in itertools.combinations(range(instance.m), instance.k):
        union = 0
        for i in combo:
            union |= masks[i]
        cost = _popcount(union)
        if cost < best_cost:
            best_cost, best = cost, combo
    return int(best_cost), tuple(best)


def bruteforce_mmsa(instance: MmsaInstance,
                    max_variables: Optional[int] = None) -> Tuple[int, Tuple[int, ...]]:
    """
    MMSA の厳密解（真にする変数の数を 0 から増やして最初に充足した割り当て）

    Raises:
        SizeLimit: 変数の数が上限を超える
        InfeasibleInstance: 全変数を真にしても充足しない
    """
    validate(instance, strict=False)
    cap = DEFAULT_CAPS['mmsa_variables'] if max_variables is None else max_variables
    nvars = instance.variable_count
    if nvars > cap:
        raise SizeLimit(f"exhaustive MMSA search is capped at {cap} variables, got {nvars}")
    child_masks = [[_mask(ch) for ch in adj] for adj in instance.edges]
    kinds = [instance.gate_kind(d) for d in range(1, instance.t)]
    top = (1 << instance.layers[0]) - 1

    def satisfied(assignment: int) -> bool:
        values = assignment
        for d in range(instance.t - 1, 0, -1):
            row = 0
            if kinds[d - 1] == 'OR':
                for v, cm in enumerate(child_masks[d - 1]):
                    if values & cm:
                        row |= 1 << v
            else:
                for v, cm in enumerate(child_masks[d - 1]):
                    if values & cm == cm:
                        row |= 1 << v
            values = row
        return values == top

    for size in range(nvars + 1):
        for combo in itertools.combinations(range(nvars), size):
            if satisfied(_mask(combo)):
                logger.debug(f"MMSA optimum {size} found")
                return size, combo
    raise InfeasibleInstance("no assignment satisfies the circuit")
