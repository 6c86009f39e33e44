# -*- coding: utf-8 -*-
"""
rbsc-kit - インスタンスモデル
Red-Blue Set Cover / MMSA回路 / Min k-Union のデータ型、検証、回路評価、JSON入出力
"""

import hashlib
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import orjson

from errors import InvalidParameter, ParseError, StructuralError

logger = logging.getLogger(__name__)

AdjList = Tuple[Tuple[int, ...], ...]

STATUS_OPEN = 'open'
STATUS_SATISFIED = 'satisfied'
STATUS_UNSATISFIABLE = 'unsatisfiable'


def _reverse(adj: Sequence[Sequence[int]], size: int) -> AdjList:
    """隣接リストの逆向き（要素 -> 集合）を作る"""
    rev: List[List[int]] = [[] for _ in range(size)]
    for j, ids in enumerate(adj):
        for e in ids:
            rev[e].append(j)
    return tuple(tuple(r) for r in rev)


@dataclass(frozen=True)
class RbscInstance:
    """
    三部グラフ (B, J, R, E)

    k: 青要素数 |B|, n: 赤要素数 |R|, blue_adj[j] / red_adj[j]: 集合 j の Γ_B(j), Γ_R(j)
    """
    k: int
    n: int
    blue_adj: AdjList
    red_adj: AdjList

    @property
    def m(self) -> int:
        return len(self.blue_adj)

    @cached_property
    def blue_to_sets(self) -> AdjList:
        """青要素 ℓ ごとの Γ_J(ℓ)"""
        return _reverse(self.blue_adj, self.k)

    @cached_property
    def red_to_sets(self) -> AdjList:
        """赤要素 i ごとの Γ_J(i)"""
        return _reverse(self.red_adj, self.n)


@dataclass(frozen=True)
class MmsaInstance:
    """
    深さ t の交互 AND/OR 単調回路

    根（AND）は暗黙で、その子は層1の全頂点。layers[d-1] は層 d の頂点数、
    層 t が変数。層 d は奇数なら OR、偶数なら AND。
    edges[d-1][v] は層 d の頂点 v の子（層 d+1 の id）。
    """
    t: int
    layers: Tuple[int, ...]
    edges: Tuple[AdjList, ...]

    @property
    def N(self) -> int:
        return 1 + sum(self.layers)

    @property
    def variable_count(self) -> int:
        return self.layers[-1]

    def gate_kind(self, layer: int) -> str:
        if layer == self.t:
            return 'VAR'
        return 'OR' if layer % 2 == 1 else 'AND'

    def children(self, layer: int, v: int) -> Tuple[int, ...]:
        return self.edges[layer - 1][v]

    @cached_property
    def parents(self) -> Tuple[AdjList, ...]:
        """parents[d-1][v]: 層 d の頂点 v の親（層 d-1 の id）。層1は空"""
        result = [tuple(() for _ in range(self.layers[0]))]
        for d in range(self.t - 1):
            result.append(_reverse(self.edges[d], self.layers[d + 1]))
        return tuple(result)


@dataclass(frozen=True)
class MinKUnionInstance:
    """台集合サイズ n、集合族 sets、選ぶ個数 k"""
    n: int
    k: int
    sets: AdjList

    @property
    def m(self) -> int:
        return len(self.sets)


Instance = Union[RbscInstance, MmsaInstance, MinKUnionInstance]


@dataclass(frozen=True)
class RbscSolution:
    """選択集合（選択順）と被覆された赤・青要素"""
    chosen_sets: Tuple[int, ...]
    covered_red: FrozenSet[int]
    covered_blue: FrozenSet[int]
    cost: int


@dataclass(frozen=True)
class MmsaSolution:
    true_variables: Tuple[int, ...]
    cost: int


@dataclass(frozen=True)
class SimplifiedCircuit:
    """
    simplify_circuit の結果

    status が open のときのみ instance を持つ。id_maps[d-1][new] = 元の層 d の id
    """
    status: str
    instance: Optional[MmsaInstance]
    id_maps: Tuple[Tuple[int, ...], ...]

    def to_original(self, layer: int, ids: Iterable[int]) -> List[int]:
        mapping = self.id_maps[layer - 1]
        return [mapping[v] for v in ids]


@dataclass(frozen=True)
class InstanceFile:
    """read_instance の結果（normalized: 読み込み時にソート・重複除去を行ったか）"""
    instance: Instance
    normalized: bool


# ============================================================
# 検証
# ============================================================

def _check_ids(ids: Sequence[int], bound: int, what: str) -> None:
    prev = -1
    for e in ids:
        if not isinstance(e, int) or isinstance(e, bool):
            raise StructuralError(f"{what}: id {e!r} is not an integer")
        if e < 0 or e >= bound:
            raise StructuralError(f"{what}: id {e} out of range [0, {bound})")
        if e <= prev:
            raise StructuralError(f"{what}: adjacency not sorted/duplicate-free at id {e}")
        prev = e


def validate(instance: Instance, strict: bool = True) -> None:
    """
    型不変条件の検証

    Args:
        instance: 検証対象
        strict: MMSA で子を持たないゲートを拒否するか

    Raises:
        StructuralError: 最初に見つかった違反
    """
    if isinstance(instance, RbscInstance):
        _validate_rbsc(instance)
    elif isinstance(instance, MmsaInstance):
        _validate_mmsa(instance, strict)
    elif isinstance(instance, MinKUnionInstance):
        _validate_mku(instance)
    else:
        raise StructuralError(f"unknown instance type {type(instance).__name__}")


def _validate_rbsc(inst: RbscInstance) -> None:
    if inst.k < 0:
        raise StructuralError("blue_count k must be non-negative")
    if inst.n < 0:
        raise StructuralError("red_count n must be non-negative")
    if inst.m < 1:
        raise StructuralError("set_count m must be positive")
    if len(inst.red_adj) != inst.m:
        raise StructuralError("blue_adj and red_adj differ in length")
    for j in range(inst.m):
        _check_ids(inst.blue_adj[j], inst.k, f"set {j} blue")
        _check_ids(inst.red_adj[j], inst.n, f"set {j} red")


def _validate_mmsa(inst: MmsaInstance, strict: bool) -> None:
    if inst.t < 2:
        raise StructuralError("depth t must be at least 2")
    if len(inst.layers) != inst.t:
        raise StructuralError(f"expected {inst.t} layers, got {len(inst.layers)}")
    for d, size in enumerate(inst.layers, start=1):
        if not isinstance(size, int) or size < 0:
            raise StructuralError(f"layer {d} size must be a non-negative integer")
    if len(inst.edges) != inst.t - 1:
        raise StructuralError(f"expected {inst.t - 1} edge layers, got {len(inst.edges)}")
    for d in range(1, inst.t):
        adj = inst.edges[d - 1]
        if len(adj) != inst.layers[d - 1]:
            raise StructuralError(f"edge layer {d} has {len(adj)} rows for {inst.layers[d - 1]} gates")
        kind = inst.gate_kind(d)
        for v, ch in enumerate(adj):
            _check_ids(ch, inst.layers[d], f"{kind} gate (layer {d}, vertex {v})")
            if strict and not ch:
                raise StructuralError(f"{kind} gate (layer {d}, vertex {v}) has no children")


def _validate_mku(inst: MinKUnionInstance) -> None:
    if inst.n < 0:
        raise StructuralError("ground size n must be non-negative")
    if inst.m < 1:
        raise StructuralError("Min k-Union needs at least one set")
    if inst.k < 1:
        raise StructuralError("k must be at least 1")
    if inst.k > inst.m:
        raise StructuralError(f"k={inst.k} exceeds set count m={inst.m}")
    for i, s in enumerate(inst.sets):
        _check_ids(s, inst.n, f"set {i}")


# ============================================================
# 解の構築と実行可能性
# ============================================================

def rbsc_solution(instance: RbscInstance, chosen: Iterable[int]) -> RbscSolution:
    """選択集合から派生フィールドとコストを計算する（重複は最初の出現のみ残す）"""
    order: List[int] = []
    seen = set()
    for j in chosen:
        if j < 0 or j >= instance.m:
            raise InvalidParameter(f"set index {j} out of range")
        if j not in seen:
            seen.add(j)
            order.append(j)
    red = frozenset(i for j in order for i in instance.red_adj[j])
    blue = frozenset(b for j in order for b in instance.blue_adj[j])
    return RbscSolution(tuple(order), red, blue, len(red))


def is_rbsc_feasible(instance: RbscInstance, solution: RbscSolution,
                     k_hat: Optional[int] = None) -> bool:
    """全青要素（または k_hat 個以上）を被覆し、コストが再計算値と一致するか"""
    recomputed = rbsc_solution(instance, solution.chosen_sets)
    if recomputed.cost != solution.cost or recomputed.covered_blue != solution.covered_blue:
        return False
    need = instance.k if k_hat is None else k_hat
    return len(recomputed.covered_blue) >= need


def mmsa_solution(instance: MmsaInstance, true_variables: Iterable[int]) -> MmsaSolution:
    chosen = tuple(sorted(set(true_variables)))
    return MmsaSolution(chosen, len(chosen))


def is_mmsa_feasible(instance: MmsaInstance, solution: MmsaSolution) -> bool:
    return (solution.cost == len(set(solution.true_variables))
            and evaluate_circuit(instance, solution.true_variables))


# ============================================================
# 回路評価・簡約
# ============================================================

def evaluate_circuit(instance: MmsaInstance, assignment: Iterable[int]) -> bool:
    """
    単調回路の評価（子なし AND は真、子なし OR は偽）

    Args:
        instance: 回路
        assignment: 真にする変数 id の集合

    Returns:
        根の AND ゲートが真か
    """
    return all(evaluate_layers(instance, assignment)[0])


def evaluate_layers(instance: MmsaInstance, assignment: Iterable[int]) -> List[List[bool]]:
    """全ての層のゲート値（result[d-1] が層 d）"""
    true_vars = set(assignment)
    nvars = instance.variable_count
    if any(v < 0 or v >= nvars for v in true_vars):
        raise InvalidParameter("assignment contains ids outside the variable layer")
    values = [v in true_vars for v in range(nvars)]
    result = [values]
    for d in range(instance.t - 1, 0, -1):
        adj = instance.edges[d - 1]
        if instance.gate_kind(d) == 'OR':
            values = [any(values[c] for c in ch) for ch in adj]
        else:
            values = [all(values[c] for c in ch) for ch in adj]
        result.append(values)
    result.reverse()
    return result


def simplify_circuit(instance: MmsaInstance,
                     true_vertices: Optional[Dict[int, Iterable[int]]] = None,
                     false_vertices: Optional[Dict[int, Iterable[int]]] = None) -> SimplifiedCircuit:
    """
    一部の頂点を真/偽に固定して回路を簡約する

    固定の影響を根まで伝播させ、まだ決まっていない頂点だけからなる残余回路を返す。
    キーは層番号（1始まり）。真に固定されたゲートは充足済みとして扱う。
    """
    fixed_true = {d: set(v) for d, v in (true_vertices or {}).items()}
    fixed_false = {d: set(v) for d, v in (false_vertices or {}).items()}
    t = instance.t

    # 1: 真, 0: 偽, -1: 未定
    status: List[List[int]] = [[] for _ in range(t)]
    ft, ff = fixed_true.get(t, set()), fixed_false.get(t, set())
    status[t - 1] = [1 if v in ft else (0 if v in ff else -1) for v in range(instance.layers[-1])]
    for d in range(t - 1, 0, -1):
        ft, ff = fixed_true.get(d, set()), fixed_false.get(d, set())
        below = status[d]
        is_or = instance.gate_kind(d) == 'OR'
        row = []
        for v, ch in enumerate(instance.edges[d - 1]):
            if v in ft:
                row.append(1)
                continue
            if v in ff:
                row.append(0)
                continue
            states = [below[c] for c in ch]
            if is_or:
                row.append(1 if 1 in states else (-1 if -1 in states else 0))
            else:
                row.append(0 if 0 in states else (-1 if -1 in states else 1))
        status[d - 1] = row

    top = status[0]
    empty_maps = tuple(() for _ in range(t))
    if 0 in top:
        return SimplifiedCircuit(STATUS_UNSATISFIABLE, None, empty_maps)
    if -1 not in top:
        return SimplifiedCircuit(STATUS_SATISFIED, None, empty_maps)

    keep: List[List[int]] = [[v for v, s in enumerate(top) if s == -1]]
    for d in range(1, t):
        reached = {c for v in keep[d - 1] for c in instance.edges[d - 1][v] if status[d][c] == -1}
        keep.append(sorted(reached))
    new_id = [{old: new for new, old in enumerate(layer)} for layer in keep]
    edges = []
    for d in range(1, t):
        edges.append(tuple(
            tuple(new_id[d][c] for c in instance.edges[d - 1][v] if status[d][c] == -1)
            for v in keep[d - 1]
        ))
    residual = MmsaInstance(t, tuple(len(layer) for layer in keep), tuple(edges))
    return SimplifiedCircuit(STATUS_OPEN, residual, tuple(tuple(layer) for layer in keep))


def rbsc_to_mmsa3(instance: RbscInstance) -> MmsaInstance:
    """RBSC を深さ3の回路へ（層1: 青ごとの OR, 層2: 集合ごとの AND, 層3: 赤変数）"""
    or_layer = instance.blue_to_sets
    and_layer = tuple(instance.red_adj)
    return MmsaInstance(3, (instance.k, instance.m, instance.n), (or_layer, and_layer))


def mmsa3_to_rbsc(instance: MmsaInstance) -> RbscInstance:
    """rbsc_to_mmsa3 の逆変換"""
    if instance.t != 3:
        raise StructuralError(f"expected a depth-3 circuit, got depth {instance.t}")
    k, m, n = instance.layers
    blue_adj = _reverse(instance.edges[0], m)
    return RbscInstance(k, n, blue_adj, tuple(instance.edges[1]))


def embed_odd_depth(instance: MmsaInstance) -> MmsaInstance:
    """奇数深さの回路に単一子の OR 層を挿入して偶数深さにする"""
    if instance.t % 2 == 0:
        return instance
    nvars = instance.layers[-1]
    passthrough = tuple((v,) for v in range(nvars))
    layers = instance.layers[:-1] + (nvars, nvars)
    return MmsaInstance(instance.t + 1, layers, instance.edges + (passthrough,))


# ============================================================
# JSON入出力
# ============================================================

def instance_to_payload(instance: Instance) -> Dict[str, Any]:
    if isinstance(instance, RbscInstance):
        return {
            "kind": "rbsc", "k": instance.k, "n": instance.n,
            "sets": [{"blue": list(b), "red": list(r)}
                     for b, r in zip(instance.blue_adj, instance.red_adj)],
        }
    if isinstance(instance, MmsaInstance):
        return {
            "kind": "mmsa", "t": instance.t, "layers": list(instance.layers),
            "edges": [[list(ch) for ch in adj] for adj in instance.edges],
        }
    if isinstance(instance, MinKUnionInstance):
        return {"kind": "mku", "n": instance.n, "k": instance.k,
                "sets": [list(s) for s in instance.sets]}
    raise StructuralError(f"unknown instance type {type(instance).__name__}")


def instance_to_bytes(instance: Instance) -> bytes:
    return orjson.dumps(instance_to_payload(instance))


def instance_digest(instance: Instance) -> str:
    """正準JSONバイト列の sha256"""
    return hashlib.sha256(instance_to_bytes(instance)).hexdigest()


def write_instance(instance: Instance, path: Union[str, Path]) -> None:
    with open(path, 'wb') as f:
        f.write(instance_to_bytes(instance))


def _as_int(value: Any, field: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ParseError(f"expected integer, got {type(value).__name__}", field=field)
    return value


def _as_ids(value: Any, field: str) -> Tuple[Tuple[int, ...], bool]:
    if not isinstance(value, list):
        raise ParseError("expected list of ids", field=field)
    ids = [_as_int(v, field) for v in value]
    normalized = sorted(set(ids))
    return tuple(normalized), normalized != ids


def _field(payload: Dict[str, Any], name: str) -> Any:
    if name not in payload:
        raise ParseError("missing field", field=name)
    return payload[name]


def parse_instance(data: bytes, kind: Optional[str] = None, strict: bool = True) -> InstanceFile:
    """
    JSONバイト列からインスタンスを復元する

    未ソート・重複のある隣接リストは正規化して受理し、normalized フラグを立てる。

    Raises:
        ParseError: JSON破損・型不一致
        StructuralError: 正規化後の不変条件違反
    """
    try:
        payload = orjson.loads(data)
    except orjson.JSONDecodeError as e:
        raise ParseError(f"malformed JSON: {e.msg}", line=e.lineno) from e
    if not isinstance(payload, dict):
        raise ParseError("top-level value must be an object")
    found = _field(payload, "kind")
    if kind is not None and found != kind:
        raise ParseError(f"expected kind '{kind}', found '{found}'", field="kind")

    normalized = False
    if found == "rbsc":
        sets = _field(payload, "sets")
        if not isinstance(sets, list):
            raise ParseError("expected list", field="sets")
        blue_adj, red_adj = [], []
        for j, entry in enumerate(sets):
            if not isinstance(entry, dict):
                raise ParseError("expected object", field=f"sets[{j}]")
            blue, nb = _as_ids(_field(entry, "blue"), f"sets[{j}].blue")
            red, nr = _as_ids(_field(entry, "red"), f"sets[{j}].red")
            normalized = normalized or nb or nr
            blue_adj.append(blue)
            red_adj.append(red)
        instance: Instance = RbscInstance(_as_int(_field(payload, "k"), "k"),
                                          _as_int(_field(payload, "n"), "n"),
                                          tuple(blue_adj), tuple(red_adj))
    elif found == "mmsa":
        layers = _field(payload, "layers")
        edges = _field(payload, "edges")
        if not isinstance(layers, list) or not isinstance(edges, list):
            raise ParseError("layers/edges must be lists", field="layers")
        parsed_edges = []
        for d, adj in enumerate(edges):
            if not isinstance(adj, list):
                raise ParseError("expected list", field=f"edges[{d}]")
            rows = []
            for v, ch in enumerate(adj):
                ids, flag = _as_ids(ch, f"edges[{d}][{v}]")
                normalized = normalized or flag
                rows.append(ids)
            parsed_edges.append(tuple(rows))
        instance = MmsaInstance(_as_int(_field(payload, "t"), "t"),
                                tuple(_as_int(s, "layers") for s in layers),
                                tuple(parsed_edges))
    elif found == "mku":
        sets = _field(payload, "sets")
        if not isinstance(sets, list):
            raise ParseError("expected list", field="sets")
        parsed = []
        for i, s in enumerate(sets):
            ids, flag = _as_ids(s, f"sets[{i}]")
            normalized = normalized or flag
            parsed.append(ids)
        instance = MinKUnionInstance(_as_int(_field(payload, "n"), "n"),
                                     _as_int(_field(payload, "k"), "k"), tuple(parsed))
    else:
        raise ParseError(f"unknown kind '{found}'", field="kind")

    validate(instance, strict=strict)
    if normalized:
        logger.info("adjacency lists normalized on read (sorted, de-duplicated)")
    return InstanceFile(instance, normalized)


def read_instance(path: Union[str, Path], kind: Optional[str] = None,
                  strict: bool = True) -> InstanceFile:
    try:
        with open(path, 'rb') as f:
            data = f.read()
    except OSError as e:
        raise ParseError(f"cannot read instance file {path}: {e.strerror or e}") from e
    return parse_instance(data, kind=kind, strict=strict)
