# -*- coding: utf-8 -*-
"""
rbsc-kit - MMSA_t 再帰ソルバー
分数集合被覆による前処理、基本LP、カット生成ループ、貪欲被覆、下位深さへの再帰呼び出し

深さ T = 2t+2 のフレームでは 層 T-2 (AND) を x、層 T-1 (OR) を y、層 T (変数) を w とする。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from errors import (CutLoopExhausted, InfeasibleInstance, InvalidParameter,
                    NotViolated, StructuralError)
from instance_model import (STATUS_SATISFIED, STATUS_UNSATISFIABLE, MmsaInstance,
                            MmsaSolution, embed_odd_depth, evaluate_circuit,
                            mmsa3_to_rbsc, mmsa_solution, simplify_circuit, validate)
from lp_engine import Constraint, LpModel, add_constraint, solve
from mmsa4_approx import Mmsa4Params, Mmsa4Solver, mmsa4_factor
from rbsc_approx import RbscParams, RbscSolver
from set_cover import checked_greedy_cover, fractional_set_cover_value, greedy_set_cover

logger = logging.getLogger(__name__)


@dataclass
class MmsaTParams:
    """再帰ソルバーの設定（config.json の mmsa_t セクション）"""
    cut_factor: int = 10
    accept_constant: float = 16.0
    a_overrides: Dict[int, float] = field(default_factory=dict)
    lp_backend: Optional[str] = None
    tolerance: float = 1e-7
    rbsc: RbscParams = field(default_factory=RbscParams)
    mmsa4: Mmsa4Params = field(default_factory=Mmsa4Params)

    @classmethod
    def from_config(cls, config: Optional[Dict] = None, seed: Optional[int] = None,
                    jobs: Optional[int] = None, lp_backend: Optional[str] = None,
                    **overrides) -> 'MmsaTParams':
        section = dict((config or {}).get('mmsa_t', {}))
        section.update({k: v for k, v in overrides.items() if v is not None})
        if lp_backend is not None:
            section['lp_backend'] = lp_backend
        # JSON のキーは文字列
        section['a_overrides'] = {int(d): float(a) for d, a in section.get('a_overrides', {}).items()}
        known = {f for f in cls.__dataclass_fields__} - {'rbsc', 'mmsa4'}
        params = cls(**{k: v for k, v in section.items() if k in known})
        params.rbsc = RbscParams.from_config(config, seed=seed, jobs=jobs, lp_backend=lp_backend)
        params.mmsa4 = Mmsa4Params.from_config(config, seed=seed, lp_backend=lp_backend)
        return params


# ============================================================
# 近似比の表
# ============================================================

def delta_exponent(depth: int) -> float:
    """δ = (1/3)·2^{3−⌈t/2⌉}（近似比は Õ(N^{1−δ})）"""
    if depth < 4:
        raise InvalidParameter(f"the exponent is defined for depth >= 4, got {depth}")
    return (1 / 3) * 2.0 ** (3 - math.ceil(depth / 2))


def next_a(N: int, a_prev: float) -> float:
    """A_{2t+2} = 2(1+ln N)·√(N·A_{2t})"""
    return 2.0 * (1.0 + math.log(N)) * math.sqrt(N * a_prev)


@dataclass(frozen=True)
class ApproximationTable:
    """偶数深さごとの A 値"""
    N: int
    values: Dict[int, float]

    def factor(self, depth: int) -> float:
        """奇数深さは一つ深い偶数深さの値を使う"""
        even = depth + (depth % 2)
        if even not in self.values:
            raise InvalidParameter(f"no A value for depth {depth}")
        return self.values[even]

    def exponent(self, depth: int) -> float:
        return 1.0 - delta_exponent(depth)

    def to_dict(self) -> Dict:
        return {
            'N': self.N,
            'A': {str(d): a for d, a in sorted(self.values.items())},
            'exponent': {str(d): self.exponent(d) for d in sorted(self.values)},
        }


def approximation_table(N: int, depth: int, a4: Optional[float] = None,
                        constant: float = 16.0,
                        overrides: Optional[Dict[int, float]] = None) -> ApproximationTable:
    """
    A_4, A_6, ..., A_depth を計算する

    Args:
        N: 回路サイズ
        depth: 最大深さ（奇数なら一つ上の偶数まで）
        a4: A_4（省略時は C′·N^{1/3}·(log N)^3）
        constant: C′
        overrides: 深さ -> A の上書き（以降の深さは上書き値から再計算）
    """
    if N < 2:
        raise InvalidParameter(f"N must be at least 2, got {N}")
    overrides = overrides or {}
    values: Dict[int, float] = {}
    a = a4 if a4 is not None else mmsa4_factor(N, constant)
    top = max(4, depth + (depth % 2))
    for d in range(4, top + 1, 2):
        if d > 4:
            a = next_a(N, a)
        a = overrides.get(d, a)
        values[d] = a
    return ApproximationTable(N, values)


# ============================================================
# LP とカット
# ============================================================

def build_recursion_lp(instance: MmsaInstance, opt_guess: float) -> LpModel:
    """
    基本LP: Σw ≤ OPT, y_i ≤ Σ_{h∈Γ(i)} w_h, x_j ≤ y_i (i ∈ Γ(j)), 全変数 [0, 1], 目的 min Σw
    """
    T = instance.t
    J, R, S = T - 2, T - 1, T
    model = LpModel(f'recursion_depth{T}', sense='min')
    ws = [model.add_variable(('w', h)) for h in range(instance.layers[S - 1])]
    for i in range(instance.layers[R - 1]):
        model.add_variable(('y', i))
    for j in range(instance.layers[J - 1]):
        model.add_variable(('x', j))
    model.add_constraint({w: 1.0 for w in ws}, '<=', opt_guess, 'budget')
    for i in range(instance.layers[R - 1]):
        coeffs = {('w', h): -1.0 for h in instance.children(R, i)}
        coeffs[('y', i)] = 1.0
        model.add_constraint(coeffs, '<=', 0.0, f'or_{i}')
    for j in range(instance.layers[J - 1]):
        for i in instance.children(J, j):
            model.add_constraint({('x', j): 1.0, ('y', i): -1.0}, '<=', 0.0, f'and_{j}_{i}')
    model.set_objective({w: 1.0 for w in ws})
    return model


@dataclass(frozen=True)
class CutRecord:
    """追加したカット Σ_{support} x ≥ rhs（support はフレーム入力回路の id）"""
    support: Tuple[int, ...]
    rhs: int
    lhs_before: float
    a_value: float


@dataclass
class RecursionFrame:
    """一つの深さ・一つの OPT 推定値での再帰フレーム"""
    depth: int
    level: int
    N: int
    opt_guess: int
    a_value: float
    a_sub: float
    instance: Optional[MmsaInstance] = None
    model: Optional[LpModel] = None
    a_initial: float = 0.0
    discarded: int = 0
    rounds: int = 0
    not_violated: int = 0
    cuts: List[CutRecord] = field(default_factory=list)
    sub_sizes: List[int] = field(default_factory=list)
    plus_size: int = 0
    cover_plus: int = 0
    cover_u: int = 0
    accepted: bool = False

    @property
    def log_term(self) -> float:
        return 1.0 + math.log(self.N)

    @property
    def threshold(self) -> float:
        """V+ に入れる x の下限 2(1+ln N)/A"""
        return 2.0 * self.log_term / self.a_value

    @property
    def accept_size(self) -> float:
        """|U| ≤ A/(2+2 ln N) なら受理"""
        return self.a_value / (2.0 * self.log_term)

    @property
    def cut_rhs(self) -> int:
        return math.floor(self.a_value / (2.0 * self.log_term * self.a_sub)) + 1

    @property
    def cover_bound(self) -> float:
        """各貪欲被覆の上界 OPT·A/2"""
        return self.opt_guess * self.a_value / 2.0

    def to_dict(self) -> Dict:
        return {
            'depth': self.depth, 'level': self.level, 'opt_guess': self.opt_guess,
            'A': self.a_value, 'A_initial': self.a_initial, 'A_sub': self.a_sub,
            'discarded': self.discarded, 'rounds': self.rounds,
            'cuts': len(self.cuts), 'not_violated': self.not_violated,
            'cut_rhs': [c.rhs for c in self.cuts],
            'sub_sizes': list(self.sub_sizes), 'plus_size': self.plus_size,
            'cover_plus': self.cover_plus, 'cover_u': self.cover_u,
            'cover_bound': self.cover_bound,
            'accepted': self.accepted,
        }


def cut_oracle(frame: RecursionFrame, sub_solution_size: int, x_values: Dict[int, float],
               plus: Sequence[int], tol: float = 1e-7) -> Optional[Constraint]:
    """
    再帰解が大きすぎたときのカット Σ_{j∈V∖V+} x_j ≥ ⌊A/(2(1+ln N)A_sub)⌋ + 1

    Returns:
        追加すべき制約（|U| が受理範囲なら None）

    Raises:
        NotViolated: 現在の LP 点が既にカットを満たす（A が小さすぎる）
    """
    if sub_solution_size <= frame.accept_size:
        return None
    plus_set = set(plus)
    support = [j for j in sorted(x_values) if j not in plus_set]
    rhs = frame.cut_rhs
    lhs = sum(x_values[j] for j in support)
    if lhs >= rhs - tol:
        raise NotViolated(f"current point has Σx = {lhs:.4f} >= {rhs} on {len(support)} gates "
                          f"(A={frame.a_value:.4g})")
    return Constraint(tuple((('x', j), 1.0) for j in support), '>=', float(rhs),
                      f'cut_{len(frame.cuts)}')


# ============================================================
# ドライバ
# ============================================================

@dataclass
class MmsaTReport:
    depth: int = 0
    N: int = 0
    table: Optional[ApproximationTable] = None
    opt_guess: Optional[int] = None
    failed_guesses: List[int] = field(default_factory=list)
    frames: List[RecursionFrame] = field(default_factory=list)
    cost: Optional[int] = None

    def to_dict(self) -> Dict:
        return {
            'depth': self.depth, 'N': self.N,
            'table': self.table.to_dict() if self.table else None,
            'opt_guess': self.opt_guess, 'failed_guesses': list(self.failed_guesses),
            'frames': [f.to_dict() for f in self.frames],
            'cost': self.cost,
        }


class MmsaTSolver:
    """
    深さ5以上の MMSA の近似ソルバー

    最上位で OPT 推定値 g を倍々にし、同じ g を下位フレームにも渡す。
    全ての推定値が失敗した場合は最後の推定値の例外（CutLoopExhausted など）をそのまま送出する。
    """

    def __init__(self, instance: MmsaInstance, params: Optional[MmsaTParams] = None):
        validate(instance, strict=False)
        if instance.t < 5:
            raise StructuralError(f"the recursion needs depth >= 5, got depth {instance.t}")
        self.instance = instance
        self.params = params or MmsaTParams()
        self.circuit = embed_odd_depth(instance)
        self.N = self.circuit.N
        self.table = approximation_table(self.N, self.circuit.t,
                                         constant=self.params.accept_constant,
                                         overrides=self.params.a_overrides)
        self.report = MmsaTReport(depth=instance.t, N=self.N, table=self.table)

    def solve(self) -> MmsaSolution:
        inst = self.circuit
        if not evaluate_circuit(inst, range(inst.variable_count)):
            raise InfeasibleInstance("the circuit is unsatisfiable even with every variable true")
        top = 1
        while top < max(inst.layers):
            top *= 2
        g = 1
        while True:
            try:
                chosen = self.frame(inst, g, level=0)
            except (InfeasibleInstance, CutLoopExhausted) as e:
                last_error = e
                logger.info(f"OPT guess {g} failed: {e}")
                self.report.failed_guesses.append(g)
                if g >= top:
                    break
                g *= 2
                continue
            self.report.opt_guess = g
            return self._finish(chosen)

        logger.warning(f"every OPT guess up to {top} failed")
        raise last_error

    def _finish(self, chosen: Sequence[int]) -> MmsaSolution:
        solution = mmsa_solution(self.instance, chosen)
        self.report.cost = solution.cost
        logger.info(f"[OK] depth-{self.instance.t} solution with {solution.cost} variables "
                    f"(OPT guess {self.report.opt_guess})")
        return solution

    def frame(self, inst: MmsaInstance, g: int, level: int) -> List[int]:
        """
        一つのフレームを解き、真にする変数（inst の層 T の id）を返す

        Raises:
            InfeasibleInstance: 推定値 g で前処理後の回路または LP が実行不能
            CutLoopExhausted: カット回数の上限に達した
        """
        T = inst.t
        J, S = T - 2, T
        tol = self.params.tolerance
        frame = RecursionFrame(depth=T, level=level, N=self.N, opt_guess=g,
                               a_value=self.table.factor(T), a_sub=self.table.factor(T - 2),
                               instance=inst)
        frame.a_initial = frame.a_value
        self.report.frames.append(frame)

        var_parents = inst.parents[S - 1]
        discarded = [j for j in range(inst.layers[J - 1])
                     if fractional_set_cover_value(inst.children(J, j), var_parents) > g + tol]
        frame.discarded = len(discarded)
        circuit = simplify_circuit(inst, false_vertices={J: discarded})
        if circuit.status == STATUS_UNSATISFIABLE:
            raise InfeasibleInstance(f"discarding {len(discarded)} gates with fractional cover > {g} "
                                     f"leaves the depth-{T} circuit unsatisfiable")
        if circuit.status == STATUS_SATISFIED:
            frame.accepted = True
            return []
        work = circuit.instance
        model = build_recursion_lp(work, g)
        frame.model = model

        cap = self.params.cut_factor * self.N
        while frame.rounds < cap:
            frame.rounds += 1
            solution = solve(model, backend=self.params.lp_backend)
            if not solution.is_optimal:
                raise InfeasibleInstance(f"depth-{T} LP is {solution.status.value} after "
                                         f"{len(frame.cuts)} cuts (OPT guess {g})")
            x = solution.group('x')
            plus = sorted(j for j, v in x.items() if v >= frame.threshold - tol)
            u_alg = self.sub_solve(work, plus, g, level)
            frame.sub_sizes.append(len(u_alg))
            logger.debug(f"depth {T} round {frame.rounds}: |V+|={len(plus)}, |U|={len(u_alg)}, "
                         f"A={frame.a_value:.4g}")

            if len(u_alg) <= frame.accept_size:
                s_plus = cover_gates(work, plus)
                s_u = cover_gates(work, u_alg)
                frame.plus_size = len(plus)
                frame.cover_plus, frame.cover_u = len(s_plus), len(s_u)
                frame.accepted = True
                chosen = sorted(set(s_plus) | set(s_u))
                return circuit.to_original(S, chosen)

            try:
                cut = cut_oracle(frame, len(u_alg), x, plus, tol)
            except NotViolated as e:
                frame.not_violated += 1
                raised = max(2.0 * frame.a_value, next_a(self.N, frame.a_sub))
                logger.info(f"depth {T}: {e}; raising A to {raised:.4g}")
                frame.a_value = raised
                continue
            cut_ids = [name[1] for name, _ in cut.coeffs]
            lhs = sum(x[j] for j in cut_ids)
            support = tuple(circuit.to_original(J, cut_ids))
            frame.cuts.append(CutRecord(support, int(cut.rhs), lhs, frame.a_value))
            add_constraint(model, cut)
            logger.debug(f"depth {T}: cut #{len(frame.cuts)} Σx >= {int(cut.rhs)} "
                         f"over {len(support)} gates (was {lhs:.4f})")

        raise CutLoopExhausted(f"depth-{T} frame added {len(frame.cuts)} cuts without accepting "
                               f"(cap {cap} rounds)")

    def sub_solve(self, work: MmsaInstance, plus: Sequence[int], g: int, level: int) -> List[int]:
        """層 T-2 を変数とする部分回路を V+ を真に固定して解き、追加で真にする層 T-2 の id を返す"""
        depth = work.t - 2
        sub = MmsaInstance(depth, work.layers[:depth], work.edges[:depth - 1])
        res = simplify_circuit(sub, true_vertices={depth: plus})
        if res.status == STATUS_SATISFIED:
            return []
        if res.status == STATUS_UNSATISFIABLE:
            raise InfeasibleInstance(f"depth-{depth} sub-circuit is unsatisfiable")
        if depth == 4:
            chosen = list(Mmsa4Solver(res.instance, self.params.mmsa4).solve().true_variables)
        else:
            chosen = self.frame(res.instance, g, level + 1)
        return res.to_original(depth, chosen)


def cover_gates(instance: MmsaInstance, gates: Sequence[int]) -> List[int]:
    """層 T-2 のゲート集合の子（層 T-1）を層 T の変数で貪欲に被覆する"""
    T = instance.t
    universe = {i for j in gates for i in instance.children(T - 2, j)}
    if not universe:
        return []
    chosen, _ = checked_greedy_cover(universe, instance.parents[T - 1])
    return chosen


def solve_mmsa_t(instance: MmsaInstance, params: Optional[MmsaTParams] = None) -> MmsaSolution:
    """深さ5以上の MMSA を再帰で近似的に解く"""
    return MmsaTSolver(instance, params).solve()


# ============================================================
# 深さによる振り分け
# ============================================================

def _solve_depth2(instance: MmsaInstance) -> MmsaSolution:
    chosen = greedy_set_cover(range(instance.layers[0]), instance.parents[1])
    return mmsa_solution(instance, chosen)


def solve_mmsa_with_report(instance: MmsaInstance,
                           params: Optional[MmsaTParams] = None) -> Tuple[MmsaSolution, Dict]:
    """
    深さで解法を選んで MMSA を解く

    深さ2: 貪欲集合被覆、3: RBSC へ変換、4: MMSA4、5以上: 再帰

    Returns:
        (解, レポート辞書)
    """
    params = params or MmsaTParams()
    validate(instance, strict=False)
    t = instance.t
    if t == 2:
        solution = _solve_depth2(instance)
        return solution, {'depth': 2, 'method': 'greedy', 'cost': solution.cost}
    if t == 3:
        solver = RbscSolver(mmsa3_to_rbsc(instance), params.rbsc)
        rbsc = solver.solve()
        solution = mmsa_solution(instance, rbsc.covered_red)
        return solution, {'depth': 3, 'method': 'rbsc', **solver.report.to_dict(), 'cost': solution.cost}
    if t == 4:
        solver4 = Mmsa4Solver(instance, params.mmsa4)
        solution = solver4.solve()
        return solution, {'depth': 4, 'method': 'mmsa4', **solver4.report.to_dict()}
    solver_t = MmsaTSolver(instance, params)
    solution = solver_t.solve()
    return solution, {'method': 'recursion', **solver_t.report.to_dict()}


def solve_mmsa(instance: MmsaInstance, params: Optional[MmsaTParams] = None) -> MmsaSolution:
    """深さで解法を選んで MMSA を解く"""
    return solve_mmsa_with_report(instance, params)[0]
