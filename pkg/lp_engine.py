# -*- coding: utf-8 -*-
"""
rbsc-kit - LPエンジン
疎なLPモデルの構築と求解（二段階単体法 / HiGHS）、切除平面ループ用の制約追加
"""

import itertools
import logging
import math
import re
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Hashable, Iterable, List, Optional, Tuple, Union

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

from errors import InvalidParameter, NumericalFailure, UnknownVariable

logger = logging.getLogger(__name__)

SENSES = ('<=', '>=', '==')


@dataclass
class LpSettings:
    """ソルバー設定（config.json の lp セクション）"""
    tolerance: float = 1e-7
    max_iterations: int = 50000
    degeneracy_threshold: int = 50
    backend: str = 'auto'
    auto_threshold: int = 400_000
    dump_dir: Optional[str] = None


SETTINGS = LpSettings()
_dump_counter = itertools.count()
_dump_lock = threading.Lock()


def configure(config: Optional[Dict] = None, **overrides) -> LpSettings:
    """config.json の lp セクションと個別指定で既定設定を更新する"""
    values = dict(config or {})
    values.update(overrides)
    for key, value in values.items():
        if hasattr(SETTINGS, key):
            setattr(SETTINGS, key, value)
    if SETTINGS.backend not in ('simplex', 'highs', 'auto'):
        raise InvalidParameter(f"unknown LP backend '{SETTINGS.backend}'")
    return SETTINGS


class LpStatus(str, Enum):
    OPTIMAL = 'optimal'
    INFEASIBLE = 'infeasible'
    UNBOUNDED = 'unbounded'


@dataclass(frozen=True)
class Constraint:
    """疎な線形制約 Σ coef·var (sense) rhs"""
    coeffs: Tuple[Tuple[Hashable, float], ...]
    sense: str
    rhs: float
    label: str = ''


class LpModel:
    """
    変数名（ハッシュ可能なら何でも可、慣例として ('x', j) のようなタプル）で
    管理する疎なLPモデル
    """

    def __init__(self, name: str = 'lp', sense: str = 'max'):
        if sense not in ('max', 'min'):
            raise InvalidParameter(f"objective sense must be 'max' or 'min', got {sense!r}")
        self.name = name
        self.sense = sense
        self._names: List[Hashable] = []
        self._index: Dict[Hashable, int] = {}
        self._lo: List[float] = []
        self._hi: List[float] = []
        self.constraints: List[Constraint] = []
        self.objective: Dict[Hashable, float] = {}

    # ---- 変数 ----
    @property
    def num_variables(self) -> int:
        return len(self._names)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    @property
    def num_nonzeros(self) -> int:
        return sum(len(c.coeffs) for c in self.constraints)

    def variables(self) -> List[Hashable]:
        return list(self._names)

    def has_variable(self, name: Hashable) -> bool:
        return name in self._index

    def bounds(self, name: Hashable) -> Tuple[float, float]:
        idx = self._index[name]
        return self._lo[idx], self._hi[idx]

    def add_variable(self, name: Hashable, lo: float = 0.0, hi: float = 1.0) -> Hashable:
        if name in self._index:
            raise InvalidParameter(f"variable {name!r} declared twice")
        if lo < 0 or lo > hi:
            raise InvalidParameter(f"invalid bounds [{lo}, {hi}] for {name!r}")
        self._index[name] = len(self._names)
        self._names.append(name)
        self._lo.append(float(lo))
        self._hi.append(float(hi))
        return name

    # ---- 制約・目的 ----
    def _collect(self, coeffs: Union[Dict, Iterable[Tuple[Hashable, float]]]) -> Tuple[Tuple[Hashable, float], ...]:
        items = coeffs.items() if isinstance(coeffs, dict) else coeffs
        merged: Dict[Hashable, float] = {}
        for name, coef in items:
            if name not in self._index:
                raise UnknownVariable(f"constraint references undeclared variable {name!r}")
            merged[name] = merged.get(name, 0.0) + float(coef)
        return tuple((n, c) for n, c in merged.items() if c != 0.0)

    def add_constraint(self, coeffs, sense: str, rhs: float, label: str = '') -> 'LpModel':
        if sense not in SENSES:
            raise InvalidParameter(f"unknown constraint sense {sense!r}")
        self.constraints.append(Constraint(self._collect(coeffs), sense, float(rhs), label))
        return self

    def set_objective(self, coeffs, sense: Optional[str] = None) -> 'LpModel':
        if sense is not None:
            if sense not in ('max', 'min'):
                raise InvalidParameter(f"objective sense must be 'max' or 'min', got {sense!r}")
            self.sense = sense
        self.objective = dict(self._collect(coeffs))
        return self

    def clone(self) -> 'LpModel':
        other = LpModel(self.name, self.sense)
        other._names = list(self._names)
        other._index = dict(self._index)
        other._lo = list(self._lo)
        other._hi = list(self._hi)
        other.constraints = list(self.constraints)
        other.objective = dict(self.objective)
        return other

    # ---- 検証・出力 ----
    def max_violation(self, values: Dict[Hashable, float]) -> float:
        """値の割り当てに対する最大の制約・上下限違反量"""
        worst = 0.0
        for idx, name in enumerate(self._names):
            v = values.get(name, 0.0)
            worst = max(worst, self._lo[idx] - v, v - self._hi[idx])
        for c in self.constraints:
            lhs = sum(coef * values.get(name, 0.0) for name, coef in c.coeffs)
            if c.sense == '<=':
                worst = max(worst, lhs - c.rhs)
            elif c.sense == '>=':
                worst = max(worst, c.rhs - lhs)
            else:
                worst = max(worst, abs(lhs - c.rhs))
        return worst

    def to_lp_text(self) -> str:
        """CPLEX LP 形式のテキスト（コメント行なし）"""
        def fmt_terms(terms) -> str:
            if not terms:
                return ' 0 ' + _lp_name(self._names[0]) if self._names else ' 0'
            return ''.join(f" {coef:+.12g} {_lp_name(name)}" for name, coef in terms)

        lines = ['Maximize' if self.sense == 'max' else 'Minimize']
        lines.append(' obj:' + fmt_terms(list(self.objective.items())))
        lines.append('Subject To')
        for idx, c in enumerate(self.constraints):
            label = _lp_name(c.label) if c.label else f"c{idx}"
            op = '=' if c.sense == '==' else c.sense
            lines.append(f" {label}_{idx}:{fmt_terms(c.coeffs)} {op} {c.rhs:.12g}")
        lines.append('Bounds')
        for idx, name in enumerate(self._names):
            hi = self._hi[idx]
            if math.isinf(hi):
                lines.append(f" {_lp_name(name)} >= {self._lo[idx]:.12g}")
            else:
                lines.append(f" {self._lo[idx]:.12g} <= {_lp_name(name)} <= {hi:.12g}")
        lines.append('End')
        return '\n'.join(lines) + '\n'


def _lp_name(name: Hashable) -> str:
    raw = '_'.join(str(p) for p in name) if isinstance(name, tuple) else str(name)
    return re.sub(r'[^A-Za-z0-9_]', '_', raw)


def add_constraint(model: LpModel, constraint: Constraint) -> LpModel:
    """Constraint オブジェクトをモデルへ追加する"""
    return model.add_constraint(constraint.coeffs, constraint.sense, constraint.rhs, constraint.label)


@dataclass
class LpSolution:
    status: LpStatus
    values: Dict[Hashable, float] = field(default_factory=dict)
    objective: Optional[float] = None
    backend: str = 'simplex'
    iterations: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status == LpStatus.OPTIMAL

    def value(self, name: Hashable, default: float = 0.0) -> float:
        return self.values.get(name, default)

    def group(self, prefix: str) -> Dict[Hashable, float]:
        """('prefix', key...) 形式の変数を {key: 値} で返す"""
        out: Dict[Hashable, float] = {}
        for name, v in self.values.items():
            if isinstance(name, tuple) and name and name[0] == prefix:
                out[name[1] if len(name) == 2 else name[1:]] = v
        return out


def check_solution(model: LpModel, solution: LpSolution) -> float:
    return model.max_violation(solution.values)


# ============================================================
# 求解
# ============================================================

def solve(model: LpModel, backend: Optional[str] = None,
          settings: Optional[LpSettings] = None) -> LpSolution:
    """
    LPを解く

    Args:
        model: LPモデル
        backend: 'simplex' / 'highs' / 'auto'（省略時は設定値）
        settings: 省略時はモジュール既定設定

    Raises:
        NumericalFailure: 反復上限・数値破綻
    """
    cfg = settings or SETTINGS
    chosen = backend or cfg.backend
    if chosen == 'auto':
        finite = sum(1 for hi in model._hi if not math.isinf(hi))
        rows = model.num_constraints + finite
        chosen = 'highs' if rows * (model.num_variables + 2 * rows) > cfg.auto_threshold else 'simplex'
    if cfg.dump_dir:
        _dump(model, cfg.dump_dir)
    if chosen == 'highs':
        result = _solve_highs(model)
    elif chosen == 'simplex':
        result = _solve_simplex(model, cfg)
    else:
        raise InvalidParameter(f"unknown LP backend '{chosen}'")
    logger.debug(f"LP {model.name}: {model.num_variables} vars, {model.num_constraints} rows, "
                  f"{result.backend} -> {result.status.value} obj={result.objective}")
    return result


def _dump(model: LpModel, directory: str) -> None:
    with _dump_lock:
        idx = next(_dump_counter)
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    (path / f"{_lp_name(model.name)}_{idx:05d}.lp").write_text(model.to_lp_text(), encoding='utf-8')


def _objective_vector(model: LpModel) -> np.ndarray:
    c = np.zeros(model.num_variables)
    for name, coef in model.objective.items():
        c[model._index[name]] = coef
    return c


def _finish(model: LpModel, x: np.ndarray, backend: str, iterations: int) -> LpSolution:
    values = {name: float(x[i]) for i, name in enumerate(model._names)}
    objective = float(_objective_vector(model) @ x)
    return LpSolution(LpStatus.OPTIMAL, values, objective, backend, iterations)


def _solve_highs(model: LpModel) -> LpSolution:
    n = model.num_variables
    c = _objective_vector(model)
    if model.sense == 'max':
        c = -c
    ub_rows, ub_cols, ub_vals, b_ub = [], [], [], []
    eq_rows, eq_cols, eq_vals, b_eq = [], [], [], []
    for con in model.constraints:
        if con.sense == '==':
            r = len(b_eq)
            for name, coef in con.coeffs:
                eq_rows.append(r); eq_cols.append(model._index[name]); eq_vals.append(coef)
            b_eq.append(con.rhs)
        else:
            sign = 1.0 if con.sense == '<=' else -1.0
            r = len(b_ub)
            for name, coef in con.coeffs:
                ub_rows.append(r); ub_cols.append(model._index[name]); ub_vals.append(sign * coef)
            b_ub.append(sign * con.rhs)
    A_ub = coo_matrix((ub_vals, (ub_rows, ub_cols)), shape=(len(b_ub), n)).tocsr() if b_ub else None
    A_eq = coo_matrix((eq_vals, (eq_rows, eq_cols)), shape=(len(b_eq), n)).tocsr() if b_eq else None
    bounds = [(lo, None if math.isinf(hi) else hi) for lo, hi in zip(model._lo, model._hi)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub or None, A_eq=A_eq, b_eq=b_eq or None,
                  bounds=bounds, method='highs')
    iterations = int(getattr(res, 'nit', 0) or 0)
    if res.status == 0:
        return _finish(model, np.asarray(res.x, dtype=float), 'highs', iterations)
    if res.status == 2:
        return LpSolution(LpStatus.INFEASIBLE, backend='highs', iterations=iterations)
    if res.status == 3:
        return LpSolution(LpStatus.UNBOUNDED, backend='highs', iterations=iterations)
    raise NumericalFailure(f"HiGHS failed on {model.name}: {res.message}")


class _Tableau:
    """二段階単体法の密なタブロー（最大化形）"""

    def __init__(self, T: np.ndarray, basis: List[int], settings: LpSettings):
        self.T = T
        self.basis = basis
        self.settings = settings
        self.iterations = 0

    def pivot(self, r: int, e: int) -> None:
        T = self.T
        T[r, :] /= T[r, e]
        col = T[:, e].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r, :])
        T[np.abs(T) < 1e-13] = 0.0
        self.basis[r] = e
        self.iterations += 1

    def run(self, c: np.ndarray, allowed: np.ndarray) -> str:
        tol = self.settings.tolerance
        degenerate = 0
        while True:
            if self.iterations >= self.settings.max_iterations:
                raise NumericalFailure(f"simplex iteration cap {self.settings.max_iterations} reached")
            T = self.T
            d = c - c[self.basis] @ T[:, :-1]
            d[~allowed] = 0.0
            candidates = np.flatnonzero(d > tol)
            if candidates.size == 0:
                return 'optimal'
            if degenerate > self.settings.degeneracy_threshold:
                e = int(candidates[0])
            else:
                e = int(candidates[np.argmax(d[candidates])])
            col = T[:, e]
            positive = col > tol
            if not positive.any():
                return 'unbounded'
            ratios = np.full(T.shape[0], np.inf)
            ratios[positive] = T[positive, -1] / col[positive]
            rmin = ratios.min()
            ties = np.flatnonzero(ratios <= rmin + tol * (1.0 + abs(rmin)))
            r = int(min(ties, key=lambda i: self.basis[i]))
            degenerate = degenerate + 1 if rmin <= tol else 0
            self.pivot(r, e)


def _solve_simplex(model: LpModel, settings: LpSettings) -> LpSolution:
    n = model.num_variables
    lo = np.asarray(model._lo, dtype=float)
    tol = settings.tolerance

    # x = lo + x'、上限は行として追加
    rows: List[Tuple[np.ndarray, str, float]] = []
    for con in model.constraints:
        a = np.zeros(n)
        for name, coef in con.coeffs:
            a[model._index[name]] = coef
        rows.append((a, con.sense, con.rhs - float(a @ lo)))
    for i, hi in enumerate(model._hi):
        if not math.isinf(hi):
            a = np.zeros(n)
            a[i] = 1.0
            rows.append((a, '<=', hi - lo[i]))

    normalized = []
    for a, sense, b in rows:
        if b < 0:
            a, b = -a, -b
            sense = {'<=': '>=', '>=': '<=', '==': '=='}[sense]
        normalized.append((a, sense, b))

    m = len(normalized)
    n_slack = sum(1 for _, s, _ in normalized if s in ('<=', '>='))
    n_art = sum(1 for _, s, _ in normalized if s in ('>=', '=='))
    ncols = n + n_slack + n_art
    T = np.zeros((m, ncols + 1))
    basis: List[int] = []
    slack_col, art_col = n, n + n_slack
    artificial = np.zeros(ncols, dtype=bool)
    for r, (a, sense, b) in enumerate(normalized):
        T[r, :n] = a
        T[r, -1] = b
        if sense == '<=':
            T[r, slack_col] = 1.0
            basis.append(slack_col)
            slack_col += 1
        else:
            if sense == '>=':
                T[r, slack_col] = -1.0
                slack_col += 1
            T[r, art_col] = 1.0
            artificial[art_col] = True
            basis.append(art_col)
            art_col += 1

    tab = _Tableau(T, basis, settings)
    if n_art:
        c1 = np.where(artificial, -1.0, 0.0)
        tab.run(c1, np.ones(ncols, dtype=bool))
        infeasibility = -float(c1[tab.basis] @ tab.T[:, -1])
        scale = 1.0 + max((b for _, _, b in normalized), default=0.0)
        if infeasibility > 10 * tol * scale:
            return LpSolution(LpStatus.INFEASIBLE, backend='simplex', iterations=tab.iterations)
        redundant = []
        for r in range(len(tab.basis)):
            if not artificial[tab.basis[r]]:
                continue
            candidates = np.flatnonzero((np.abs(tab.T[r, :-1]) > tol) & ~artificial)
            if candidates.size:
                tab.pivot(r, int(candidates[0]))
            else:
                redundant.append(r)
        if redundant:
            tab.T = np.delete(tab.T, redundant, axis=0)
            tab.basis = [b for i, b in enumerate(tab.basis) if i not in set(redundant)]

    c2 = np.zeros(ncols)
    c2[:n] = _objective_vector(model) * (1.0 if model.sense == 'max' else -1.0)
    outcome = tab.run(c2, ~artificial)
    if outcome == 'unbounded':
        return LpSolution(LpStatus.UNBOUNDED, backend='simplex', iterations=tab.iterations)

    xprime = np.zeros(ncols)
    for r, b in enumerate(tab.basis):
        xprime[b] = tab.T[r, -1]
    x = lo + xprime[:n]
    hi = np.asarray(model._hi, dtype=float)
    x = np.minimum(np.maximum(x, lo), hi)
    return _finish(model, x, 'simplex', tab.iterations)
