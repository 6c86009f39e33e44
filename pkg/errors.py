# -*- coding: utf-8 -*-
"""
rbsc-kit - 例外定義
ソルバー・生成器・CLIで共通に使う例外クラス群
"""

from typing import Optional


class RbscKitError(Exception):
    """rbsc-kit の基底例外（exit_code は CLI の終了コード）"""
    exit_code = 1


class InvalidParameter(RbscKitError):
    """パラメータ指定の誤り"""
    exit_code = 3


class StructuralError(RbscKitError):
    """インスタンスの構造不変条件違反"""
    exit_code = 3


class ParseError(RbscKitError):
    """インスタンスファイルの解析失敗（行・フィールド情報付き）"""
    exit_code = 3

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        context = []
        if line is not None:
            context.append(f"line {line}")
        if field is not None:
            context.append(f"field '{field}'")
        if context:
            message = f"{message} ({', '.join(context)})"
        super().__init__(message)


class NumericalFailure(RbscKitError):
    """LPソルバーの反復上限到達・数値破綻"""
    exit_code = 4


class UnknownVariable(RbscKitError):
    """未宣言変数を参照する制約"""
    exit_code = 3


class DegenerateInput(RbscKitError):
    """前処理で除去されるべき入力が残っている"""
    exit_code = 3


class InfeasibleInstance(RbscKitError):
    """実行可能解が存在しない"""
    exit_code = 2


class Uncoverable(InfeasibleInstance):
    """集合被覆で被覆不能な要素がある"""


class RoundingFailure(RbscKitError):
    """条件付き期待値法で非正ポテンシャルを実現できない（OPT推定値が小さすぎる）"""
    exit_code = 4


class RoundingExhausted(RbscKitError):
    """乱択丸めが試行上限まで成功しなかった"""
    exit_code = 4


class LiftingDegenerate(RbscKitError):
    """持ち上げ変数が被覆制約を満たしていない（LP解の破損）"""
    exit_code = 4


class CutLoopExhausted(RbscKitError):
    """切除平面ループが上限回数に到達"""
    exit_code = 4


class NotViolated(RbscKitError):
    """現在のLP点が追加しようとした切除平面を満たしている"""
    exit_code = 4


class DegenerateGraph(RbscKitError):
    """ギャップ構成で子を持たないORゲートが生じた"""
    exit_code = 4


class SizeLimit(RbscKitError):
    """全列挙オラクルのサイズ上限超過"""
    exit_code = 3
