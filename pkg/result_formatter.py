# -*- coding: utf-8 -*-
"""
rbsc-kit - 結果フォーマッター
解とベンチ結果を端末向けの整形済みテキストにする
"""

import math
from typing import Any, Dict, List, Optional, Sequence


def _num(value: Optional[float], width: int, digits: int = 3) -> str:
    if value is None:
        return "-".rjust(width)
    if isinstance(value, float) and math.isinf(value):
        return "inf".rjust(width)
    if isinstance(value, int):
        return f"{value:>{width}d}"
    return f"{value:>{width}.{digits}f}"


class ResultFormatter:
    """解・ベンチ結果の表示"""

    def __init__(self, width: int = 100):
        self.width = width
        self.separator = "=" * width
        self.sub_separator = "-" * width

    def format_solution(self, title: str, cost: int, chosen: Sequence[int],
                        details: Optional[Dict[str, Any]] = None) -> str:
        """一つの解の要約"""
        output = ["", self.separator, f"rbsc-kit - {title}", self.separator]
        output.append(f"  コスト: {cost}")
        shown = ", ".join(str(c) for c in list(chosen)[:30])
        more = f" ... (+{len(chosen) - 30})" if len(chosen) > 30 else ""
        output.append(f"  選択: [{shown}{more}]")
        for key, value in (details or {}).items():
            if isinstance(value, float):
                output.append(f"  {key}: {value:.4g}")
            elif isinstance(value, (int, str, bool)) or value is None:
                output.append(f"  {key}: {value}")
        output.append(self.separator)
        return "\n".join(output)

    def format_bench_table(self, report: Dict[str, Any]) -> str:
        """ベンチ結果の表（行はダイジェスト順）"""
        rows: List[Dict[str, Any]] = report.get('rows', [])
        summary: Dict[str, Any] = report.get('summary', {})
        output = ["", self.separator,
                  f"rbsc-kit - ベンチマーク結果 (seed={report.get('seed')}, {len(rows)}件)",
                  self.separator]
        header = (f"{'instance':<18} {'digest':<10} {'solver':<8} {'status':<22} "
                  f"{'cost':>6} {'OPT':>6} {'ratio':>8} {'bound':>10} {'time(s)':>8}")
        output.append(header)
        output.append(self.sub_separator)
        for row in rows:
            flag = " !" if row.get('violation') else ""
            output.append(
                f"{row.get('name', '')[:18]:<18} {row.get('digest', '')[:10]:<10} "
                f"{row.get('solver', '')[:8]:<8} {row.get('status', '')[:22]:<22} "
                f"{_num(row.get('cost'), 6)} {_num(row.get('opt'), 6)} "
                f"{_num(row.get('ratio'), 8)} {_num(row.get('bound'), 10, 1)} "
                f"{_num(row.get('wall_time'), 8)}{flag}"
            )
        output.append(self.sub_separator)
        output.append(f"  最大比: {_num(summary.get('max_ratio'), 0)}   "
                      f"平均比: {_num(summary.get('mean_ratio'), 0)}   "
                      f"上界違反: {summary.get('violations', 0)}")
        counts = summary.get('status_counts', {})
        if counts:
            output.append("  状態: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
        output.append(self.separator)
        return "\n".join(output)
