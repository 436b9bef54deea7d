"""
报表输出

两个出口：
  - 分隔文本（机器读取，全精度，可由 parse_delimited 还原）；
  - markdown 表格（人工阅读，按 precision 四舍五入，不可用值写 n/a）。
"""

import io
import os
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .analytics import ClusterProfile, CrossTab, StatsSummary, ordinal_label
from .models import ClusterAssignment

NA = "n/a"

STATS_ROWS: Tuple[Tuple[str, str], ...] = (
    ("mean", "mean"),
    ("std.dev.", "std"),
    ("mean/std", "ratio"),
    ("min", "min"),
    ("max", "max"),
    ("Q1", "q1"),
    ("median", "median"),
    ("Q3", "q3"),
    ("skewness", "skewness"),
    ("kurtosis", "kurtosis"),
)


class ReportTable(BaseModel):
    model_config = ConfigDict(frozen=True)

    title: str
    corner: str = ""
    headers: List[str]
    row_labels: List[str]
    values: List[List[Optional[float]]]
    precision: int = Field(default=2, ge=0)

    @model_validator(mode="after")
    def _rectangular(self) -> "ReportTable":
        if len(self.values) != len(self.row_labels):
            raise ValueError("行标签数与行数不一致")
        for label, row in zip(self.row_labels, self.values):
            if len(row) != len(self.headers):
                raise ValueError(f"行 {label!r} 有 {len(row)} 个单元格，表头有 {len(self.headers)} 列")
        return self

    def _fmt(self, v: Optional[float], full: bool) -> str:
        if v is None:
            return NA
        if self.precision == 0 and float(v).is_integer():
            return str(int(v))
        return repr(float(v)) if full else f"{v:.{self.precision}f}"

    def cells(self, full: bool = False) -> List[List[str]]:
        return [[self._fmt(v, full) for v in row] for row in self.values]

    def to_delimited(self, delimiter: str = ",") -> str:
        frame = pd.DataFrame(self.cells(full=True), columns=self.headers)
        frame.insert(0, self.corner or "label", self.row_labels)
        buf = io.StringIO()
        frame.to_csv(buf, sep=delimiter, index=False, lineterminator="\n")
        return buf.getvalue()

    def to_markdown(self) -> str:
        header = [self.corner] + list(self.headers)
        body = [[label] + row for label, row in zip(self.row_labels, self.cells())]
        widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
        def line(row: List[str]) -> str:
            return "| " + " | ".join(c.ljust(w) for c, w in zip(row, widths)) + " |"
        out = [f"### {self.title}", "", line(header), "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
        out.extend(line(r) for r in body)
        return "\n".join(out) + "\n"


def parse_delimited(text: str, delimiter: str = ",", title: str = "", precision: int = 2) -> ReportTable:
    frame = pd.read_csv(io.StringIO(text), sep=delimiter, dtype=str, keep_default_na=False)
    corner = str(frame.columns[0])
    headers = [str(c) for c in frame.columns[1:]]
    rows = [[None if c == NA else float(c) for c in row[1:]] for row in frame.itertuples(index=False)]
    return ReportTable(
        title=title,
        corner="" if corner == "label" else corner,
        headers=headers,
        row_labels=list(frame.iloc[:, 0]),
        values=rows,
        precision=precision,
    )


def render_stats_table(
    summaries: Dict[str, StatsSummary],
    title: str = "Main statistical indicators of the innovation and performance variables",
) -> ReportTable:
    if not summaries:
        raise ValueError("至少需要一个变量的统计量")
    variables = list(summaries)
    return ReportTable(
        title=title,
        headers=variables,
        row_labels=[label for label, _ in STATS_ROWS],
        values=[[getattr(summaries[v], field) for v in variables] for _, field in STATS_ROWS],
        precision=2,
    )


def render_crosstab(
    ct: CrossTab,
    labels: Tuple[str, str] = ("Innovation", "Performance"),
    title: str = "Distribution of entities among the clusters",
) -> ReportTable:
    """H×K 网格，末行/末列为合计；总计为 0 的表在上游就会被拒绝"""
    rows: List[List[Optional[float]]] = [list(r) + [t] for r, t in zip(ct.counts, ct.row_totals)]
    rows.append(list(ct.col_totals) + [ct.grand_total])
    row_names = ct.row_names or [ordinal_label(h) for h in range(1, len(ct.counts) + 1)]
    col_names = ct.col_names or [ordinal_label(k) for k in range(1, len(ct.col_totals) + 1)]
    return ReportTable(
        title=title,
        corner=f"{labels[0]} \\ {labels[1]}",
        headers=list(col_names) + ["Tot"],
        row_labels=list(row_names) + ["Tot"],
        values=rows,
        precision=0,
    )


def render_cardinality_table(
    assignments: Sequence[ClusterAssignment],
    title: str = "Cell cardinalities per weighting",
) -> ReportTable:
    """每个权重方案一行（情景 I 即每个变量一行），每个单元一列"""
    n_cells = max(a.n_cells for a in assignments)
    rows = []
    for a in assignments:
        counts = list(a.cardinalities) + [0] * (n_cells - a.n_cells)
        rows.append(counts + [sum(counts), len(a.tie_flags)])
    return ReportTable(
        title=title,
        corner="weighting",
        headers=[ordinal_label(k) for k in range(1, n_cells + 1)] + ["Tot", "ties"],
        row_labels=[f"{a.scope}:{a.label}" for a in assignments],
        values=rows,
        precision=0,
    )


def _profile_rows(prefix: str, summaries: Dict[str, StatsSummary], variables: Sequence[str]):
    def pick(field: str) -> List[Optional[float]]:
        return [getattr(summaries[v], field) if v in summaries else None for v in variables]
    return [
        (f"{prefix} mean", pick("mean")),
        (f"{prefix} std.dev.", pick("std")),
        (f"{prefix} mean/std", pick("ratio")),
    ]


def render_profile_table(
    profiles: Sequence[ClusterProfile],
    whole: Dict[str, StatsSummary],
    variables: Sequence[str],
    title: str = "Statistical characteristics inside the clusters",
) -> ReportTable:
    rows = _profile_rows("Ent.", whole, variables)
    for p in profiles:
        rows.extend(_profile_rows(f"{ordinal_label(p.cell)} (n={p.size})", p.summaries, variables))
    return ReportTable(
        title=title,
        headers=list(variables),
        row_labels=[label for label, _ in rows],
        values=[vals for _, vals in rows],
        precision=2,
    )


def write_table(table: ReportTable, out_dir: str, stem: str, delimiter: str = ",") -> List[str]:
    """写出 <stem>.csv 与 <stem>.md，返回相对文件名"""
    os.makedirs(out_dir, exist_ok=True)
    names = [f"{stem}.csv", f"{stem}.md"]
    with open(os.path.join(out_dir, names[0]), "w", encoding="utf-8", newline="") as f:
        f.write(table.to_delimited(delimiter))
    with open(os.path.join(out_dir, names[1]), "w", encoding="utf-8", newline="") as f:
        f.write(table.to_markdown())
    return names
