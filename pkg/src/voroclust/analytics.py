"""
描述统计、两组划分的交叉表、各单元画像
"""

from typing import Dict, List, Literal, Mapping, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import stats

from .errors import EntityMismatchError, InsufficientDataError
from .models import AveragedRecord, ClusterAssignment

MomentEstimator = Literal["sample", "population"]
# numpy.quantile 支持的插值方法
QuartileMethod = Literal[
    "inverted_cdf", "averaged_inverted_cdf", "closest_observation", "interpolated_inverted_cdf",
    "hazen", "weibull", "linear", "median_unbiased", "normal_unbiased",
    "lower", "higher", "midpoint", "nearest",
]


class StatsSummary(BaseModel):
    """None 表示该指标不可用（样本量不足或 σ = 0）"""
    model_config = ConfigDict(frozen=True)

    n: int
    mean: float
    std: Optional[float] = None
    ratio: Optional[float] = None
    min: float
    max: float
    q1: float
    median: float
    q3: float
    skewness: Optional[float] = None
    kurtosis: Optional[float] = None

    @model_validator(mode="after")
    def _ordered(self) -> "StatsSummary":
        if not (self.min <= self.q1 <= self.median <= self.q3 <= self.max):
            raise ValueError("需满足 min ≤ Q1 ≤ median ≤ Q3 ≤ max")
        if self.std is not None and self.std < 0:
            raise ValueError("σ 不能为负")
        return self


def ordinal_label(k: int) -> str:
    suffix = {1: "st", 2: "nd", 3: "rd"}.get(k if k < 20 else k % 10, "th")
    return f"{k}{suffix} cluster"


class CrossTab(BaseModel):
    model_config = ConfigDict(frozen=True)

    counts: List[List[int]]
    row_totals: List[int]
    col_totals: List[int]
    grand_total: int
    row_names: List[str] = Field(default_factory=list)
    col_names: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _margins(self) -> "CrossTab":
        arr = np.asarray(self.counts, dtype=int).reshape(len(self.counts), -1)
        if (arr < 0).any():
            raise ValueError("计数不能为负")
        if list(arr.sum(axis=1)) != list(self.row_totals) or list(arr.sum(axis=0)) != list(self.col_totals):
            raise ValueError("边际合计与计数不一致")
        if int(arr.sum()) != self.grand_total:
            raise ValueError("总计与计数不一致")
        return self


class ClusterProfile(BaseModel):
    model_config = ConfigDict(frozen=True)

    cell: int
    size: int
    summaries: Dict[str, StatsSummary] = Field(default_factory=dict)


def describe(
    values: Sequence[float],
    quartile_method: QuartileMethod = "linear",
    estimator: MomentEstimator = "sample",
) -> StatsSummary:
    """
    样本标准差（n-1）；偏度为调整后的 Fisher–Pearson 系数，峰度为超额峰度（正态 → 0）；
    四分位数按 numpy.quantile 的插值方法（默认 linear）。
    estimator="population" 时偏度/峰度改用有偏估计。
    """
    x = np.asarray(values, dtype=float)
    n = len(x)
    if n == 0:
        raise InsufficientDataError("describe() 需要至少一个值")
    q1, med, q3 = (float(q) for q in np.quantile(x, [0.25, 0.5, 0.75], method=quartile_method))
    constant = bool(np.all(x == x[0]))
    std = None
    if n >= 2:
        std = 0.0 if constant else float(x.std(ddof=1))
    usable = std is not None and std > 0
    bias = estimator == "population"
    mean = float(x.mean())
    return StatsSummary(
        n=n,
        mean=mean,
        std=std,
        ratio=mean / std if usable else None,
        min=float(x.min()),
        max=float(x.max()),
        q1=q1,
        median=med,
        q3=q3,
        skewness=float(stats.skew(x, bias=bias)) if usable and n >= 3 else None,
        kurtosis=float(stats.kurtosis(x, fisher=True, bias=bias)) if usable and n >= 4 else None,
    )


def describe_records(
    records: Sequence[AveragedRecord],
    variables: Sequence[str],
    quartile_method: QuartileMethod = "linear",
    estimator: MomentEstimator = "sample",
) -> Dict[str, StatsSummary]:
    return {
        v: describe([r.values[v] for r in records], quartile_method, estimator)
        for v in variables
    }


def _check_same_entities(a: Sequence[str], b: Sequence[str], what: str) -> None:
    if set(a) != set(b):
        raise EntityMismatchError(f"{what}：entity 集合不一致", module="analytics")


def crosstab(a: ClusterAssignment, b: ClusterAssignment) -> CrossTab:
    """counts[h][k] = 同时被 a 分到 h、被 b 分到 k 的 entity 数"""
    _check_same_entities(a.entities, b.entities, "crosstab")
    counts = np.zeros((a.n_cells, b.n_cells), dtype=int)
    rows = np.array([a.assignment[e] - 1 for e in a.entities], dtype=int)
    cols = np.array([b.assignment[e] - 1 for e in a.entities], dtype=int)
    np.add.at(counts, (rows, cols), 1)
    return CrossTab(
        counts=counts.tolist(),
        row_totals=counts.sum(axis=1).tolist(),
        col_totals=counts.sum(axis=0).tolist(),
        grand_total=int(counts.sum()),
        row_names=[ordinal_label(h) for h in range(1, a.n_cells + 1)],
        col_names=[ordinal_label(k) for k in range(1, b.n_cells + 1)],
    )


def group_crosstab(labels: Mapping[str, str], assignment: ClusterAssignment) -> CrossTab:
    """分组标签（如行业）× 单元的分布表"""
    _check_same_entities(list(labels), assignment.entities, "group_crosstab")
    groups = sorted(set(labels.values()))
    index = {g: i for i, g in enumerate(groups)}
    counts = np.zeros((len(groups), assignment.n_cells), dtype=int)
    for e in assignment.entities:
        counts[index[labels[e]], assignment.assignment[e] - 1] += 1
    return CrossTab(
        counts=counts.tolist(),
        row_totals=counts.sum(axis=1).tolist(),
        col_totals=counts.sum(axis=0).tolist(),
        grand_total=int(counts.sum()),
        row_names=groups,
        col_names=[ordinal_label(k) for k in range(1, assignment.n_cells + 1)],
    )


def profile_clusters(
    assignment: ClusterAssignment,
    records: Sequence[AveragedRecord],
    variables: Sequence[str],
    quartile_method: QuartileMethod = "linear",
    estimator: MomentEstimator = "sample",
) -> List[ClusterProfile]:
    """每个单元在原始（未归一化）平均值上的描述统计；空单元返回空画像"""
    _check_same_entities([r.entity for r in records], assignment.entities, "profile_clusters")
    by_cell: Dict[int, List[AveragedRecord]] = {k: [] for k in range(1, assignment.n_cells + 1)}
    for r in records:
        by_cell[assignment.assignment[r.entity]].append(r)
    profiles: List[ClusterProfile] = []
    for cell, members in by_cell.items():
        summaries = describe_records(members, variables, quartile_method, estimator) if members else {}
        profiles.append(ClusterProfile(cell=cell, size=len(members), summaries=summaries))
    return profiles
