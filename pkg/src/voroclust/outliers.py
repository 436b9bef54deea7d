"""
基于情景 I 的离群值剔除

离群值的表现是把大多数 entity 压进第一个单元。每轮：
  1. 在保留样本上重新归一化；
  2. 计算情景 I（每个变量 one-hot）下第一单元的最大占比；
  3. 计算每个 entity 的稳健偏离 max_x |x - median_x| / IQR_x；
  4. 偏离最大的 entity 若超过 deviation_threshold，或第一单元占比超过
     collapse_share（且其偏离至少为 min_deviation），则剔除并进入下一轮。
偏离相同者按 entity id 取最小，保证结果与输入顺序无关。
"""

import math
from typing import Dict, List, Literal, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from .clustering import DEFAULT_TIE_EPSILON, assign_cells
from .errors import EntityMismatchError, RunawayFilterError
from .models import CentroidSet, FilterPolicy, NormalizedMatrix, WeightScheme
from .transform import matrix_records, minmax_normalize


class RemovedEntity(BaseModel):
    model_config = ConfigDict(frozen=True)

    entity: str
    iteration: int
    reason: Literal["deviation", "collapse"]
    deviation: float
    variable: str
    collapse_share: float


class FilterResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    initial_count: int
    retained: List[str]
    removed: List[RemovedEntity]


def robust_deviations(matrices: Sequence[NormalizedMatrix]) -> Dict[str, Tuple[float, str]]:
    """entity → (最大稳健偏离, 对应变量)；IQR 为 0 的变量不参与"""
    best: Dict[str, Tuple[float, str]] = {}
    for m in matrices:
        for var in m.variables:
            col = m.column(var)
            q1, med, q3 = np.quantile(col, [0.25, 0.5, 0.75])
            iqr = q3 - q1
            if iqr <= 0:
                continue
            dev = np.abs(col - med) / iqr
            for e, d in zip(m.entities, dev):
                if e not in best or d > best[e][0]:
                    best[e] = (float(d), var)
    return best


def _per_matrix(
    centroids: Union[None, CentroidSet, Sequence[CentroidSet]],
    count: int,
) -> List[CentroidSet]:
    if centroids is None:
        return [CentroidSet.uniform_grid()] * count
    if isinstance(centroids, CentroidSet):
        return [centroids] * count
    if len(centroids) != count:
        raise ValueError(f"质心集合数 {len(centroids)} 与矩阵数 {count} 不一致")
    return list(centroids)


def collapse_share(
    matrices: Sequence[NormalizedMatrix],
    centroids: Union[None, CentroidSet, Sequence[CentroidSet]] = None,
    tie_epsilon: float = DEFAULT_TIE_EPSILON,
) -> Tuple[float, str]:
    """情景 I 下各变量第一单元占比的最大值；centroids 可逐矩阵给出"""
    share, where = 0.0, ""
    for m, cs in zip(matrices, _per_matrix(centroids, len(matrices))):
        n = len(m.entities)
        for var in m.variables:
            a = assign_cells(m, cs, WeightScheme.one_hot(var, m.variables), tie_epsilon=tie_epsilon)
            s = a.cardinalities[0] / n
            if s > share:
                share, where = s, var
    return share, where


def outlier_filter(
    matrices: Sequence[NormalizedMatrix],
    policy: FilterPolicy,
    centroids: Union[None, CentroidSet, Sequence[CentroidSet]] = None,
    tie_epsilon: float = DEFAULT_TIE_EPSILON,
) -> FilterResult:
    """centroids 为单个 CentroidSet（所有矩阵共用）或与 matrices 一一对应的列表"""
    if not matrices:
        raise ValueError("至少需要一个归一化矩阵")
    centroids = _per_matrix(centroids, len(matrices))
    entities = sorted(matrices[0].entities)
    for m in matrices[1:]:
        if sorted(m.entities) != entities:
            raise EntityMismatchError("各变量集合的归一化矩阵 entity 不一致")

    n0 = len(entities)
    if not policy.enabled:
        return FilterResult(initial_count=n0, retained=entities, removed=[])

    limit = int(math.floor(policy.max_fraction * n0))
    retained = list(entities)
    removed: List[RemovedEntity] = []
    iteration = 0
    while len(retained) > 2:
        iteration += 1
        current = [minmax_normalize(matrix_records(m, retained), m.variables) for m in matrices]
        share, _ = collapse_share(current, centroids, tie_epsilon)
        devs = robust_deviations(current)
        if not devs:
            break
        entity, (dev, var) = min(devs.items(), key=lambda kv: (-kv[1][0], kv[0]))
        if dev <= policy.min_deviation:
            break
        if dev > policy.deviation_threshold:
            reason = "deviation"
        elif share > policy.collapse_share:
            reason = "collapse"
        else:
            break
        if len(removed) + 1 > limit:
            raise RunawayFilterError(
                f"剔除将超过上限 {limit}/{n0}（max_fraction={policy.max_fraction}），"
                f"已剔除 {[r.entity for r in removed]}"
            )
        removed.append(RemovedEntity(
            entity=entity,
            iteration=iteration,
            reason=reason,
            deviation=dev,
            variable=var,
            collapse_share=share,
        ))
        retained.remove(entity)

    return FilterResult(initial_count=n0, retained=retained, removed=removed)
