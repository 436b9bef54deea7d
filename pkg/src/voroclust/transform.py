"""
Min-Max 归一化：x̄_j = (x_j - m_x) / (M_x - m_x)
"""

from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import DataValidationError, DegenerateRangeError, InsufficientDataError
from .models import AveragedRecord, NormalizedMatrix


def minmax_column(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    out = (x - lo) / (hi - lo)
    # 外部极值下，端点的舍入可能越出 [0,1] 一个 ulp
    return np.clip(out, 0.0, 1.0)


def minmax_normalize(
    records: Sequence[AveragedRecord],
    variables: Iterable[str],
    bounds: Optional[Mapping[str, Tuple[float, float]]] = None,
) -> NormalizedMatrix:
    """
    逐变量归一化到 [0,1]，并在 provenance 中记录 (m_x, M_x)。

    bounds 给出时使用外部极值（例如剔除离群值之前的样本），
    此时不要求样本同时取到 0 与 1。
    """
    variables = list(variables)
    if len(records) < 2:
        raise InsufficientDataError(f"归一化至少需要 2 个 entity，当前 {len(records)}", module="transform")
    entities = [r.entity for r in records]
    values: Dict[str, Dict[str, float]] = {e: {} for e in entities}
    provenance: Dict[str, Tuple[float, float]] = {}

    for var in variables:
        x = np.array([r.values[var] for r in records], dtype=float)
        if bounds is not None:
            lo, hi = (float(b) for b in bounds[var])
            if x.min() < lo or x.max() > hi:
                raise DataValidationError(f"变量 {var} 超出外部极值 [{lo}, {hi}]", module="transform")
        else:
            lo, hi = float(x.min()), float(x.max())
        if hi <= lo:
            raise DegenerateRangeError(var, lo)
        col = minmax_column(x, lo, hi)
        for e, v in zip(entities, col):
            values[e][var] = float(v)
        provenance[var] = (lo, hi)

    return NormalizedMatrix(
        entities=entities,
        variables=variables,
        values=values,
        provenance=provenance,
        reference="sample" if bounds is None else "external",
    )


def matrix_records(matrix: NormalizedMatrix, entities: Optional[Sequence[str]] = None) -> list:
    """把归一化矩阵的子集还原成记录，便于在子样本上重新归一化"""
    keep = list(entities) if entities is not None else matrix.entities
    return [AveragedRecord(entity=e, values=dict(matrix.values[e])) for e in keep]
