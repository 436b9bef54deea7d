import math
from fractions import Fraction
from typing import Dict, List, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

VariableGroup = Literal["innovation", "growth", "profitability", "productivity", "auxiliary"]
PERFORMANCE_GROUPS: Tuple[str, ...] = ("growth", "profitability", "productivity")

WEIGHT_SUM_TOLERANCE = 1e-12


class VariableId(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = Field(..., description="变量符号，如 TIAX、S/E")
    group: VariableGroup = Field(..., description="所属视角：innovation / growth / profitability / productivity / auxiliary")

    @field_validator("name")
    @classmethod
    def _name_non_empty(cls, v: str) -> str:
        v = v.strip()
        if not v:
            raise ValueError("变量名不能为空")
        return v

    @property
    def is_performance(self) -> bool:
        return self.group in PERFORMANCE_GROUPS


class Window(BaseModel):
    """闭区间年份窗口，如 2006-2007"""
    model_config = ConfigDict(frozen=True)

    start: int
    end: int

    @model_validator(mode="after")
    def _ordered(self) -> "Window":
        if self.start > self.end:
            raise ValueError(f"窗口起始年 {self.start} 晚于结束年 {self.end}")
        return self

    @classmethod
    def parse(cls, text: str) -> "Window":
        parts = [p.strip() for p in str(text).split("-") if p.strip()]
        if len(parts) == 1:
            return cls(start=int(parts[0]), end=int(parts[0]))
        if len(parts) != 2:
            raise ValueError(f"无法解析年份窗口：{text!r}")
        return cls(start=int(parts[0]), end=int(parts[1]))

    def years(self) -> List[int]:
        return list(range(self.start, self.end + 1))

    def overlaps(self, other: "Window") -> bool:
        return self.start <= other.end and other.start <= self.end

    def __str__(self) -> str:
        return f"{self.start}-{self.end}"


class PanelDataset(BaseModel):
    """entity × year × variable 原始数据立方体；None 表示缺失"""
    model_config = ConfigDict(frozen=True)

    entities: List[str]
    years: List[int]
    variables: List[str]
    values: Dict[str, Dict[int, Dict[str, Optional[float]]]] = Field(default_factory=dict)
    industries: Dict[str, str] = Field(default_factory=dict)

    @field_validator("entities")
    @classmethod
    def _unique_entities(cls, v: List[str]) -> List[str]:
        if len(set(v)) != len(v):
            raise ValueError("entity id 必须唯一")
        return v

    @field_validator("years")
    @classmethod
    def _increasing_years(cls, v: List[int]) -> List[int]:
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("years 必须严格递增")
        return v

    @model_validator(mode="after")
    def _keys_declared(self) -> "PanelDataset":
        ents, yrs, vs = set(self.entities), set(self.years), set(self.variables)
        for e, by_year in self.values.items():
            if e not in ents:
                raise ValueError(f"未声明的 entity：{e}")
            for y, row in by_year.items():
                if y not in yrs:
                    raise ValueError(f"未声明的年份：{y}")
                extra = set(row) - vs
                if extra:
                    raise ValueError(f"未声明的变量：{sorted(extra)}")
        return self

    def value(self, entity: str, year: int, variable: str) -> Optional[float]:
        return self.values.get(entity, {}).get(year, {}).get(variable)

    @property
    def cell_count(self) -> int:
        return sum(
            1
            for by_year in self.values.values()
            for row in by_year.values()
            for v in row.values()
            if v is not None
        )


class AveragedRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    entity: str
    values: Dict[str, float]
    industry: Optional[str] = None


class VariableMoments(BaseModel):
    model_config = ConfigDict(frozen=True)

    mean: float
    std: float = Field(..., ge=0.0)
    min: Optional[float] = None
    max: Optional[float] = None
    skewness: Optional[float] = Field(default=None, description="目标偏度（>0 时用对数正态形状）")

    @model_validator(mode="after")
    def _bounds_ordered(self) -> "VariableMoments":
        if self.min is not None and self.max is not None and self.min > self.max:
            raise ValueError("min 不能大于 max")
        return self


class SynthSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    entity_count: int = Field(..., ge=2)
    variables: Dict[str, VariableMoments]
    seed: int = 0
    years: List[int] = Field(default_factory=lambda: [2006, 2007, 2008, 2009, 2010])
    innovation_window: Window = Window(start=2006, end=2007)
    performance_window: Window = Window(start=2008, end=2010)
    year_noise: float = Field(default=0.1, ge=0.0, description="年度扰动幅度（相对 std）")
    industries: List[str] = Field(default_factory=list)
    tolerance: float = Field(default=0.15, gt=0.0, description="样本矩相对目标的允许偏差")
    entity_prefix: str = "E"

    @field_validator("variables")
    @classmethod
    def _non_empty(cls, v: Dict[str, VariableMoments]) -> Dict[str, VariableMoments]:
        if not v:
            raise ValueError("至少需要一个变量")
        return v


class NormalizedMatrix(BaseModel):
    """按 (x - m_x) / (M_x - m_x) 归一化后的矩阵；provenance 记录 (m_x, M_x)"""
    model_config = ConfigDict(frozen=True)

    entities: List[str]
    variables: List[str]
    values: Dict[str, Dict[str, float]]
    provenance: Dict[str, Tuple[float, float]]
    reference: Literal["sample", "external"] = "sample"

    @model_validator(mode="after")
    def _unit_interval(self) -> "NormalizedMatrix":
        if len(set(self.entities)) != len(self.entities):
            raise ValueError("entity id 必须唯一")
        for var in self.variables:
            if var not in self.provenance:
                raise ValueError(f"变量 {var} 缺少 (m_x, M_x) 记录")
            col = []
            for e in self.entities:
                x = self.values.get(e, {}).get(var)
                if x is None:
                    raise ValueError(f"缺少 ({e}, {var}) 的归一化值")
                if not (0.0 <= x <= 1.0):
                    raise ValueError(f"({e}, {var}) = {x} 不在 [0,1]")
                col.append(x)
            if self.reference == "sample" and col and (min(col) != 0.0 or max(col) != 1.0):
                raise ValueError(f"变量 {var} 的归一化值未同时取到 0 与 1")
        return self

    def as_array(self, variables: Optional[Sequence[str]] = None) -> np.ndarray:
        cols = list(variables) if variables is not None else self.variables
        return np.array([[self.values[e][v] for v in cols] for e in self.entities], dtype=float)

    def column(self, variable: str) -> np.ndarray:
        return np.array([self.values[e][variable] for e in self.entities], dtype=float)


class WeightScheme(BaseModel):
    """权重方案（α 或 β）：非负且和为 1"""
    model_config = ConfigDict(frozen=True)

    label: str = ""
    scope: List[str]
    weights: Dict[str, float]

    @model_validator(mode="after")
    def _simplex(self) -> "WeightScheme":
        if not self.scope:
            raise ValueError("scope 不能为空")
        if set(self.weights) != set(self.scope):
            missing = sorted(set(self.scope) - set(self.weights))
            extra = sorted(set(self.weights) - set(self.scope))
            raise ValueError(f"权重与 scope 不一致：缺少 {missing}，多余 {extra}")
        for k, w in self.weights.items():
            if not math.isfinite(w) or w < 0:
                raise ValueError(f"权重 {k}={w} 必须为非负有限数")
        total = math.fsum(self.weights.values())
        if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise ValueError(f"权重之和为 {total!r}，必须为 1")
        return self

    @classmethod
    def from_fractions(cls, weights: Mapping[str, Fraction], label: str = "") -> "WeightScheme":
        if sum(weights.values(), Fraction(0)) != 1:
            raise ValueError("有理权重之和必须恰为 1")
        return cls(label=label, scope=list(weights), weights={k: float(w) for k, w in weights.items()})

    @classmethod
    def one_hot(cls, variable: str, scope: Sequence[str]) -> "WeightScheme":
        return cls(label=variable, scope=list(scope), weights={v: (1.0 if v == variable else 0.0) for v in scope})

    @classmethod
    def uniform(cls, scope: Sequence[str], label: str = "") -> "WeightScheme":
        n = len(scope)
        return cls.from_fractions({v: Fraction(1, n) for v in scope}, label=label)

    def vector(self, variables: Optional[Sequence[str]] = None) -> np.ndarray:
        cols = list(variables) if variables is not None else self.scope
        return np.array([self.weights[v] for v in cols], dtype=float)

    @property
    def is_one_hot(self) -> bool:
        return sum(1 for w in self.weights.values() if w == 1.0) == 1 and \
            all(w in (0.0, 1.0) for w in self.weights.values())


class CentroidSet(BaseModel):
    """标量质心 φ_h / ψ_k，位于 (0,1) 且严格递增"""
    model_config = ConfigDict(frozen=True)

    centroids: List[float]

    @field_validator("centroids")
    @classmethod
    def _increasing_open_unit(cls, v: List[float]) -> List[float]:
        for c in v:
            if not (0.0 < c < 1.0):
                raise ValueError(f"质心 {c} 必须位于 (0,1)")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("质心必须严格递增")
        return v

    @classmethod
    def uniform_grid(cls, count: int = 4) -> "CentroidSet":
        """[0,1] 的均匀分割：{1/(H+1), ..., H/(H+1)}"""
        return cls(centroids=[float(Fraction(h, count + 1)) for h in range(1, count + 1)])

    def __len__(self) -> int:
        return len(self.centroids)


class ClusterAssignment(BaseModel):
    """entity → 单元编号（1..H）；tie_flags 记录最小距离被多个质心同时取到的 entity"""
    model_config = ConfigDict(frozen=True)

    label: str = ""
    scope: str = ""
    n_cells: int = Field(..., ge=1)
    entities: List[str]
    assignment: Dict[str, int]
    tie_flags: List[str] = Field(default_factory=list)
    cardinalities: List[int]

    @model_validator(mode="after")
    def _partition(self) -> "ClusterAssignment":
        if set(self.assignment) != set(self.entities) or len(set(self.entities)) != len(self.entities):
            raise ValueError("assignment 必须恰好覆盖每个 entity 一次")
        counts = [0] * self.n_cells
        for e, cell in self.assignment.items():
            if not (1 <= cell <= self.n_cells):
                raise ValueError(f"{e} 的单元编号 {cell} 超出 1..{self.n_cells}")
            counts[cell - 1] += 1
        if counts != list(self.cardinalities):
            raise ValueError("cardinalities 与 assignment 不一致")
        if not set(self.tie_flags) <= set(self.entities):
            raise ValueError("tie_flags 含未知 entity")
        return self


class FilterPolicy(BaseModel):
    model_config = ConfigDict(frozen=True)

    enabled: bool = True
    deviation_threshold: float = Field(default=3.0, gt=0, description="稳健偏离 |x-median|/IQR 的剔除阈值 t")
    collapse_share: float = Field(default=0.75, gt=0, le=1, description="情景 I 第一单元占比阈值 f")
    min_deviation: float = Field(default=1.5, ge=0, description="候选 entity 至少需要的稳健偏离")
    max_fraction: float = Field(default=0.25, gt=0, le=1, description="最多允许剔除的样本比例")


class IngestSchema(BaseModel):
    model_config = ConfigDict(frozen=True)

    entity_column: str = "entity"
    year_column: str = "year"
    industry_column: Optional[str] = None
    columns: Dict[str, str] = Field(default_factory=dict, description="列名 → VariableId")
    ignore_columns: List[str] = Field(default_factory=list)
    ignore_unknown: bool = False
    delimiter: str = ","

    @field_validator("delimiter")
    @classmethod
    def _known_delimiter(cls, v: str) -> str:
        if v in ("tab", "\\t"):
            return "\t"
        if v not in (",", "\t", ";", "auto"):
            raise ValueError(f"不支持的分隔符：{v!r}")
        return v
