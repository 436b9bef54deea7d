"""
加权非对称 Voronoi 划分

对归一化后的变量集合（创新 ℐ 或绩效 𝒫），entity j 到标量质心 c 的距离为
    d(j, c) = Σ_x w_x (x̄_j - c)^2 ,   w_x ≥ 0, Σ w_x = 1
于是 0 ≤ d ≤ 1。每个 entity 归入距离最小的质心所在单元；
最小值被多个质心同时取到时归入编号最小者，并记入 tie_flags。

质心是固定的（不做 k-means 式迭代更新），且为所有变量共享的标量。
"""

from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Dict, List, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import ConfigError, DataValidationError, EmptyCentroidsError, EntityMismatchError, ScopeMismatchError
from .models import PERFORMANCE_GROUPS, CentroidSet, ClusterAssignment, NormalizedMatrix, WeightScheme
from .registry import VariableRegistry, load_registry

ScenarioId = Literal["I", "II", "III", "custom"]
SCENARIO_IDS: Tuple[str, ...] = ("I", "II", "III", "custom")

# 0.3 与 0.2/0.4 的距离在二进制下相差约 1e-17，严格相等判不出平局
DEFAULT_TIE_EPSILON = 1e-12


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: ScenarioId
    innovation_centroids: CentroidSet = Field(default_factory=CentroidSet.uniform_grid)
    performance_centroids: CentroidSet = Field(default_factory=CentroidSet.uniform_grid)
    innovation_schemes: List[WeightScheme]
    performance_schemes: List[WeightScheme]
    tie_epsilon: float = Field(default=DEFAULT_TIE_EPSILON, ge=0.0)

    @model_validator(mode="after")
    def _scenario_shape(self) -> "ScenarioConfig":
        if not self.innovation_schemes or not self.performance_schemes:
            raise ValueError("创新与绩效都至少需要一个权重方案")
        schemes = self.innovation_schemes + self.performance_schemes
        if self.id == "I" and not all(s.is_one_hot for s in schemes):
            raise ValueError("情景 I 只允许 one-hot 权重")
        if self.id == "II" and not all(_is_uniform(s) for s in schemes):
            raise ValueError("情景 II 要求各变量权重相同")
        if self.id == "III" and not all(_is_uniform(s) for s in self.innovation_schemes):
            raise ValueError("情景 III 要求创新变量权重相同")
        if self.id != "I" and (len(self.innovation_schemes) != 1 or len(self.performance_schemes) != 1):
            raise ValueError(f"情景 {self.id} 只能各有一个创新/绩效权重方案")
        return self


class ScenarioResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    scenario: str
    innovation: List[ClusterAssignment]
    performance: List[ClusterAssignment]

    def all_assignments(self) -> List[ClusterAssignment]:
        return list(self.innovation) + list(self.performance)

    def tie_counts(self) -> Dict[str, int]:
        return {f"{a.scope}:{a.label}": len(a.tie_flags) for a in self.all_assignments()}


def _is_uniform(scheme: WeightScheme) -> bool:
    ws = list(scheme.weights.values())
    return max(ws) - min(ws) <= 1e-15


# ---------------- 距离 ----------------

def weighted_distance(point: Mapping[str, float], centroid: float, scheme: WeightScheme) -> float:
    """d = Σ_x w_x (x̄_x - c)^2，结果位于 [0,1]"""
    if set(point) != set(scheme.scope):
        raise ScopeMismatchError(f"点的变量 {sorted(point)} 与权重 scope {sorted(scheme.scope)} 不一致")
    if not (0.0 < centroid < 1.0):
        raise DataValidationError(f"质心 {centroid} 必须位于 (0,1)", module="clustering")
    x = np.array([point[v] for v in scheme.scope], dtype=float)
    if not np.all(np.isfinite(x)) or np.any((x < 0.0) | (x > 1.0)):
        raise DataValidationError(f"点的分量必须位于 [0,1]：{dict(point)}", module="clustering")
    return float(np.dot(scheme.vector(), (x - centroid) ** 2))


def distance_matrix(points: np.ndarray, weights: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """(n, p) 个点 × (H,) 个质心 → (n, H) 距离矩阵"""
    diff = points[:, :, None] - centroids[None, None, :]
    return np.einsum("p,nph->nh", weights, diff * diff)


def assign_cells(
    matrix: NormalizedMatrix,
    centroids: CentroidSet,
    scheme: WeightScheme,
    tie_epsilon: float = DEFAULT_TIE_EPSILON,
    scope: str = "",
    label: Optional[str] = None,
) -> ClusterAssignment:
    if len(centroids) == 0:
        raise EmptyCentroidsError("质心集合为空")
    missing = [v for v in scheme.scope if v not in matrix.variables]
    if missing:
        raise ScopeMismatchError(f"权重 scope 中的变量 {missing} 不在归一化矩阵中")

    c = np.asarray(centroids.centroids, dtype=float)
    d = distance_matrix(matrix.as_array(scheme.scope), scheme.vector(), c)
    dmin = d.min(axis=1)
    near = d <= dmin[:, None] + tie_epsilon
    cells = near.argmax(axis=1) + 1
    tied = near.sum(axis=1) > 1
    counts = np.bincount(cells - 1, minlength=len(c))

    return ClusterAssignment(
        label=scheme.label if label is None else label,
        scope=scope,
        n_cells=len(c),
        entities=list(matrix.entities),
        assignment={e: int(k) for e, k in zip(matrix.entities, cells)},
        tie_flags=sorted(e for e, t in zip(matrix.entities, tied) if t),
        cardinalities=[int(k) for k in counts],
    )


# ---------------- 情景 ----------------

def scenario_weights_exact(
    scenario: str,
    registry: Optional[VariableRegistry] = None,
) -> Tuple[Dict[str, Fraction], Dict[str, Fraction]]:
    """情景 II/III 的有理权重 (α, β)"""
    registry = registry or load_registry()
    innov = registry.innovation_variables()
    perf = registry.performance_variables()
    alpha = {v: Fraction(1, len(innov)) for v in innov}
    if scenario == "II":
        return alpha, {v: Fraction(1, len(perf)) for v in perf}
    if scenario == "III":
        groups = [g for g in PERFORMANCE_GROUPS if registry.variables_in_group(g)]
        beta: Dict[str, Fraction] = {}
        for v in perf:
            members = registry.variables_in_group(registry.group_of(v))
            beta[v] = Fraction(1, len(groups)) * Fraction(1, len(members))
        return alpha, beta
    raise ConfigError(f"情景 {scenario} 没有固定的有理权重")


def scenario_preset(
    scenario: str,
    registry: Optional[VariableRegistry] = None,
    innovation_centroids: Optional[CentroidSet] = None,
    performance_centroids: Optional[CentroidSet] = None,
    tie_epsilon: float = DEFAULT_TIE_EPSILON,
) -> ScenarioConfig:
    registry = registry or load_registry()
    innov = registry.innovation_variables()
    perf = registry.performance_variables()
    if scenario == "I":
        innovation_schemes = [WeightScheme.one_hot(v, innov) for v in innov]
        performance_schemes = [WeightScheme.one_hot(v, perf) for v in perf]
    elif scenario in ("II", "III"):
        alpha, beta = scenario_weights_exact(scenario, registry)
        innovation_schemes = [WeightScheme.from_fractions(alpha, label="innovation")]
        performance_schemes = [WeightScheme.from_fractions(beta, label="performance")]
    else:
        raise ConfigError(f"未知的预设情景：{scenario}（custom 需要显式权重）")
    return ScenarioConfig(
        id=scenario,
        innovation_centroids=innovation_centroids or CentroidSet.uniform_grid(),
        performance_centroids=performance_centroids or CentroidSet.uniform_grid(),
        innovation_schemes=innovation_schemes,
        performance_schemes=performance_schemes,
        tie_epsilon=tie_epsilon,
    )


def run_scenario(
    matrix_innovation: NormalizedMatrix,
    matrix_performance: NormalizedMatrix,
    config: ScenarioConfig,
    workers: int = 1,
) -> ScenarioResult:
    """情景 I：每个变量一个 one-hot 划分；II/III/custom：创新、绩效各一个划分"""
    if set(matrix_innovation.entities) != set(matrix_performance.entities):
        only_i = sorted(set(matrix_innovation.entities) - set(matrix_performance.entities))
        only_p = sorted(set(matrix_performance.entities) - set(matrix_innovation.entities))
        raise EntityMismatchError(f"两个矩阵的 entity 不一致：仅创新 {only_i}，仅绩效 {only_p}")

    jobs = [
        (matrix_innovation, config.innovation_centroids, s, "innovation") for s in config.innovation_schemes
    ] + [
        (matrix_performance, config.performance_centroids, s, "performance") for s in config.performance_schemes
    ]

    def _run(job):
        matrix, centroids, scheme, scope = job
        return assign_cells(matrix, centroids, scheme, tie_epsilon=config.tie_epsilon, scope=scope)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run, jobs))
    else:
        results = [_run(j) for j in jobs]

    return ScenarioResult(
        scenario=config.id,
        innovation=[a for a in results if a.scope == "innovation"],
        performance=[a for a in results if a.scope == "performance"],
    )


# ---------------- 文本配置 ----------------

def _parse_number(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"无法解析数值：{text!r}")


def parse_centroids(text: str) -> CentroidSet:
    items = [t for t in str(text).split(",") if t.strip()]
    try:
        return CentroidSet(centroids=[float(_parse_number(t)) for t in items])
    except ValueError as e:
        raise ConfigError(f"质心配置无效：{e}")


def parse_weights(text: str, label: str) -> Dict[str, Fraction]:
    out: Dict[str, Fraction] = {}
    for item in str(text).split(","):
        if not item.strip():
            continue
        if ":" not in item:
            raise ConfigError(f"权重项应为 VAR:w 形式：{item!r}")
        name, w = item.rsplit(":", 1)
        out[name.strip()] = _parse_number(w)
    if not out:
        raise ConfigError(f"{label} 权重为空")
    return out


def _weight_scheme(weights: Mapping[str, Fraction], label: str) -> WeightScheme:
    try:
        if sum(weights.values(), Fraction(0)) == 1:
            return WeightScheme.from_fractions(weights, label=label)
        return WeightScheme(label=label, scope=list(weights), weights={k: float(w) for k, w in weights.items()})
    except ValueError as e:
        raise ConfigError(f"{label} 权重无效：{e}")


def scenario_from_mapping(
    mapping: Mapping[str, Optional[str]],
    registry: Optional[VariableRegistry] = None,
    scenario: Optional[str] = None,
) -> ScenarioConfig:
    """从 KEY=VALUE 配置构建情景；scenario 参数（命令行）优先于 SCENARIO 键"""
    registry = registry or load_registry()
    sid = (scenario or mapping.get("SCENARIO") or "II").strip()
    if sid not in SCENARIO_IDS:
        raise ConfigError(f"未知情景：{sid}（可选 {', '.join(SCENARIO_IDS)}）")
    shared = mapping.get("CENTROIDS")
    innov_c = parse_centroids(mapping.get("INNOVATION_CENTROIDS") or shared) \
        if (mapping.get("INNOVATION_CENTROIDS") or shared) else None
    perf_c = parse_centroids(mapping.get("PERFORMANCE_CENTROIDS") or shared) \
        if (mapping.get("PERFORMANCE_CENTROIDS") or shared) else None
    eps_text = mapping.get("TIE_EPSILON")
    tie_epsilon = float(_parse_number(eps_text)) if eps_text else DEFAULT_TIE_EPSILON

    if sid != "custom":
        return scenario_preset(sid, registry, innov_c, perf_c, tie_epsilon)

    if not mapping.get("INNOVATION_WEIGHTS") or not mapping.get("PERFORMANCE_WEIGHTS"):
        raise ConfigError("custom 情景需要 INNOVATION_WEIGHTS 与 PERFORMANCE_WEIGHTS")
    alpha = parse_weights(mapping["INNOVATION_WEIGHTS"], "innovation")
    beta = parse_weights(mapping["PERFORMANCE_WEIGHTS"], "performance")
    for name in list(alpha) + list(beta):
        if registry.find_by_name(name) is None:
            raise ConfigError(f"权重中的变量 {name} 未注册")
    innov, perf = set(registry.innovation_variables()), set(registry.performance_variables())
    wrong = [v for v in alpha if v not in innov] + [v for v in beta if v not in perf]
    if wrong:
        raise ConfigError(f"权重变量所属分组不对：{wrong}（INNOVATION_WEIGHTS 只能用创新变量，PERFORMANCE_WEIGHTS 只能用绩效变量）")
    try:
        return ScenarioConfig(
            id="custom",
            innovation_centroids=innov_c or CentroidSet.uniform_grid(),
            performance_centroids=perf_c or CentroidSet.uniform_grid(),
            innovation_schemes=[_weight_scheme(alpha, "innovation")],
            performance_schemes=[_weight_scheme(beta, "performance")],
            tie_epsilon=tie_epsilon,
        )
    except ValueError as e:
        raise ConfigError(f"custom 情景无效：{e}")


def _fmt_centroids(cs: CentroidSet) -> str:
    return ",".join(repr(c) for c in cs.centroids)


def scenario_to_text(config: ScenarioConfig) -> str:
    lines = [
        f"SCENARIO={config.id}",
        f"INNOVATION_CENTROIDS={_fmt_centroids(config.innovation_centroids)}",
        f"PERFORMANCE_CENTROIDS={_fmt_centroids(config.performance_centroids)}",
        f"TIE_EPSILON={config.tie_epsilon!r}",
    ]
    if config.id == "custom":
        for key, scheme in (("INNOVATION_WEIGHTS", config.innovation_schemes[0]),
                            ("PERFORMANCE_WEIGHTS", config.performance_schemes[0])):
            lines.append(f"{key}=" + ",".join(f"{v}:{scheme.weights[v]!r}" for v in scheme.scope))
    return "\n".join(lines) + "\n"


def cell_boundaries(centroids: Sequence[float]) -> List[float]:
    """one-hot 情形下相邻质心的中点即为单元边界"""
    return [(a + b) / 2.0 for a, b in zip(centroids, centroids[1:])]
