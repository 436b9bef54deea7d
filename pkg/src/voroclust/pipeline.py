"""
端到端流水线：ingest → average → filter（可选）→ normalize → cluster → analyze → report

输出目录结构：
  <out>/
    manifest.json               配置哈希、剔除前后 entity 数、平局计数、执行步骤、文件清单
    normalized_innovation.csv   归一化矩阵
    normalized_performance.csv
    bounds.json                 各变量 (m_x, M_x)
    assignments/<scope>_<label>.json
    crosstab*.csv|md            创新 × 绩效分布表
    cardinality.csv|md          每个权重方案的单元基数
    stats.csv|md                描述统计
    profile_<scope>_<label>.csv|md
    industry_<scope>_<label>.csv|md（仅当数据带行业列）
    logs/events.jsonl
"""

import io
import json
import os
import re
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from .analytics import crosstab, describe_records, group_crosstab, profile_clusters
from .clustering import ScenarioResult, run_scenario
from .config import PipelineConfig, file_digest
from .dataset import average_panel, ingest
from .errors import ConfigError, IngestError
from .logger import append_event_log, init_run_log, set_log_root
from .models import AveragedRecord, ClusterAssignment, NormalizedMatrix, PanelDataset
from .outliers import FilterResult, outlier_filter
from .registry import VariableRegistry
from .report import (
    ReportTable,
    render_cardinality_table,
    render_crosstab,
    render_profile_table,
    render_stats_table,
    write_table,
)
from .transform import minmax_normalize


def _slug(label: str) -> str:
    return re.sub(r"[^0-9A-Za-z_-]+", "_", label).strip("_") or "x"


def _write_text(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)


def _write_json(path: str, obj: Any) -> None:
    _write_text(path, json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n")


def _step(steps: List[str], name: str, **counts) -> None:
    steps.append(name)
    append_event_log({"type": "step", "step": name, **counts})
    detail = " ".join(f"{k}={v}" for k, v in counts.items())
    print(f"[{name}] {detail}".rstrip())


def load_panel(config: PipelineConfig, registry: VariableRegistry) -> PanelDataset:
    if not config.input_path:
        raise ConfigError("缺少 INPUT（输入数据路径）")
    if not os.path.exists(config.input_path):
        raise IngestError(f"输入文件不存在：{config.input_path}")
    with open(config.input_path, "r", encoding="utf-8", newline="") as f:
        return ingest(f, config.ingest, registry)


def matrix_frame(matrix: NormalizedMatrix) -> pd.DataFrame:
    rows = [[e] + [repr(matrix.values[e][v]) for v in matrix.variables] for e in matrix.entities]
    return pd.DataFrame(rows, columns=["entity"] + list(matrix.variables))


def write_matrix(matrix: NormalizedMatrix, path: str, delimiter: str = ",") -> None:
    buf = io.StringIO()
    matrix_frame(matrix).to_csv(buf, sep=delimiter, index=False, lineterminator="\n")
    _write_text(path, buf.getvalue())


def save_assignment(assignment: ClusterAssignment, path: str) -> None:
    _write_text(path, assignment.model_dump_json(indent=2) + "\n")


def load_assignment(path: str) -> ClusterAssignment:
    if not os.path.exists(path):
        raise ConfigError(f"划分文件不存在：{path}")
    with open(path, "r", encoding="utf-8") as f:
        return ClusterAssignment.model_validate_json(f.read())


def normalize_pair(
    records: Sequence[AveragedRecord],
    registry: VariableRegistry,
    bounds: Optional[Dict[str, Tuple[float, float]]] = None,
) -> Tuple[NormalizedMatrix, NormalizedMatrix]:
    innov = registry.innovation_variables()
    perf = registry.performance_variables()
    if bounds is None:
        return minmax_normalize(records, innov), minmax_normalize(records, perf)
    return (
        minmax_normalize(records, innov, {v: bounds[v] for v in innov}),
        minmax_normalize(records, perf, {v: bounds[v] for v in perf}),
    )


def _filter(config: PipelineConfig, records: List[AveragedRecord], registry: VariableRegistry):
    mi, mp = normalize_pair(records, registry)
    result: FilterResult = outlier_filter(
        [mi, mp],
        config.filter_policy,
        centroids=[config.scenario.innovation_centroids, config.scenario.performance_centroids],
        tie_epsilon=config.scenario.tie_epsilon,
    )
    for r in result.removed:
        append_event_log({"type": "filter.remove", **r.model_dump()})
    bounds = {**mi.provenance, **mp.provenance}
    return result, bounds


def _scenario_files(
    out: str,
    result: ScenarioResult,
    records: List[AveragedRecord],
    profile_vars: List[str],
    config: PipelineConfig,
) -> List[str]:
    files: List[str] = []
    delim = config.output_delimiter
    qm, est = config.quartile_method, config.moment_estimator

    for a in result.all_assignments():
        name = os.path.join("assignments", f"{a.scope}_{_slug(a.label)}.json")
        save_assignment(a, os.path.join(out, name))
        files.append(name)
        if a.tie_flags:
            append_event_log({"type": "assign.ties", "scope": a.scope, "label": a.label, "entities": a.tie_flags})

    pairs = [(i, p) for i in result.innovation for p in result.performance]
    for i, p in pairs:
        stem = "crosstab" if len(pairs) == 1 else f"crosstab_{_slug(i.label)}_{_slug(p.label)}"
        table = render_crosstab(
            crosstab(i, p),
            labels=("Innovation", "Performance"),
            title=f"{result.scenario} clustering: innovation {i.label} × performance {p.label}",
        )
        files.extend(write_table(table, out, stem, delim))

    files.extend(write_table(render_cardinality_table(result.all_assignments()), out, "cardinality", delim))

    whole = describe_records(records, profile_vars, qm, est)
    industries = {r.entity: r.industry for r in records if r.industry}
    for a in result.all_assignments():
        stem = f"{a.scope}_{_slug(a.label)}"
        profiles = profile_clusters(a, records, profile_vars, qm, est)
        files.extend(write_table(
            render_profile_table(profiles, whole, profile_vars, title=f"Clusters of {a.scope} {a.label}"),
            out, f"profile_{stem}", delim,
        ))
        if len(industries) == len(records):
            table = render_crosstab(
                group_crosstab(industries, a),
                labels=("Industry", a.scope.capitalize()),
                title=f"Industry distribution: {a.scope} {a.label}",
            )
            files.extend(write_table(table, out, f"industry_{stem}", delim))
    return files


def run_pipeline(config: PipelineConfig) -> Dict[str, Any]:
    """执行整条流水线并写出全部产物，返回 manifest"""
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    set_log_root(os.path.join(out, "logs"))
    init_run_log()
    registry = config.registry()
    steps: List[str] = []

    data = load_panel(config, registry)
    _step(steps, "ingest", entities=len(data.entities), years=len(data.years), variables=len(data.variables))

    records = average_panel(data, registry, config.innovation_window, config.performance_window)
    _step(steps, "average", records=len(records))

    before = len(records)
    bounds: Optional[Dict[str, Tuple[float, float]]] = None
    removed: List[Dict[str, Any]] = []
    if config.filter_policy.enabled:
        result, pre_bounds = _filter(config, records, registry)
        keep = set(result.retained)
        records = [r for r in records if r.entity in keep]
        removed = [r.model_dump() for r in result.removed]
        if config.renormalize == "original":
            bounds = pre_bounds
        _step(steps, "filter", before=before, after=len(records), removed=len(removed))

    mi, mp = normalize_pair(records, registry, bounds)
    files: List[str] = []
    write_matrix(mi, os.path.join(out, "normalized_innovation.csv"), config.output_delimiter)
    write_matrix(mp, os.path.join(out, "normalized_performance.csv"), config.output_delimiter)
    _write_json(os.path.join(out, "bounds.json"), {
        "reference": mi.reference,
        "bounds": {v: list(b) for v, b in {**mi.provenance, **mp.provenance}.items()},
    })
    files.extend(["normalized_innovation.csv", "normalized_performance.csv", "bounds.json"])
    _step(steps, "normalize", entities=len(mi.entities), reference=mi.reference)

    scenario = run_scenario(mi, mp, config.scenario, workers=config.workers)
    ties = scenario.tie_counts()
    _step(steps, "cluster", scenario=scenario.scenario, assignments=len(scenario.all_assignments()), ties=sum(ties.values()))

    present = set(data.variables)
    profile_vars = (
        registry.innovation_variables()
        + registry.performance_variables()
        + [v for v in registry.auxiliary_variables() if v in present]
    )
    stats = describe_records(records, profile_vars, config.quartile_method, config.moment_estimator)
    files.extend(write_table(render_stats_table(stats), out, "stats", config.output_delimiter))
    _step(steps, "analyze", variables=len(profile_vars))

    files.extend(_scenario_files(out, scenario, records, profile_vars, config))
    _step(steps, "report", files=len(files))

    manifest = {
        "config_hash": config.config_hash(file_digest(config.input_path)),
        "scenario": scenario.scenario,
        "entities_before": before,
        "entities_after": len(records),
        "removed": removed,
        "renormalize": config.renormalize,
        "tie_counts": ties,
        "steps": steps,
        "files": sorted(files) + ["logs/events.jsonl"],
    }
    _write_json(os.path.join(out, "manifest.json"), manifest)
    return manifest


def run_stats(config: PipelineConfig) -> ReportTable:
    """只做 ingest + average + describe（不剔除、不聚类），单独生成描述统计表"""
    registry = config.registry()
    data = load_panel(config, registry)
    records = average_panel(data, registry, config.innovation_window, config.performance_window)
    present = set(data.variables)
    variables = (
        registry.innovation_variables()
        + registry.performance_variables()
        + [v for v in registry.auxiliary_variables() if v in present]
    )
    stats = describe_records(records, variables, config.quartile_method, config.moment_estimator)
    table = render_stats_table(stats)
    write_table(table, config.output_dir, "stats", config.output_delimiter)
    return table
