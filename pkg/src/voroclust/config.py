"""
流水线配置

配置文件是 KEY=VALUE 文本（dotenv 语法，可含 # 注释），与 ScenarioConfig 的文本格式相同。
取值优先级：命令行参数 > 配置文件 > 环境变量 > 内置默认。
"""

import hashlib
import json
import os
from typing import Any, Dict, Literal, Mapping, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .analytics import MomentEstimator, QuartileMethod
from .clustering import ScenarioConfig, scenario_from_mapping
from .errors import ConfigError
from .models import FilterPolicy, IngestSchema, Window
from .registry import VariableRegistry, load_registry

RenormalizeMode = Literal["retained", "original"]

DEFAULT_INNOVATION_WINDOW = "2006-2007"
DEFAULT_PERFORMANCE_WINDOW = "2008-2010"
DEFAULT_OUTPUT_DIR = "out"

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class PipelineConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    input_path: Optional[str] = None
    ingest: IngestSchema = Field(default_factory=IngestSchema)
    innovation_window: Window
    performance_window: Window
    allow_window_overlap: bool = False
    scenario: ScenarioConfig
    filter_policy: FilterPolicy = Field(default_factory=FilterPolicy)
    renormalize: RenormalizeMode = "retained"
    output_dir: str = DEFAULT_OUTPUT_DIR
    workers: int = Field(default=1, ge=1)
    quartile_method: QuartileMethod = "linear"
    moment_estimator: MomentEstimator = "sample"
    output_delimiter: str = ","
    variables_json: Optional[str] = None

    @model_validator(mode="after")
    def _windows(self) -> "PipelineConfig":
        if self.innovation_window.overlaps(self.performance_window) and not self.allow_window_overlap:
            raise ValueError(
                f"创新窗口 {self.innovation_window} 与绩效窗口 {self.performance_window} 重叠；"
                "如确需重叠请设置 ALLOW_WINDOW_OVERLAP=true"
            )
        return self

    def registry(self) -> VariableRegistry:
        return load_registry(self.variables_json)

    def config_hash(self, input_digest: str = "") -> str:
        """输出目录与并发数不影响结果，不参与哈希；输入以内容摘要代替路径"""
        payload = self.model_dump(mode="json", exclude={"output_dir", "workers", "input_path"})
        payload["input_digest"] = input_digest
        text = json.dumps(payload, ensure_ascii=False, sort_keys=True)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _as_bool(key: str, value: Optional[str], default: bool) -> bool:
    if value is None or value.strip() == "":
        return default
    v = value.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise ConfigError(f"{key} 需要布尔值（on/off、true/false），实际为 {value!r}")


def _as_number(key: str, value: Optional[str], cast, default):
    if value is None or value.strip() == "":
        return default
    try:
        return cast(value.strip())
    except ValueError:
        raise ConfigError(f"{key} 不是合法数值：{value!r}")


def _as_list(value: Optional[str]) -> list:
    return [t.strip() for t in (value or "").split(",") if t.strip()]


def _read_mapping(path: Optional[str]) -> Dict[str, Optional[str]]:
    if not path:
        return {}
    if not os.path.exists(path):
        raise ConfigError(f"配置文件不存在：{path}")
    return dict(dotenv_values(path))


def load_pipeline_config(
    path: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> PipelineConfig:
    """
    overrides 为命令行参数（值为 None 的键忽略）：
      scenario / no_filter / out / workers
    """
    mapping = _read_mapping(path)
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    base_dir = os.path.dirname(os.path.abspath(path)) if path else os.getcwd()

    def _resolve(p: Optional[str]) -> Optional[str]:
        if not p:
            return None
        return p if os.path.isabs(p) else os.path.normpath(os.path.join(base_dir, p))

    variables_json = _resolve(mapping.get("VARIABLES_JSON"))
    registry = load_registry(variables_json)

    columns = {
        k[len("COLUMN_"):]: (v or "").strip()
        for k, v in mapping.items()
        if k.startswith("COLUMN_")
    }

    try:
        schema = IngestSchema(
            entity_column=mapping.get("ENTITY_COLUMN") or "entity",
            year_column=mapping.get("YEAR_COLUMN") or "year",
            industry_column=mapping.get("INDUSTRY_COLUMN") or None,
            columns=columns,
            ignore_columns=_as_list(mapping.get("IGNORE_COLUMNS")),
            ignore_unknown=_as_bool("IGNORE_UNKNOWN", mapping.get("IGNORE_UNKNOWN"), False),
            delimiter=mapping.get("DELIMITER") or ",",
        )
        windows = (
            Window.parse(mapping.get("INNOVATION_WINDOW") or DEFAULT_INNOVATION_WINDOW),
            Window.parse(mapping.get("PERFORMANCE_WINDOW") or DEFAULT_PERFORMANCE_WINDOW),
        )
        policy = FilterPolicy(
            enabled=_as_bool("FILTER", mapping.get("FILTER"), True) and not overrides.get("no_filter", False),
            deviation_threshold=_as_number("FILTER_DEVIATION", mapping.get("FILTER_DEVIATION"), float, 3.0),
            collapse_share=_as_number("FILTER_COLLAPSE_SHARE", mapping.get("FILTER_COLLAPSE_SHARE"), float, 0.75),
            min_deviation=_as_number("FILTER_MIN_DEVIATION", mapping.get("FILTER_MIN_DEVIATION"), float, 1.5),
            max_fraction=_as_number("FILTER_MAX_FRACTION", mapping.get("FILTER_MAX_FRACTION"), float, 0.25),
        )
    except ValueError as e:
        raise ConfigError(f"配置无效：{e}")

    scenario = scenario_from_mapping(mapping, registry, scenario=overrides.get("scenario"))

    output_dir = overrides.get("out") or mapping.get("OUTPUT_DIR") or os.getenv("VOROCLUST_OUT_DIR") or DEFAULT_OUTPUT_DIR
    workers = overrides.get("workers")
    if workers is None:
        workers = _as_number(
            "WORKERS",
            mapping.get("WORKERS") or os.getenv("VOROCLUST_WORKERS"),
            int,
            1,
        )
    out_delim = mapping.get("DELIMITER_OUT") or ","
    if out_delim in ("tab", "\\t"):
        out_delim = "\t"

    try:
        return PipelineConfig(
            input_path=_resolve(mapping.get("INPUT")),
            ingest=schema,
            innovation_window=windows[0],
            performance_window=windows[1],
            allow_window_overlap=_as_bool("ALLOW_WINDOW_OVERLAP", mapping.get("ALLOW_WINDOW_OVERLAP"), False),
            scenario=scenario,
            filter_policy=policy,
            renormalize=(mapping.get("RENORMALIZE") or "retained").strip(),
            output_dir=output_dir,
            workers=workers,
            quartile_method=(mapping.get("QUARTILE_METHOD") or "linear").strip(),
            moment_estimator=(mapping.get("MOMENT_ESTIMATOR") or "sample").strip(),
            output_delimiter=out_delim,
            variables_json=variables_json,
        )
    except ValueError as e:
        raise ConfigError(f"配置无效：{e}")
