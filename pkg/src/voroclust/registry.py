import os
import json
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from .errors import ConfigError
from .models import PERFORMANCE_GROUPS, VariableId

# 模块级可变的扩展变量 JSON 路径（默认取环境变量）
_VARIABLES_PATH: Optional[str] = os.getenv("VARIABLES_JSON_PATH")

DEFAULT_VARIABLES: List[VariableId] = [
    VariableId(name="TIAX", group="innovation"),
    VariableId(name="TTA", group="innovation"),
    VariableId(name="DSal", group="growth"),
    VariableId(name="DAss", group="growth"),
    VariableId(name="DLab", group="growth"),
    VariableId(name="ROI", group="profitability"),
    VariableId(name="ROS", group="profitability"),
    VariableId(name="ATO", group="productivity"),
    VariableId(name="S/E", group="productivity"),
]


class VariableRegistry(BaseModel):
    model_config = ConfigDict(frozen=True)

    variables: List[VariableId]

    @model_validator(mode="after")
    def _unique(self) -> "VariableRegistry":
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError(f"变量名重复：{names}")
        return self

    @property
    def names(self) -> List[str]:
        return [v.name for v in self.variables]

    def find_by_name(self, name: str) -> Optional[VariableId]:
        for v in self.variables:
            if v.name == name:
                return v
        return None

    def group_of(self, name: str) -> str:
        v = self.find_by_name(name)
        if v is None:
            raise KeyError(name)
        return v.group

    def variables_in_group(self, group: str) -> List[str]:
        return [v.name for v in self.variables if v.group == group]

    def innovation_variables(self) -> List[str]:
        return self.variables_in_group("innovation")

    def performance_variables(self) -> List[str]:
        return [v.name for v in self.variables if v.group in PERFORMANCE_GROUPS]

    def auxiliary_variables(self) -> List[str]:
        return self.variables_in_group("auxiliary")


def set_registry_path(path: Optional[str]) -> None:
    """设置扩展变量 JSON 的路径（None 表示只用默认九个变量）"""
    global _VARIABLES_PATH
    _VARIABLES_PATH = path


def default_registry() -> VariableRegistry:
    return VariableRegistry(variables=list(DEFAULT_VARIABLES))


def load_registry(path: Optional[str] = None) -> VariableRegistry:
    """默认九个变量 + JSON 数组中的扩展条目 [{"name": ..., "group": ...}]"""
    path = path or _VARIABLES_PATH
    if not path:
        return default_registry()
    if not os.path.exists(path):
        raise ConfigError(f"变量注册文件不存在：{path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"变量注册文件不是合法 JSON：{e}")
    if not isinstance(data, list):
        raise ConfigError(f"{path} 内容应为数组")
    try:
        extra = [VariableId(**it) for it in data]
        return VariableRegistry(variables=list(DEFAULT_VARIABLES) + extra)
    except (TypeError, ValidationError) as e:
        raise ConfigError(f"变量注册文件无效：{e}")
