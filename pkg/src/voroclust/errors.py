"""
统一异常层级

每个异常类携带来源模块名（module）与 CLI 退出码（exit_code）：
  1 = 用法/配置错误
  2 = 数据校验错误
  3 = 数值/退化输入错误
"""

from typing import Optional


class VoroClustError(Exception):
    exit_code: int = 2
    module: str = "core"

    def __init__(self, message: str, module: Optional[str] = None):
        super().__init__(message)
        if module:
            self.module = module


class ConfigError(VoroClustError):
    exit_code = 1
    module = "config"


class EmptyCentroidsError(ConfigError):
    module = "clustering"


# ---- 数据校验 ----
class DataValidationError(VoroClustError):
    exit_code = 2


class IngestError(DataValidationError):
    module = "dataset"

    def __init__(self, message: str, row: Optional[int] = None):
        if row is not None:
            message = f"第 {row} 行：{message}"
        super().__init__(message)
        self.row = row


class DuplicateKeyError(IngestError):
    def __init__(self, entity: str, year: int, row: Optional[int] = None):
        super().__init__(f"重复的 (entity, year) 键：({entity}, {year})", row=row)
        self.entity = entity
        self.year = year


class MissingValueError(DataValidationError):
    module = "dataset"

    def __init__(self, entity: str, variable: str, year: int):
        super().__init__(f"缺失值：entity={entity} variable={variable} year={year}")
        self.entity = entity
        self.variable = variable
        self.year = year


class EntityMismatchError(DataValidationError):
    module = "clustering"


class ScopeMismatchError(DataValidationError):
    module = "clustering"


# ---- 数值 ----
class NumericError(VoroClustError):
    exit_code = 3


class DegenerateRangeError(NumericError):
    module = "transform"

    def __init__(self, variable: str, value: float):
        super().__init__(f"变量 {variable} 取值恒为 {value}（M_x = m_x），无法归一化")
        self.variable = variable


class InsufficientDataError(NumericError):
    module = "analytics"


class InfeasibleSpecError(NumericError):
    module = "dataset"


class RunawayFilterError(NumericError):
    module = "clustering"
