"""
面板数据读入、校验与期间平均

- ingest：分隔文本（逗号或制表符，UTF-8，小数点为 '.'）→ PanelDataset
- write_panel：PanelDataset → 可再次 ingest 的分隔文本
- average_over_window / average_panel：创新变量按创新窗口平均，绩效变量按绩效窗口平均
"""

import io
import re
from typing import Dict, Iterable, List, Optional, TextIO

import numpy as np
import pandas as pd

from .errors import DuplicateKeyError, IngestError, MissingValueError
from .models import AveragedRecord, IngestSchema, PanelDataset, Window
from .registry import VariableRegistry, load_registry

MISSING_MARKERS = {"", "NA", "N/A", "NaN", "nan", "null"}


def _parse_float(text: str) -> Optional[float]:
    if text in MISSING_MARKERS:
        return None
    return float(text)


def _line_no(index: int) -> int:
    # 表头占第 1 行
    return int(index) + 2


def _read_frame(source: TextIO, delimiter: str) -> pd.DataFrame:
    text = source.read()
    if not text.strip():
        raise IngestError("输入为空")
    if delimiter == "auto":
        header = text.lstrip().splitlines()[0]
        delimiter = "\t" if "\t" in header else ","
    try:
        df = pd.read_csv(
            io.StringIO(text),
            sep=delimiter,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=True,
        )
    except pd.errors.EmptyDataError:
        raise IngestError("输入为空")
    except pd.errors.ParserError as e:
        m = re.search(r"line (\d+)", str(e))
        raise IngestError(f"行格式错误：{e}", row=int(m.group(1)) if m else None)
    if df.empty:
        raise IngestError("输入只有表头，没有数据行")
    df.columns = [str(c).strip() for c in df.columns]
    return df.fillna("").apply(lambda s: s.str.strip())


def _column_mapping(df: pd.DataFrame, schema: IngestSchema, registry: VariableRegistry) -> Dict[str, str]:
    reserved = {schema.entity_column, schema.year_column}
    if schema.industry_column:
        reserved.add(schema.industry_column)
    for col in reserved:
        if col not in df.columns:
            raise IngestError(f"缺少必需列：{col}")

    if schema.columns:
        mapping = dict(schema.columns)
    else:
        mapping = {c: c for c in df.columns if c not in reserved and registry.find_by_name(c)}

    for col, var in mapping.items():
        if col not in df.columns:
            raise IngestError(f"schema 中的列 {col} 不在表头中")
        if registry.find_by_name(var) is None:
            raise IngestError(f"列 {col} 映射到未注册的变量 {var}")
    targets = list(mapping.values())
    if len(set(targets)) != len(targets):
        raise IngestError(f"多个列映射到同一变量：{targets}")

    ignored = set(schema.ignore_columns)
    for col in df.columns:
        if col in reserved or col in mapping or col in ignored:
            continue
        if not schema.ignore_unknown:
            raise IngestError(f"未知的变量列：{col}（可用 IGNORE_COLUMNS 或 IGNORE_UNKNOWN 忽略）")
    return mapping


def ingest(
    source: TextIO,
    schema: Optional[IngestSchema] = None,
    registry: Optional[VariableRegistry] = None,
) -> PanelDataset:
    """读入一行一个 (entity, year) 的分隔表；行顺序不影响结果"""
    schema = schema or IngestSchema()
    registry = registry or load_registry()
    df = _read_frame(source, schema.delimiter)
    mapping = _column_mapping(df, schema, registry)

    ents = df[schema.entity_column]
    for idx in ents.index[ents == ""]:
        raise IngestError("entity id 为空", row=_line_no(idx))

    years = pd.to_numeric(df[schema.year_column], errors="coerce")
    bad_year = years.isna() | (years != years.round())
    for idx in years.index[bad_year]:
        raise IngestError(f"年份无法解析：{df[schema.year_column][idx]!r}", row=_line_no(idx))
    years = years.astype(int)

    dup = pd.DataFrame({"e": ents, "y": years}).duplicated(keep="first")
    for idx in dup.index[dup]:
        raise DuplicateKeyError(ents[idx], int(years[idx]), row=_line_no(idx))

    # 变量按注册表顺序排列
    ordered = [(col, var) for var in registry.names for col, v in mapping.items() if v == var]
    parsed: Dict[str, List[Optional[float]]] = {}
    for col, var in ordered:
        cells: List[Optional[float]] = []
        for idx, text in df[col].items():
            try:
                x = _parse_float(text)
            except ValueError:
                raise IngestError(f"列 {col} 的值 {text!r} 不是数字（小数点须为 '.'）", row=_line_no(idx))
            if x is not None and not np.isfinite(x):
                raise IngestError(f"列 {col} 的值 {text!r} 不是有限数", row=_line_no(idx))
            cells.append(x)
        parsed[var] = cells

    industries: Dict[str, str] = {}
    if schema.industry_column:
        for idx, (e, label) in enumerate(zip(ents, df[schema.industry_column])):
            if not label:
                continue
            if industries.setdefault(e, label) != label:
                raise IngestError(f"{e} 的行业标签不一致：{industries[e]!r} vs {label!r}", row=_line_no(df.index[idx]))

    entity_ids = sorted(set(ents))
    year_ids = sorted(set(int(y) for y in years))
    variables = [var for _, var in ordered]
    values: Dict[str, Dict[int, Dict[str, Optional[float]]]] = {
        e: {y: {v: None for v in variables} for y in year_ids} for e in entity_ids
    }
    for pos, (e, y) in enumerate(zip(ents, years)):
        row = values[e][int(y)]
        for var in variables:
            row[var] = parsed[var][pos]

    return PanelDataset(
        entities=entity_ids,
        years=year_ids,
        variables=variables,
        values=values,
        industries=industries,
    )


def _format_cell(x: Optional[float]) -> str:
    return "" if x is None else repr(float(x))


def write_panel(
    data: PanelDataset,
    stream: TextIO,
    delimiter: str = ",",
    entity_column: str = "entity",
    year_column: str = "year",
    industry_column: str = "industry",
) -> None:
    """输出可被 ingest 读回的分隔文本（浮点数按 repr 保证精确往返）"""
    rows = []
    for e in data.entities:
        for y in data.years:
            row = {entity_column: e, year_column: str(y)}
            if data.industries:
                row[industry_column] = data.industries.get(e, "")
            for var in data.variables:
                row[var] = _format_cell(data.value(e, y, var))
            rows.append(row)
    columns = [entity_column, year_column] + ([industry_column] if data.industries else []) + list(data.variables)
    frame = pd.DataFrame(rows, columns=columns)
    frame.to_csv(stream, sep=delimiter, index=False, lineterminator="\n")


def average_over_window(
    data: PanelDataset,
    window: Window,
    variables: Iterable[str],
) -> List[AveragedRecord]:
    """窗口内逐年取算术平均；窗口内任何缺失都直接报错，不做插补"""
    variables = list(variables)
    years = window.years()
    records: List[AveragedRecord] = []
    for e in data.entities:
        out: Dict[str, float] = {}
        for var in variables:
            series = []
            for y in years:
                x = data.value(e, y, var)
                if x is None:
                    raise MissingValueError(e, var, y)
                series.append(x)
            out[var] = float(np.mean(np.asarray(series, dtype=float)))
        records.append(AveragedRecord(entity=e, values=out, industry=data.industries.get(e)))
    return records


def average_panel(
    data: PanelDataset,
    registry: VariableRegistry,
    innovation_window: Window,
    performance_window: Window,
) -> List[AveragedRecord]:
    """合并两个窗口的平均值：innovation/auxiliary 用创新窗口，其余用绩效窗口"""
    present = set(data.variables)
    early = registry.innovation_variables() + [v for v in registry.auxiliary_variables() if v in present]
    late = registry.performance_variables()
    first = average_over_window(data, innovation_window, early)
    second = average_over_window(data, performance_window, late)
    order = [v for v in registry.names if v in set(early) | set(late)]
    merged: List[AveragedRecord] = []
    for a, b in zip(first, second):
        values = {**a.values, **b.values}
        merged.append(AveragedRecord(
            entity=a.entity,
            values={v: values[v] for v in order},
            industry=a.industry,
        ))
    return merged
