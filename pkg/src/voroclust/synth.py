"""
可复现的合成面板数据

原始公司数据未公开，只有各变量的均值、标准差、极值、偏度等汇总量，
因此生成器只承诺一、二阶矩：先抽样（正态或按目标偏度求解形状的对数正态），
再平移缩放使样本均值/标准差精确命中，随后按边界截断并反复修正。
"""

import json
import math
import os
from typing import Dict, List, Optional

import numpy as np
from pydantic import ValidationError
from scipy.optimize import brentq

from .errors import ConfigError, InfeasibleSpecError
from .models import PanelDataset, SynthSpec, VariableMoments, Window
from .registry import VariableRegistry, load_registry

MAX_CORRECTIONS = 200


def _lognormal_sigma(skewness: float) -> float:
    """求解对数正态的 σ，使其偏度 (e^{σ²}+2)·sqrt(e^{σ²}-1) 等于目标值"""
    def f(s: float) -> float:
        w = math.exp(s * s)
        return (w + 2.0) * math.sqrt(w - 1.0) - skewness
    return brentq(f, 1e-6, 3.0)


def _standardize(x: np.ndarray) -> np.ndarray:
    sd = x.std(ddof=1)
    if sd == 0:
        return np.zeros_like(x)
    return (x - x.mean()) / sd


def _base_draws(rng: np.random.Generator, n: int, m: VariableMoments) -> np.ndarray:
    if m.skewness is not None and abs(m.skewness) > 1e-9:
        sigma = _lognormal_sigma(abs(m.skewness))
        draws = rng.lognormal(mean=0.0, sigma=sigma, size=n)
        return draws if m.skewness > 0 else -draws
    return rng.standard_normal(n)


def _check_feasible(name: str, m: VariableMoments, n: int) -> None:
    lo = -np.inf if m.min is None else m.min
    hi = np.inf if m.max is None else m.max
    if not (lo <= m.mean <= hi):
        raise InfeasibleSpecError(f"{name}: 均值 {m.mean} 不在边界 [{lo}, {hi}] 内")
    if m.std > 0 and (m.mean == lo or m.mean == hi):
        raise InfeasibleSpecError(f"{name}: 均值落在边界上时标准差必须为 0")
    if m.min is not None and m.max is not None:
        # Bhatia–Davis 上界（样本方差，n-1 分母）
        bound = (hi - m.mean) * (m.mean - lo) * n / (n - 1)
        if m.std ** 2 > bound:
            raise InfeasibleSpecError(f"{name}: 标准差 {m.std} 超出边界允许的最大值 {math.sqrt(bound):.6g}")


def _moment_matched(rng: np.random.Generator, n: int, name: str, m: VariableMoments) -> np.ndarray:
    if m.std == 0:
        return np.full(n, float(m.mean))
    lo = -np.inf if m.min is None else m.min
    hi = np.inf if m.max is None else m.max
    x = m.mean + m.std * _standardize(_base_draws(rng, n, m))
    for _ in range(MAX_CORRECTIONS):
        clipped = np.clip(x, lo, hi)
        if np.array_equal(clipped, x):
            break
        z = _standardize(clipped)
        if not z.any():
            raise InfeasibleSpecError(f"{name}: 截断后样本退化为常数")
        x = m.mean + m.std * z
    return np.clip(x, lo, hi)


def _window_for(name: str, spec: SynthSpec, registry: VariableRegistry) -> Window:
    v = registry.find_by_name(name)
    if v is not None and v.is_performance:
        return spec.performance_window
    return spec.innovation_window


def synth_generate(spec: SynthSpec, registry: Optional[VariableRegistry] = None) -> PanelDataset:
    """固定 seed 下结果逐位一致；各变量的窗口平均值满足目标矩"""
    registry = registry or load_registry()
    n = spec.entity_count
    rng = np.random.default_rng(spec.seed)

    known = [v for v in registry.names if v in spec.variables]
    variables = known + [v for v in spec.variables if v not in known]
    width = max(3, len(str(n)))
    entities = [f"{spec.entity_prefix}{i:0{width}d}" for i in range(1, n + 1)]
    years = sorted(spec.years)
    values: Dict[str, Dict[int, Dict[str, Optional[float]]]] = {
        e: {y: {} for y in years} for e in entities
    }

    for name in variables:
        m = spec.variables[name]
        _check_feasible(name, m, n)
        averages = _moment_matched(rng, n, name, m)
        if n >= 50:
            _check_tolerance(name, averages, m, spec.tolerance)

        window = _window_for(name, spec, registry)
        cols = [years.index(y) for y in window.years() if y in years]
        if len(cols) != len(window.years()):
            raise InfeasibleSpecError(f"{name}: 窗口 {window} 不在 years {years} 之内")
        noise = rng.standard_normal((n, len(years))) * spec.year_noise * m.std
        noise -= noise[:, cols].mean(axis=1, keepdims=True)
        yearly = _bounded_years(averages, noise, m)
        for i, e in enumerate(entities):
            for j, y in enumerate(years):
                values[e][y][name] = float(yearly[i, j])

    industries: Dict[str, str] = {}
    if spec.industries:
        labels = [spec.industries[i % len(spec.industries)] for i in range(n)]
        order = rng.permutation(n)
        industries = {entities[i]: labels[k] for k, i in enumerate(order)}

    return PanelDataset(
        entities=entities,
        years=years,
        variables=variables,
        values=values,
        industries=industries,
    )


def _bounded_years(averages: np.ndarray, noise: np.ndarray, m: VariableMoments) -> np.ndarray:
    """逐 entity 按比例收缩年度扰动，使每一年都落在 [min, max] 内；窗口均值不变"""
    lo = -np.inf if m.min is None else m.min
    hi = np.inf if m.max is None else m.max
    base = averages[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        up = np.where(noise > 0, (hi - base) / noise, np.inf)
        down = np.where(noise < 0, (lo - base) / noise, np.inf)
    scale = np.clip(np.minimum(up, down).min(axis=1), 0.0, 1.0)
    # 收缩后仍可能越界一个 ulp
    return np.clip(base + noise * scale[:, None], lo, hi)


def _check_tolerance(name: str, x: np.ndarray, m: VariableMoments, tolerance: float) -> None:
    mean, std = float(x.mean()), float(x.std(ddof=1))
    scale = max(abs(m.mean), m.std, 1e-12)
    if abs(mean - m.mean) > tolerance * scale:
        raise InfeasibleSpecError(f"{name}: 截断后均值 {mean:.6g} 偏离目标 {m.mean}")
    if m.std > 0 and abs(std - m.std) > tolerance * m.std:
        raise InfeasibleSpecError(f"{name}: 截断后标准差 {std:.6g} 偏离目标 {m.std}")


def load_synth_spec(path: str) -> SynthSpec:
    if not os.path.exists(path):
        raise ConfigError(f"合成规格文件不存在：{path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            return SynthSpec.model_validate(json.load(f))
        except (json.JSONDecodeError, ValidationError) as e:
            raise ConfigError(f"合成规格无效：{e}")
