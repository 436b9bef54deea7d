import io
import math
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from src.voroclust.dataset import average_over_window, ingest, write_panel
from src.voroclust.errors import ConfigError, InfeasibleSpecError
from src.voroclust.models import SynthSpec, VariableMoments, Window
from src.voroclust.synth import _lognormal_sigma, load_synth_spec, synth_generate

from tests.helpers import ALL_VARS, normal_synth_spec

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _window_averages(data, variable, window="2006-2007"):
    records = average_over_window(data, Window.parse(window), [variable])
    return np.array([r.values[variable] for r in records])


def test_same_seed_same_dataset():
    spec = normal_synth_spec(seed=1)
    assert synth_generate(spec) == synth_generate(spec)


def test_different_seed_different_dataset():
    assert synth_generate(normal_synth_spec(seed=1)) != synth_generate(normal_synth_spec(seed=2))


def test_shape_and_row_count():
    data = synth_generate(normal_synth_spec(entity_count=62))
    assert len(data.entities) == 62
    assert data.years == [2006, 2007, 2008, 2009, 2010]
    assert data.variables == ALL_VARS
    buf = io.StringIO()
    write_panel(data, buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == 1 + 62 * 5


def test_generated_file_reingests():
    data = synth_generate(normal_synth_spec(entity_count=10))
    buf = io.StringIO()
    write_panel(data, buf)
    assert ingest(io.StringIO(buf.getvalue())) == data


def test_window_averages_hit_target_moments():
    spec = SynthSpec(
        entity_count=62,
        seed=3,
        variables={"TIAX": VariableMoments(mean=12360.46, std=18695.11)},
    )
    x = _window_averages(synth_generate(spec), "TIAX")
    assert math.isclose(x.mean(), 12360.46, rel_tol=1e-9)
    assert math.isclose(x.std(ddof=1), 18695.11, rel_tol=1e-9)


def test_performance_variable_averaged_over_its_window():
    spec = SynthSpec(entity_count=30, seed=4, variables={"ROI": VariableMoments(mean=0.05, std=0.05)})
    x = _window_averages(synth_generate(spec), "ROI", "2008-2010")
    assert math.isclose(x.mean(), 0.05, rel_tol=1e-9)
    assert math.isclose(x.std(ddof=1), 0.05, rel_tol=1e-9)


def test_bounds_are_respected():
    spec = SynthSpec(
        entity_count=80,
        seed=5,
        variables={"ATO": VariableMoments(mean=0.91, std=0.34, min=0.15, max=2.04)},
    )
    x = _window_averages(synth_generate(spec), "ATO", "2008-2010")
    assert x.min() >= 0.15 - 1e-12
    assert x.max() <= 2.04 + 1e-12


def test_positive_skewness_target():
    spec = SynthSpec(
        entity_count=500,
        seed=6,
        variables={"TIAX": VariableMoments(mean=100.0, std=50.0, skewness=2.0)},
    )
    x = _window_averages(synth_generate(spec), "TIAX")
    assert stats.skew(x) > 0.5


@pytest.mark.parametrize("target", [0.3, 1.0, 2.28, 5.0])
def test_lognormal_shape_solves_skewness(target):
    s = _lognormal_sigma(target)
    w = math.exp(s * s)
    assert math.isclose((w + 2.0) * math.sqrt(w - 1.0), target, rel_tol=1e-9)


def test_mean_outside_bounds_is_infeasible():
    spec = SynthSpec(
        entity_count=10,
        variables={"ROI": VariableMoments(mean=0.5, std=0.1, min=0.0, max=0.2)},
    )
    with pytest.raises(InfeasibleSpecError):
        synth_generate(spec)


def test_std_beyond_bhatia_davis_is_infeasible():
    # (max - mean)(mean - min) = 0.25 → σ ≤ ~0.53 for n = 10
    spec = SynthSpec(
        entity_count=10,
        variables={"ROI": VariableMoments(mean=0.5, std=0.9, min=0.0, max=1.0)},
    )
    with pytest.raises(InfeasibleSpecError):
        synth_generate(spec)


def test_industries_assigned_round_robin():
    spec = normal_synth_spec(entity_count=9).model_copy(update={"industries": ["a", "b", "c"]})
    data = synth_generate(spec)
    assert sorted(data.industries) == data.entities
    assert sorted(data.industries.values()) == ["a"] * 3 + ["b"] * 3 + ["c"] * 3


def test_shipped_spec_loads():
    spec = load_synth_spec(str(CONFIGS / "synth_table1.json"))
    assert spec.entity_count == 62
    assert list(spec.variables) == ALL_VARS
    assert spec.variables["TIAX"].mean == 12360.46


def test_load_synth_spec_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_synth_spec(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text('{"entity_count": 1, "variables": {}}', encoding="utf-8")
    with pytest.raises(ConfigError):
        load_synth_spec(str(bad))


def test_every_yearly_cell_respects_bounds():
    spec = load_synth_spec(str(CONFIGS / "synth_table1.json"))
    data = synth_generate(spec)
    for name, m in spec.variables.items():
        cells = [data.value(e, y, name) for e in data.entities for y in data.years]
        if m.min is not None:
            assert min(cells) >= m.min, name
        if m.max is not None:
            assert max(cells) <= m.max, name


def test_bounded_noise_keeps_window_averages():
    spec = SynthSpec(
        entity_count=80,
        seed=5,
        year_noise=2.0,
        variables={"ATO": VariableMoments(mean=0.91, std=0.34, min=0.15, max=2.04)},
    )
    data = synth_generate(spec)
    cells = [data.value(e, y, "ATO") for e in data.entities for y in data.years]
    assert min(cells) >= 0.15
    assert max(cells) <= 2.04
    flat = synth_generate(spec.model_copy(update={"year_noise": 0.0}))
    assert np.allclose(_window_averages(data, "ATO", "2008-2010"), _window_averages(flat, "ATO", "2008-2010"))
