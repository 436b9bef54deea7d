import json
from pathlib import Path

import pytest

from src.cluster_cli import main
from src.voroclust.logger import read_event_log, set_log_root

from tests.helpers import normal_synth_spec


@pytest.fixture
def panel(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(normal_synth_spec(entity_count=62, seed=1).model_dump_json(), encoding="utf-8")
    out = tmp_path / "panel.csv"
    assert main(["synth", "--spec", str(spec), "--out", str(out)]) == 0
    return out


def _config(tmp_path, panel, extra=""):
    path = tmp_path / "run.env"
    path.write_text(f"INPUT={panel.name}\nSCENARIO=II\n{extra}", encoding="utf-8")
    return str(path)


def _tree(root: Path):
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_synth_is_reproducible(tmp_path, panel):
    spec = tmp_path / "spec.json"
    again = tmp_path / "again.csv"
    assert main(["synth", "--spec", str(spec), "--out", str(again)]) == 0
    assert again.read_bytes() == panel.read_bytes()
    lines = panel.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1 + 62 * 5
    assert lines[0] == "entity,year,TIAX,TTA,DSal,DAss,DLab,ROI,ROS,ATO,S/E"


def test_synth_seed_flag_changes_output(tmp_path, panel):
    other = tmp_path / "other.csv"
    assert main(["synth", "--spec", str(tmp_path / "spec.json"), "--out", str(other), "--seed", "2"]) == 0
    assert other.read_bytes() != panel.read_bytes()


def test_run_writes_reports_and_manifest(tmp_path, panel):
    out = tmp_path / "out"
    assert main(["run", "--config", _config(tmp_path, panel), "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["entities_before"] == 62
    assert manifest["entities_after"] == 62 - len(manifest["removed"])
    assert manifest["steps"] == ["ingest", "average", "filter", "normalize", "cluster", "analyze", "report"]
    assert manifest["scenario"] == "II"
    assert set(manifest["tie_counts"]) == {"innovation:innovation", "performance:performance"}
    for name in manifest["files"]:
        assert (out / name).is_file(), name
    for name in ("stats.csv", "crosstab.csv", "crosstab.md", "cardinality.csv",
                 "normalized_innovation.csv", "bounds.json", "assignments/innovation_innovation.json",
                 "profile_performance_performance.md"):
        assert (out / name).is_file(), name

    set_log_root(str(out / "logs"))
    events = read_event_log()
    steps = [e["step"] for e in events if e["type"] == "step"]
    assert steps == manifest["steps"]


def test_run_is_byte_identical(tmp_path, panel):
    cfg = _config(tmp_path, panel)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "b"), "--workers", "4"]) == 0
    assert _tree(tmp_path / "a") == _tree(tmp_path / "b")


def test_run_twice_in_same_directory(tmp_path, panel):
    cfg = _config(tmp_path, panel)
    out = tmp_path / "same"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    first = _tree(out)
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    assert _tree(out) == first


def test_run_scenario_one_without_filter(tmp_path, panel):
    out = tmp_path / "one"
    assert main(["run", "--config", _config(tmp_path, panel), "--scenario", "I", "--no-filter", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["steps"] == ["ingest", "average", "normalize", "cluster", "analyze", "report"]
    assert manifest["entities_after"] == 62
    assert len(manifest["tie_counts"]) == 9
    assert (out / "crosstab_TIAX_S_E.csv").is_file()
    assert (out / "assignments" / "performance_S_E.json").is_file()


def test_run_with_original_bounds(tmp_path, panel):
    out = tmp_path / "orig"
    assert main(["run", "--config", _config(tmp_path, panel, "RENORMALIZE=original\n"), "--out", str(out)]) == 0
    bounds = json.loads((out / "bounds.json").read_text(encoding="utf-8"))
    assert bounds["reference"] == "external"
    assert set(bounds["bounds"]) == {"TIAX", "TTA", "DSal", "DAss", "DLab", "ROI", "ROS", "ATO", "S/E"}


def test_crosstab_subcommand(tmp_path, panel, capsys):
    cfg = _config(tmp_path, panel)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "two")]) == 0
    assert main(["run", "--config", cfg, "--scenario", "III", "--out", str(tmp_path / "three")]) == 0
    capsys.readouterr()
    code = main([
        "crosstab",
        str(tmp_path / "two" / "assignments" / "performance_performance.json"),
        str(tmp_path / "three" / "assignments" / "performance_performance.json"),
        "--labels", "II,III",
        "--out", str(tmp_path / "moves"),
    ])
    assert code == 0
    assert "II \\ III" in capsys.readouterr().out
    assert (tmp_path / "moves" / "crosstab.csv").is_file()


def test_stats_subcommand(tmp_path, panel, capsys):
    out = tmp_path / "stats"
    assert main(["stats", "--config", _config(tmp_path, panel), "--out", str(out)]) == 0
    text = (out / "stats.csv").read_text(encoding="utf-8")
    assert text.splitlines()[0] == "label,TIAX,TTA,DSal,DAss,DLab,ROI,ROS,ATO,S/E"
    assert "skewness" in capsys.readouterr().out


def test_empty_input_is_a_data_error(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    code = main(["run", "--config", _config(tmp_path, empty), "--out", str(tmp_path / "out")])
    assert code == 2
    assert "[dataset]" in capsys.readouterr().err


def test_missing_config_is_a_config_error(tmp_path, capsys):
    code = main(["run", "--config", str(tmp_path / "nope.env")])
    assert code == 1
    assert "[config]" in capsys.readouterr().err


def test_missing_input_key(tmp_path, capsys):
    path = tmp_path / "bare.env"
    path.write_text("SCENARIO=II\n", encoding="utf-8")
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == 1


def test_constant_variable_is_a_numeric_error(tmp_path, capsys):
    rows = ["entity,year,TIAX,TTA,DSal,DAss,DLab,ROI,ROS,ATO,S/E"]
    for i in range(5):
        for y in range(2006, 2011):
            rows.append(f"E{i},{y},5,{i},{i},{i},{i},{i},{i},{i},{i}")
    panel = tmp_path / "flat.csv"
    panel.write_text("\n".join(rows) + "\n", encoding="utf-8")
    code = main(["run", "--config", _config(tmp_path, panel), "--no-filter", "--out", str(tmp_path / "o")])
    assert code == 3
    assert "[transform]" in capsys.readouterr().err


def test_bad_usage_returns_one():
    assert main(["run", "--scenario", "IV"]) == 1
    assert main([]) == 1


def test_custom_weights_in_wrong_group_is_a_config_error(tmp_path, panel, capsys):
    path = tmp_path / "custom.env"
    path.write_text(
        f"INPUT={panel.name}\nSCENARIO=custom\nINNOVATION_WEIGHTS=ROI:1\nPERFORMANCE_WEIGHTS=TIAX:1\n",
        encoding="utf-8",
    )
    capsys.readouterr()
    code = main(["run", "--config", str(path), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "[config]" in capsys.readouterr().err


def test_run_has_no_seed_flag(tmp_path, panel):
    assert main(["run", "--config", _config(tmp_path, panel), "--seed", "3", "--out", str(tmp_path / "o")]) == 1


def test_run_with_industries(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(
        normal_synth_spec(entity_count=30, seed=4).model_copy(update={"industries": ["food", "steel"]}).model_dump_json(),
        encoding="utf-8",
    )
    panel = tmp_path / "panel.csv"
    assert main(["synth", "--spec", str(spec), "--out", str(panel)]) == 0
    out = tmp_path / "out"
    cfg = _config(tmp_path, panel, "INDUSTRY_COLUMN=industry\n")
    assert main(["run", "--config", cfg, "--no-filter", "--out", str(out)]) == 0
    text = (out / "industry_performance_performance.csv").read_text(encoding="utf-8")
    rows = text.splitlines()
    assert rows[0].startswith("Industry \\ Performance,")
    assert [r.split(",")[0] for r in rows[1:]] == ["food", "steel", "Tot"]
    assert rows[-1].split(",")[-1] == "30"
