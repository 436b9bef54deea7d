import json

import pytest

from src.voroclust.errors import ConfigError
from src.voroclust.registry import default_registry, load_registry, set_registry_path


def test_default_registry_order():
    reg = default_registry()
    assert reg.names == ["TIAX", "TTA", "DSal", "DAss", "DLab", "ROI", "ROS", "ATO", "S/E"]
    assert reg.innovation_variables() == ["TIAX", "TTA"]
    assert reg.performance_variables() == ["DSal", "DAss", "DLab", "ROI", "ROS", "ATO", "S/E"]
    assert reg.group_of("S/E") == "productivity"
    assert reg.find_by_name("nope") is None


def test_load_registry_extension(tmp_path):
    path = tmp_path / "vars.json"
    path.write_text(json.dumps([{"name": "TotAss", "group": "auxiliary"}]), encoding="utf-8")
    reg = load_registry(str(path))
    assert reg.names[-1] == "TotAss"
    assert reg.auxiliary_variables() == ["TotAss"]
    assert "TotAss" not in reg.performance_variables()


def test_load_registry_from_module_path(tmp_path):
    path = tmp_path / "vars.json"
    path.write_text(json.dumps([{"name": "Empl", "group": "auxiliary"}]), encoding="utf-8")
    set_registry_path(str(path))
    assert "Empl" in load_registry().names


@pytest.mark.parametrize("payload", [
    [{"name": "TIAX", "group": "innovation"}],
    [{"name": "X", "group": "weather"}],
    {"name": "X"},
])
def test_load_registry_rejects_bad_entries(tmp_path, payload):
    path = tmp_path / "vars.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    with pytest.raises(ConfigError):
        load_registry(str(path))


def test_load_registry_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_registry(str(tmp_path / "missing.json"))
