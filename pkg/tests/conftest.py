import pytest

from src.voroclust.registry import default_registry, set_registry_path


@pytest.fixture(autouse=True)
def _plain_registry(monkeypatch):
    # 环境变量里的扩展注册表不应影响测试
    monkeypatch.delenv("VARIABLES_JSON_PATH", raising=False)
    monkeypatch.delenv("VOROCLUST_OUT_DIR", raising=False)
    monkeypatch.delenv("VOROCLUST_WORKERS", raising=False)
    set_registry_path(None)
    yield
    set_registry_path(None)


@pytest.fixture
def registry():
    return default_registry()
