import os
import json
from typing import Any, Dict

# ---- 运行日志根目录（每次 run 会覆盖为 <out>/logs） ----
_RUN_LOG_ROOT: str = os.getenv("VOROCLUST_LOG_DIR", "logs")


def set_log_root(root: str) -> None:
    global _RUN_LOG_ROOT
    _RUN_LOG_ROOT = root


def get_log_root() -> str:
    return _RUN_LOG_ROOT


def _ensure_dir(path: str):
    os.makedirs(path, exist_ok=True)


def _event_log_path() -> str:
    _ensure_dir(_RUN_LOG_ROOT)
    return os.path.join(_RUN_LOG_ROOT, "events.jsonl")


def init_run_log() -> None:
    """清空本次运行的事件日志（同一输出目录重复运行时保持字节一致）"""
    with open(_event_log_path(), "w", encoding="utf-8"):
        pass


def append_event_log(record: Dict[str, Any]) -> None:
    """记录流水线步骤/剔除/平局等事件；不写时间戳"""
    path = _event_log_path()
    with open(path, "a", encoding="utf-8") as f:
        f.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def read_event_log() -> list:
    path = os.path.join(_RUN_LOG_ROOT, "events.jsonl")
    if not os.path.exists(path):
        return []
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]
