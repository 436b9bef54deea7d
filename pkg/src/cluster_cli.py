import argparse
import os
import sys
from typing import List, Optional

from dotenv import load_dotenv
from pydantic import ValidationError

from src.voroclust.analytics import crosstab
from src.voroclust.config import PipelineConfig, load_pipeline_config
from src.voroclust.dataset import write_panel
from src.voroclust.errors import VoroClustError
from src.voroclust.pipeline import load_assignment, run_pipeline, run_stats
from src.voroclust.report import render_crosstab, write_table
from src.voroclust.synth import load_synth_spec, synth_generate

load_dotenv()


def _overrides(args) -> dict:
    return {
        "scenario": getattr(args, "scenario", None),
        "no_filter": getattr(args, "no_filter", False) or None,
        "out": getattr(args, "out", None),
        "workers": getattr(args, "workers", None),
    }


def cmd_run(config: PipelineConfig) -> int:
    manifest = run_pipeline(config)
    print(f"完成：{config.output_dir}")
    print(
        f"entity：{manifest['entities_before']} → {manifest['entities_after']}，"
        f"剔除 {len(manifest['removed'])}，平局 {sum(manifest['tie_counts'].values())}"
    )
    return 0


def cmd_stats(config: PipelineConfig) -> int:
    table = run_stats(config)
    print(table.to_markdown())
    return 0


def cmd_synth(spec_path: str, output_path: str, seed: Optional[int] = None, delimiter: str = ",") -> int:
    spec = load_synth_spec(spec_path)
    if seed is not None:
        spec = spec.model_copy(update={"seed": seed})
    data = synth_generate(spec)
    os.makedirs(os.path.dirname(os.path.abspath(output_path)), exist_ok=True)
    with open(output_path, "w", encoding="utf-8", newline="") as f:
        write_panel(data, f, delimiter=delimiter)
    print(f"已生成：{output_path}（{len(data.entities)} 个 entity × {len(data.years)} 年）")
    return 0


def cmd_crosstab(a_path: str, b_path: str, labels: List[str], out: Optional[str] = None, delimiter: str = ",") -> int:
    """两个已保存划分之间的分布表，例如绩效 II 与 III 之间的迁移"""
    a, b = load_assignment(a_path), load_assignment(b_path)
    table = render_crosstab(
        crosstab(a, b),
        labels=(labels[0], labels[1]),
        title=f"{a.scope} {a.label} × {b.scope} {b.label}",
    )
    if out:
        write_table(table, out, "crosstab", delimiter)
    print(table.to_markdown())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description="加权非对称 Voronoi 聚类（创新 × 绩效）")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("run", help="执行完整流水线并写出全部表格")
    s.add_argument("--config", type=str, default=None, help="KEY=VALUE 配置文件")
    s.add_argument("--scenario", choices=["I", "II", "III", "custom"], default=None)
    s.add_argument("--no-filter", action="store_true", help="关闭离群值剔除")
    s.add_argument("--out", type=str, default=None)
    s.add_argument("--workers", type=int, default=None)
    s.set_defaults(func=lambda a: cmd_run(load_pipeline_config(a.config, _overrides(a))))

    s = sub.add_parser("synth", help="按汇总矩生成合成面板数据")
    s.add_argument("--spec", required=True, help="合成规格 JSON")
    s.add_argument("--out", required=True, help="输出的分隔文本路径")
    s.add_argument("--seed", type=int, default=None, help="覆盖规格中的 seed")
    s.add_argument("--delimiter", default=",")
    s.set_defaults(func=lambda a: cmd_synth(a.spec, a.out, a.seed, "\t" if a.delimiter == "tab" else a.delimiter))

    s = sub.add_parser("stats", help="只输出描述统计表")
    s.add_argument("--config", type=str, default=None)
    s.add_argument("--out", type=str, default=None)
    s.set_defaults(func=lambda a: cmd_stats(load_pipeline_config(a.config, _overrides(a))))

    s = sub.add_parser("crosstab", help="两个已保存划分（assignments/*.json）的交叉表")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--labels", default="Innovation,Performance", help="行、列名称，逗号分隔")
    s.add_argument("--out", type=str, default=None)
    s.set_defaults(func=lambda a: cmd_crosstab(a.a, a.b, (a.labels.split(",") + ["", ""])[:2], a.out))
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 1 if e.code else 0
    try:
        return args.func(args)
    except VoroClustError as e:
        print(f"[{e.module}] {e}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        print(f"[core] 数据校验失败：{e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
