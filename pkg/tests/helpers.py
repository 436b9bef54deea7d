import io
from typing import Dict, List, Sequence

import numpy as np

from src.voroclust.models import AveragedRecord, ClusterAssignment, SynthSpec, VariableMoments

INNOVATION = ["TIAX", "TTA"]
PERFORMANCE = ["DSal", "DAss", "DLab", "ROI", "ROS", "ATO", "S/E"]
ALL_VARS = INNOVATION + PERFORMANCE


def make_records(rows: Dict[str, Dict[str, float]]) -> List[AveragedRecord]:
    return [AveragedRecord(entity=e, values=dict(v)) for e, v in rows.items()]


def random_records(rng: np.random.Generator, n: int, variables: Sequence[str]) -> List[AveragedRecord]:
    x = rng.normal(size=(n, len(variables)))
    return [
        AveragedRecord(entity=f"E{i:03d}", values={v: float(x[i, j]) for j, v in enumerate(variables)})
        for i in range(n)
    ]


def assignment_from_counts(counts: Sequence[Sequence[int]]):
    """按计数矩阵构造一对划分：counts[h][k] 个 entity 同时属于 h 与 k"""
    rows, cols = {}, {}
    i = 0
    for h, row in enumerate(counts, start=1):
        for k, c in enumerate(row, start=1):
            for _ in range(c):
                e = f"C{i:03d}"
                rows[e], cols[e] = h, k
                i += 1
    entities = sorted(rows)

    def build(assign, n_cells, scope):
        card = [sum(1 for v in assign.values() if v == c) for c in range(1, n_cells + 1)]
        return ClusterAssignment(
            label=scope, scope=scope, n_cells=n_cells, entities=entities,
            assignment=assign, cardinalities=card,
        )

    return build(rows, len(counts), "innovation"), build(cols, len(counts[0]), "performance")


def normal_synth_spec(entity_count: int = 62, seed: int = 1) -> SynthSpec:
    """九个变量、无偏度无边界的合成规格：离群值剔除基本不会触发"""
    moments = {
        "TIAX": (12360.46, 1869.511),
        "TTA": (29215.40, 4537.98),
        "DSal": (0.06, 0.14),
        "DAss": (0.09, 0.16),
        "DLab": (0.06, 0.14),
        "ROI": (0.05, 0.05),
        "ROS": (0.05, 0.07),
        "ATO": (0.91, 0.34),
        "S/E": (275.77, 231.20),
    }
    return SynthSpec(
        entity_count=entity_count,
        seed=seed,
        variables={k: VariableMoments(mean=m, std=s) for k, (m, s) in moments.items()},
    )


def csv_source(text: str) -> io.StringIO:
    return io.StringIO(text)
