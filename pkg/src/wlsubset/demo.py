"""Synthetic 24 x 45 demo dataset with three planted behaviour groups.

Each group is a software stack running the same eight algorithms. A
workload's metric vector is

    base + scale * (group_effect[g] @ mix_g + workload_factors @ mix_w + noise)

so the group structure dominates, per-workload variation lives in a few
latent directions shared by all metrics, and the rest is small noise.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from .metrics import MetricMatrix, WorkloadDescriptor, bundled_catalog, read_matrix_csv

STACKS = ("batch", "in-memory", "compute")
ALGORITHMS = ("Sort", "WordCount", "Grep", "Bayes", "Kmeans", "PageRank", "Projection", "Filter")
DEMO_SEED = 2015

_UNIT_SCALE = {
    "percentage": (30.0, 5.0),
    "ratio": (0.4, 0.08),
    "per-kilo-instruction": (20.0, 4.0),
    "dimensionless": (1.5, 0.2),
    "count": (1e6, 1e5),
}


def make_demo_matrix(
    seed: int = DEMO_SEED,
    n_factors: int = 4,
    group_strength: float = 2.0,
    factor_strength: float = 0.6,
    noise: float = 0.15,
) -> tuple[MetricMatrix, np.ndarray]:
    """Return the matrix and the planted group label of each workload."""
    rng = np.random.default_rng(seed)
    catalog = bundled_catalog()
    d = len(catalog)
    base = np.array([_UNIT_SCALE[m.unit][0] for m in catalog])
    scale = np.array([_UNIT_SCALE[m.unit][1] for m in catalog])

    group_effect = rng.normal(size=(len(STACKS), d))
    group_effect -= group_effect.mean(axis=0)
    # each group's offset has RMS `group_strength` per metric
    group_effect *= group_strength * np.sqrt(d) / np.linalg.norm(group_effect, axis=1, keepdims=True)
    factor_mix = rng.normal(size=(n_factors, d)) / np.sqrt(n_factors)

    workloads, rows, labels = [], [], []
    for g, stack in enumerate(STACKS):
        for algo in ALGORITHMS:
            latent = rng.normal(size=n_factors) * factor_strength
            z = group_effect[g] + latent @ factor_mix + rng.normal(size=d) * noise
            rows.append(base + scale * z)
            workloads.append(
                WorkloadDescriptor(
                    id=f"{stack[0].upper()}-{algo}",
                    algorithm=algo,
                    stack=stack,
                    category="offline-analytics",
                )
            )
            labels.append(g)
    return MetricMatrix(tuple(workloads), tuple(catalog), np.array(rows)), np.array(labels)


def load_demo_matrix() -> tuple[MetricMatrix, np.ndarray]:
    """The bundled copy of ``make_demo_matrix()``; planted labels come from the stack column."""
    path = resources.files("wlsubset.data").joinpath("demo_matrix.csv")
    with resources.as_file(path) as p:
        matrix = read_matrix_csv(p, bundled_catalog())
    labels = np.array([STACKS.index(w.stack) for w in matrix.workloads])
    return matrix, labels


def demo_csv_text() -> str:
    return resources.files("wlsubset.data").joinpath("demo_matrix.csv").read_text("utf-8")
