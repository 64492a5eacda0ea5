"""Serialisation of every analysis result to plain JSON / CSV / DOT."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .decompose import PcaModel, factor_loading_report
from .errors import ConfigError
from .hcluster import Dendrogram
from .kmeans import BicSweep
from .metrics import WorkloadDescriptor
from .subset import SubsetReport, kiviat_table


def write_json(obj, path: str | Path) -> None:
    text = json.dumps(obj, indent=2, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def write_csv(header: Sequence[str], rows, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _floats(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def pca_report(model: PcaModel) -> dict:
    fractions = model.variance_fractions()
    return {
        "metrics": list(model.metric_names),
        "workloads": list(model.workload_ids),
        "dropped_columns": list(model.dropped_columns),
        "eigenvalues": _floats(model.eigenvalues),
        "variance_fraction": _floats(fractions),
        "cumulative_fraction": _floats(np.cumsum(fractions)),
        "retained": model.retained,
        "retained_variance_fraction": model.retained_variance_fraction,
        "jacobi_sweeps": model.sweeps,
        # rows = metrics, columns = PCs
        "loadings": _floats(model.loadings),
        "scores": _floats(model.scores),
        "factor_loadings": [
            {"pc": pc.pc, "eigenvalue": pc.eigenvalue, "rendering": pc.rendering,
             "terms": [{"metric": n, "weight": w} for n, w in pc.terms]}
            for pc in factor_loading_report(model)
        ],
    }


def write_loadings_csv(model: PcaModel, path: str | Path) -> None:
    k = model.retained
    rows = [[name, *map(repr, row)] for name, row in zip(model.metric_names, _floats(model.retained_loadings))]
    write_csv(["metric", *(f"PC{j + 1}" for j in range(k))], rows, path)


def emit_scatter(
    model: PcaModel, pcs: tuple[int, int], workloads: Sequence[WorkloadDescriptor]
) -> tuple[list[str], list[list]]:
    """Rows of (workload, stack, score on each requested PC); ``pcs`` are 0-based."""
    for p in pcs:
        if not 0 <= p < model.retained:
            raise ConfigError(f"PC{p + 1} requested but only {model.retained} PCs are retained")
    header = ["workload", "stack", *(f"PC{p + 1}" for p in pcs)]
    rows = [
        [w.id, w.stack, *(repr(float(model.scores[i, p])) for p in pcs)]
        for i, w in enumerate(workloads)
    ]
    return header, rows


def _node_label(dend: Dendrogram, node: int) -> str:
    if node < dend.n_leaves:
        return dend.leaves[node]
    return f"m{node - dend.n_leaves}"


def dendrogram_report(dend: Dendrogram) -> dict:
    R = dend.n_leaves
    return {
        "leaves": list(dend.leaves),
        "merges": [
            {"id": R + i, "left": m.left, "right": m.right,
             "left_label": _node_label(dend, m.left),
             "right_label": _node_label(dend, m.right),
             "height": m.height, "size": m.size}
            for i, m in enumerate(dend.merges)
        ],
    }


def _dot_quote(s: str) -> str:
    escaped = s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return '"' + escaped + '"'


def dendrogram_dot(dend: Dendrogram, workloads: Sequence[WorkloadDescriptor] | None = None) -> str:
    R = dend.n_leaves
    stacks = {w.id: w.stack for w in workloads or []}
    lines = ["digraph dendrogram {", "  node [shape=box];"]
    for i, leaf in enumerate(dend.leaves):
        label = f"{leaf}\n({stacks[leaf]})" if stacks.get(leaf) else leaf
        lines.append(f"  n{i} [label={_dot_quote(label)}];")
    for i, m in enumerate(dend.merges):
        lines.append(f"  n{R + i} [shape=point, label=\"\", xlabel=\"{m.height:.2f}\"];")
        for child in (m.left, m.right):
            lines.append(f"  n{R + i} -> n{child} [label=\"{m.height:.2f}\"];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def sweep_report(sw: BicSweep, workload_ids: Sequence[str], bic_form: str, pj_compat: bool) -> dict:
    best = sw.best
    return {
        "bic_form": bic_form,
        "pj_compat": pj_compat,
        "best_k": sw.best_k,
        "candidates": [
            {"k": k, "bic": s.bic, "log_likelihood": s.log_likelihood, "inertia": s.inertia,
             "sigma_sq": s.sigma_sq, "sigma_clamped": s.sigma_clamped,
             "iterations": s.iterations, "restarts": s.restarts_used, "seed": list(s.seed)}
            for k, s in sw.candidates
        ],
        "clusters": [
            {"cluster": c + 1, "workloads": [workload_ids[i] for i in members], "count": len(members)}
            for c, members in enumerate(best.members())
        ],
        "assignments": {workload_ids[i]: int(c) + 1 for i, c in enumerate(best.assignments)},
        "restart_log": sw.log,
    }


def subset_report_json(reports: Sequence[SubsetReport], dend: Dendrogram, singletons: Sequence[int]) -> dict:
    ids = dend.leaves
    single = set(singletons)
    return {
        "dendrogram_singletons": [ids[i] for i in singletons],
        "strategies": [
            {
                "strategy": r.strategy,
                "representatives": [
                    {"workload": ids[rep.workload], "cluster": rep.cluster + 1,
                     "represents": rep.cluster_size}
                    for rep in r.representatives
                ],
                "max_linkage_distance": r.max_linkage_distance,
                "dendrogram_overlap": [ids[i] for i in r.dendrogram_cut_agreement],
                "dendrogram_overlap_count": len(single & {rep.workload for rep in r.representatives}),
            }
            for r in reports
        ],
    }


def kiviat_rows(scores: np.ndarray, report: SubsetReport, ids: Sequence[str]) -> tuple[list[str], list[list]]:
    table = kiviat_table(scores, report.representatives)
    header = ["workload", "cluster", *(f"PC{j + 1}" for j in range(table.shape[1]))]
    rows = [
        [ids[rep.workload], rep.cluster + 1, *map(repr, row)]
        for rep, row in zip(report.representatives, table.tolist())
    ]
    return header, rows
