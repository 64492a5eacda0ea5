"""End-to-end orchestration: ingest -> PCA -> clustering -> subsetting -> reports."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable

from . import __version__
from .decompose import kaiser_select, pca, standardize
from .errors import ConfigError, DataError, WorkloadToolkitError
from .hcluster import pairwise_distances, single_linkage
from .kmeans import BIC_FORMS, DEFAULT_RESTARTS, default_k_range, sweep
from .metrics import (
    MetricMatrix,
    aggregate_nodes,
    build_matrix,
    build_matrix_metrics_first,
    bundled_catalog,
    read_catalog,
    read_events_csv,
    read_matrix_csv,
    read_workloads_csv,
    workloads_from_events,
    write_matrix_csv,
)
from .report import (
    dendrogram_dot,
    dendrogram_report,
    emit_scatter,
    kiviat_rows,
    pca_report,
    sha256_file,
    subset_report_json,
    sweep_report,
    write_csv,
    write_json,
    write_loadings_csv,
)
from .subset import STRATEGIES, dendrogram_cross_check, subset_report

log = logging.getLogger(__name__)

STAGES = ("ingest", "pca", "hcluster", "kmeans", "subset")
AGGREGATE_MODES = ("events-first", "metrics-first")


@dataclass
class PipelineConfig:
    events: str | None = None
    matrix: str | None = None
    catalog: str | None = None
    workloads: str | None = None
    aggregate_mode: str = "events-first"
    kaiser_threshold: float = 1.0
    kaiser_strict: bool = False
    k_min: int | None = None
    k_max: int | None = None
    restarts: int = DEFAULT_RESTARTS
    seed: int = 0
    pj_compat: bool = False
    bic_form: str = "corrected"
    # 1-based PC pairs; None means (1, 2) and, when retained, (3, 4)
    scatter: list[tuple[int, int]] | None = None
    out_dir: str = field(default="wlsubset-out", metadata={"manifest": False})

    def validate(self) -> None:
        if (self.events is None) == (self.matrix is None):
            raise ConfigError("provide exactly one of an events CSV or a matrix CSV")
        if self.aggregate_mode not in AGGREGATE_MODES:
            raise ConfigError(f"aggregate mode must be one of {AGGREGATE_MODES}")
        if self.bic_form not in BIC_FORMS:
            raise ConfigError(f"BIC form must be one of {BIC_FORMS}")
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    def to_manifest(self) -> dict:
        out = {}
        for f in fields(self):
            if f.metadata.get("manifest", True):
                value = getattr(self, f.name)
                if f.name == "scatter" and value is not None:
                    value = [list(p) for p in value]
                out[f.name] = value
        return out

    @classmethod
    def from_manifest(cls, data: dict, out_dir: str | None = None) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {k: v for k, v in data.items() if k in known}
        if kwargs.get("scatter") is not None:
            kwargs["scatter"] = [tuple(p) for p in kwargs["scatter"]]
        if out_dir is not None:
            kwargs["out_dir"] = out_dir
        return cls(**kwargs)

    def k_range(self, R: int) -> tuple[int, int]:
        lo, hi = default_k_range(R)
        k_min = lo if self.k_min is None else self.k_min
        k_max = hi if self.k_max is None else self.k_max
        if not 2 <= k_min <= k_max <= R - 1:
            raise ConfigError(
                f"k range [{k_min}, {k_max}] must satisfy 2 <= k_min <= k_max <= R-1 = {R - 1}"
            )
        return k_min, k_max


class StageError(WorkloadToolkitError):
    def __init__(self, stage: str, cause: WorkloadToolkitError):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = cause.exit_code


@dataclass
class PipelineResult:
    config: PipelineConfig
    artifacts: dict[str, str] = field(default_factory=dict)
    stages: list[str] = field(default_factory=list)
    matrix: MetricMatrix | None = None
    model: object = None
    dendrogram: object = None
    sweep: object = None
    subsets: list = field(default_factory=list)


def load_matrix(cfg: PipelineConfig) -> MetricMatrix:
    catalog = read_catalog(cfg.catalog) if cfg.catalog else None
    if cfg.matrix is not None:
        return read_matrix_csv(cfg.matrix, catalog if catalog is not None else bundled_catalog())
    samples = read_events_csv(cfg.events)
    if catalog is None:
        catalog = bundled_catalog()
    if cfg.workloads:
        workloads = read_workloads_csv(cfg.workloads)
    else:
        workloads = workloads_from_events(samples)
    if cfg.aggregate_mode == "metrics-first":
        return build_matrix_metrics_first(catalog, workloads, samples)
    return build_matrix(catalog, workloads, aggregate_nodes(samples))


def _stage(name: str, fn: Callable, result: PipelineResult):
    log.info("stage %s", name)
    try:
        value = fn()
    except WorkloadToolkitError as exc:
        raise StageError(name, exc) from exc
    result.stages.append(name)
    return value


def run_pipeline(cfg: PipelineConfig, stop_after: str = "subset") -> PipelineResult:
    """Run stages up to ``stop_after``, writing each stage's artifacts as it completes.

    A manifest is written at the end, or on failure, listing the config and the
    checksum of every artifact produced so far.
    """
    if stop_after not in STAGES:
        raise ConfigError(f"unknown stage {stop_after!r}")
    cfg.validate()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = PipelineResult(cfg)

    def emit(name: str, writer: Callable[[Path], None]) -> None:
        path = out / name
        writer(path)
        result.artifacts[name] = str(path)

    failure = None
    try:
        _run(cfg, stop_after, result, emit)
    except StageError as exc:
        failure = exc
    _write_manifest(cfg, result, out, failure)
    if failure is not None:
        raise failure
    return result


def _run(cfg: PipelineConfig, stop_after: str, result: PipelineResult, emit) -> None:
    matrix = _stage("ingest", lambda: load_matrix(cfg), result)
    result.matrix = matrix
    emit("matrix.csv", lambda p: write_matrix_csv(matrix, p))
    if stop_after == "ingest":
        return

    def do_pca():
        model = kaiser_select(pca(standardize(matrix)), cfg.kaiser_threshold, cfg.kaiser_strict)
        if cfg.scatter is not None:
            pairs = [(a - 1, b - 1) for a, b in cfg.scatter]
        else:
            pairs = [pair for pair in ((0, 1), (2, 3)) if pair[1] < model.retained]
        return model, [(pair, emit_scatter(model, pair, matrix.workloads)) for pair in pairs]

    model, scatters = _stage("pca", do_pca, result)
    result.model = model
    emit("pca.json", lambda p: write_json(pca_report(model), p))
    emit("loadings.csv", lambda p: write_loadings_csv(model, p))
    for (a, b), (header, rows) in scatters:
        emit(f"scatter_pc{a + 1}_pc{b + 1}.csv", lambda p: write_csv(header, rows, p))
    if stop_after == "pca":
        return

    scores = model.retained_scores
    ids = matrix.workload_ids
    dend = _stage("hcluster", lambda: single_linkage(pairwise_distances(scores), ids), result)
    result.dendrogram = dend
    emit("dendrogram.json", lambda p: write_json(dendrogram_report(dend), p))
    emit("dendrogram.dot", lambda p: Path(p).write_text(dendrogram_dot(dend, matrix.workloads), encoding="utf-8"))
    if stop_after == "hcluster":
        return

    def do_kmeans():
        return sweep(scores, cfg.k_range(len(ids)), cfg.restarts, cfg.seed, cfg.pj_compat, cfg.bic_form)

    sw = _stage("kmeans", do_kmeans, result)
    result.sweep = sw
    emit("kmeans.json", lambda p: write_json(sweep_report(sw, ids, cfg.bic_form, cfg.pj_compat), p))
    if stop_after == "kmeans":
        return

    def do_subset():
        labels = sw.best.assignments
        reports = [subset_report(s, scores, labels, dend) for s in STRATEGIES]
        return reports, dendrogram_cross_check(dend, sw.best_k)

    reports, singletons = _stage("subset", do_subset, result)
    result.subsets = reports
    emit("subset.json", lambda p: write_json(subset_report_json(reports, dend, singletons), p))
    for r in reports:
        header, rows = kiviat_rows(scores, r, ids)
        emit(f"kiviat_{r.strategy}.csv", lambda p: write_csv(header, rows, p))


def _write_manifest(cfg: PipelineConfig, result: PipelineResult, out: Path, failure) -> None:
    inputs = {}
    for key in ("events", "matrix", "catalog", "workloads"):
        path = getattr(cfg, key)
        if path is not None and Path(path).is_file():
            inputs[key] = {"path": path, "sha256": sha256_file(path)}
    manifest = {
        "tool": "wlsubset",
        "version": __version__,
        "config": cfg.to_manifest(),
        "inputs": inputs,
        "stages_completed": result.stages,
        "status": "ok" if failure is None else "failed",
        "artifacts": {name: sha256_file(path) for name, path in sorted(result.artifacts.items())},
    }
    if failure is not None:
        manifest["failed_stage"] = failure.stage
        manifest["error"] = str(failure.cause)
    write_json(manifest, out / "manifest.json")


def load_manifest(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"manifest {path} is not valid JSON: {exc}") from exc
