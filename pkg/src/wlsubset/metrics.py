"""Metric catalog, raw event ingestion and the workloads x metrics matrix."""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError, ExpressionError
from .expr import Expression, evaluate, identifiers, parse_expression

CATEGORIES = (
    "instruction-mix",
    "cache",
    "tlb",
    "branch",
    "pipeline",
    "offcore",
    "snoop",
    "parallelism",
    "operation-intensity",
    "custom",
)

UNITS = ("per-kilo-instruction", "ratio", "percentage", "count", "dimensionless")

METADATA_COLUMNS = ("stack", "algorithm", "category", "problem_size")


@dataclass(frozen=True)
class WorkloadDescriptor:
    id: str
    algorithm: str = ""
    stack: str = ""
    category: str = ""
    problem_size: str = ""

    def __post_init__(self):
        if not self.id:
            raise DataError("workload id must be non-empty")


@dataclass(frozen=True)
class MetricDescriptor:
    name: str
    category: str = "custom"
    unit: str = "dimensionless"
    derivation: str | None = None

    def __post_init__(self):
        if not self.name:
            raise DataError("metric name must be non-empty")
        if self.category not in CATEGORIES:
            raise DataError(f"metric {self.name!r}: unknown category {self.category!r}")
        if self.unit not in UNITS:
            raise DataError(f"metric {self.name!r}: unknown unit {self.unit!r}")
        if self.derivation is not None:
            try:
                parse_expression(self.derivation)
            except ExpressionError as exc:
                raise DataError(f"metric {self.name!r}: bad derivation: {exc}") from exc

    @property
    def expression(self) -> Expression | None:
        return None if self.derivation is None else parse_expression(self.derivation)


@dataclass(frozen=True)
class EventSample:
    workload_id: str
    node_id: str
    event_name: str
    count: float

    def __post_init__(self):
        if not (self.count >= 0 and math.isfinite(self.count)):
            raise DataError(
                f"event {self.event_name!r} for {self.workload_id!r}/{self.node_id!r}: "
                f"count must be a finite non-negative number, got {self.count!r}"
            )


@dataclass(frozen=True, eq=False)
class MetricMatrix:
    workloads: tuple[WorkloadDescriptor, ...]
    metrics: tuple[MetricDescriptor, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "workloads", tuple(self.workloads))
        object.__setattr__(self, "metrics", tuple(self.metrics))
        object.__setattr__(self, "values", values)
        R, d = len(self.workloads), len(self.metrics)
        if values.shape != (R, d):
            raise DataError(f"values shape {values.shape} does not match {R} x {d}")
        _check_unique([w.id for w in self.workloads], "workload id")
        _check_unique([m.name for m in self.metrics], "metric name")
        if not np.all(np.isfinite(values)):
            r, c = np.argwhere(~np.isfinite(values))[0]
            raise DataError(
                f"non-finite value for workload {self.workloads[r].id!r}, "
                f"metric {self.metrics[c].name!r}"
            )

    @property
    def workload_ids(self) -> list[str]:
        return [w.id for w in self.workloads]

    @property
    def metric_names(self) -> list[str]:
        return [m.name for m in self.metrics]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def _check_unique(names: Sequence[str], what: str) -> None:
    seen = set()
    for name in names:
        if name in seen:
            raise DataError(f"duplicate {what} {name!r}")
        seen.add(name)


def aggregate_nodes(samples: Iterable[EventSample]) -> dict[tuple[str, str], float]:
    """Mean event count per (workload, event) over nodes.

    Repeated samples for one (workload, node, event) are averaged within the
    node first, so a node that was sampled more often does not get more weight.
    """
    per_node = _node_means(samples)
    grouped: dict[tuple[str, str], list[float]] = defaultdict(list)
    for (workload, node, event), value in sorted(per_node.items()):
        grouped[(workload, event)].append(value)
    return {key: math.fsum(vals) / len(vals) for key, vals in grouped.items()}


def _node_means(samples: Iterable[EventSample]) -> dict[tuple[str, str, str], float]:
    runs: dict[tuple[str, str, str], list[float]] = defaultdict(list)
    for s in samples:
        runs[(s.workload_id, s.node_id, s.event_name)].append(float(s.count))
    if not runs:
        raise DataError("no event samples")
    # fsum over sorted values keeps the result independent of sample order
    return {key: math.fsum(sorted(v)) / len(v) for key, v in runs.items()}


def _metric_value(metric: MetricDescriptor, workload: str, events: Mapping[str, float]) -> float:
    if metric.derivation is None:
        if metric.name not in events:
            raise DataError(f"workload {workload!r} is missing event {metric.name!r}")
        value = events[metric.name]
    else:
        expr = metric.expression
        missing = sorted(identifiers(expr) - events.keys())
        if missing:
            raise DataError(f"workload {workload!r} is missing event {missing[0]!r}")
        try:
            value = evaluate(expr, events)
        except ExpressionError as exc:
            raise DataError(f"workload {workload!r}, metric {metric.name!r}: {exc}") from exc
    if not math.isfinite(value):
        raise DataError(f"workload {workload!r}, metric {metric.name!r}: non-finite result")
    return value


def build_matrix(
    catalog: Sequence[MetricDescriptor],
    workloads: Sequence[WorkloadDescriptor],
    events: Mapping[tuple[str, str], float],
) -> MetricMatrix:
    by_workload: dict[str, dict[str, float]] = defaultdict(dict)
    for (workload, event), value in events.items():
        by_workload[workload][event] = value
    values = np.empty((len(workloads), len(catalog)))
    for i, w in enumerate(workloads):
        for j, m in enumerate(catalog):
            values[i, j] = _metric_value(m, w.id, by_workload.get(w.id, {}))
    return MetricMatrix(tuple(workloads), tuple(catalog), values)


def build_matrix_metrics_first(
    catalog: Sequence[MetricDescriptor],
    workloads: Sequence[WorkloadDescriptor],
    samples: Iterable[EventSample],
) -> MetricMatrix:
    """Alternative aggregation: derive each metric per node, then average nodes."""
    per_node: dict[tuple[str, str], dict[str, float]] = defaultdict(dict)
    for (workload, node, event), value in _node_means(samples).items():
        per_node[(workload, node)][event] = value
    nodes_of: dict[str, list[str]] = defaultdict(list)
    for workload, node in sorted(per_node):
        nodes_of[workload].append(node)
    values = np.empty((len(workloads), len(catalog)))
    for i, w in enumerate(workloads):
        if not nodes_of[w.id]:
            raise DataError(f"no event samples for workload {w.id!r}")
        for j, m in enumerate(catalog):
            per = [_metric_value(m, w.id, per_node[(w.id, n)]) for n in nodes_of[w.id]]
            values[i, j] = math.fsum(per) / len(per)
    return MetricMatrix(tuple(workloads), tuple(catalog), values)


# ---------------------------------------------------------------------------
# File formats


def parse_number(text: str, where: str) -> float:
    try:
        return float(text.strip())
    except ValueError:
        raise DataError(f"{where}: not a number: {text!r}") from None


def _open_text(path: str | Path) -> io.TextIOBase:
    try:
        return open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc


def read_events_csv(path: str | Path) -> list[EventSample]:
    with _open_text(path) as fh:
        reader = csv.DictReader(fh)
        required = {"workload", "node", "event", "count"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise DataError(f"{path}: header must be workload,node,event,count")
        samples = []
        for lineno, row in enumerate(reader, start=2):
            where = f"{path}:{lineno}"
            samples.append(
                EventSample(
                    row["workload"].strip(),
                    row["node"].strip(),
                    row["event"].strip(),
                    parse_number(row["count"], where),
                )
            )
    if not samples:
        raise DataError(f"{path}: no event rows")
    return samples


def write_events_csv(samples: Iterable[EventSample], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["workload", "node", "event", "count"])
        for s in samples:
            writer.writerow([s.workload_id, s.node_id, s.event_name, repr(float(s.count))])


def parse_catalog(text: str, source: str = "<catalog>") -> list[MetricDescriptor]:
    catalog = []
    rows = csv.reader(io.StringIO(text), skipinitialspace=True)
    for lineno, row in enumerate(rows, start=1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        if not catalog and row[0].strip() == "name":
            continue
        if len(row) not in (3, 4):
            raise DataError(f"{source}:{lineno}: expected name,category,unit[,derivation]")
        name, category, unit = (c.strip() for c in row[:3])
        derivation = row[3].strip() if len(row) == 4 and row[3].strip() else None
        try:
            catalog.append(MetricDescriptor(name, category, unit, derivation))
        except DataError as exc:
            raise DataError(f"{source}:{lineno}: {exc}") from exc
    _check_unique([m.name for m in catalog], "metric name")
    if not catalog:
        raise DataError(f"{source}: empty catalog")
    return catalog


def read_catalog(path: str | Path) -> list[MetricDescriptor]:
    with _open_text(path) as fh:
        return parse_catalog(fh.read(), str(path))


def bundled_catalog() -> list[MetricDescriptor]:
    """The 45 microarchitectural metrics, without derivations."""
    text = resources.files("wlsubset.data").joinpath("catalog.csv").read_text("utf-8")
    return parse_catalog(text, "catalog.csv")


def read_workloads_csv(path: str | Path) -> list[WorkloadDescriptor]:
    """Workload metadata file: ``workload`` column plus optional metadata columns."""
    with _open_text(path) as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "workload" not in reader.fieldnames:
            raise DataError(f"{path}: missing 'workload' column")
        out = [
            WorkloadDescriptor(
                row["workload"].strip(),
                **{c: (row.get(c) or "").strip() for c in METADATA_COLUMNS if c in row},
            )
            for row in reader
        ]
    _check_unique([w.id for w in out], "workload id")
    return out


def workloads_from_events(samples: Sequence[EventSample]) -> list[WorkloadDescriptor]:
    seen: dict[str, None] = {}
    for s in samples:
        seen.setdefault(s.workload_id, None)
    return [WorkloadDescriptor(w) for w in seen]


def read_matrix_csv(
    path: str | Path, catalog: Sequence[MetricDescriptor] | None = None
) -> MetricMatrix:
    """Load a matrix CSV.

    Metric descriptors come from ``catalog`` when it names the column,
    otherwise a ``custom`` descriptor is synthesised.
    """
    with _open_text(path) as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0].strip() != "workload":
        raise DataError(f"{path}: first column must be 'workload'")
    header = [h.strip() for h in rows[0]]
    meta_cols = [i for i, h in enumerate(header) if h in METADATA_COLUMNS]
    metric_cols = [i for i, h in enumerate(header) if i > 0 and h not in METADATA_COLUMNS]
    if not metric_cols:
        raise DataError(f"{path}: no metric columns")
    known = {m.name: m for m in (catalog or [])}
    metrics = [known.get(header[i], MetricDescriptor(header[i])) for i in metric_cols]
    workloads, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        meta = {header[i]: row[i].strip() for i in meta_cols}
        workloads.append(WorkloadDescriptor(row[0].strip(), **meta))
        values.append([parse_number(row[i], f"{path}:{lineno}") for i in metric_cols])
    if not workloads:
        raise DataError(f"{path}: no workload rows")
    return MetricMatrix(tuple(workloads), tuple(metrics), np.array(values, dtype=float))


def write_matrix_csv(matrix: MetricMatrix, path: str | Path) -> None:
    meta = [c for c in METADATA_COLUMNS if any(getattr(w, c) for w in matrix.workloads)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["workload", *meta, *matrix.metric_names])
        for w, row in zip(matrix.workloads, matrix.values):
            writer.writerow([w.id, *(getattr(w, c) for c in meta), *(repr(float(v)) for v in row)])
