"""Representative-workload selection and its comparison statistics."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import DataError
from .hcluster import Dendrogram, cut_to_k

STRATEGIES = ("nearest-center", "farthest-center")


@dataclass(frozen=True)
class Representative:
    workload: int
    cluster: int
    cluster_size: int


@dataclass(frozen=True)
class SubsetReport:
    strategy: str
    representatives: list[Representative]
    max_linkage_distance: float
    dendrogram_cut_agreement: list[int]


def _clusters(labels: Sequence[int]) -> dict[int, list[int]]:
    groups: dict[int, list[int]] = {}
    for i, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(i)
    if not groups:
        raise DataError("empty partition")
    return dict(sorted(groups.items()))


def _pick(scores: np.ndarray, labels: Sequence[int], farthest: bool) -> list[Representative]:
    x = np.asarray(scores, dtype=float)
    if len(labels) != x.shape[0]:
        raise DataError(f"{len(labels)} labels for {x.shape[0]} workloads")
    reps = []
    for cid, members in _clusters(labels).items():
        pts = x[members]
        dist = np.sqrt(((pts - pts.mean(axis=0)) ** 2).sum(axis=1))
        # argmax/argmin return the first extreme, i.e. the lowest workload index
        pos = int(np.argmax(dist) if farthest else np.argmin(dist))
        reps.append(Representative(members[pos], cid, len(members)))
    return reps


def nearest_to_center(scores: np.ndarray, labels: Sequence[int]) -> list[Representative]:
    """Per cluster, the member closest to the cluster mean."""
    return _pick(scores, labels, farthest=False)


def farthest_from_center(scores: np.ndarray, labels: Sequence[int]) -> list[Representative]:
    """Per cluster, the boundary member farthest from the cluster mean."""
    return _pick(scores, labels, farthest=True)


def _leaf_index(dend: Dendrogram, rep) -> int:
    if isinstance(rep, Representative):
        rep = rep.workload
    if isinstance(rep, str):
        try:
            return dend.leaves.index(rep)
        except ValueError:
            raise DataError(f"workload {rep!r} is not a dendrogram leaf") from None
    if not 0 <= int(rep) < dend.n_leaves:
        raise DataError(f"leaf index {rep} out of range for {dend.n_leaves} leaves")
    return int(rep)


def max_linkage_distance(reps: Sequence, dend: Dendrogram, cophenetic: np.ndarray | None = None) -> float:
    """Largest cophenetic height over all representative pairs (0 for fewer than two)."""
    idx = [_leaf_index(dend, r) for r in reps]
    coph = dend.cophenetic() if cophenetic is None else cophenetic
    return max((float(coph[a, b]) for a, b in combinations(idx, 2)), default=0.0)


def dendrogram_cross_check(dend: Dendrogram, k: int) -> list[int]:
    """Workloads left as singleton clusters when the dendrogram is cut into k groups."""
    cut = cut_to_k(dend, k)
    return sorted(c[0] for c in cut.clusters if len(c) == 1)


def subset_report(
    strategy: str, scores: np.ndarray, labels: Sequence[int], dend: Dendrogram
) -> SubsetReport:
    if strategy not in STRATEGIES:
        raise DataError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    pick = nearest_to_center if strategy == "nearest-center" else farthest_from_center
    reps = pick(scores, labels)
    singletons = set(dendrogram_cross_check(dend, len(reps)))
    return SubsetReport(
        strategy=strategy,
        representatives=reps,
        max_linkage_distance=max_linkage_distance(reps, dend),
        dendrogram_cut_agreement=sorted(r.workload for r in reps if r.workload in singletons),
    )


def kiviat_table(scores: np.ndarray, reps: Sequence[Representative]) -> np.ndarray:
    """Representative coordinates min-max scaled to [0, 1] per PC (constant PCs map to 0)."""
    pts = np.asarray(scores, dtype=float)[[r.workload for r in reps]]
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return np.where(hi > lo, (pts - lo) / span, 0.0)
