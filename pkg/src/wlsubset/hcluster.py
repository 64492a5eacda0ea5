"""Single-linkage agglomerative clustering over PC scores."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    """Binary merge tree.

    Node ``i < R`` is leaf ``i``; node ``R + m`` is the cluster created by
    ``merges[m]``. ``left`` is always the child holding the smaller leaf index.
    """

    leaves: tuple[str, ...]
    merges: tuple[Merge, ...]

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    @property
    def heights(self) -> np.ndarray:
        return np.array([m.height for m in self.merges])

    def members(self, node: int) -> list[int]:
        R = self.n_leaves
        stack, out = [node], []
        while stack:
            n = stack.pop()
            if n < R:
                out.append(n)
            else:
                m = self.merges[n - R]
                stack.extend((m.right, m.left))
        return sorted(out)

    def cophenetic(self) -> np.ndarray:
        """R x R matrix of the height at which each leaf pair first joins."""
        R = self.n_leaves
        coph = np.zeros((R, R))
        members: list[list[int]] = [[i] for i in range(R)]
        for m in self.merges:
            a, b = members[m.left], members[m.right]
            coph[np.ix_(a, b)] = m.height
            coph[np.ix_(b, a)] = m.height
            members.append(a + b)
        return coph


@dataclass(frozen=True)
class Cut:
    labels: np.ndarray
    clusters: list[list[int]]
    # any h with height_low <= h < height_high reproduces this cut
    height_low: float
    height_high: float


def pairwise_distances(scores: np.ndarray) -> np.ndarray:
    """Euclidean distance matrix; exactly symmetric with a zero diagonal.

    Each cell sums its squared coordinate differences in column order, so
    the result does not depend on how rows are batched.
    """
    x = np.asarray(scores, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError(f"need an R x k score matrix with R >= 2, got shape {x.shape}")
    diff = x[:, None, :] - x[None, :, :]
    sq = np.zeros(diff.shape[:2])
    for c in range(x.shape[1]):
        sq += diff[:, :, c] ** 2
    return np.sqrt(sq)


def single_linkage(dist: np.ndarray, leaves: Sequence[str] | None = None) -> Dendrogram:
    """Agglomerate the two closest clusters until one remains.

    Clusters live in the slot of their smallest leaf index; the inter-cluster
    distance matrix is updated with the min rule. Among equally close pairs the
    one with the lexicographically smallest (slot, slot) is merged first.
    """
    d = np.array(dist, dtype=float)
    R = d.shape[0]
    if d.shape != (R, R) or R < 1:
        raise DataError(f"expected a square distance matrix, got shape {d.shape}")
    if leaves is None:
        leaves = [str(i) for i in range(R)]
    if len(leaves) != R:
        raise DataError(f"{len(leaves)} leaf names for {R} points")
    np.fill_diagonal(d, np.inf)
    active = np.ones(R, dtype=bool)
    node_of = list(range(R))
    size = [1] * R
    merges = []
    upper = np.triu(np.ones((R, R), dtype=bool), k=1)
    for step in range(R - 1):
        mask = upper & active[:, None] & active[None, :]
        masked = np.where(mask, d, np.inf)
        flat = int(np.argmin(masked))  # row-major: smallest (i, j) among ties
        i, j = divmod(flat, R)
        height = float(masked[i, j])
        merges.append(Merge(node_of[i], node_of[j], height, size[i] + size[j]))
        d[i, :] = np.minimum(d[i, :], d[j, :])
        d[:, i] = d[i, :]
        d[i, i] = np.inf
        active[j] = False
        node_of[i] = R + step
        size[i] += size[j]
    return Dendrogram(tuple(leaves), tuple(merges))


def _partition_after(dend: Dendrogram, n_merges: int) -> tuple[np.ndarray, list[list[int]]]:
    R = dend.n_leaves
    parent = list(range(R))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    members: list[list[int]] = [[i] for i in range(R)]
    for m in dend.merges[:n_merges]:
        a, b = find(members[m.left][0]), find(members[m.right][0])
        parent[max(a, b)] = min(a, b)
        members.append(members[m.left] + members[m.right])
    roots: dict[int, int] = {}
    labels = np.empty(R, dtype=int)
    for i in range(R):
        labels[i] = roots.setdefault(find(i), len(roots))
    clusters = [[] for _ in roots]
    for i, lab in enumerate(labels):
        clusters[lab].append(i)
    return labels, clusters


def cut_at_height(dend: Dendrogram, h: float) -> Cut:
    """Keep only merges with height <= h. Labels are numbered by first member."""
    if h < 0:
        raise ConfigError(f"cut height must be non-negative, got {h}")
    heights = dend.heights
    n = int(np.searchsorted(heights, h, side="right"))
    labels, clusters = _partition_after(dend, n)
    low = float(heights[n - 1]) if n > 0 else 0.0
    high = float(heights[n]) if n < len(heights) else float("inf")
    return Cut(labels, clusters, low, high)


def cut_to_k(dend: Dendrogram, k: int) -> Cut:
    """Undo the last k-1 merges, leaving exactly k clusters."""
    R = dend.n_leaves
    if not 1 <= k <= R:
        raise ConfigError(f"k must be in [1, {R}], got {k}")
    n = R - k
    labels, clusters = _partition_after(dend, n)
    heights = dend.heights
    low = float(heights[n - 1]) if n > 0 else 0.0
    high = float(heights[n]) if n < len(heights) else float("inf")
    return Cut(labels, clusters, low, high)
