"""K-means over PC scores, scored with a spherical-Gaussian BIC and swept over K.

The BIC is the X-means formulation::

    BIC(D, K) = l(D|K) - p/2 * log R
    l(D|K)    = sum_i [ -R_i/2 log(2 pi) - R_i d/2 log(s2) - (R_i - K)/2
                        + R_i log R_i - R_i log R ]
    s2        = inertia / (R - K)
    p         = K + d K

with natural logarithms and larger-is-better.

Summed over clusters the ``-(R_i - K)/2`` term is ``(K**2 - R)/2``, which
grows with K and drives the sweep to the largest K it is offered. The
``"corrected"`` form (the default) uses ``-(R_i - 1)/2`` instead; those terms
sum to ``-(R - K)/2``, which is exactly ``-inertia / (2 s2)``. The literal
formula stays available as ``bic_form="literal"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError

MAX_ITER = 300
SIGMA_FLOOR = 1e-12
DEFAULT_RESTARTS = 10
DEFAULT_K_MAX = 15
BIC_FORMS = ("corrected", "literal")
INITS = ("farthest", "d2")


@dataclass(frozen=True, eq=False)
class KMeansSolution:
    k: int
    assignments: np.ndarray = field(repr=False)
    centroids: np.ndarray = field(repr=False)
    inertia: float
    iterations: int
    seed: tuple[int, ...]
    inertia_history: tuple[float, ...] = field(default=(), repr=False)
    restarts_used: int = 1
    sigma_sq: float = math.nan
    log_likelihood: float = math.nan
    bic: float = math.nan
    sigma_clamped: bool = False

    @property
    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)

    def members(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.k)]
        for i, c in enumerate(self.assignments):
            out[c].append(i)
        return out


def _sq_dists(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    out = np.zeros((x.shape[0], c.shape[0]))
    for j in range(x.shape[1]):
        out += (x[:, j, None] - c[None, :, j]) ** 2
    return out


def _means(x: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    c = np.zeros((k, x.shape[1]))
    for j in range(k):
        c[j] = x[labels == j].mean(axis=0)
    return c


def _inertia(x: np.ndarray, labels: np.ndarray, c: np.ndarray) -> float:
    return float(((x - c[labels]) ** 2).sum())


def _farthest_point_init(x: np.ndarray, k: int, first: int) -> np.ndarray:
    chosen = [first]
    nearest = _sq_dists(x, x[[first]])[:, 0]
    for _ in range(1, k):
        score = nearest.copy()
        score[chosen] = -1.0
        nxt = int(np.argmax(score))
        chosen.append(nxt)
        nearest = np.minimum(nearest, _sq_dists(x, x[[nxt]])[:, 0])
    return x[chosen].copy()


def _d2_init(x: np.ndarray, k: int, first: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ style: each next centre drawn with probability ~ squared distance."""
    chosen = [first]
    nearest = _sq_dists(x, x[[first]])[:, 0]
    for _ in range(1, k):
        total = nearest.sum()
        if total > 0:
            nxt = int(rng.choice(len(x), p=nearest / total))
        else:
            nxt = int(rng.integers(len(x)))
        chosen.append(nxt)
        nearest = np.minimum(nearest, _sq_dists(x, x[[nxt]])[:, 0])
    return x[chosen].copy()


def _repair_empty(x: np.ndarray, labels: np.ndarray, c: np.ndarray, k: int) -> None:
    """Give each empty cluster the point farthest from its own centroid (in place)."""
    sizes = np.bincount(labels, minlength=k)
    for e in np.flatnonzero(sizes == 0):
        own = ((x - c[labels]) ** 2).sum(axis=1)
        own[sizes[labels] <= 1] = -1.0
        p = int(np.argmax(own))
        old = labels[p]
        labels[p] = e
        sizes[old] -= 1
        sizes[e] = 1
        c[e] = x[p]
        c[old] = x[labels == old].mean(axis=0)


def lloyd(
    scores: np.ndarray,
    k: int,
    seed: int | Sequence[int] = 0,
    max_iter: int = MAX_ITER,
    init: str = "farthest",
) -> KMeansSolution:
    """Seeded Lloyd iterations.

    The first centroid is drawn uniformly with ``seed``. With ``init="farthest"``
    every other one is the point farthest from those already chosen; with
    ``"d2"`` they are sampled proportionally to squared distance. Stops when
    assignments repeat or after ``max_iter`` iterations.
    """
    x = np.asarray(scores, dtype=float)
    if x.ndim != 2 or x.shape[1] == 0:
        raise DataError(f"need an R x dim score matrix with dim >= 1, got shape {x.shape}")
    R = x.shape[0]
    if not 2 <= k <= R - 1:
        raise ConfigError(f"k must be in [2, R-1] = [2, {R - 1}], got {k}")
    if init not in INITS:
        raise ConfigError(f"init must be one of {INITS}, got {init!r}")
    seed_t = (seed,) if isinstance(seed, (int, np.integer)) else tuple(seed)
    rng = np.random.default_rng([int(s) for s in seed_t])

    first = int(rng.integers(R))
    c = _farthest_point_init(x, k, first) if init == "farthest" else _d2_init(x, k, first, rng)
    labels = np.argmin(_sq_dists(x, c), axis=1)
    _repair_empty(x, labels, c, k)
    c = _means(x, labels, k)
    history = [_inertia(x, labels, c)]
    iterations = 0
    for iterations in range(1, max_iter + 1):
        new = np.argmin(_sq_dists(x, c), axis=1)
        _repair_empty(x, new, c.copy(), k)
        if np.array_equal(new, labels):
            break
        labels = new
        c = _means(x, labels, k)
        history.append(_inertia(x, labels, c))
    sol = KMeansSolution(
        k=k,
        assignments=labels,
        centroids=c,
        inertia=history[-1],
        iterations=iterations,
        seed=tuple(int(s) for s in seed_t),
        inertia_history=tuple(history),
    )
    return score(sol, dim=x.shape[1])


def bic_terms(
    sizes: Sequence[int],
    inertia: float,
    R: int,
    dim: int,
    pj_compat: bool = False,
    bic_form: str = "corrected",
) -> tuple[float, float, float, bool]:
    """Return ``(sigma_sq, log_likelihood, bic, clamped)``."""
    if bic_form not in BIC_FORMS:
        raise ConfigError(f"bic_form must be one of {BIC_FORMS}, got {bic_form!r}")
    K = len(sizes)
    spread = K if bic_form == "literal" else 1
    if R <= K:
        raise ConfigError(f"BIC needs R > K, got R={R}, K={K}")
    sigma_sq = inertia / (R - K)
    clamped = sigma_sq <= 0.0
    s2 = SIGMA_FLOOR if clamped else sigma_sq
    log_r = math.log(R)
    ll = 0.0
    for r_i in sizes:
        ll += (
            -(r_i / 2) * math.log(2 * math.pi)
            - (r_i * dim / 2) * math.log(s2)
            - (r_i - spread) / 2
            + r_i * math.log(r_i)
            - r_i * log_r
        )
    # (K - 1) mixing weights + d*K centre coordinates + 1 variance
    p = (K - 1) + dim * K + 1 if pj_compat else K + dim * K
    return sigma_sq, ll, ll - p / 2 * log_r, clamped


def bic_score(
    sol: KMeansSolution, R: int, dim: int, pj_compat: bool = False, bic_form: str = "corrected"
) -> float:
    return bic_terms(sol.cluster_sizes.tolist(), sol.inertia, R, dim, pj_compat, bic_form)[2]


def score(
    sol: KMeansSolution, dim: int, pj_compat: bool = False, bic_form: str = "corrected"
) -> KMeansSolution:
    sigma_sq, ll, bic, clamped = bic_terms(
        sol.cluster_sizes.tolist(), sol.inertia, len(sol.assignments), dim, pj_compat, bic_form
    )
    return replace(sol, sigma_sq=sigma_sq, log_likelihood=ll, bic=bic, sigma_clamped=clamped)


@dataclass(frozen=True, eq=False)
class BicSweep:
    candidates: list[tuple[int, KMeansSolution]]
    best_k: int
    log: list[dict] = field(default_factory=list, repr=False)

    @property
    def best(self) -> KMeansSolution:
        return dict(self.candidates)[self.best_k]


def default_k_range(R: int) -> tuple[int, int]:
    return 2, min(DEFAULT_K_MAX, R - 1)


def sweep(
    scores: np.ndarray,
    k_range: tuple[int, int] | None = None,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    pj_compat: bool = False,
    bic_form: str = "corrected",
) -> BicSweep:
    """Best-of-``restarts`` K-means for each K in the inclusive ``k_range``; pick max BIC.

    Restart 0 uses the farthest-point initialisation. Farthest-point only varies
    in its first pick, so later restarts use ``d2`` seeding to explore more.
    """
    x = np.asarray(scores, dtype=float)
    R = x.shape[0]
    k_min, k_max = default_k_range(R) if k_range is None else k_range
    if restarts < 1:
        raise ConfigError(f"restarts must be >= 1, got {restarts}")
    if seed < 0:
        raise ConfigError(f"seed must be non-negative, got {seed}")
    if k_min > k_max or k_min < 2 or k_max > R - 1:
        raise ConfigError(
            f"k range [{k_min}, {k_max}] is empty or outside [2, R-1] = [2, {R - 1}]"
        )
    candidates, log = [], []
    for k in range(k_min, k_max + 1):
        best = None
        for r in range(restarts):
            init = "farthest" if r == 0 else "d2"
            sol = lloyd(x, k, seed=(seed, k, r), init=init)
            log.append(
                {"k": k, "restart": r, "seed": list(sol.seed), "init": init,
                 "inertia": sol.inertia, "iterations": sol.iterations}
            )
            if best is None or sol.inertia < best.inertia:
                best = sol
        best = score(replace(best, restarts_used=restarts), x.shape[1], pj_compat, bic_form)
        candidates.append((k, best))
    best_k, best_bic = candidates[0][0], candidates[0][1].bic
    for k, sol in candidates[1:]:
        if sol.bic > best_bic:
            best_k, best_bic = k, sol.bic
    return BicSweep(candidates, best_k, log)
