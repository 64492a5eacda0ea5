"""Standardisation and correlation-matrix PCA with Kaiser selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, DataError, NumericalError
from .metrics import MetricMatrix

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
# eigenvalues closer than this (relative) are treated as a tie when ordering
TIE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class StandardizedMatrix:
    base: MetricMatrix
    values: np.ndarray = field(repr=False)
    column_means: np.ndarray = field(repr=False)
    column_stds: np.ndarray = field(repr=False)
    retained_columns: tuple[str, ...]
    dropped_columns: tuple[str, ...]


def standardize(m: MetricMatrix) -> StandardizedMatrix:
    """Z-score every column using the sample (R-1) standard deviation.

    Constant columns carry no information for a correlation analysis and are
    dropped; their names are kept in ``dropped_columns``.
    """
    R, _ = m.values.shape
    if R < 2:
        raise DataError(f"need at least 2 workloads to standardize, got {R}")
    keep = np.ptp(m.values, axis=0) > 0
    names = m.metric_names
    dropped = tuple(n for n, k in zip(names, keep) if not k)
    if not keep.any():
        raise DataError("every metric column has zero variance; nothing to analyze")
    x = m.values[:, keep]
    means = x.mean(axis=0)
    centered = x - means
    stds = np.sqrt((centered**2).sum(axis=0) / (R - 1))
    z = centered / stds
    return StandardizedMatrix(
        base=m,
        values=z,
        column_means=means,
        column_stds=stds,
        retained_columns=tuple(n for n, k in zip(names, keep) if k),
        dropped_columns=dropped,
    )


def jacobi_eigh(
    a: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS
) -> tuple[np.ndarray, np.ndarray, int]:
    """Cyclic Jacobi diagonalisation of a real symmetric matrix.

    Returns unsorted ``(eigenvalues, eigenvectors, sweeps)`` with eigenvectors
    in columns. Converges when the off-diagonal Frobenius norm drops below
    ``tol * max(1, ||a||_F)``.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise DataError(f"expected a square matrix, got shape {a.shape}")
    a = (a + a.T) / 2
    v = np.eye(n)
    threshold = tol * max(1.0, float(np.linalg.norm(a)))
    for sweep in range(max_sweeps + 1):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off < threshold:
            return np.diag(a).copy(), v, sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = float(a[p, q])
                if apq == 0.0:
                    continue
                theta = (float(a[q, q]) - float(a[p, p])) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q]
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :]
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    raise ConvergenceError("Jacobi eigensolver", max_sweeps)


def _dominant_index(vec: np.ndarray) -> int:
    return int(np.argmax(np.abs(vec)))


def sorted_eigenpairs(values: np.ndarray, vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Descending order, ties by dominant-metric index, sign so the dominant entry is positive."""
    order = list(np.argsort(-values, kind="stable"))
    result = []
    i = 0
    while i < len(order):
        j = i + 1
        lam = values[order[i]]
        while j < len(order) and abs(values[order[j]] - lam) <= TIE_TOL * max(1.0, abs(lam)):
            j += 1
        group = sorted(order[i:j], key=lambda c: (_dominant_index(vectors[:, c]), c))
        result.extend(group)
        i = j
    vals = values[result].copy()
    vecs = vectors[:, result].copy()
    for c in range(vecs.shape[1]):
        if vecs[_dominant_index(vecs[:, c]), c] < 0:
            vecs[:, c] = -vecs[:, c]
    return vals, vecs


@dataclass(frozen=True, eq=False)
class PcaModel:
    """Correlation-matrix PCA.

    ``eigenvalues``, ``loadings`` (columns are PCs) and ``scores`` always hold
    every component; ``retained`` says how many of them downstream analyses
    should use (see :meth:`retained_scores`).
    """

    eigenvalues: np.ndarray = field(repr=False)
    loadings: np.ndarray = field(repr=False)
    scores: np.ndarray = field(repr=False)
    retained: int
    retained_variance_fraction: float
    metric_names: tuple[str, ...] = ()
    workload_ids: tuple[str, ...] = ()
    dropped_columns: tuple[str, ...] = ()
    correlation: np.ndarray | None = field(default=None, repr=False)
    sweeps: int = 0

    @property
    def retained_scores(self) -> np.ndarray:
        return self.scores[:, : self.retained]

    @property
    def retained_loadings(self) -> np.ndarray:
        return self.loadings[:, : self.retained]

    def variance_fractions(self) -> np.ndarray:
        return self.eigenvalues / self.eigenvalues.sum()


def correlation_matrix(s: StandardizedMatrix) -> np.ndarray:
    z = s.values
    corr = z.T @ z / (z.shape[0] - 1)
    return (corr + corr.T) / 2


def pca(s: StandardizedMatrix) -> PcaModel:
    if s.values.shape[1] < 2:
        raise DataError(
            f"PCA needs at least 2 non-constant metrics, got {s.values.shape[1]}"
        )
    corr = correlation_matrix(s)
    raw_vals, raw_vecs, sweeps = jacobi_eigh(corr)
    vals, vecs = sorted_eigenpairs(raw_vals, raw_vecs)
    scores = s.values @ vecs
    return PcaModel(
        eigenvalues=vals,
        loadings=vecs,
        scores=scores,
        retained=len(vals),
        retained_variance_fraction=1.0,
        metric_names=s.retained_columns,
        workload_ids=tuple(s.base.workload_ids),
        dropped_columns=s.dropped_columns,
        correlation=corr,
        sweeps=sweeps,
    )


def kaiser_select(model: PcaModel, threshold: float = 1.0, strict: bool = False) -> PcaModel:
    """Keep the leading PCs whose eigenvalue is >= threshold (> when strict)."""
    lam = np.asarray(model.eigenvalues)
    keep = lam > threshold if strict else lam >= threshold
    retained = int(keep.sum())
    if retained == 0:
        op = ">" if strict else ">="
        raise NumericalError(
            f"no eigenvalue {op} {threshold} (largest is {lam.max():.6g}); lower the threshold"
        )
    fraction = float(lam[:retained].sum() / lam.sum())
    return replace(model, retained=retained, retained_variance_fraction=fraction)


@dataclass(frozen=True)
class PcLoadings:
    pc: int
    eigenvalue: float
    terms: list[tuple[str, float]]
    rendering: str


def _render(pc: int, terms: Sequence[tuple[str, float]]) -> str:
    parts = []
    for i, (name, w) in enumerate(terms):
        mag = f"{abs(w):.3g}×{name}"
        if i == 0:
            parts.append(mag if w >= 0 else f"−{mag}")
        else:
            parts.append(f"{'+' if w >= 0 else '−'} {mag}")
    return f"PC{pc} = " + " ".join(parts)


def factor_loading_report(
    model: PcaModel, metric_names: Sequence[str] | None = None, n_pcs: int | None = None
) -> list[PcLoadings]:
    """Per PC, the metrics ordered by |loading| with a linear-combination rendering."""
    names = list(metric_names if metric_names is not None else model.metric_names)
    if len(names) != model.loadings.shape[0]:
        raise DataError(f"{len(names)} metric names for {model.loadings.shape[0]} loadings rows")
    n = model.retained if n_pcs is None else n_pcs
    report = []
    for j in range(n):
        col = model.loadings[:, j]
        order = sorted(range(len(names)), key=lambda i: (-abs(col[i]), i))
        terms = [(names[i], float(col[i])) for i in order]
        report.append(PcLoadings(j + 1, float(model.eigenvalues[j]), terms, _render(j + 1, terms)))
    return report
