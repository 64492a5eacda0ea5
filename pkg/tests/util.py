import numpy as np

from wlsubset.metrics import MetricDescriptor, MetricMatrix, WorkloadDescriptor


def make_matrix(values, stacks=None):
    values = np.asarray(values, dtype=float)
    R, d = values.shape
    stacks = stacks or [""] * R
    return MetricMatrix(
        [WorkloadDescriptor(f"w{i}", stack=stacks[i]) for i in range(R)],
        [MetricDescriptor(f"m{j}") for j in range(d)],
        values,
    )


def three_blobs(seed, per_blob=8, spread=0.1, centres=((0, 0), (10, 0), (5, 8.66))):
    rng = np.random.default_rng(seed)
    pts = np.vstack([rng.normal(c, spread, size=(per_blob, 2)) for c in centres])
    labels = np.repeat(np.arange(len(centres)), per_blob)
    return pts, labels


def same_partition(a, b):
    a, b = list(a), list(b)
    fwd, back = {}, {}
    for x, y in zip(a, b):
        if fwd.setdefault(x, y) != y or back.setdefault(y, x) != x:
            return False
    return True
