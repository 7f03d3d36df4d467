"""K-means with k-means++ seeding, exact Davies-Bouldin, and NMI/RI.

Everything here is deterministic given the seed. The external indices
(NMI, RI) live on the evaluation side only; nothing in training imports
ground-truth labels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS = 1e-8


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray  # (n,) ints in [0, c_num)
    centroids: np.ndarray  # (c_num, d)
    sizes: np.ndarray  # (c_num,)
    inertia: float
    iterations: int

    @property
    def c_num(self) -> int:
        return self.centroids.shape[0]


def _kmeanspp_init(points: np.ndarray, c_num: int, rng: np.random.Generator):
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = np.square(points - points[chosen[0]]).sum(axis=1)
    for _ in range(1, c_num):
        total = d2.sum()
        if not np.isfinite(total):
            raise ValueError("non-finite distances during k-means seeding")
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        chosen.append(idx)
        d2 = np.minimum(d2, np.square(points - points[idx]).sum(axis=1))
    return points[chosen].copy()


def kmeans(
    points: np.ndarray, c_num: int, seed: int = 0, max_iters: int = 100
) -> ClusterAssignment:
    """Lloyd iterations to an assignment fixpoint (or max_iters).

    Empty clusters are repaired by moving the farthest-from-centroid point
    out of the largest cluster. Ties in the assignment step go to the
    lowest cluster index, so runs are reproducible bit for bit.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError("points must be (n, d)")
    n = points.shape[0]
    if c_num < 2:
        raise ValueError("c_num must be >= 2")
    if n < c_num:
        raise ValueError(f"cannot split {n} points into {c_num} clusters")
    rng = np.random.default_rng(seed)
    centroids = _kmeanspp_init(points, c_num, rng)
    labels = np.full(n, -1, dtype=np.int64)
    iterations = 0
    for iterations in range(1, max_iters + 1):
        d2 = np.square(points[:, None, :] - centroids[None, :, :]).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        for c in range(c_num):
            if (new_labels == c).any():
                continue
            sizes = np.bincount(new_labels, minlength=c_num)
            donor = int(sizes.argmax())
            members = np.where(new_labels == donor)[0]
            farthest = members[d2[members, donor].argmax()]
            new_labels[farthest] = c
        for c in range(c_num):
            centroids[c] = points[new_labels == c].mean(axis=0)
        if (new_labels == labels).all():
            break
        labels = new_labels
    inertia = float(
        np.square(points - centroids[labels]).sum()
    )
    sizes = np.bincount(labels, minlength=c_num)
    return ClusterAssignment(
        labels=labels,
        centroids=centroids,
        sizes=sizes,
        inertia=inertia,
        iterations=iterations,
    )


def kmeans_best_of(
    points: np.ndarray,
    c_num: int,
    seed: int = 0,
    restarts: int = 10,
    max_iters: int = 100,
) -> ClusterAssignment:
    """Run seeded restarts and keep the lowest-inertia result."""
    best = None
    for r in range(restarts):
        asn = kmeans(points, c_num, seed=seed + r, max_iters=max_iters)
        if best is None or asn.inertia < best.inertia:
            best = asn
    return best


def dbi_exact(points: np.ndarray, assignment: ClusterAssignment) -> float:
    """Hard-max Davies-Bouldin index of a clustering (lower is better)."""
    points = np.asarray(points, dtype=np.float64)
    c_num = assignment.c_num
    if c_num < 2:
        raise ValueError("DBI needs at least two clusters")
    spreads = np.empty(c_num)
    for c in range(c_num):
        members = points[assignment.labels == c]
        if members.size == 0:
            raise ValueError(f"cluster {c} is empty")
        spreads[c] = np.sqrt(
            np.square(members - assignment.centroids[c]).sum(axis=1)
        ).mean()
    total = 0.0
    for i in range(c_num):
        worst = -np.inf
        for j in range(c_num):
            if j == i:
                continue
            m_ij = np.sqrt(
                np.square(assignment.centroids[i] - assignment.centroids[j]).sum()
            )
            worst = max(worst, (spreads[i] + spreads[j]) / (m_ij + EPS))
        total += worst
    return total / c_num


def _contingency(pred, truth) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError("partitions must be equal-length 1-D label arrays")
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    table = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)
    return table, table.sum(axis=1), table.sum(axis=0)


def nmi(pred, truth) -> float:
    """Normalized mutual information with geometric-mean normalization.

    Conventions: 0*log(0) = 0; when either partition has zero entropy the
    result is 1 if the two are identical as set-partitions, else 0.
    """
    table, a, b = _contingency(pred, truth)
    n = table.sum()
    pa = a / n
    pb = b / n
    h_pred = -np.sum(pa[pa > 0] * np.log(pa[pa > 0]))
    h_truth = -np.sum(pb[pb > 0] * np.log(pb[pb > 0]))
    if h_pred <= 0 or h_truth <= 0:
        nonzero = table > 0
        same = (nonzero.sum(axis=1) == 1).all() and (nonzero.sum(axis=0) == 1).all()
        return 1.0 if same else 0.0
    mutual = 0.0
    for i in range(table.shape[0]):
        for j in range(table.shape[1]):
            nij = table[i, j]
            if nij == 0:
                continue
            mutual += (nij / n) * np.log(nij * n / (a[i] * b[j]))
    return float(mutual / np.sqrt(h_pred * h_truth))


def rand_index(pred, truth) -> float:
    """Fraction of point pairs on which the two partitions agree."""
    table, a, b = _contingency(pred, truth)
    n = int(table.sum())
    if n < 2:
        raise ValueError("rand index needs at least 2 points")
    comb = lambda x: x * (x - 1) // 2  # noqa: E731
    s = comb(table).sum()
    t1 = comb(a).sum()
    t2 = comb(b).sum()
    total = comb(n)
    return float((total + 2 * s - t1 - t2) / total)
