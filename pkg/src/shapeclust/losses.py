"""The four training objectives and the smooth-max machinery.

All losses are written against the autodiff ``Tensor`` type so gradients
flow to whatever inputs were created with ``requires_grad``; plain numpy
arrays are accepted and treated as constants. Cluster assignments and
representative choices are always passed in as fixed integers: the argmin
that produced them is treated as a constant during backpropagation.

Every log argument and denominator carries an epsilon of 1e-8 to keep the
objectives finite on degenerate inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, as_tensor, exp, log, sqrt, stack

EPS = 1e-8
DEFAULT_ALPHA = 50.0
DEFAULT_MARGIN = 1.0
DEFAULT_BETA = 1.0


def smooth_max(values, alpha: float = DEFAULT_ALPHA) -> Tensor:
    """Differentiable maximum: sum(v * e^(a*v)) / sum(e^(a*v)).

    Computed with a max shift (algebraically exact) so large values cannot
    overflow the exponentials. Lies in [mean(v), max(v)] and tightens to
    the true maximum as alpha grows.
    """
    v = as_tensor(values)
    if v.data.ndim != 1 or v.data.size == 0:
        raise ValueError("smooth_max expects a nonempty 1-D vector")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    shift = float(v.data.max())
    w = exp((v - shift) * alpha)
    return (v * w).sum() / w.sum()


def _pairwise_sq_dists(points: Tensor) -> Tensor:
    """All i<j squared Euclidean distances of an (n, d) tensor, as (n*(n-1)/2,)."""
    n = points.data.shape[0]
    ii, jj = np.triu_indices(n, k=1)
    diffs = points[ii] - points[jj]
    return (diffs**2).sum(axis=1)


@dataclass
class TripletBatch:
    """One anchor with multiple positives and negatives, plus margins."""

    anchor: Tensor
    positives: Tensor  # (K+, E)
    negatives: Tensor  # (K-, E)
    margin: float = DEFAULT_MARGIN
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        self.anchor = as_tensor(self.anchor)
        self.positives = as_tensor(self.positives)
        self.negatives = as_tensor(self.negatives)
        if self.positives.data.ndim != 2 or self.positives.data.shape[0] < 1:
            raise ValueError("need at least one positive sample")
        if self.negatives.data.ndim != 2 or self.negatives.data.shape[0] < 1:
            raise ValueError("need at least one negative sample")
        if self.margin < 0 or self.beta < 0:
            raise ValueError("margin and beta must be nonnegative")


def triplet_distance_terms(batch: TripletBatch, alpha: float = DEFAULT_ALPHA) -> dict:
    """The four distance aggregates of the objective, as scalar tensors."""
    d_ap = ((batch.positives - batch.anchor) ** 2).sum(axis=1).mean()
    d_an = ((batch.negatives - batch.anchor) ** 2).sum(axis=1).mean()
    zero = Tensor(0.0)
    d_pos = (
        smooth_max(_pairwise_sq_dists(batch.positives), alpha)
        if batch.positives.data.shape[0] > 1
        else zero
    )
    d_neg = (
        smooth_max(_pairwise_sq_dists(batch.negatives), alpha)
        if batch.negatives.data.shape[0] > 1
        else zero
    )
    return {"d_ap": d_ap, "d_an": d_an, "d_pos": d_pos, "d_neg": d_neg}


def triplet_loss(batch: TripletBatch, alpha: float = DEFAULT_ALPHA) -> Tensor:
    """Cluster-wise triplet objective.

    log((D_AP + margin) / D_AN) + beta * (D_pos + D_neg), where D_AP/D_AN
    are mean squared distances anchor<->positives/negatives and D_pos/D_neg
    are smooth maxima over the intra-group pairwise squared distances.
    """
    t = triplet_distance_terms(batch, alpha)
    ratio = (t["d_ap"] + batch.margin + EPS) / (t["d_an"] + EPS)
    return log(ratio) + batch.beta * (t["d_pos"] + t["d_neg"])


def diversity_loss(representatives, cluster_sizes) -> Tensor:
    """exp(-sum_i[log(size_i) + log(sum_{j != i} ||r_i - r_j||^2)]).

    ``representatives`` are the embeddings closest to each cluster
    centroid (one per cluster); larger clusters and farther-apart
    representatives drive the loss down. The inner sum excludes j = i.
    """
    reps = as_tensor(representatives)
    sizes = np.asarray(cluster_sizes, dtype=np.float64)
    y = reps.data.shape[0]
    if y < 2:
        raise ValueError(f"diversity needs >= 2 clusters, got {y}")
    if sizes.shape != (y,) or (sizes < 1).any():
        raise ValueError("cluster_sizes must have one count >= 1 per representative")
    ii, jj = np.triu_indices(y, k=1)
    d2 = ((reps[ii] - reps[jj]) ** 2).sum(axis=1)  # (P,)
    # selector[i, p] = 1 when pair p touches cluster i; row i sums d2 over j != i
    selector = np.zeros((y, len(ii)))
    selector[ii, np.arange(len(ii))] = 1.0
    selector[jj, np.arange(len(jj))] = 1.0
    row_sums = (Tensor(selector) @ d2.reshape(len(ii), 1)).reshape(y)
    exponent = float(np.log(sizes).sum()) + log(row_sums + EPS).sum()
    return exp(-exponent)


def reconstruction_loss(original, decoded) -> Tensor:
    """Mean over the batch of the squared L2 gap between input and decode."""
    orig = as_tensor(original)
    dec = as_tensor(decoded)
    if orig.data.shape != dec.data.shape:
        raise ValueError(f"shape mismatch {orig.data.shape} vs {dec.data.shape}")
    return ((dec - orig) ** 2).sum(axis=1).mean()


def dbi_loss(transformed, labels, alpha: float = DEFAULT_ALPHA) -> Tensor:
    """Smooth Davies-Bouldin objective over transformed coordinates.

    (1/C) * sum_i smooth_max_{j != i} (A_i + A_j) / M_ij, with A_i the mean
    member-to-centroid distance of cluster i and M_ij the centroid
    distance. ``labels`` is a fixed assignment; gradients flow through the
    coordinates (and hence centroids) only.
    """
    t = as_tensor(transformed)
    labels = np.asarray(labels)
    clusters = np.unique(labels)
    if clusters.size < 2:
        raise ValueError("DBI needs at least two clusters")
    spreads = []
    centroids = []
    for c in clusters:
        idx = np.where(labels == c)[0]
        if idx.size == 0:
            raise ValueError(f"cluster {c} is empty")
        members = t[idx]
        centroid = members.mean(axis=0)
        d2 = ((members - centroid) ** 2).sum(axis=1)
        spreads.append(sqrt(d2).mean())
        centroids.append(centroid)
    per_cluster = []
    for i in range(clusters.size):
        ratios = []
        for j in range(clusters.size):
            if j == i:
                continue
            m_ij = sqrt(((centroids[i] - centroids[j]) ** 2).sum())
            ratios.append((spreads[i] + spreads[j]) / (m_ij + EPS))
        per_cluster.append(smooth_max(stack(ratios), alpha))
    return stack(per_cluster).mean()


@dataclass
class LossParts:
    """Per-batch values of the four objectives (zeros when disabled)."""

    reconstruction: Tensor = field(default_factory=lambda: Tensor(0.0))
    triplet: Tensor = field(default_factory=lambda: Tensor(0.0))
    diversity: Tensor = field(default_factory=lambda: Tensor(0.0))
    dbi: Tensor = field(default_factory=lambda: Tensor(0.0))


def overall_loss(parts: LossParts, lam: float = 0.01) -> Tensor:
    """reconstruction + lam * triplet + diversity + dbi."""
    return (
        as_tensor(parts.reconstruction)
        + lam * as_tensor(parts.triplet)
        + as_tensor(parts.diversity)
        + as_tensor(parts.dbi)
    )
