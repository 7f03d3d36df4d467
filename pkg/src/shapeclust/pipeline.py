"""End-to-end shapelet discovery, transformation, and final clustering.

Training loop per epoch: draw anchor candidates, assemble one triplet
group per batch (1 anchor, K+ nearest same-variable positives, K-
negatives from the farthest quartile), run encoder/decoder, score the
four objectives, and take an SGD step. The provisional shapelet set that
the Davies-Bouldin term transforms against is refreshed every epoch by
diversity-ranking a sample of the pool; after the last epoch the full
pool is ranked and the top-k decoded candidates, restored to their
original lengths, become the shapelets.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .autodiff import Tensor, stack
from .candidates import (
    DEFAULT_GRID_LEN,
    DEFAULT_RATIOS,
    Candidate,
    generate_candidates,
    grid_views,
    restore_from_grid,
)
from .clustering import ClusterAssignment, kmeans, kmeans_best_of, dbi_exact, nmi, rand_index
from .data import Dataset
from .distance import transform
from .losses import (
    DEFAULT_ALPHA,
    DEFAULT_BETA,
    DEFAULT_MARGIN,
    LossParts,
    TripletBatch,
    dbi_loss,
    diversity_loss,
    overall_loss,
    reconstruction_loss,
    triplet_loss,
)
from .network import (
    ArchConfig,
    decode,
    decode_array,
    encode,
    encode_array,
    init_params,
    sgd_step,
    zero_grad,
)


class TrainingDivergence(RuntimeError):
    """Raised when the loss goes non-finite; carries epoch/step context."""


@dataclass(frozen=True)
class Shapelet:
    """A decoded candidate bound to a variable; the interpretable output."""

    values: np.ndarray
    variable: int
    provenance: str
    cluster_size_at_selection: int
    embedding: Optional[np.ndarray] = None

    @property
    def length(self) -> int:
        return len(self.values)


@dataclass
class TrainConfig:
    """Hyperparameters for discovery and final clustering.

    ``epochs`` defaults to the desk-scale budget of 100; pass 400 to match
    the full reproduction setting. ``anchors_per_epoch=0`` makes an epoch
    one full pass over the candidate pool in batch-size groups.
    """

    epochs: int = 100
    batch_size: int = 10
    lr: float = 0.001
    lam: float = 0.01
    k: int = 2
    ratios: tuple = DEFAULT_RATIOS
    alpha: float = DEFAULT_ALPHA
    margin: float = DEFAULT_MARGIN
    beta: float = DEFAULT_BETA
    grid_len: int = DEFAULT_GRID_LEN
    embed_dim: int = 16
    channels: int = 40
    kernel: int = 3
    depth: int = 10
    stride: Optional[int] = None
    per_cell_cap: int = 20
    max_candidates: Optional[int] = 3000
    anchors_per_epoch: int = 64
    refresh_sample: int = 256
    seed: int = 0
    c_num: Optional[int] = None
    use_triplet: bool = True
    use_diversity: bool = True
    use_dbi: bool = True
    restarts: int = 10
    max_grad_norm: float = 100.0  # 0 disables the divergence guard

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 3:
            raise ValueError("need epochs >= 0 and batch_size >= 3")
        if self.k < 1 or self.lr <= 0 or self.alpha <= 0:
            raise ValueError("need k >= 1, lr > 0, alpha > 0")

    @property
    def group_size(self) -> int:
        """Positives (= negatives) per triplet group; spare slots dropped."""
        return max(1, (self.batch_size - 2) // 2)

    def arch(self) -> ArchConfig:
        return ArchConfig(
            grid_len=self.grid_len,
            channels=self.channels,
            kernel=self.kernel,
            depth=self.depth,
            embed_dim=self.embed_dim,
        )


@dataclass
class TrainingResult:
    shapelets: list[Shapelet]
    loss_log: list[dict]
    params: dict
    arch: ArchConfig
    candidates: list[Candidate] = field(repr=False, default_factory=list)


def _clip_grad_norm(params: dict, max_norm: float) -> None:
    """Rescale all gradients when their global norm exceeds the cap.

    The exponential in the diversity objective (and the epsilon-floored
    DBI ratios) can spike on near-degenerate batches; an uncapped SGD step
    then launches the weights out of the finite range.
    """
    if max_norm <= 0:
        return
    total = 0.0
    for t in params.values():
        if t.grad is not None:
            total += float(np.square(t.grad).sum())
    norm = math.sqrt(total)
    if norm > max_norm:
        scale = max_norm / norm
        for t in params.values():
            if t.grad is not None:
                t.grad *= scale


def _min_pairwise_sq_dist(points: np.ndarray) -> float:
    d2 = np.square(points[:, None, :] - points[None, :, :]).sum(axis=2)
    d2[np.diag_indices(len(points))] = np.inf
    return float(d2.min())


def _representatives(points: np.ndarray, assignment: ClusterAssignment) -> np.ndarray:
    """Index of the member nearest each centroid (ties: lowest index)."""
    reps = np.empty(assignment.c_num, dtype=np.int64)
    for c in range(assignment.c_num):
        members = np.where(assignment.labels == c)[0]
        d2 = np.square(points[members] - assignment.centroids[c]).sum(axis=1)
        reps[c] = members[d2.argmin()]
    return reps


def rank_by_diversity(
    embeddings: np.ndarray, k: int, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Cluster embeddings into k groups and order their representatives.

    Representatives (nearest-to-centroid per cluster) are ordered by
    descending cluster size, then descending summed distance to the other
    representatives, then ascending candidate index. Returns the ordered
    indices and the matching cluster sizes.
    """
    embeddings = np.asarray(embeddings, dtype=np.float64)
    n = embeddings.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"k={k} out of range for {n} candidates")
    if k == 1:
        centroid = embeddings.mean(axis=0)
        rep = int(np.square(embeddings - centroid).sum(axis=1).argmin())
        return np.array([rep]), np.array([n])
    assignment = kmeans_best_of(embeddings, k, seed=seed, restarts=10)
    reps = _representatives(embeddings, assignment)
    rep_points = embeddings[reps]
    pair_d2 = np.square(rep_points[:, None, :] - rep_points[None, :, :]).sum(axis=2)
    spread = pair_d2.sum(axis=1)
    order = sorted(
        range(k), key=lambda c: (-assignment.sizes[c], -spread[c], reps[c])
    )
    return reps[order], assignment.sizes[order]


def _triplet_indices(
    x: np.ndarray,
    variables: np.ndarray,
    anchor: int,
    k_pos: int,
    k_neg: int,
    rng: np.random.Generator,
) -> Optional[tuple[np.ndarray, np.ndarray]]:
    d2 = np.square(x - x[anchor]).sum(axis=1)
    others = np.arange(len(x)) != anchor
    if not others.any() or d2[others].max() <= 0.0:
        return None  # pool degenerate around this anchor
    same = np.where(others & (variables == variables[anchor]))[0]
    if same.size == 0:
        same = np.where(others)[0]
    pos = same[np.argsort(d2[same], kind="stable")[:k_pos]]
    other_idx = np.where(others)[0]
    cutoff = np.quantile(d2[other_idx], 0.75)
    far = other_idx[d2[other_idx] >= cutoff]
    if far.size == 0:
        far = other_idx
    neg = rng.choice(far, size=min(k_neg, far.size), replace=False)
    return pos, np.sort(neg)


def discover_shapelets(dataset: Dataset, config: TrainConfig) -> TrainingResult:
    """Joint training then top-k selection; deterministic given the seeds."""
    candidates = generate_candidates(
        dataset,
        ratios=config.ratios,
        stride=config.stride,
        per_cell_cap=config.per_cell_cap,
        seed=config.seed,
        grid_len=config.grid_len,
        max_candidates=config.max_candidates,
    )
    n_cand = len(candidates)
    if n_cand < config.k:
        raise ValueError(f"only {n_cand} candidates for k={config.k}")
    x = grid_views(candidates)
    variables = np.array([c.subsequence.variable for c in candidates])
    arch = config.arch()
    params = init_params(arch, seed=config.seed)
    rng = np.random.default_rng(config.seed + 1)
    c_train = config.c_num or dataset.class_count or 2
    k_side = config.group_size

    provisional = x[rng.choice(n_cand, size=min(config.k, n_cand), replace=False)]
    loss_log: list[dict] = []

    for epoch in range(config.epochs):
        if config.anchors_per_epoch > 0:
            n_steps = min(config.anchors_per_epoch, n_cand)
        else:
            n_steps = math.ceil(n_cand / config.batch_size)
        anchors = rng.choice(n_cand, size=n_steps, replace=False)
        sums = np.zeros(5)
        counted = 0
        for step, anchor in enumerate(anchors):
            picked = _triplet_indices(x, variables, int(anchor), k_side, k_side, rng)
            if picked is None:
                continue
            pos, neg = picked
            idx = np.concatenate([[anchor], pos, neg])
            xb = x[idx]

            def fail_if_not_finite(value: float, which: str):
                if not np.isfinite(value):
                    raise TrainingDivergence(
                        f"non-finite {which} loss at epoch {epoch} step {step}"
                    )

            emb = encode(params, arch, Tensor(xb))
            dec = decode(params, arch, emb)
            parts = LossParts(reconstruction=reconstruction_loss(xb, dec))
            fail_if_not_finite(parts.reconstruction.item(), "reconstruction")
            if config.use_triplet:
                batch = TripletBatch(
                    anchor=emb[0],
                    positives=emb[1 : 1 + len(pos)],
                    negatives=emb[1 + len(pos) :],
                    margin=config.margin,
                    beta=config.beta,
                )
                parts.triplet = triplet_loss(batch, config.alpha)
                fail_if_not_finite(parts.triplet.item(), "triplet")
            if not np.isfinite(np.square(emb.data).sum()):
                raise TrainingDivergence(
                    f"embedding magnitude diverged at epoch {epoch} step {step}"
                )
            if config.use_diversity:
                y = min(max(2, config.k), len(idx))
                asn = kmeans(
                    emb.data, y, seed=int(rng.integers(2**31)), max_iters=20
                )
                reps = _representatives(emb.data, asn)
                # a degenerate representative set (coincident embeddings)
                # sits on the epsilon floor of the log terms and explodes
                # gradients; such batches contribute no diversity signal
                if _min_pairwise_sq_dist(emb.data[reps]) >= 1e-6:
                    parts.diversity = diversity_loss(emb[reps], asn.sizes)
            if config.use_dbi:
                cols = stack(
                    [((dec - provisional[j]) ** 2).mean(axis=1) for j in range(len(provisional))],
                    axis=1,
                )
                c_here = min(c_train, len(idx) - 1)
                if c_here >= 2 and np.isfinite(np.square(cols.data).sum()):
                    asn2 = kmeans(
                        cols.data, c_here, seed=int(rng.integers(2**31)), max_iters=20
                    )
                    if _min_pairwise_sq_dist(asn2.centroids) >= 1e-6:
                        parts.dbi = dbi_loss(cols, asn2.labels, config.alpha)
            total = overall_loss(parts, config.lam)
            if not np.isfinite(total.data):
                raise TrainingDivergence(
                    f"non-finite loss at epoch {epoch} step {step}: "
                    f"recon={parts.reconstruction.item():.4g} "
                    f"triplet={parts.triplet.item():.4g} "
                    f"diversity={parts.diversity.item():.4g} "
                    f"dbi={parts.dbi.item():.4g}"
                )
            total.backward()
            _clip_grad_norm(params, config.max_grad_norm)
            sgd_step(params, config.lr)
            zero_grad(params)
            sums += [
                parts.reconstruction.item(),
                parts.triplet.item(),
                parts.diversity.item(),
                parts.dbi.item(),
                total.item(),
            ]
            counted += 1
        means = sums / max(1, counted)
        loss_log.append(
            {
                "epoch": epoch,
                "L_recon": means[0],
                "L_triplet": means[1],
                "L_div": means[2],
                "L_dbi": means[3],
                "L_total": means[4],
            }
        )
        sample_n = min(config.refresh_sample, n_cand)
        sub = np.sort(rng.choice(n_cand, size=sample_n, replace=False))
        emb_sub = encode_array(params, arch, x[sub])
        order, _ = rank_by_diversity(
            emb_sub, min(config.k, sample_n), seed=config.seed + 2
        )
        provisional = decode_array(params, arch, emb_sub[order])

    emb_all = encode_array(params, arch, x)
    order, sizes = rank_by_diversity(emb_all, config.k, seed=config.seed + 2)
    decoded = decode_array(params, arch, emb_all[order])
    shapelets = []
    for rank, ci in enumerate(order):
        cand = candidates[int(ci)]
        # decoded signals live in per-window z-score space; map them back to
        # the source window's scale so the no-renormalization best-match
        # distance compares like with like against the channels
        raw = cand.subsequence.values
        sigma = raw.std()
        values = restore_from_grid(decoded[rank], cand.subsequence.length)
        values = values * (sigma if sigma > 1e-12 else 1.0) + raw.mean()
        shapelets.append(
            Shapelet(
                values=values,
                variable=cand.subsequence.variable,
                provenance=cand.key,
                cluster_size_at_selection=int(sizes[rank]),
                embedding=emb_all[int(ci)].copy(),
            )
        )
    return TrainingResult(
        shapelets=shapelets,
        loss_log=loss_log,
        params=params,
        arch=arch,
        candidates=candidates,
    )


def cluster_dataset(
    dataset: Dataset,
    shapelets: list[Shapelet],
    c_num: Optional[int] = None,
    seed: int = 0,
    restarts: int = 10,
) -> tuple[np.ndarray, ClusterAssignment, dict]:
    """Transform, run best-of-restarts K-means, and report metrics.

    Returns (transformed matrix, assignment, metrics). NMI/RI appear in
    the metrics only when the dataset carries labels; DBI and inertia are
    always reported.
    """
    if not shapelets:
        raise ValueError("empty shapelet set: nothing to transform with")
    c = c_num or dataset.class_count
    if c is None:
        raise ValueError("c_num required when the dataset has no labels")
    matrix = transform(dataset, shapelets)
    assignment = kmeans_best_of(matrix, c, seed=seed, restarts=restarts)
    metrics = {
        "nmi": None,
        "ri": None,
        "dbi": dbi_exact(matrix, assignment),
        "inertia": assignment.inertia,
        "seed": seed,
        "restarts": restarts,
    }
    if dataset.labels is not None:
        metrics["nmi"] = nmi(assignment.labels, dataset.labels)
        metrics["ri"] = rand_index(assignment.labels, dataset.labels)
    return matrix, assignment, metrics


# -- artifact serialization ---------------------------------------------


def save_shapelets_json(shapelets: list[Shapelet], path: str) -> None:
    payload = [
        {
            "values": [float(v) for v in sh.values],
            "variable": sh.variable,
            "length": sh.length,
            "provenance": sh.provenance,
            "cluster_size_at_selection": sh.cluster_size_at_selection,
        }
        for sh in shapelets
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)


def load_shapelets_json(path: str) -> list[Shapelet]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return [
        Shapelet(
            values=np.array(entry["values"], dtype=np.float64),
            variable=int(entry["variable"]),
            provenance=str(entry["provenance"]),
            cluster_size_at_selection=int(entry["cluster_size_at_selection"]),
        )
        for entry in payload
    ]


def save_loss_log_csv(loss_log: list[dict], path: str) -> None:
    cols = ["epoch", "L_recon", "L_triplet", "L_div", "L_dbi", "L_total"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for row in loss_log:
            fh.write(
                ",".join(
                    str(row["epoch"]) if c == "epoch" else repr(float(row[c]))
                    for c in cols
                )
                + "\n"
            )


def save_metrics_json(metrics: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(metrics, fh, sort_keys=True, indent=1)
