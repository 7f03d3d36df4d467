"""Synthetic benchmark generators with known discriminative structure."""

from __future__ import annotations

import numpy as np

from .data import Dataset, TimeSeriesInstance, znorm


def make_motif_dataset(
    n_instances: int = 60,
    length: int = 128,
    seed: int = 0,
    noise: float = 0.4,
    motif_len: int = 32,
) -> Dataset:
    """Two-class univariate benchmark with class-specific injected motifs.

    Each instance carries repeated bursts of ``motif_len`` points at
    jittered positions on top of Gaussian noise: two-cycle sine bursts for
    class 0, step bursts (high half, low half) for class 1. The two
    patterns are high-energy and mutually distant under the best-match
    metric, and the bursts cover most of the series so recurring motif
    windows dominate any sliding-window candidate pool, as they do in the
    classification archives. Shapelet pipelines should recover
    near-perfect clusterings at moderate noise.
    """
    if n_instances < 4 or length < 2 * motif_len:
        raise ValueError("benchmark too small")
    rng = np.random.default_rng(seed)
    half = motif_len // 2
    motifs = (
        2.2 * np.sin(np.linspace(0.0, 4 * np.pi, motif_len)),
        np.concatenate([np.full(half, 1.8), np.full(motif_len - half, -1.8)]),
    )
    n_bursts = max(1, length // (motif_len + motif_len // 4))
    slot = length // n_bursts
    jitter = max(1, (slot - motif_len) // 2)
    instances = []
    labels = []
    for i in range(n_instances):
        label = i % 2
        series = rng.normal(0.0, noise, size=length)
        for b in range(n_bursts):
            start = b * slot + int(rng.integers(0, jitter + 1))
            start = min(start, length - motif_len)
            series[start : start + motif_len] += motifs[label]
        instances.append(
            TimeSeriesInstance(values=znorm(series)[np.newaxis, :], id=str(i))
        )
        labels.append(label)
    return Dataset(instances=tuple(instances), labels=tuple(labels))


def make_single_motif_dataset(
    n_instances: int = 40,
    length: int = 96,
    seed: int = 0,
    noise: float = 0.3,
    motif_len: int = 32,
) -> Dataset:
    """Presence/absence variant: only class 0 carries the sine burst.

    Class 1 is noise plus a slow drift. A single shapelet matching the
    burst separates the classes by distance alone, which makes this the
    right instrument for k=1 margin checks.
    """
    if n_instances < 4 or length < motif_len + 4:
        raise ValueError("benchmark too small")
    rng = np.random.default_rng(seed)
    motif = 1.5 * np.sin(np.linspace(0.0, 3 * np.pi, motif_len))
    instances = []
    labels = []
    for i in range(n_instances):
        label = i % 2
        series = rng.normal(0.0, noise, size=length)
        if label == 0:
            start = int(rng.integers(2, length - motif_len - 2))
            series[start : start + motif_len] += motif
        else:
            series += 0.3 * np.sin(
                np.linspace(0.0, 2 * np.pi, length) + rng.uniform(0, 2 * np.pi)
            )
        instances.append(
            TimeSeriesInstance(values=znorm(series)[np.newaxis, :], id=str(i))
        )
        labels.append(label)
    return Dataset(instances=tuple(instances), labels=tuple(labels))


def make_blob_embeddings(
    sizes: tuple[int, ...],
    dim: int = 4,
    spread: float = 0.1,
    separation: float = 5.0,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Well-separated Gaussian blobs; returns (points, blob_labels)."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, separation, size=(len(sizes), dim))
    points = []
    labels = []
    for b, size in enumerate(sizes):
        points.append(centers[b] + rng.normal(0.0, spread, size=(size, dim)))
        labels.extend([b] * size)
    return np.concatenate(points, axis=0), np.array(labels)
