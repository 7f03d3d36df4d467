"""Shared test utilities: finite-difference gradient checks and oracles."""

from __future__ import annotations

import numpy as np

from shapeclust.autodiff import Tensor
from shapeclust.clustering import ClusterAssignment


def central_diff_grad(fn, arrays: list[np.ndarray], step: float = 1e-4) -> list[np.ndarray]:
    """Central finite differences of a scalar fn(list_of_arrays) -> float."""
    grads = []
    for which, base in enumerate(arrays):
        g = np.zeros_like(base)
        flat = base.ravel()
        gflat = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = fn(arrays)
            flat[i] = orig - step
            lo = fn(arrays)
            flat[i] = orig
            gflat[i] = (hi - lo) / (2 * step)
        grads.append(g)
    return grads


def check_gradients(build_loss, arrays, step=1e-4, rtol=1e-4, atol=1e-7):
    """Compare autodiff gradients of build_loss(list_of_tensors) to central
    differences w.r.t. every array; asserts elementwise closeness."""
    tensors = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    loss = build_loss(tensors)
    loss.backward()

    def eval_fn(arrs):
        consts = [Tensor(a) for a in arrs]
        return build_loss(consts).item()

    numeric = central_diff_grad(eval_fn, [t.data for t in tensors], step=step)
    for t, num in zip(tensors, numeric):
        got = t.grad if t.grad is not None else np.zeros_like(t.data)
        denom = np.maximum(np.abs(num), np.abs(got))
        err = np.abs(got - num)
        ok = err <= atol + rtol * denom
        assert ok.all(), (
            f"gradient mismatch: max abs err {err.max():.3e}, "
            f"max rel err {(err / np.maximum(denom, 1e-300)).max():.3e}"
        )


def assignment_from_labels(points: np.ndarray, labels) -> ClusterAssignment:
    """Build a ClusterAssignment with mean centroids from fixed labels."""
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    centroids = np.stack([points[labels == c].mean(axis=0) for c in uniq])
    remap = {c: i for i, c in enumerate(uniq)}
    idx = np.array([remap[c] for c in labels])
    sizes = np.bincount(idx, minlength=len(uniq))
    inertia = float(np.square(points - centroids[idx]).sum())
    return ClusterAssignment(
        labels=idx, centroids=centroids, sizes=sizes, inertia=inertia, iterations=0
    )


def naive_best_match(shorter, longer) -> tuple[float, int]:
    """Pure-python double-loop oracle for the best-match distance."""
    best = float("inf")
    best_j = 0
    m = len(shorter)
    for j in range(len(longer) - m + 1):
        s = 0.0
        for l in range(m):
            d = longer[j + l] - shorter[l]
            s += d * d
        s /= m
        if s < best:
            best = s
            best_j = j
    return best, best_j


def smooth_max_oracle(values, alpha) -> float:
    values = np.asarray(values, dtype=np.float64)
    w = np.exp(alpha * (values - values.max()))
    return float((values * w).sum() / w.sum())
