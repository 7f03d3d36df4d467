"""Best-match subsequence distance and the shapelet transform.

``dist(p, q)`` with ``|p| <= |q|`` slides ``p`` over ``q`` and returns the
smallest mean of squared differences across alignments:

    min over j in [0, |q|-|p|]  of  (1/|p|) * sum_l (q[j+l] - p[l])^2

``transform`` applies it across a dataset against an ordered shapelet list,
producing the M x k distance matrix that downstream clustering consumes.

Both operations have a numba kernel and a pure-numpy fallback; see
``shapeclust._backend`` for how one is selected. The numba kernels
accumulate each alignment sum left to right, so they match a naive
double-loop oracle bit for bit; the numpy path vectorizes and is only
guaranteed to 1e-12.
"""

from __future__ import annotations

import numpy as np

from ._backend import NUMBA_ENABLED

if NUMBA_ENABLED:
    from numba import njit, prange
else:  # pragma: no cover - exercised via SHAPECLUST_BACKEND=numpy runs
    njit = None
    prange = range


def _best_match_numpy(shorter: np.ndarray, longer: np.ndarray) -> tuple[float, int]:
    windows = np.lib.stride_tricks.sliding_window_view(longer, shorter.size)
    costs = np.square(windows - shorter).mean(axis=1)
    j = int(np.argmin(costs))
    return float(costs[j]), j


def _transform_numpy(channels: np.ndarray, shapelet: np.ndarray) -> np.ndarray:
    # channels: (M, N) slice of one variable; returns (M,) best-match distances
    windows = np.lib.stride_tricks.sliding_window_view(channels, shapelet.size, axis=1)
    costs = np.square(windows - shapelet).mean(axis=2)
    return costs.min(axis=1)


if NUMBA_ENABLED:

    @njit(cache=True)
    def _best_match_numba(shorter, longer):  # pragma: no cover - jitted
        m = shorter.shape[0]
        best = np.inf
        best_j = 0
        for j in range(longer.shape[0] - m + 1):
            s = 0.0
            for l in range(m):
                d = longer[j + l] - shorter[l]
                s += d * d
            s /= m
            if s < best:
                best = s
                best_j = j
        return best, best_j

    @njit(cache=True, parallel=True)
    def _transform_numba(channels, shapelet):  # pragma: no cover - jitted
        n_rows = channels.shape[0]
        m = shapelet.shape[0]
        out = np.empty(n_rows)
        for i in prange(n_rows):
            best = np.inf
            for j in range(channels.shape[1] - m + 1):
                s = 0.0
                for l in range(m):
                    d = channels[i, j + l] - shapelet[l]
                    s += d * d
                s /= m
                if s < best:
                    best = s
            out[i] = best
        return out


def best_match(shorter, longer) -> tuple[float, int]:
    """Best-match distance plus the alignment offset that attains it.

    Returns:
        (distance, offset): offset is the 0-based start of the best-matching
        window in ``longer``; ties resolve to the earliest offset.

    Raises:
        ValueError: empty input or ``|shorter| > |longer|`` (callers must
            pass the shorter sequence first).
    """
    shorter = np.ascontiguousarray(shorter, dtype=np.float64)
    longer = np.ascontiguousarray(longer, dtype=np.float64)
    if shorter.ndim != 1 or longer.ndim != 1 or shorter.size == 0 or longer.size == 0:
        raise ValueError("dist expects nonempty 1-D sequences")
    if shorter.size > longer.size:
        raise ValueError(
            f"first sequence (len {shorter.size}) must not exceed the second "
            f"(len {longer.size}); swap the arguments"
        )
    if NUMBA_ENABLED:
        value, offset = _best_match_numba(shorter, longer)
        return float(value), int(offset)
    return _best_match_numpy(shorter, longer)


def dist(shorter, longer) -> float:
    """Best-match distance only (see :func:`best_match`)."""
    return best_match(shorter, longer)[0]


def transform(dataset, shapelets) -> np.ndarray:
    """Shapelet transform: entry (m, j) = dist(shapelet_j, instance_m channel).

    Each shapelet carries the variable index whose channel it is matched
    against; column order follows the shapelet list order.
    """
    n_inst = dataset.n_instances
    out = np.empty((n_inst, len(shapelets)), dtype=np.float64)
    if not shapelets:
        return out
    values = dataset.values_array()
    for j, sh in enumerate(shapelets):
        var = int(sh.variable)
        if var < 0 or var >= dataset.n_variables:
            raise ValueError(
                f"shapelet {j} references variable {var} but dataset has "
                f"{dataset.n_variables}"
            )
        svals = np.ascontiguousarray(sh.values, dtype=np.float64)
        if svals.size > dataset.length:
            raise ValueError(
                f"shapelet {j} longer ({svals.size}) than the series ({dataset.length})"
            )
        channels = np.ascontiguousarray(values[:, var, :])
        if NUMBA_ENABLED:
            out[:, j] = _transform_numba(channels, svals)
        else:
            out[:, j] = _transform_numpy(channels, svals)
    return out


def save_transform_csv(matrix: np.ndarray, path: str) -> None:
    """Write an M x k transform as CSV with header d_1..d_k."""
    k = matrix.shape[1]
    header = ",".join(f"d_{j + 1}" for j in range(k))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in matrix:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def load_transform_csv(path: str) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    rows = [[float(tok) for tok in ln.split(",")] for ln in lines[1:]]
    ncols = len(lines[0].split(",")) if lines else 0
    return np.array(rows, dtype=np.float64).reshape(len(rows), ncols)
