"""Sliding-window candidate generation and fixed-grid resampling.

Candidates are windows cut from every (instance, variable) channel at a
grid of length ratios. Each window is z-normalized and linearly resampled
onto G uniform points (the grid view) so variable-length candidates share
one encoder input shape. ``restore_from_grid`` inverts the resampling so a
decoded signal can be reported at the candidate's original length.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .data import Dataset, Subsequence, znorm

logger = logging.getLogger(__name__)

DEFAULT_RATIOS = (0.1, 0.2, 0.3, 0.4, 0.5)
DEFAULT_GRID_LEN = 32
MIN_CANDIDATE_LEN = 3


@dataclass(frozen=True)
class Candidate:
    """A candidate window plus its fixed-length grid view."""

    subsequence: Subsequence
    length_ratio: float
    grid_view: np.ndarray

    @property
    def key(self) -> str:
        """Content-based identifier used in dumps and shapelet provenance."""
        s = self.subsequence
        return f"{s.source_id}:v{s.variable}:s{s.start}:l{s.length}"


def resample_to_grid(values, grid_len: int) -> np.ndarray:
    """Linearly interpolate ``values`` onto ``grid_len`` uniform points.

    Endpoints are preserved exactly; a constant signal stays constant.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size < 2:
        raise ValueError("resample_to_grid needs a 1-D signal of length >= 2")
    if grid_len < 2:
        raise ValueError("grid_len must be >= 2")
    positions = np.linspace(0.0, values.size - 1, grid_len)
    return np.interp(positions, np.arange(values.size), values)


def restore_from_grid(grid, target_length: int) -> np.ndarray:
    """Interpolate a grid view back to ``target_length`` points."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("restore_from_grid needs a 1-D grid of length >= 2")
    if target_length < 2:
        raise ValueError("target_length must be >= 2")
    positions = np.linspace(0.0, grid.size - 1, target_length)
    return np.interp(positions, np.arange(grid.size), grid)


def default_stride(series_length: int) -> int:
    return max(1, series_length // 50)


def generate_candidates(
    dataset: Dataset,
    ratios=DEFAULT_RATIOS,
    stride: int | None = None,
    per_cell_cap: int = 20,
    seed: int = 0,
    grid_len: int = DEFAULT_GRID_LEN,
    max_candidates: int | None = None,
) -> list[Candidate]:
    """Emit candidate windows for every instance, variable, and ratio.

    Windows step by ``stride``; when one (instance, variable, ratio) cell
    exceeds ``per_cell_cap`` windows it is uniformly subsampled to the cap.
    ``max_candidates`` optionally subsamples the final pool the same way.
    Output order is canonical (instance, variable, ratio, start) and fully
    determined by the arguments.

    Ratios whose window would be shorter than 3 points are skipped with a
    warning rather than an error.
    """
    n = dataset.length
    if stride is None:
        stride = default_stride(n)
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if per_cell_cap < 1:
        raise ValueError("per_cell_cap must be >= 1")
    usable: list[float] = []
    for ratio in sorted(set(float(r) for r in ratios)):
        if not 0.0 < ratio <= 1.0:
            raise ValueError(f"ratio {ratio} outside (0, 1]")
        if round(ratio * n) < MIN_CANDIDATE_LEN:
            logger.warning(
                "ratio %.3g gives windows shorter than %d points (N=%d); skipped",
                ratio,
                MIN_CANDIDATE_LEN,
                n,
            )
            continue
        usable.append(ratio)

    rng = np.random.default_rng(seed)
    out: list[Candidate] = []
    for inst in dataset.instances:
        for var in range(dataset.n_variables):
            channel = inst.values[var]
            for ratio in usable:
                length = int(round(ratio * n))
                length = min(length, n)
                starts = np.arange(0, n - length + 1, stride)
                if starts.size > per_cell_cap:
                    keep = rng.choice(starts.size, size=per_cell_cap, replace=False)
                    starts = starts[np.sort(keep)]
                for start in starts:
                    window = channel[start : start + length]
                    sub = Subsequence(
                        source_id=inst.id,
                        variable=var,
                        start=int(start),
                        values=window,
                    )
                    grid = resample_to_grid(znorm(window), grid_len)
                    out.append(
                        Candidate(subsequence=sub, length_ratio=ratio, grid_view=grid)
                    )
    if not out:
        raise ValueError("no candidates: every ratio was too short for this dataset")
    if max_candidates is not None and len(out) > max_candidates:
        keep = rng.choice(len(out), size=max_candidates, replace=False)
        out = [out[i] for i in np.sort(keep)]
    return out


def expected_cell_count(n: int, length: int, stride: int) -> int:
    """Window count for one (instance, variable, ratio) cell before capping."""
    return (n - length) // stride + 1


def grid_views(candidates: list[Candidate]) -> np.ndarray:
    return np.stack([c.grid_view for c in candidates])


def save_candidates_csv(candidates: list[Candidate], path: str) -> None:
    """Provenance dump: id, instance, variable, start, length, ratio."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("id,instance,variable,start,length,ratio\n")
        for cand in candidates:
            s = cand.subsequence
            fh.write(
                f"{cand.key},{s.source_id},{s.variable},{s.start},"
                f"{s.length},{cand.length_ratio}\n"
            )
