"""Time series containers and ingestion of UCR/UEA text formats.

Two input formats are supported:

* ``ucr_tsv`` - one series per line, first field an integer class label,
  remaining fields the values, separated by tabs, commas, or whitespace.
* ``uea_ts`` - ``.ts`` files with ``@``-prefixed header lines
  (problemName, dimensions, seriesLength, classLabel, ...) followed by
  ``@data`` and one line per instance with ':'-separated dimensions and a
  trailing class label.

Every channel is z-normalized per instance at load time (constant channels
map to all zeros). Labels, when present, are kept in an evaluation-only
field; nothing on the training path reads them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

VALID_FORMATS = ("ucr_tsv", "uea_ts")


class DataFormatError(ValueError):
    """Raised when an input file cannot be parsed under its declared format."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def znorm(values: np.ndarray) -> np.ndarray:
    """Z-normalize a 1-D array; constant input maps to all zeros."""
    values = np.asarray(values, dtype=np.float64)
    mu = values.mean()
    sigma = values.std()
    if sigma < 1e-12:
        return np.zeros_like(values)
    return (values - mu) / sigma


@dataclass(frozen=True)
class TimeSeriesInstance:
    """One (possibly multivariate) series: V aligned channels of length N."""

    values: np.ndarray  # shape (V, N)
    id: str

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"instance {self.id}: values must be 2-D (V, N)")
        if arr.shape[0] < 1 or arr.shape[1] < 2:
            raise ValueError(f"instance {self.id}: need V >= 1 and N >= 2, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError(f"instance {self.id}: non-finite values after ingestion")
        object.__setattr__(self, "values", arr)

    @property
    def n_variables(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    def channel(self, v: int) -> np.ndarray:
        return self.values[v]


@dataclass(frozen=True)
class Subsequence:
    """A contiguous slice of one channel, with provenance."""

    source_id: str
    variable: int
    start: int
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("subsequence values must be a nonempty 1-D array")
        object.__setattr__(self, "values", arr)

    @property
    def length(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of instances sharing V and N.

    ``labels`` is evaluation-only; clustering is unsupervised and no
    training code path may read it.
    """

    instances: tuple[TimeSeriesInstance, ...]
    labels: Optional[tuple[int, ...]] = None
    class_count: Optional[int] = None
    label_names: Optional[tuple[str, ...]] = field(default=None, compare=False)

    def __post_init__(self):
        instances = tuple(self.instances)
        if len(instances) < 2:
            raise ValueError(f"dataset needs M >= 2 instances, got {len(instances)}")
        v0, n0 = instances[0].values.shape
        for inst in instances[1:]:
            if inst.n_variables != v0:
                raise ValueError(
                    f"instance {inst.id}: variable count {inst.n_variables} != {v0}"
                )
            if inst.length != n0:
                raise ValueError(
                    f"instance {inst.id}: length {inst.length} != {n0} "
                    "(ragged datasets are not supported)"
                )
        object.__setattr__(self, "instances", instances)
        if self.labels is not None:
            labels = tuple(int(x) for x in self.labels)
            if len(labels) != len(instances):
                raise ValueError(
                    f"label count {len(labels)} != instance count {len(instances)}"
                )
            distinct = len(set(labels))
            if self.class_count is None:
                object.__setattr__(self, "class_count", distinct)
            elif self.class_count != distinct:
                raise ValueError(
                    f"class_count {self.class_count} != distinct labels {distinct}"
                )
            object.__setattr__(self, "labels", labels)

    @property
    def n_instances(self) -> int:
        return len(self.instances)

    @property
    def n_variables(self) -> int:
        return self.instances[0].n_variables

    @property
    def length(self) -> int:
        return self.instances[0].length

    def values_array(self) -> np.ndarray:
        """Stack all instances into an (M, V, N) array."""
        return np.stack([inst.values for inst in self.instances])


def _split_ucr_line(line: str) -> list[str]:
    if "\t" in line:
        return [tok for tok in line.split("\t") if tok.strip()]
    if "," in line:
        return [tok for tok in line.split(",") if tok.strip()]
    return line.split()


def _parse_ucr_tsv(path: str) -> tuple[list[np.ndarray], list[str]]:
    rows: list[np.ndarray] = []
    raw_labels: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = _split_ucr_line(line)
            if len(tokens) < 3:
                raise DataFormatError(
                    f"expected a label and at least 2 values, got {len(tokens)} fields",
                    line=lineno,
                )
            try:
                values = np.array([float(t) for t in tokens[1:]], dtype=np.float64)
            except ValueError as exc:
                raise DataFormatError(f"bad numeric value ({exc})", line=lineno)
            if not np.isfinite(values).all():
                raise DataFormatError("missing/non-finite value", line=lineno)
            if rows and values.size != rows[0].size:
                raise DataFormatError(
                    f"series length {values.size} != {rows[0].size} on first line",
                    line=lineno,
                )
            rows.append(values)
            raw_labels.append(tokens[0])
    if not rows:
        raise DataFormatError("file contains no data lines")
    return rows, raw_labels


def _parse_uea_ts(path: str) -> tuple[list[np.ndarray], Optional[list[str]], dict]:
    header: dict = {}
    instances: list[np.ndarray] = []
    raw_labels: list[str] = []
    has_labels = False
    in_data = False
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("@"):
                if in_data:
                    raise DataFormatError("metadata after @data", line=lineno)
                tokens = line.split()
                key = tokens[0][1:].lower()
                if key == "data":
                    in_data = True
                    continue
                header[key] = tokens[1:] if len(tokens) > 1 else []
                if key == "classlabel" and tokens[1:]:
                    has_labels = tokens[1].lower() == "true"
                continue
            if not in_data:
                raise DataFormatError("data line before @data tag", line=lineno)
            parts = line.split(":")
            if has_labels:
                if len(parts) < 2:
                    raise DataFormatError("expected dimensions and a label", line=lineno)
                dims, label = parts[:-1], parts[-1].strip()
                raw_labels.append(label)
            else:
                dims = parts
            try:
                channels = [
                    np.array([float(t) for t in dim.split(",")], dtype=np.float64)
                    for dim in dims
                ]
            except ValueError as exc:
                raise DataFormatError(f"bad numeric value ({exc})", line=lineno)
            lengths = {c.size for c in channels}
            if len(lengths) != 1:
                raise DataFormatError(
                    f"channels of differing lengths {sorted(lengths)}", line=lineno
                )
            arr = np.stack(channels)
            if not np.isfinite(arr).all():
                raise DataFormatError("missing/non-finite value", line=lineno)
            if instances and arr.shape != instances[0].shape:
                raise DataFormatError(
                    f"instance shape {arr.shape} != {instances[0].shape}", line=lineno
                )
            instances.append(arr)
    if not instances:
        raise DataFormatError("file contains no data lines")
    if "dimensions" in header and header["dimensions"]:
        declared = int(header["dimensions"][0])
        if declared != instances[0].shape[0]:
            raise DataFormatError(
                f"@dimensions says {declared} but data has {instances[0].shape[0]}"
            )
    if "serieslength" in header and header["serieslength"]:
        declared = int(header["serieslength"][0])
        if declared > 0 and declared != instances[0].shape[1]:
            raise DataFormatError(
                f"@seriesLength says {declared} but data has {instances[0].shape[1]}"
            )
    return instances, raw_labels if has_labels else None, header


def _factorize(raw: Sequence[str]) -> tuple[list[int], list[str]]:
    mapping: dict[str, int] = {}
    out = []
    for tok in raw:
        if tok not in mapping:
            mapping[tok] = len(mapping)
        out.append(mapping[tok])
    return out, list(mapping)


def load_dataset(path: str, format: str = "auto", normalize: bool = True) -> Dataset:
    """Load a dataset, z-normalizing each channel per instance.

    Args:
        path: input file.
        format: ``ucr_tsv``, ``uea_ts``, or ``auto`` (inferred from the
            extension: ``.ts`` means ``uea_ts``).
        normalize: apply per-channel z-normalization (default). Disable
            only for round-trip tooling.

    Raises:
        DataFormatError: malformed content, with a line number.
        ValueError: unknown format tag.
    """
    if format == "auto":
        format = "uea_ts" if str(path).lower().endswith(".ts") else "ucr_tsv"
    if format not in VALID_FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {VALID_FORMATS}")

    if format == "ucr_tsv":
        rows, raw_labels = _parse_ucr_tsv(path)
        mats = [row[np.newaxis, :] for row in rows]
        labels_raw: Optional[list[str]] = raw_labels
    else:
        mats, labels_raw, _ = _parse_uea_ts(path)

    if normalize:
        mats = [np.stack([znorm(ch) for ch in mat]) for mat in mats]

    instances = tuple(
        TimeSeriesInstance(values=mat, id=str(i)) for i, mat in enumerate(mats)
    )
    labels = None
    label_names = None
    if labels_raw is not None:
        coded, names = _factorize(labels_raw)
        labels = tuple(coded)
        label_names = tuple(names)
    return Dataset(instances=instances, labels=labels, label_names=label_names)


def save_dataset(dataset: Dataset, path: str, format: str) -> None:
    """Write a dataset back out in one of the supported text formats."""
    if format not in VALID_FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {VALID_FORMATS}")
    labels = dataset.labels
    if format == "ucr_tsv":
        if dataset.n_variables != 1:
            raise ValueError("ucr_tsv holds univariate data only")
        with open(path, "w", encoding="utf-8") as fh:
            for i, inst in enumerate(dataset.instances):
                lab = labels[i] if labels is not None else 0
                vals = "\t".join(repr(float(x)) for x in inst.values[0])
                fh.write(f"{lab}\t{vals}\n")
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("@problemName shapeclust\n")
        fh.write(f"@dimensions {dataset.n_variables}\n")
        fh.write("@equalLength true\n")
        fh.write(f"@seriesLength {dataset.length}\n")
        if labels is not None:
            names = sorted({str(x) for x in labels})
            fh.write(f"@classLabel true {' '.join(names)}\n")
        else:
            fh.write("@classLabel false\n")
        fh.write("@data\n")
        for i, inst in enumerate(dataset.instances):
            dims = ":".join(
                ",".join(repr(float(x)) for x in inst.values[v])
                for v in range(dataset.n_variables)
            )
            if labels is not None:
                fh.write(f"{dims}:{labels[i]}\n")
            else:
                fh.write(f"{dims}\n")
