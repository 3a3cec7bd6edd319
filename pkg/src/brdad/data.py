"""Datasets, CSV ingestion, min-max scaling and the bag partition scheme."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np


class DataError(ValueError):
    """Raised for malformed input data (bad CSV cells, NaNs, empty files)."""


@dataclass(frozen=True)
class Dataset:
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise DataError(f"expected a non-empty n x d matrix, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise DataError("dataset contains NaN or infinite values")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class LabeledDataset:
    data: Dataset
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.shape != (self.data.n,):
            raise DataError(
                f"label count {labels.size} does not match point count {self.data.n}"
            )
        if not np.all((labels == 0) | (labels == 1)):
            raise DataError("labels must be 0 (normal) or 1 (anomaly)")
        labels = labels.astype(np.int8)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.data.n

    @property
    def d(self) -> int:
        return self.data.d


@dataclass(frozen=True)
class ScaleTransform:
    """Per-feature affine map recorded from training data; maps it into [0, 1]^d."""

    minimum: np.ndarray
    maximum: np.ndarray

    def apply(self, data: Union[Dataset, np.ndarray]) -> Dataset:
        pts = data.points if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.shape[1] != self.minimum.size:
            raise DataError(
                f"transform fitted on d={self.minimum.size}, data has d={pts.shape[1]}"
            )
        span = self.maximum - self.minimum
        constant = span == 0
        safe = np.where(constant, 1.0, span)
        out = (pts - self.minimum) / safe
        out[:, constant] = 0.5
        return Dataset(out)

    def to_dict(self) -> dict:
        return {"min": self.minimum.tolist(), "max": self.maximum.tolist()}

    @classmethod
    def from_dict(cls, obj: dict) -> "ScaleTransform":
        return cls(np.asarray(obj["min"], dtype=np.float64), np.asarray(obj["max"], dtype=np.float64))


def fit_scale(data: Dataset) -> ScaleTransform:
    return ScaleTransform(data.points.min(axis=0).copy(), data.points.max(axis=0).copy())


def apply_scale(transform: ScaleTransform, data: Dataset) -> Dataset:
    return transform.apply(data)


def load_csv(
    path: Union[str, Path], label_column: Optional[str] = None
) -> Union[Dataset, LabeledDataset]:
    """Read a header-first numeric CSV.

    With ``label_column`` set, that column is split off as 0/1 labels and a
    :class:`LabeledDataset` is returned.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        header = [h.strip() for h in header]
        label_idx = None
        if label_column is not None:
            if label_column not in header:
                raise DataError(f"{path}: label column {label_column!r} not in header {header}")
            label_idx = header.index(label_column)
        rows = []
        labels = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: row {lineno} has {len(row)} cells, header has {len(header)}"
                )
            values = []
            for col, cell in enumerate(row):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric value {cell!r} at row {lineno}, column {header[col]!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(
                        f"{path}: non-finite value {cell!r} at row {lineno}, column {header[col]!r}"
                    )
                if col == label_idx:
                    labels.append(v)
                else:
                    values.append(v)
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    if label_idx is not None and len(header) == 1:
        raise DataError(f"{path}: no feature columns besides the label")
    data = Dataset(np.asarray(rows, dtype=np.float64))
    if label_idx is None:
        return data
    return LabeledDataset(data, np.asarray(labels))


def write_csv(
    path: Union[str, Path],
    points: np.ndarray,
    labels: Optional[Sequence[int]] = None,
    label_column: str = "y",
) -> None:
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    header = [f"x{j}" for j in range(points.shape[1])]
    if labels is not None:
        header.append(label_column)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i, row in enumerate(points):
            cells = [repr(float(v)) for v in row]
            if labels is not None:
                cells.append(str(int(labels[i])))
            w.writerow(cells)


@dataclass(frozen=True)
class BagPartition:
    """B disjoint (fit_indices, ref_indices) pairs of row indices."""

    pairs: tuple

    @property
    def B(self) -> int:
        return len(self.pairs)

    def to_dict(self) -> dict:
        return {
            "B": self.B,
            "pairs": [[f.tolist(), r.tolist()] for f, r in self.pairs],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "BagPartition":
        pairs = tuple(
            (np.asarray(f, dtype=np.intp), np.asarray(r, dtype=np.intp)) for f, r in obj["pairs"]
        )
        return cls(pairs)


def make_partition(n: int, B: int, rng_seed: int) -> BagPartition:
    """Shuffle ``range(n)`` into B bags of size floor(n/B) or floor(n/B)+1.

    Extra points go to the earliest bags. Each bag is halved; when the bag
    size is odd the reference half receives the extra point, so that the
    reference set always has at least as many points as the fit set.
    """
    if B < 1:
        raise ValueError(f"bag count must be >= 1, got {B}")
    if n < 4 * B:
        raise ValueError(f"need n >= 4B to give every half >= 2 points (n={n}, B={B})")
    perm = np.random.default_rng(rng_seed).permutation(n)
    base, extra = divmod(n, B)
    pairs = []
    start = 0
    for b in range(B):
        size = base + (1 if b < extra else 0)
        bag = perm[start : start + size]
        start += size
        n_fit = size // 2
        fit = np.sort(bag[:n_fit]).astype(np.intp)
        ref = np.sort(bag[n_fit:]).astype(np.intp)
        pairs.append((fit, ref))
    return BagPartition(tuple(pairs))


def auto_bag_count(n: int) -> int:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n <= 10_000:
        return 1
    if n <= 50_000:
        return 5
    return 10
