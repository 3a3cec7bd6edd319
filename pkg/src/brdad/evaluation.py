"""AUC, density MAE and rank-sum tables across configurations."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Dict, Mapping, Optional, Sequence

import numpy as np
from scipy.stats import rankdata


def auc(scores, labels) -> float:
    """P(score of a random anomaly > score of a random normal), ties count 1/2.

    Mann-Whitney U with midranks, O(n log n).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be 1-D vectors of equal length")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = int((labels == 0).sum())
    if n_pos + n_neg != labels.size:
        raise ValueError("labels must be 0 or 1")
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one anomaly and one normal point")
    ranks = rankdata(scores, method="average")
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def pairwise_auc(scores, labels) -> float:
    """O(n^2) definition; reference for :func:`auc`."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    a = scores[labels == 1][:, None]
    b = scores[labels == 0][None, :]
    if a.size == 0 or b.size == 0:
        raise ValueError("AUC needs at least one anomaly and one normal point")
    return float(((a > b).sum() + 0.5 * (a == b).sum()) / (a.size * b.size))


def mae(estimates, truths) -> float:
    estimates = np.asarray(estimates, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.float64)
    if estimates.shape != truths.shape or estimates.size == 0:
        raise ValueError("estimates and truths must be non-empty and equally long")
    return float(np.mean(np.abs(estimates - truths)))


@dataclass
class MetricReport:
    n: int
    d: int
    B: int
    seed: int
    runtime_ms: float = 0.0
    auc: Optional[float] = None
    mae: Optional[float] = None
    sr: Optional[float] = None
    dataset: Optional[str] = None
    extra: Dict = field(default_factory=dict)

    def __post_init__(self):
        if self.auc is not None and not 0.0 <= self.auc <= 1.0:
            raise ValueError(f"AUC {self.auc} outside [0, 1]")
        for name in ("mae", "sr"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be non-negative, got {v}")

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def rank_table(table: Mapping[str, Mapping[str, Optional[float]]], configs: Optional[Sequence[str]] = None):
    """Rank configs within each dataset (1 = highest AUC, ties averaged) and sum.

    ``table`` maps dataset -> config -> AUC. Returns (per-dataset ranks, rank sums).
    """
    if not table:
        raise ValueError("empty table")
    if configs is None:
        configs = list(next(iter(table.values())).keys())
    per_row = {}
    sums = {c: 0.0 for c in configs}
    for name, row in table.items():
        missing = [c for c in configs if row.get(c) is None]
        if missing:
            raise ValueError(f"dataset {name!r} has no value for {missing}")
        vals = np.array([row[c] for c in configs], dtype=np.float64)
        ranks = rankdata(-vals, method="average")
        per_row[name] = dict(zip(configs, ranks.tolist()))
        for c, r in zip(configs, ranks):
            sums[c] += float(r)
    return per_row, sums
