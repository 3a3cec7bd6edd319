"""Fitted bagged model, regularized k-distance scoring and density estimates."""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .data import BagPartition, Dataset, ScaleTransform, auto_bag_count, fit_scale, make_partition
from .neighbors import NeighborIndex, average_i_distances
from .srm import WeightVector, gamma_table, solve_srm, surrogate_risk, unit_ball_volume

log = logging.getLogger(__name__)

MODEL_FORMAT = "brdad-model"
MODEL_VERSION = 1
DISTANCE_FLOOR = 1e-12
_INITIAL_RANKS = 64


@dataclass(frozen=True)
class Bag:
    weights: WeightVector
    index: NeighborIndex
    ref_indices: np.ndarray
    fit_indices: np.ndarray
    s_fit: int
    profile: np.ndarray  # prefix of the fit set's average i-distances

    @property
    def s(self) -> int:
        return self.index.s

    @cached_property
    def gamma_sum(self) -> float:
        g = gamma_table(self.s, self.index.d).values[: self.weights.cutoff]
        return float(self.weights.weights @ g)


@dataclass(frozen=True)
class BagModel:
    bags: tuple
    d: int
    scale: Optional[ScaleTransform] = None
    n_train: Optional[int] = None
    seed: Optional[int] = None

    @property
    def B(self) -> int:
        return len(self.bags)

    @property
    def gamma_mix(self) -> float:
        return sum(b.gamma_sum for b in self.bags) / self.B

    @property
    def cutoffs(self) -> list:
        return [b.weights.cutoff for b in self.bags]

    def surrogate_risk(self) -> float:
        return surrogate_risk(
            [b.weights for b in self.bags],
            [b.profile for b in self.bags],
            self.B,
            [b.s_fit for b in self.bags],
        )

    def transform(self, data) -> np.ndarray:
        pts = data.points if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, self.d)
        if pts.shape[1] != self.d:
            raise ValueError(f"model expects d={self.d}, got d={pts.shape[1]}")
        if self.scale is not None:
            pts = self.scale.apply(pts).points
        return np.ascontiguousarray(pts, dtype=np.float64)

    # serialisation ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "d": self.d,
            "B": self.B,
            "n_train": self.n_train,
            "seed": self.seed,
            "scale": None if self.scale is None else self.scale.to_dict(),
            "gamma_mix": self.gamma_mix,
            "bags": [
                {
                    "s": b.s,
                    "s_fit": b.s_fit,
                    "cutoff": b.weights.cutoff,
                    "weights": b.weights.weights.tolist(),
                    "mu": b.weights.mu,
                    "profile": b.profile.tolist(),
                    "reference_points": b.index.points.tolist(),
                    "reference_indices": b.ref_indices.tolist(),
                    "fit_indices": b.fit_indices.tolist(),
                }
                for b in self.bags
            ],
        }

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def from_dict(cls, obj: dict) -> "BagModel":
        if obj.get("format") != MODEL_FORMAT:
            raise ValueError("not a brdad model document")
        if int(obj.get("version", -1)) != MODEL_VERSION:
            raise ValueError(f"unsupported model version {obj.get('version')}")
        bags = []
        for b in obj["bags"]:
            w = np.asarray(b["weights"], dtype=np.float64)
            w.setflags(write=False)
            profile = np.asarray(b["profile"], dtype=np.float64)
            bags.append(
                Bag(
                    weights=WeightVector(w, profile.size, float(b["mu"])),
                    index=NeighborIndex(np.asarray(b["reference_points"], dtype=np.float64).reshape(-1, obj["d"])),
                    ref_indices=np.asarray(b["reference_indices"], dtype=np.intp),
                    fit_indices=np.asarray(b["fit_indices"], dtype=np.intp),
                    s_fit=int(b["s_fit"]),
                    profile=profile,
                )
            )
        scale = None if obj["scale"] is None else ScaleTransform.from_dict(obj["scale"])
        return cls(tuple(bags), int(obj["d"]), scale, obj.get("n_train"), obj.get("seed"))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "BagModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _fit_bag(pts, fit_idx, ref_idx, B, threads):
    fit_pts = pts[fit_idx]
    s_fit = fit_pts.shape[0]
    fit_index = NeighborIndex(fit_pts)
    ranks = min(_INITIAL_RANKS, s_fit - 1)
    while True:
        profile = average_i_distances(fit_pts, max_rank=ranks, index=fit_index, threads=threads)
        weights = solve_srm(profile, B, s=s_fit)
        if not weights.exhausted or ranks == s_fit - 1:
            break
        ranks = min(2 * ranks, s_fit - 1)
    return Bag(
        weights=weights,
        index=NeighborIndex(pts[ref_idx]),
        ref_indices=np.asarray(ref_idx, dtype=np.intp),
        fit_indices=np.asarray(fit_idx, dtype=np.intp),
        s_fit=s_fit,
        profile=profile,
    )


def resolve_threads(threads: Optional[int]) -> int:
    if threads is None:
        return os.cpu_count() or 1
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return threads


def fit(
    data: Union[Dataset, np.ndarray],
    B: Union[int, str] = "auto",
    seed: int = 0,
    scale: bool = True,
    threads: Optional[int] = 1,
    partition: Optional[BagPartition] = None,
) -> BagModel:
    """Fit per-bag SRM weights on the fit halves and index the reference halves."""
    if not isinstance(data, Dataset):
        data = Dataset(data)
    threads = resolve_threads(threads)
    transform = fit_scale(data) if scale else None
    pts = transform.apply(data).points if transform is not None else data.points
    pts = np.ascontiguousarray(pts)
    if partition is None:
        nb = auto_bag_count(data.n) if B == "auto" else int(B)
        partition = make_partition(data.n, nb, seed)
    elif B != "auto" and int(B) != partition.B:
        raise ValueError(f"B={B} disagrees with supplied partition of {partition.B} bags")
    nb = partition.B
    log.debug("fitting n=%d d=%d B=%d", data.n, data.d, nb)
    if threads > 1 and nb > 1:
        with ThreadPoolExecutor(max_workers=min(threads, nb)) as pool:
            futures = [pool.submit(_fit_bag, pts, f, r, nb, 1) for f, r in partition.pairs]
            bags = [fut.result() for fut in futures]
    else:
        bags = [_fit_bag(pts, f, r, nb, threads) for f, r in partition.pairs]
    return BagModel(tuple(bags), data.d, transform, data.n, seed)


def _exclusions(bag: Bag, n_queries: int, in_sample: bool) -> Optional[np.ndarray]:
    if not in_sample:
        return None
    pos = np.full(n_queries, -1, dtype=np.intp)
    inside = bag.ref_indices < n_queries
    pos[bag.ref_indices[inside]] = np.nonzero(inside)[0]
    return pos


def _check_in_sample(model: BagModel, n: int, in_sample: bool):
    if in_sample and model.n_train is not None and n != model.n_train:
        raise ValueError(f"in-sample scoring needs the {model.n_train} training rows, got {n}")


def regularized_k_distances(model: BagModel, b: int, data, in_sample: bool = False,
                            threads: int = 1) -> np.ndarray:
    """Sum_i w_i * (i-th reference distance) for one bag, per query row.

    With ``in_sample`` the queries are the training rows and a row that is a
    member of the bag's reference set is excluded from its own neighbours.
    """
    pts = model.transform(data)
    _check_in_sample(model, pts.shape[0], in_sample)
    bag = model.bags[b]
    excl = _exclusions(bag, pts.shape[0], in_sample)
    return bag.index.weighted_k_distance(pts, bag.weights.weights, exclude=excl, threads=threads)


def regularized_k_distance(model: BagModel, b: int, query, exclude: Optional[int] = None) -> float:
    """Single-point version; ``exclude`` is a position in the bag's reference set."""
    pts = model.transform(np.asarray(query, dtype=np.float64).reshape(1, model.d))
    bag = model.bags[b]
    return float(bag.index.weighted_k_distance(pts, bag.weights.weights,
                                               exclude=-1 if exclude is None else exclude)[0])


def bagged_distances(model: BagModel, data, in_sample: bool = False,
                     threads: Optional[int] = 1) -> np.ndarray:
    threads = resolve_threads(threads)
    pts = model.transform(data)
    _check_in_sample(model, pts.shape[0], in_sample)

    def one(bag, t):
        excl = _exclusions(bag, pts.shape[0], in_sample)
        return bag.index.weighted_k_distance(pts, bag.weights.weights, exclude=excl, threads=t)

    if threads > 1 and model.B > 1:
        with ThreadPoolExecutor(max_workers=min(threads, model.B)) as pool:
            parts = list(pool.map(lambda bag: one(bag, 1), model.bags))
    else:
        parts = [one(bag, threads) for bag in model.bags]
    acc = np.zeros(pts.shape[0])
    for p in parts:
        acc += p
    return acc / model.B


def bagged_distance(model: BagModel, query) -> float:
    return float(bagged_distances(model, np.asarray(query, dtype=np.float64).reshape(1, model.d))[0])


def density_from_distance(distance, gamma_mix: float, d: int):
    r = np.maximum(np.asarray(distance, dtype=np.float64), DISTANCE_FLOOR)
    return (gamma_mix / r) ** d / unit_ball_volume(d)


def brdde_density(model: BagModel, data, in_sample: bool = False, threads: Optional[int] = 1):
    """Density estimate in the model's (scaled) coordinates."""
    return density_from_distance(bagged_distances(model, data, in_sample, threads), model.gamma_mix, model.d)


@dataclass(frozen=True)
class AnomalyScores:
    scores: np.ndarray
    order: np.ndarray  # descending score, ties by ascending row index
    flags: Optional[np.ndarray] = None
    m: Optional[int] = None

    @property
    def anomalies(self) -> np.ndarray:
        return self.order[: self.m] if self.m is not None else self.order[:0]


def _rank(scores: np.ndarray, m: Optional[int] = None) -> AnomalyScores:
    n = scores.shape[0]
    order = np.lexsort((np.arange(n), -scores))
    flags = None
    if m is not None:
        if not 0 <= m <= n:
            raise ValueError(f"m={m} must lie in [0, {n}]")
        flags = np.zeros(n, dtype=bool)
        flags[order[:m]] = True
    return AnomalyScores(scores, order, flags, m)


def score(model: BagModel, data, in_sample: bool = False, threads: Optional[int] = 1) -> AnomalyScores:
    return _rank(bagged_distances(model, data, in_sample, threads))


def detect(model: BagModel, data, m: int, in_sample: bool = False,
           threads: Optional[int] = 1) -> AnomalyScores:
    n = data.n if isinstance(data, Dataset) else np.asarray(data).reshape(-1, model.d).shape[0]
    if not 0 <= m <= n:
        raise ValueError(f"m={m} must lie in [0, {n}]")
    return _rank(bagged_distances(model, data, in_sample, threads), m)


def brdad(data, m: int, B: Union[int, str] = "auto", seed: int = 0, scale: bool = True,
          threads: Optional[int] = 1):
    """Fit on ``data`` and flag its m points with the largest bagged regularized k-distance."""
    model = fit(data, B=B, seed=seed, scale=scale, threads=threads)
    return model, detect(model, data, m, in_sample=True, threads=threads)


def score_with_prior(model: BagModel, data, anomaly_density: Callable, in_sample: bool = False,
                     threads: Optional[int] = 1) -> AnomalyScores:
    """Rank by f1(x)^(1/d) * bagged distance, for a known anomaly density f1."""
    raw = data.points if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64).reshape(-1, model.d)
    f1 = np.array([float(anomaly_density(x)) for x in raw])
    if np.any(~(f1 > 0)) or not np.all(np.isfinite(f1)):
        raise ValueError("anomaly density must be strictly positive and finite at every point")
    return _rank(f1 ** (1.0 / model.d) * bagged_distances(model, data, in_sample, threads))


def _check_simplex(w: np.ndarray, tol: float = 1e-8):
    if np.any(w < 0) or abs(float(w.sum()) - 1.0) > tol:
        raise ValueError("weights must be non-negative and sum to 1")


def bwdde_density(weights: Sequence, references: Sequence, queries, exclude=None) -> np.ndarray:
    """Bagged weighted k-distance density with caller-chosen weights.

    ``weights[b]`` weights the neighbour ranks of bag b, ``references[b]`` is
    that bag's reference point set. The gamma coefficients use each bag's own
    reference size.
    """
    if len(weights) != len(references) or len(weights) == 0:
        raise ValueError("need one weight vector per reference set")
    q = np.asarray(queries, dtype=np.float64)
    B = len(weights)
    acc = None
    gsum = 0.0
    d = None
    for w, refs in zip(weights, references):
        w = np.trim_zeros(np.asarray(w, dtype=np.float64), "b")
        _check_simplex(w)
        index = refs if isinstance(refs, NeighborIndex) else NeighborIndex(refs)
        d = index.d
        qq = q.reshape(-1, d)
        part = index.weighted_k_distance(qq, w, exclude=exclude)
        acc = part if acc is None else acc + part
        gsum += float(w @ gamma_table(index.s, d).values[: w.size])
    return density_from_distance(acc / B, gsum / B, d)


def uniform_weights(k: int) -> np.ndarray:
    return np.full(k, 1.0 / k)


def beta_weights(k: int, alpha: float) -> np.ndarray:
    """w_i = nu(((i-1)/k, i/k]) for nu = Beta(alpha, 1), whose CDF is t^alpha."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    edges = (np.arange(k + 1) / k) ** alpha
    return np.diff(edges)
