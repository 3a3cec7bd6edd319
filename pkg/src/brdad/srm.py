"""Surrogate-risk-minimising nearest-neighbour weights and the gamma coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

SQRT_GUARD = 1e-12

# Bernoulli-number coefficients B_2k / (2k (2k-1)) of the Stirling series
_STIRLING = (1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0, 1.0 / 1188.0)
_ASYMPTOTIC_FROM = 20.0


def unit_ball_volume(d: int) -> float:
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    return math.exp(0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d + 1.0))


def _stirling_tail(z):
    inv = 1.0 / z
    inv2 = inv * inv
    acc = np.zeros_like(z)
    for c in reversed(_STIRLING):
        acc = acc * inv2 + c
    return acc * inv


def log_gamma_ratio(x, a: float):
    """log(Gamma(x + a) / Gamma(x)) for x > 0, 0 < a <= 1.

    Avoids the cancellation of subtracting two large lgamma values: small x
    is shifted up by the recurrence, large x uses the Stirling series written
    in terms of log1p(a / x).
    """
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0):
        raise ValueError("log_gamma_ratio needs x > 0")
    if not 0.0 < a <= 1.0:
        raise ValueError("log_gamma_ratio needs 0 < a <= 1")
    shift = np.maximum(np.ceil(_ASYMPTOTIC_FROM - x), 0.0)
    z = x + shift
    out = (
        a * np.log(z)
        + ((z + a - 0.5) * np.log1p(a / z) - a)
        + (_stirling_tail(z + a) - _stirling_tail(z))
    )
    n_shift = int(shift.max()) if shift.size else 0
    for j in range(n_shift):
        active = shift > j
        xj = x + j
        out = out - np.where(active, np.log1p(a / np.where(active, xj, 1.0)), 0.0)
    return out


@dataclass(frozen=True)
class GammaTable:
    s: int
    d: int
    values: np.ndarray

    def __getitem__(self, i: int) -> float:
        """gamma_{s,i} for 1-based i."""
        return float(self.values[i - 1])


def gamma_table(s: int, d: int) -> GammaTable:
    """gamma_{s,i} = E[U^(1/d)] for U ~ Beta(i, s+1-i), i = 1..s."""
    if s < 1 or d < 1:
        raise ValueError(f"need s >= 1 and d >= 1, got s={s}, d={d}")
    a = 1.0 / d
    i = np.arange(1, s + 1, dtype=np.float64)
    values = np.exp(log_gamma_ratio(i, a) - log_gamma_ratio(np.array([s + 1.0]), a)[0])
    values.setflags(write=False)
    return GammaTable(s, d, values)


def gautschi_bounds(s: int, d: int):
    """Strict lower/upper bounds on gamma_{s,i} from Gautschi's inequality."""
    i = np.arange(1, s + 1, dtype=np.float64)
    a = 1.0 / d
    lower = ((i + a - 1.0) / (s + 1.0 + a)) ** a
    upper = ((i + a) / (s + a)) ** a
    return lower, upper


@dataclass(frozen=True)
class WeightVector:
    """Simplex weights over neighbour ranks 1..size, zero beyond ``cutoff``.

    ``weights`` holds only the positive prefix. ``mu`` is the KKT threshold in
    the solver's scaled units and ``exhausted`` is True when the greedy loop
    consumed every supplied rank without meeting its stopping condition.
    """

    weights: np.ndarray
    size: int
    mu: float
    exhausted: bool = False

    @property
    def cutoff(self) -> int:
        return int(self.weights.shape[0])

    def dense(self, length: Optional[int] = None) -> np.ndarray:
        out = np.zeros(self.size if length is None else length)
        out[: self.cutoff] = self.weights
        return out


def srm_core(r) -> WeightVector:
    """Greedy solver for min ||w||_2 + <w, r> over the probability simplex.

    ``r`` must be sorted non-decreasing and non-negative. Ranks are added while
    the running threshold exceeds the next r; the threshold for the first k
    ranks solves sum_{j<=k} (mu - r_j)^2 = 1.
    """
    r = np.asarray(r, dtype=np.float64)
    if r.ndim != 1 or r.size == 0:
        raise ValueError("r must be a non-empty vector")
    if not np.all(np.isfinite(r)):
        raise ValueError("r must be finite")
    if r[0] < 0:
        raise ValueError("r must be non-negative")
    if np.any(np.diff(r) < 0):
        raise ValueError("r must be sorted non-decreasing")
    s = r.size
    mu = float(r[0]) + 1.0
    k = 0
    mean = 0.0
    m2 = 0.0  # sum of squared deviations from the running mean
    while k < s and mu > r[k]:
        x = float(r[k])
        k += 1
        delta = x - mean
        mean += delta / k
        m2 += delta * (x - mean)
        # k + (sum r)^2 - k sum r^2 == k (1 - m2)
        arg = k * (1.0 - m2)
        if arg < 0.0:
            if arg < -SQRT_GUARD * max(1.0, k):
                raise FloatingPointError(f"negative discriminant {arg} at k={k}")
            arg = 0.0
        mu = mean + math.sqrt(arg) / k
    gaps = mu - r
    positive = gaps > 0
    cut = int(np.count_nonzero(positive))
    w = gaps[:cut] / gaps[:cut].sum()
    w.setflags(write=False)
    return WeightVector(w, s, mu, exhausted=(k == s))


def regularizer_scale(s: int, B: int) -> float:
    """sqrt(log(s) / B); natural log."""
    return math.sqrt(math.log(s) / B)


def solve_srm(profile, B: int, s: Optional[int] = None) -> WeightVector:
    """Weights minimising sqrt(log s / B) ||w|| + <w, profile> over the simplex.

    ``profile`` is the leave-one-out average i-distance vector of a fit set
    of size ``s`` (default ``len(profile) + 1``); it may be a prefix of the
    full profile, in which case ``WeightVector.exhausted`` tells the caller
    whether more ranks are needed.
    """
    profile = np.asarray(profile, dtype=np.float64)
    if s is None:
        s = profile.size + 1
    if s < 2:
        raise ValueError(f"fit set must contain at least 2 points, got s={s}")
    if B < 1:
        raise ValueError(f"B must be >= 1, got {B}")
    if profile.size == 0 or profile.size > s - 1:
        raise ValueError(f"profile length {profile.size} incompatible with s={s}")
    return srm_core(profile / regularizer_scale(s, B))


def srm_objective(weights, profile, B: int, s: int) -> float:
    w = np.asarray(weights, dtype=np.float64)
    profile = np.asarray(profile, dtype=np.float64)
    if w.size > profile.size:
        raise ValueError("weights longer than profile")
    return regularizer_scale(s, B) * float(np.linalg.norm(w)) + float(w @ profile[: w.size])


def surrogate_risk(
    weights: Sequence[Union[WeightVector, np.ndarray]],
    profiles: Sequence[np.ndarray],
    B: int,
    s: Union[int, Sequence[int]],
) -> float:
    """Bag-averaged surrogate risk of a set of per-bag weight vectors."""
    if len(weights) != B or len(profiles) != B:
        raise ValueError(f"expected {B} weight vectors and profiles, got {len(weights)}, {len(profiles)}")
    sizes = [s] * B if np.isscalar(s) else list(s)
    if len(sizes) != B:
        raise ValueError("per-bag s list has wrong length")
    total = 0.0
    for w, prof, sb in zip(weights, profiles, sizes):
        wv = w.weights if isinstance(w, WeightVector) else np.asarray(w, dtype=np.float64)
        if wv.size > len(prof):
            wv_tail = wv[len(prof):]
            if np.any(wv_tail != 0):
                raise ValueError("weight vector has mass beyond the supplied profile")
            wv = wv[: len(prof)]
        total += srm_objective(wv, prof, B, sb)
    return total / B
