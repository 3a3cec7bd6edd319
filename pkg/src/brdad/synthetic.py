"""Isotropic Gaussian mixtures with exact densities and a Huber contamination sampler."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .data import Dataset, LabeledDataset


@dataclass(frozen=True)
class MixtureSpec:
    """Components are (weight, mean vector, isotropic variance)."""

    components: Tuple[Tuple[float, Tuple[float, ...], float], ...]

    def __post_init__(self):
        comps = []
        d = None
        for w, mean, var in self.components:
            mean = tuple(float(v) for v in np.atleast_1d(mean))
            if d is None:
                d = len(mean)
            elif len(mean) != d:
                raise ValueError("component means must share one dimension")
            if w <= 0 or var <= 0:
                raise ValueError("weights and variances must be positive")
            comps.append((float(w), mean, float(var)))
        if not comps:
            raise ValueError("mixture needs at least one component")
        if abs(sum(c[0] for c in comps) - 1.0) > 1e-12:
            raise ValueError("component weights must sum to 1")
        object.__setattr__(self, "components", tuple(comps))

    @property
    def d(self) -> int:
        return len(self.components[0][1])

    @property
    def weights(self) -> np.ndarray:
        return np.array([c[0] for c in self.components])

    @property
    def means(self) -> np.ndarray:
        return np.array([c[1] for c in self.components])

    @property
    def variances(self) -> np.ndarray:
        return np.array([c[2] for c in self.components])


def standard_normal(d: int = 1) -> MixtureSpec:
    return MixtureSpec(((1.0, (0.0,) * d, 1.0),))


def two_bump_1d() -> MixtureSpec:
    """0.5 N(0.3, 0.01) + 0.5 N(0.7, 0.0025)."""
    return MixtureSpec(((0.5, (0.3,), 0.01), (0.5, (0.7,), 0.0025)))


def two_bump(d: int) -> MixtureSpec:
    """0.4 N(0.3 * 1_d, 0.01 I) + 0.6 N(0.7 * 1_d, 0.0025 I)."""
    return MixtureSpec(((0.4, (0.3,) * d, 0.01), (0.6, (0.7,) * d, 0.0025)))


def _draw(spec: MixtureSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    comp = rng.choice(len(spec.components), size=n, p=spec.weights)
    noise = rng.standard_normal((n, spec.d))
    return spec.means[comp] + np.sqrt(spec.variances[comp])[:, None] * noise


def sample_mixture(spec: MixtureSpec, n: int, seed: int) -> Dataset:
    return Dataset(_draw(spec, n, np.random.default_rng(seed)))


def mixture_density(spec: MixtureSpec, points) -> np.ndarray:
    x = np.asarray(points, dtype=np.float64).reshape(-1, spec.d)
    out = np.zeros(x.shape[0])
    for w, mean, var in spec.components:
        sq = np.sum((x - np.asarray(mean)) ** 2, axis=1)
        out += w * (2.0 * np.pi * var) ** (-spec.d / 2.0) * np.exp(-sq / (2.0 * var))
    return out


@dataclass(frozen=True)
class HuberSpec:
    """(1 - contamination) * normal mixture truncated to [0,1]^d + contamination * U[0,1]^d."""

    contamination: float
    normal: MixtureSpec

    def __post_init__(self):
        if not 0.0 < self.contamination < 1.0:
            raise ValueError("contamination must lie strictly between 0 and 1")

    @property
    def d(self) -> int:
        return self.normal.d


def _draw_truncated(spec: MixtureSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    out = np.empty((0, spec.d))
    while out.shape[0] < n:
        need = n - out.shape[0]
        batch = _draw(spec, max(need + need // 10 + 16, 64), rng)
        keep = np.all((batch >= 0.0) & (batch <= 1.0), axis=1)
        out = np.vstack([out, batch[keep][:need]])
    return out


def sample_huber(spec: HuberSpec, n: int, seed: int) -> LabeledDataset:
    rng = np.random.default_rng(seed)
    labels = (rng.random(n) < spec.contamination).astype(np.int8)
    n_anom = int(labels.sum())
    pts = np.empty((n, spec.d))
    pts[labels == 1] = rng.random((n_anom, spec.d))
    pts[labels == 0] = _draw_truncated(spec.normal, n - n_anom, rng)
    return LabeledDataset(Dataset(pts), labels)
