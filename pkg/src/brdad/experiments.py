"""SR/MAE convergence study and the B-sweep benchmark."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .data import LabeledDataset
from .estimator import brdad, brdde_density, fit
from .evaluation import MetricReport, auc, mae, rank_table
from .synthetic import MixtureSpec, mixture_density, sample_mixture, standard_normal

log = logging.getLogger(__name__)

DEFAULT_SIZES = (300, 1000, 3000, 5000, 10000)


def convergence_run(spec: MixtureSpec, n: int, seed: int, n_eval: int = 10_000,
                    threads: Optional[int] = 1) -> MetricReport:
    """Fit BRDDE with B=1 on n draws; SR of the fitted weights and MAE on fresh draws."""
    t0 = time.perf_counter()
    train = sample_mixture(spec, n, seed)
    model = fit(train, B=1, seed=seed, scale=False, threads=threads)
    evaluation = sample_mixture(spec, n_eval, seed + 1_000_003)
    est = brdde_density(model, evaluation, threads=threads)
    err = mae(est, mixture_density(spec, evaluation.points))
    return MetricReport(
        n=n, d=spec.d, B=1, seed=seed,
        runtime_ms=1000.0 * (time.perf_counter() - t0),
        mae=err, sr=model.surrogate_risk(),
        extra={"cutoff": model.cutoffs[0]},
    )


@dataclass
class ConvergenceSummary:
    sizes: List[int]
    median_sr: List[float]
    median_mae: List[float]
    reports: List[MetricReport]

    @property
    def ratio(self) -> List[float]:
        return [s / m for s, m in zip(self.median_sr, self.median_mae)]


def convergence_study(spec: Optional[MixtureSpec] = None, sizes: Sequence[int] = DEFAULT_SIZES,
                      reps: int = 20, seed: int = 0, n_eval: int = 10_000,
                      threads: Optional[int] = 1) -> ConvergenceSummary:
    spec = spec or standard_normal(1)
    reports = []
    med_sr, med_mae = [], []
    for n in sizes:
        batch = [convergence_run(spec, n, seed + 7919 * r + n, n_eval, threads) for r in range(reps)]
        reports.extend(batch)
        med_sr.append(float(np.median([r.sr for r in batch])))
        med_mae.append(float(np.median([r.mae for r in batch])))
        log.info("n=%d median SR=%.5f median MAE=%.5f", n, med_sr[-1], med_mae[-1])
    return ConvergenceSummary(list(sizes), med_sr, med_mae, reports)


def bench(datasets: Dict[str, LabeledDataset], bag_counts: Sequence[int], reps: int = 10,
          seed: int = 0, scale: bool = True, threads: Optional[int] = 1):
    """Mean AUC over ``reps`` seeds for each (dataset, B); returns (table, rank sums, reports)."""
    table: Dict[str, Dict[str, float]] = {}
    reports = []
    for name, ld in datasets.items():
        m = int(ld.labels.sum())
        row = {}
        for B in bag_counts:
            aucs = []
            for r in range(reps):
                t0 = time.perf_counter()
                _, res = brdad(ld.data, m, B=B, seed=seed + r, scale=scale, threads=threads)
                a = auc(res.scores, ld.labels)
                aucs.append(a)
                reports.append(MetricReport(n=ld.n, d=ld.d, B=B, seed=seed + r, auc=a, dataset=name,
                                            runtime_ms=1000.0 * (time.perf_counter() - t0)))
            row[f"B={B}"] = float(np.mean(aucs))
        table[name] = row
    _, sums = rank_table(table, [f"B={B}" for B in bag_counts])
    return table, sums, reports
