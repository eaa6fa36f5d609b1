"""Stability harness for utilization scores: how the per-unit score
distribution tightens as the pruning-set size grows, plus scoring
wall-time per size. Convergence is reported as dispersion shrinkage and
proximity to a reference value, never as an exact limit.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .diagnostics import utilization_scores
from .dumpio import ActivationDump, activation_dump
from .mininet import Dataset, MiniNet, forward

__all__ = [
    "ConvergenceReport",
    "resample_convergence",
    "run_convergence",
    "convergence_report_to_json",
    "write_convergence_report",
    "write_convergence_csv",
]


@dataclass(frozen=True)
class ConvergenceReport:
    layer_id: int
    sizes: list
    resamples: int
    seed: int
    unit_means: np.ndarray  # [len(sizes), J] mean score over resamples
    unit_sds: np.ndarray  # [len(sizes), J] sd over resamples
    wall_times: list  # seconds spent scoring, per size


def _stratified_subset(labels: np.ndarray, size: int, rng) -> np.ndarray:
    """Per-class proportional allocation (largest remainder), each class
    keeping >= 2 samples; row indices into the dump."""
    classes, counts = np.unique(labels, return_counts=True)
    total = labels.shape[0]
    if size > total:
        raise ValueError(f"resample size {size} exceeds available {total}")
    quotas = size * counts / total
    base = np.floor(quotas).astype(int)
    short = size - base.sum()
    if short > 0:
        order = np.argsort(-(quotas - base), kind="stable")
        base[order[:short]] += 1
    if base.min() < 2:
        raise ValueError(
            f"stratified resample of size {size} leaves a class below 2 samples"
        )
    picks = [
        rng.choice(np.nonzero(labels == c)[0], size=k, replace=False)
        for c, k in zip(classes, base)
    ]
    return np.sort(np.concatenate(picks))


def resample_convergence(
    acts: ActivationDump,
    sizes,
    resamples: int,
    seed: int,
    num_projections: int = 32,
) -> ConvergenceReport:
    """For each size n, draw `resamples` class-stratified row subsets of the
    activation dump and rescore; forward passes are deterministic, so
    row-resampling equals rerunning the model on those samples."""
    sizes = [int(s) for s in sizes]
    if sizes != sorted(set(sizes)):
        raise ValueError(f"sizes must be strictly increasing, got {sizes}")
    if resamples < 2:
        raise ValueError(f"need >= 2 resamples for a dispersion, got {resamples}")
    labels = acts.labels
    j_count = acts.header.unit_count
    unit_means = np.zeros((len(sizes), j_count))
    unit_sds = np.zeros((len(sizes), j_count))
    wall_times = []
    for si, size in enumerate(sizes):
        scores = np.zeros((resamples, j_count))
        elapsed = 0.0
        for r in range(resamples):
            rng = np.random.default_rng([int(seed), si, r])
            rows = _stratified_subset(labels, size, rng)
            sub = activation_dump(acts.header.layer_id, acts.data[rows], labels[rows])
            start = time.perf_counter()
            scores[r] = utilization_scores(
                sub, num_projections=num_projections, seed=seed
            )
            elapsed += time.perf_counter() - start
        unit_means[si] = scores.mean(axis=0)
        unit_sds[si] = scores.std(axis=0, ddof=1)
        wall_times.append(elapsed)
    return ConvergenceReport(
        layer_id=acts.header.layer_id,
        sizes=sizes,
        resamples=int(resamples),
        seed=int(seed),
        unit_means=unit_means,
        unit_sds=unit_sds,
        wall_times=wall_times,
    )


def run_convergence(
    net: MiniNet,
    data: Dataset,
    sizes,
    resamples: int,
    seed: int,
    layer_id: int = 1,
    num_projections: int = 32,
) -> ConvergenceReport:
    """Capture the designated hidden layer's activations on the full
    pruning split once, then rescore stratified subsets."""
    if not (1 <= layer_id <= net.num_hidden):
        raise ValueError(f"layer_id {layer_id} outside 1..{net.num_hidden}")
    if max(sizes) > len(data):
        raise ValueError(f"largest size {max(sizes)} exceeds split of {len(data)}")
    _, hidden = forward(net, data.features)
    acts = activation_dump(layer_id, hidden[layer_id - 1], data.labels.astype(np.uint32))
    return resample_convergence(
        acts, sizes, resamples, seed, num_projections=num_projections
    )


def convergence_report_to_json(report: ConvergenceReport, include_timing: bool = True) -> str:
    payload = {
        "layer": report.layer_id,
        "sizes": list(report.sizes),
        "resamples": report.resamples,
        "seed": report.seed,
        "unit_means": [[float(v) for v in row] for row in report.unit_means],
        "unit_sds": [[float(v) for v in row] for row in report.unit_sds],
    }
    if include_timing:
        payload["wall_time_sec"] = [float(t) for t in report.wall_times]
    return json.dumps(payload)


def write_convergence_report(path, report: ConvergenceReport, include_timing: bool = True) -> None:
    Path(path).write_text(convergence_report_to_json(report, include_timing) + "\n")


def write_convergence_csv(path, report: ConvergenceReport, include_timing: bool = True) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        header = ["size", "unit", "mean_score", "sd_score"]
        if include_timing:
            header.append("wall_time_sec")
        writer.writerow(header)
        for si, size in enumerate(report.sizes):
            for j in range(report.unit_means.shape[1]):
                row = [size, j, report.unit_means[si, j], report.unit_sds[si, j]]
                if include_timing:
                    row.append(report.wall_times[si])
                writer.writerow(row)
