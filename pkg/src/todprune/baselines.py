"""Comparator pruning strategies: L1 row-norm ranking, random removal at a
uniform per-layer rate, and random removal with layer-wise counts taken
from the tolerance-guided plan (same budget, random membership).

Plans produced here carry null tod fields where the statistic does not
apply; removal counts and pruning rates follow the same accounting as the
planner. Lottery-ticket style rewinding is deliberately absent: it needs
saved initializations and full retraining, so the comparison table leaves
that column out rather than faking it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import planner, surgery
from .diagnostics import ScoreReport
from .errors import ContractError
from .mininet import MiniNet, SplitDataset, evaluate, finetune
from .planner import LayerPlan, PruningPlan

__all__ = [
    "BaselineSpec",
    "l1_plan",
    "random_uniform_plan",
    "random_tod_plan",
    "match_uniform_rate",
    "run_comparison",
    "write_comparison_csv",
    "summarize_comparison",
]

_STREAM_BASELINES = 5
# substreams per method so equal removal counts cannot collide on draws
_SUBSTREAM_UNIFORM = 0
_SUBSTREAM_TOD = 1


@dataclass(frozen=True)
class BaselineSpec:
    method: str  # fair | l1 | random_uniform | random_tod
    rate: Optional[float] = None  # l1, random_uniform
    alpha: Optional[float] = None  # fair, random_tod

    def __post_init__(self):
        if self.method in ("l1", "random_uniform"):
            if self.rate is None or self.alpha is not None:
                raise ValueError(f"{self.method} takes rate only")
        elif self.method in ("fair", "random_tod"):
            if self.alpha is None or self.rate is not None:
                raise ValueError(f"{self.method} takes alpha only")
        else:
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def knob(self) -> float:
        return self.rate if self.rate is not None else self.alpha


def _check_rate(rate: float) -> float:
    rate = float(rate)
    if not (0.0 <= rate < 1.0):
        raise ValueError(f"pruning rate must lie in [0, 1), got {rate}")
    return rate


def _assemble(net: MiniNet, removals: dict, tod_level=None) -> PruningPlan:
    layers = []
    counts = []
    for layer_id in range(1, net.num_hidden + 1):
        remove = tuple(sorted(int(j) for j in removals.get(layer_id, ())))
        layers.append(
            LayerPlan(
                layer_id=layer_id,
                unit_count=net.sizes[layer_id],
                m_hat=len(remove),
                remove=remove,
                achieved_tod=None,
            )
        )
        counts.append(len(remove))
    rate = planner.pruning_rate_for_removals(net.sizes, counts)
    return PruningPlan(tod_level=tod_level, layers=layers, pruning_rate=rate)


def l1_plan(net: MiniNet, rate: float) -> PruningPlan:
    """Per hidden layer, remove the floor(rate*J) units with the smallest
    L1 weight-row norm (bias excluded); ties go to the lower index."""
    rate = _check_rate(rate)
    removals = {}
    for layer_id in range(1, net.num_hidden + 1):
        j_count = net.sizes[layer_id]
        k = int(rate * j_count)
        norms = np.abs(net.weights[layer_id - 1]).sum(axis=1)
        order = np.argsort(norms, kind="stable")
        removals[layer_id] = order[:k]
    return _assemble(net, removals)


def random_uniform_plan(net: MiniNet, rate: float, seed: int) -> PruningPlan:
    """floor(rate*J) distinct uniformly-drawn units per hidden layer."""
    rate = _check_rate(rate)
    rng = np.random.default_rng([int(seed), _STREAM_BASELINES, _SUBSTREAM_UNIFORM])
    removals = {}
    for layer_id in range(1, net.num_hidden + 1):
        j_count = net.sizes[layer_id]
        k = int(rate * j_count)
        removals[layer_id] = rng.choice(j_count, size=k, replace=False)
    return _assemble(net, removals)


def random_tod_plan(
    report: ScoreReport, alpha: float, seed: int, layer_sizes: Sequence[int]
) -> PruningPlan:
    """Per-layer removal counts copied from the tolerance-guided plan at the
    same alpha, membership drawn uniformly at random instead of by score."""
    guided = planner.build_plan(report, alpha, layer_sizes)
    rng = np.random.default_rng([int(seed), _STREAM_BASELINES, _SUBSTREAM_TOD])
    layers = []
    counts = []
    for lp in guided.layers:
        picked = rng.choice(lp.unit_count, size=len(lp.remove), replace=False)
        layers.append(
            LayerPlan(
                layer_id=lp.layer_id,
                unit_count=lp.unit_count,
                m_hat=lp.m_hat,
                remove=tuple(sorted(int(j) for j in picked)),
                achieved_tod=None,
            )
        )
        counts.append(len(lp.remove))
    rate = planner.pruning_rate_for_removals(layer_sizes, counts)
    return PruningPlan(tod_level=float(alpha), layers=layers, pruning_rate=rate)


def match_uniform_rate(layer_sizes: Sequence[int], target_pr: float, steps: int = 4000) -> float:
    """Uniform per-layer rate whose global pruning rate lands closest to
    target_pr; global PR moves in floor(rate*J) jumps, so this scans the
    achievable grid."""
    sizes = [int(s) for s in layer_sizes]
    hidden = sizes[1:-1]
    best_rate, best_gap = 0.0, float("inf")
    for i in range(steps):
        rate = i / steps
        removed = [min(int(rate * j), j - 1) for j in hidden]
        pr = planner.pruning_rate_for_removals(sizes, removed)
        gap = abs(pr - target_pr)
        if gap < best_gap:
            best_rate, best_gap = rate, gap
    return best_rate


def _plan_for(
    spec: BaselineSpec,
    net: MiniNet,
    report: Optional[ScoreReport],
    trial_seed: int,
) -> PruningPlan:
    if spec.method == "l1":
        return l1_plan(net, spec.rate)
    if spec.method == "random_uniform":
        return random_uniform_plan(net, spec.rate, trial_seed)
    if report is None:
        raise ContractError(f"method {spec.method} needs a score report")
    if spec.method == "fair":
        return planner.build_plan(report, spec.alpha, net.sizes)
    return random_tod_plan(report, spec.alpha, trial_seed, net.sizes)


def run_comparison(
    net: MiniNet,
    data: SplitDataset,
    specs: Sequence[BaselineSpec],
    trials: int,
    seed: int = 0,
    report: Optional[ScoreReport] = None,
    ft_epochs: int = 10,
    lr: float = 0.05,
    batch_size: int = 32,
) -> list:
    """One row per (spec, trial): prune, measure one-shot accuracy, then
    fine-tune and measure again. Each trial's RNG stream is derived from
    (seed, trial), so trial order cannot change results."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    rows = []
    for spec in specs:
        for trial in range(trials):
            trial_seed = int(
                np.random.default_rng([int(seed), _STREAM_BASELINES, trial]).integers(2**63)
            )
            plan = _plan_for(spec, net, report, trial_seed)
            pruned, surg = surgery.apply(net, plan)
            os_acc, _ = evaluate(pruned, data.test)
            tuned = finetune(pruned, data.train, epochs=ft_epochs, lr=lr, batch_size=batch_size)
            ft_acc, _ = evaluate(tuned, data.test)
            rows.append(
                {
                    "method": spec.method,
                    "rate_or_alpha": spec.knob,
                    "trial": trial,
                    "pr": surg.realized_rate,
                    "os_acc": os_acc,
                    "ft10_acc": ft_acc,
                }
            )
    return rows


def write_comparison_csv(path, rows) -> None:
    fields = ["method", "rate_or_alpha", "trial", "pr", "os_acc", "ft10_acc"]
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def summarize_comparison(rows) -> list:
    """Mean and sd of both accuracies per (method, knob) group."""
    groups = {}
    for row in rows:
        groups.setdefault((row["method"], row["rate_or_alpha"]), []).append(row)
    out = []
    for (method, knob), members in groups.items():
        os_accs = np.array([r["os_acc"] for r in members])
        ft_accs = np.array([r["ft10_acc"] for r in members])
        out.append(
            {
                "method": method,
                "rate_or_alpha": knob,
                "trials": len(members),
                "pr_mean": float(np.mean([r["pr"] for r in members])),
                "os_mean": float(os_accs.mean()),
                "os_sd": float(os_accs.std(ddof=1)) if len(members) > 1 else 0.0,
                "ft10_mean": float(ft_accs.mean()),
                "ft10_sd": float(ft_accs.std(ddof=1)) if len(members) > 1 else 0.0,
            }
        )
    return out
