"""Structured removal: applies a PruningPlan to a MiniNet checkpoint by
deleting unit rows/biases from each planned hidden layer and the matching
fan-in columns from the layer after it. Plans always address original-model
unit indices; surviving parameters are copied bitwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ContractError
from .mininet import MiniNet
from .planner import PruningPlan, validate_plan

__all__ = [
    "SurgeryReport",
    "apply",
    "count_params",
    "count_flops",
    "surgery_report_to_json",
    "write_surgery_report",
]


@dataclass(frozen=True)
class SurgeryReport:
    removed: dict  # layer_id -> removed unit count
    params_before: int
    params_after: int
    realized_rate: float
    flops_before: int
    flops_after: int


def count_params(net: MiniNet) -> int:
    """Whole-model parameter count: weight entries plus biases."""
    return int(sum(w.size + b.size for w, b in zip(net.weights, net.biases)))


def count_flops(net: MiniNet) -> int:
    """Dense multiply-adds per forward pass: 2 x units x fan-in per layer."""
    return int(sum(2 * w.size for w in net.weights))


def apply(net: MiniNet, plan: PruningPlan):
    """Returns (pruned net, report). Hidden layer l loses the rows in its
    remove list, the next layer loses the same-numbered columns; removals
    across consecutive layers compose because each layer's keep set is
    expressed in original indices on both axes."""
    validate_plan(plan)
    num_hidden = net.num_hidden
    by_layer = {}
    for lp in plan.layers:
        if lp.layer_id == num_hidden + 1:
            raise ContractError(f"plan targets the output layer (layer {lp.layer_id})")
        if not (1 <= lp.layer_id <= num_hidden):
            raise ContractError(
                f"plan targets layer {lp.layer_id}; model has hidden layers 1..{num_hidden}"
            )
        if lp.unit_count != net.sizes[lp.layer_id]:
            raise ContractError(
                f"layer {lp.layer_id}: plan says J={lp.unit_count}, "
                f"model has {net.sizes[lp.layer_id]} units"
            )
        by_layer[lp.layer_id] = set(lp.remove)

    keep = [np.arange(net.sizes[0])]  # input features all survive
    for layer_id in range(1, num_hidden + 1):
        removed = by_layer.get(layer_id, set())
        kept = np.array(
            [j for j in range(net.sizes[layer_id]) if j not in removed], dtype=np.intp
        )
        if kept.size == 0:
            raise ContractError(f"layer {layer_id}: surgery would leave no units")
        keep.append(kept)
    keep.append(np.arange(net.sizes[-1]))  # logits all survive

    weights = []
    biases = []
    for l in range(len(net.weights)):
        weights.append(net.weights[l][np.ix_(keep[l + 1], keep[l])].copy())
        biases.append(net.biases[l][keep[l + 1]].copy())
    sizes = tuple(int(k.size) for k in keep)
    pruned = replace(net, sizes=sizes, weights=weights, biases=biases)

    before = count_params(net)
    after = count_params(pruned)
    report = SurgeryReport(
        removed={layer_id: len(units) for layer_id, units in sorted(by_layer.items())},
        params_before=before,
        params_after=after,
        realized_rate=(before - after) / before,
        flops_before=count_flops(net),
        flops_after=count_flops(pruned),
    )
    return pruned, report


def surgery_report_to_json(report: SurgeryReport) -> str:
    payload = {
        "removed": {str(k): int(v) for k, v in report.removed.items()},
        "params_before": report.params_before,
        "params_after": report.params_after,
        "realized_rate": report.realized_rate,
        "flops_before": report.flops_before,
        "flops_after": report.flops_after,
    }
    return json.dumps(payload)


def write_surgery_report(path, report: SurgeryReport) -> None:
    Path(path).write_text(surgery_report_to_json(report) + "\n")
