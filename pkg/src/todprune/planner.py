"""Prune-count selection. For a layer with J units and score vectors
D (utilization) and I (reconstruction), the candidate set at count m is

    D_idx(m) = {k : D[k] <= m-th smallest of D}      (bottom m by utilization)
    I_idx(m) = {k : I[k] >= (J-m+1)-th smallest of I} (top m by error)

and ToD(m) = |D_idx(m) & I_idx(m)| / max(|D_idx(m)|, 1). ToD(0) is 0 and
ToD(J) is 1. The selected count m_hat is the largest m in [1, J] whose ToD
stays at or below the level alpha while leaving at least one survivor;
0 when no m qualifies.

Membership is decided by value comparison against the quantile, so tied
scores can inflate a set beyond m; remove lists store D_idx(m_hat).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import stats
from .diagnostics import LayerDiagnostics, ScoreReport, validate_diagnostics
from .errors import ContractError

__all__ = [
    "TodCurve",
    "LayerPlan",
    "PruningPlan",
    "d_idx",
    "i_idx",
    "tod",
    "tod_curve",
    "select_m",
    "chain_param_count",
    "pruning_rate_for_removals",
    "build_plan",
    "sweep",
    "plan_to_json",
    "plan_from_json",
    "write_plan",
    "read_plan",
]


@dataclass(frozen=True)
class TodCurve:
    layer_id: int
    values: np.ndarray  # ToD(m) for m = 0..J


@dataclass(frozen=True)
class LayerPlan:
    layer_id: int
    unit_count: int
    m_hat: int
    remove: tuple
    achieved_tod: Optional[float]


@dataclass(frozen=True)
class PruningPlan:
    tod_level: Optional[float]
    layers: list
    pruning_rate: float


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"tod level must lie in (0, 1), got {alpha}")
    return alpha


def _scores(diag: LayerDiagnostics):
    validate_diagnostics(diag)
    u = np.asarray(diag.utilization, dtype=np.float64)
    e = np.asarray(diag.reconstruction, dtype=np.float64)
    return u, e


def d_idx(utilization, m: int) -> np.ndarray:
    """Indices with utilization at or below the m-th smallest score
    (empty for m = 0 via the -inf sentinel)."""
    u = np.asarray(utilization, dtype=np.float64)
    return np.nonzero(u <= stats.quantile(u, m))[0]


def i_idx(reconstruction, m: int) -> np.ndarray:
    """Indices with reconstruction error at or above the (J-m+1)-th
    smallest score, m in [1, J]: the top-m-by-error set."""
    e = np.asarray(reconstruction, dtype=np.float64)
    j_count = e.shape[0]
    if not (1 <= m <= j_count):
        raise ValueError(f"m {m} out of range [1, {j_count}]")
    return np.nonzero(e >= stats.quantile(e, j_count - m + 1))[0]


def tod(diag: LayerDiagnostics, m: int) -> float:
    """Fraction of the low-utilization candidate set that also sits in the
    top-m-by-error set; 0 at m = 0 where the candidate set is empty."""
    u, e = _scores(diag)
    j_count = u.shape[0]
    if not (0 <= m <= j_count):
        raise ValueError(f"m {m} out of range [0, {j_count}]")
    if m == 0:
        return 0.0
    d_mask = u <= stats.quantile(u, m)
    i_mask = e >= stats.quantile(e, j_count - m + 1)
    d_size = int(np.count_nonzero(d_mask))
    return float(np.count_nonzero(d_mask & i_mask)) / max(d_size, 1)


def _tod_table(u: np.ndarray, e: np.ndarray):
    """ToD(m) and |D_idx(m)| for every m in 0..J in one pass. Row m-1 of
    each mask matrix thresholds at the m-th order statistic, which is what
    quantile() returns, so ties resolve identically to the scalar path."""
    j_count = u.shape[0]
    d_mask = u[None, :] <= np.sort(u)[:, None]
    i_mask = e[None, :] >= np.sort(e)[::-1][:, None]
    d_sizes = d_mask.sum(axis=1)
    inter = np.logical_and(d_mask, i_mask).sum(axis=1)
    values = np.concatenate(([0.0], inter / np.maximum(d_sizes, 1)))
    return values, np.concatenate(([0], d_sizes))


def tod_curve(diag: LayerDiagnostics) -> TodCurve:
    u, e = _scores(diag)
    values, _ = _tod_table(u, e)
    return TodCurve(layer_id=diag.layer_id, values=values)


def select_m(diag: LayerDiagnostics, alpha: float) -> int:
    """Largest m in [1, J] with ToD(m) <= alpha that leaves at least one
    survivor (|D_idx(m)| <= J-1); 0 when no m qualifies. Full scan: ToD is
    not monotone in m."""
    alpha = _check_alpha(alpha)
    u, e = _scores(diag)
    j_count = u.shape[0]
    values, d_sizes = _tod_table(u, e)
    ok = (values[1:] <= alpha) & (d_sizes[1:] <= j_count - 1)
    hits = np.nonzero(ok)[0]
    return int(hits[-1] + 1) if hits.size else 0


def chain_param_count(sizes: Sequence[int]) -> int:
    """Total dense parameters of a size chain: per layer, units x fan-in
    weights plus units biases."""
    sizes = [int(s) for s in sizes]
    if len(sizes) < 2 or min(sizes) < 1:
        raise ValueError(f"invalid size chain {sizes}")
    return sum(sizes[l] * (sizes[l - 1] + 1) for l in range(1, len(sizes)))


def pruning_rate_for_removals(layer_sizes: Sequence[int], removed: Sequence[int]) -> float:
    """Removed-parameter fraction when removed[l] units leave hidden layer l.

    Accounts for downstream fan-in: surviving layer widths compose, so a
    removed unit also deletes its column in the next layer's matrix.
    """
    sizes = [int(s) for s in layer_sizes]
    removed = [int(r) for r in removed]
    if len(removed) != len(sizes) - 2:
        raise ContractError(
            f"{len(removed)} removal counts for {len(sizes) - 2} hidden layers"
        )
    surviving = list(sizes)
    for l, r in enumerate(removed, start=1):
        if not (0 <= r < sizes[l]):
            raise ContractError(
                f"cannot remove {r} of {sizes[l]} units from hidden layer {l}"
            )
        surviving[l] = sizes[l] - r
    before = chain_param_count(sizes)
    after = chain_param_count(surviving)
    return (before - after) / before


def _sorted_layers(report: ScoreReport) -> list:
    if not report.layers:
        raise ValueError("score report contains no layers")
    return sorted(report.layers, key=lambda diag: diag.layer_id)


def check_layer_sizes(report: ScoreReport, layer_sizes: Sequence[int]) -> list:
    """Match report layers (ascending layer_id) against the hidden entries
    of the full size chain [input, hidden..., output]."""
    layers = _sorted_layers(report)
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) != len(layers) + 2:
        raise ContractError(
            f"size chain of length {len(sizes)} cannot host {len(layers)} scored layers"
        )
    for position, diag in enumerate(layers, start=1):
        if sizes[position] != diag.unit_count:
            raise ContractError(
                f"layer {diag.layer_id}: chain says {sizes[position]} units, "
                f"report says {diag.unit_count}"
            )
    return layers


def build_plan(report: ScoreReport, alpha: float, layer_sizes: Sequence[int]) -> PruningPlan:
    """Select per-layer prune counts at level alpha and emit the removal
    plan with its global pruning rate."""
    alpha = _check_alpha(alpha)
    layers = check_layer_sizes(report, layer_sizes)
    layer_plans = []
    removed_counts = []
    for diag in layers:
        m_hat = select_m(diag, alpha)
        remove = d_idx(diag.utilization, m_hat)
        layer_plans.append(
            LayerPlan(
                layer_id=diag.layer_id,
                unit_count=diag.unit_count,
                m_hat=m_hat,
                remove=tuple(int(k) for k in remove),
                achieved_tod=tod(diag, m_hat),
            )
        )
        removed_counts.append(len(remove))
    rate = pruning_rate_for_removals(layer_sizes, removed_counts)
    return PruningPlan(tod_level=alpha, layers=layer_plans, pruning_rate=rate)


def sweep(report: ScoreReport, alphas: Sequence[float], layer_sizes: Sequence[int]) -> list:
    """One plan per level, reusing the report; no dump access happens here."""
    if not list(alphas):
        raise ValueError("sweep needs at least one tod level")
    return [build_plan(report, alpha, layer_sizes) for alpha in alphas]


def validate_plan(plan: PruningPlan) -> None:
    if plan.tod_level is not None:
        _check_alpha(plan.tod_level)
    layer_ids = [lp.layer_id for lp in plan.layers]
    if len(set(layer_ids)) != len(layer_ids):
        raise ContractError(f"duplicate layer_ids in plan: {layer_ids}")
    for lp in plan.layers:
        remove = list(lp.remove)
        if remove != sorted(set(remove)):
            raise ContractError(f"layer {lp.layer_id}: remove list not sorted unique")
        if remove and (remove[0] < 0 or remove[-1] >= lp.unit_count):
            raise ContractError(
                f"layer {lp.layer_id}: remove index out of range [0, {lp.unit_count})"
            )
        if len(remove) >= lp.unit_count:
            raise ContractError(f"layer {lp.layer_id}: no unit would survive")
        if (
            lp.achieved_tod is not None
            and plan.tod_level is not None
            and lp.achieved_tod > plan.tod_level
        ):
            raise ContractError(
                f"layer {lp.layer_id}: achieved tod {lp.achieved_tod} exceeds level"
            )
    if not (0.0 <= plan.pruning_rate < 1.0):
        raise ContractError(f"pruning rate {plan.pruning_rate} outside [0, 1)")


def plan_to_json(plan: PruningPlan) -> str:
    validate_plan(plan)
    payload = {
        "tod_level": plan.tod_level,
        "layers": [
            {
                "layer": int(lp.layer_id),
                "J": int(lp.unit_count),
                "m_hat": int(lp.m_hat),
                "remove": [int(k) for k in lp.remove],
                "achieved_tod": lp.achieved_tod,
            }
            for lp in sorted(plan.layers, key=lambda lp: lp.layer_id)
        ],
        "pruning_rate": plan.pruning_rate,
    }
    return json.dumps(payload)


def plan_from_json(text: str) -> PruningPlan:
    payload = json.loads(text)
    layers = [
        LayerPlan(
            layer_id=int(entry["layer"]),
            unit_count=int(entry["J"]),
            m_hat=int(entry["m_hat"]),
            remove=tuple(int(k) for k in entry["remove"]),
            achieved_tod=None if entry["achieved_tod"] is None else float(entry["achieved_tod"]),
        )
        for entry in payload["layers"]
    ]
    tod_level = payload["tod_level"]
    plan = PruningPlan(
        tod_level=None if tod_level is None else float(tod_level),
        layers=layers,
        pruning_rate=float(payload["pruning_rate"]),
    )
    validate_plan(plan)
    return plan


def write_plan(path, plan: PruningPlan) -> None:
    Path(path).write_text(plan_to_json(plan) + "\n")


def read_plan(path) -> PruningPlan:
    return plan_from_json(Path(path).read_text())
