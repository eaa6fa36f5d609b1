"""Per-layer unit diagnostics from dumps: utilization scores (how far apart
a unit's class-conditional output distributions sit, measured by Wasserstein
distance) and reconstruction errors (first-order Taylor estimate of the loss
change from zeroing the unit's parameters).

All arithmetic runs in float64 regardless of the float32 dump payloads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from . import stats
from .dumpio import (
    KIND_ACTIVATIONS,
    KIND_BIAS_GRADIENT,
    KIND_BIASES,
    KIND_WEIGHT_GRADIENT,
    KIND_WEIGHTS,
    ActivationDump,
    GradientDump,
    ParamDump,
    kind_name,
    validate_dump,
)
from .errors import ContractError

__all__ = [
    "LayerDiagnostics",
    "ScoreReport",
    "utilization_scores",
    "reconstruction_errors",
    "diagnose_layer",
    "score_report_to_json",
    "score_report_from_json",
    "write_score_report",
    "read_score_report",
]

DEFAULT_PROJECTIONS = 32


@dataclass(frozen=True)
class LayerDiagnostics:
    """Parallel per-unit score vectors for one layer."""

    layer_id: int
    utilization: np.ndarray
    reconstruction: np.ndarray
    sample_count: int = 0
    class_count: int = 0

    @property
    def unit_count(self) -> int:
        return int(self.utilization.shape[0])


@dataclass(frozen=True)
class ScoreReport:
    layers: list
    meta: dict = field(default_factory=dict)


def validate_diagnostics(diag: LayerDiagnostics) -> None:
    u = np.asarray(diag.utilization, dtype=np.float64)
    r = np.asarray(diag.reconstruction, dtype=np.float64)
    if u.ndim != 1 or u.shape != r.shape or u.size == 0:
        raise ContractError(
            f"layer {diag.layer_id}: score vectors must be equal-length and nonempty, "
            f"got {u.shape} and {r.shape}"
        )
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(r))):
        raise ContractError(f"layer {diag.layer_id}: non-finite score values")
    if np.any(u < 0):
        raise ContractError(f"layer {diag.layer_id}: negative utilization score")


def _require_kind(dump, kind: int):
    if dump.header.kind != kind:
        raise ContractError(
            f"expected a {kind_name(kind)} dump, got {kind_name(dump.header.kind)}"
        )
    return dump


def utilization_scores(
    acts: ActivationDump,
    num_projections: int = DEFAULT_PROJECTIONS,
    seed: int = 0,
) -> np.ndarray:
    """Per-unit max over unordered class pairs of the distance between the
    unit's class-conditional output samples: exact 1-D Wasserstein for
    scalar outputs, the sliced estimator for vector outputs."""
    _require_kind(acts, KIND_ACTIVATIONS)
    validate_dump(acts)
    data = acts.data.astype(np.float64)  # [n, J, d]
    labels = acts.labels
    classes = np.unique(labels)
    if classes.size < 2:
        raise ValueError(
            f"utilization scores need at least 2 classes, found {classes.size}"
        )
    n, j_count, d = data.shape

    if d == 1:
        # sort each unit's samples once per class, then merge per pair
        by_class = {c: np.sort(data[labels == c, :, 0], axis=0) for c in classes}
    else:
        theta = stats.projection_directions(d, num_projections, seed)
        by_class = {
            c: np.sort(np.einsum("njd,pd->njp", data[labels == c], theta), axis=0)
            for c in classes
        }

    scores = np.zeros(j_count)
    for c1, c2 in combinations(classes.tolist(), 2):
        a = by_class[c1]
        b = by_class[c2]
        for j in range(j_count):
            if d == 1:
                dist = stats._w1_sorted(a[:, j], b[:, j])
            else:
                dist = np.mean(
                    [stats._w1_sorted(a[:, j, p], b[:, j, p]) for p in range(theta.shape[0])]
                )
            if dist > scores[j]:
                scores[j] = dist
    return scores


def reconstruction_errors(
    wgrad: GradientDump,
    bgrad: GradientDump,
    w: ParamDump,
    b: ParamDump,
    absolute: bool = False,
) -> np.ndarray:
    """e_j = (G_w[j] . w[j] + G_b[j] * b[j]) / n with G the gradient sums
    over the pruning set. Signed by default; absolute=True takes |e_j|."""
    _require_kind(wgrad, KIND_WEIGHT_GRADIENT)
    _require_kind(bgrad, KIND_BIAS_GRADIENT)
    _require_kind(w, KIND_WEIGHTS)
    _require_kind(b, KIND_BIASES)
    for dump in (wgrad, bgrad, w, b):
        validate_dump(dump)

    j_count = wgrad.header.unit_count
    counts = {d.header.unit_count for d in (wgrad, bgrad, w, b)}
    if counts != {j_count}:
        raise ContractError(f"unit_count disagreement across dumps: {sorted(counts)}")
    if wgrad.header.unit_dim != w.header.unit_dim:
        raise ContractError(
            f"weight-gradient unit_dim {wgrad.header.unit_dim} != weights unit_dim {w.header.unit_dim}"
        )
    n = wgrad.header.sample_count
    if bgrad.header.sample_count != n:
        raise ContractError(
            f"gradient dumps disagree on sample_count: {n} vs {bgrad.header.sample_count}"
        )
    if n == 0:
        raise ValueError("gradient dumps carry sample_count 0; nothing to average")

    gw = wgrad.data.astype(np.float64)
    gb = bgrad.data.astype(np.float64)
    pw = w.data.astype(np.float64)
    pb = b.data.astype(np.float64)
    errors = (np.sum(gw * pw, axis=1) + gb * pb) / n
    return np.abs(errors) if absolute else errors


def diagnose_layer(
    acts: ActivationDump,
    wgrad: GradientDump,
    bgrad: GradientDump,
    w: ParamDump,
    b: ParamDump,
    num_projections: int = DEFAULT_PROJECTIONS,
    seed: int = 0,
    absolute: bool = False,
) -> LayerDiagnostics:
    """Score one layer from its five dumps; all must agree on layer and J."""
    layer_ids = {d.header.layer_id for d in (acts, wgrad, bgrad, w, b)}
    if len(layer_ids) != 1:
        raise ContractError(f"dumps span multiple layer_ids: {sorted(layer_ids)}")
    counts = {d.header.unit_count for d in (acts, wgrad, bgrad, w, b)}
    if len(counts) != 1:
        raise ContractError(f"dumps disagree on unit_count: {sorted(counts)}")

    utilization = utilization_scores(acts, num_projections=num_projections, seed=seed)
    reconstruction = reconstruction_errors(wgrad, bgrad, w, b, absolute=absolute)
    diag = LayerDiagnostics(
        layer_id=acts.header.layer_id,
        utilization=utilization,
        reconstruction=reconstruction,
        sample_count=acts.header.sample_count,
        class_count=int(acts.labels.max()) + 1,
    )
    validate_diagnostics(diag)
    return diag


def score_report_to_json(report: ScoreReport) -> str:
    layer_ids = [diag.layer_id for diag in report.layers]
    if len(set(layer_ids)) != len(layer_ids):
        raise ContractError(f"duplicate layer_ids in report: {layer_ids}")
    payload = {
        "layers": [
            {
                "layer": int(diag.layer_id),
                "J": diag.unit_count,
                "utilization": [float(v) for v in diag.utilization],
                "reconstruction": [float(v) for v in diag.reconstruction],
            }
            for diag in sorted(report.layers, key=lambda diag: diag.layer_id)
        ],
        "meta": report.meta,
    }
    return json.dumps(payload)


def score_report_from_json(text: str) -> ScoreReport:
    payload = json.loads(text)
    meta = payload.get("meta", {})
    per_layer_meta = meta.get("layers", {})
    layers = []
    for entry in payload["layers"]:
        extra = per_layer_meta.get(str(entry["layer"]), {})
        diag = LayerDiagnostics(
            layer_id=int(entry["layer"]),
            utilization=np.asarray(entry["utilization"], dtype=np.float64),
            reconstruction=np.asarray(entry["reconstruction"], dtype=np.float64),
            sample_count=int(extra.get("sample_count", 0)),
            class_count=int(extra.get("class_count", 0)),
        )
        if diag.unit_count != int(entry["J"]):
            raise ContractError(
                f"layer {diag.layer_id}: J={entry['J']} but {diag.unit_count} scores"
            )
        validate_diagnostics(diag)
        layers.append(diag)
    return ScoreReport(layers=layers, meta=meta)


def write_score_report(path, report: ScoreReport) -> None:
    Path(path).write_text(score_report_to_json(report) + "\n")


def read_score_report(path) -> ScoreReport:
    return score_report_from_json(Path(path).read_text())
