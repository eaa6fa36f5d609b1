"""Deterministic dense ReLU classifier used to exercise the pruning
pipeline end to end: seeded init, minibatch SGD on softmax cross-entropy,
dump capture for diagnosis, and a bit-exact binary checkpoint (FPM1).

All parameters and math are float64; only dump payloads downcast to
float32 on write. Layer ids are 1-based over hidden layers; the output
layer is never captured or pruned.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .dumpio import (
    ActivationDump,
    GradientDump,
    ParamDump,
    activation_dump,
    bias_dump,
    bias_gradient_dump,
    weight_dump,
    weight_gradient_dump,
)
from .errors import (
    BadMagicError,
    DumpFormatError,
    TrainingDivergedError,
    TruncatedDumpError,
    UnsupportedVersionError,
)

__all__ = [
    "MiniNet",
    "Dataset",
    "SplitDataset",
    "LayerCapture",
    "CaptureResult",
    "init",
    "forward",
    "loss_and_gradients",
    "train",
    "finetune",
    "evaluate",
    "capture",
    "synthetic_blobs",
    "stratified_split",
    "load_csv",
    "save_checkpoint",
    "load_checkpoint",
]

# named RNG streams fanned out from one user-facing seed
_STREAM_INIT = 0
_STREAM_BATCHING = 1
_STREAM_DATA = 3
_STREAM_SPLIT = 4

CHECKPOINT_MAGIC = b"FPM1"
CHECKPOINT_VERSION = 1
_CKPT_HEAD = struct.Struct("<4sIQII")  # magic, version, seed, epochs_trained, len(sizes)


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # [n, p] float64
    labels: np.ndarray  # [n] int64

    def __len__(self) -> int:
        return int(self.features.shape[0])

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1 if len(self) else 0


@dataclass(frozen=True)
class SplitDataset:
    train: Dataset
    prune: Dataset
    test: Dataset


@dataclass(frozen=True)
class MiniNet:
    sizes: tuple  # (p, h1, ..., hL, K)
    weights: list  # per layer, (units, fan_in) float64
    biases: list  # per layer, (units,) float64
    seed: int
    epochs_trained: int = 0

    @property
    def num_hidden(self) -> int:
        return len(self.sizes) - 2


@dataclass(frozen=True)
class LayerCapture:
    layer_id: int
    activations: ActivationDump
    weight_gradients: GradientDump
    bias_gradients: GradientDump
    weights: ParamDump
    biases: ParamDump


@dataclass(frozen=True)
class CaptureResult:
    layers: list
    loss_sum: float
    sample_count: int


def _check_sizes(sizes) -> tuple:
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) < 2 or min(sizes) < 1:
        raise ValueError(f"layer sizes must be >= 2 positive entries, got {sizes}")
    return sizes


def init(sizes, seed: int) -> MiniNet:
    """Fan-in-scaled uniform weights (bound sqrt(6/fan_in)), zero biases."""
    sizes = _check_sizes(sizes)
    rng = np.random.default_rng([int(seed), _STREAM_INIT])
    weights = []
    biases = []
    for l in range(1, len(sizes)):
        fan_in = sizes[l - 1]
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(sizes[l], fan_in)))
        biases.append(np.zeros(sizes[l]))
    return MiniNet(sizes=sizes, weights=weights, biases=biases, seed=int(seed))


def forward(net: MiniNet, x):
    """Returns (logits, hidden) where hidden[l] is the post-ReLU output of
    hidden layer l+1; accepts a single p-vector or an [n, p] batch."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.shape[1] != net.sizes[0]:
        raise ValueError(f"input width {arr.shape[1]} != model input size {net.sizes[0]}")
    hidden = []
    out = arr
    for l in range(net.num_hidden):
        out = np.maximum(out @ net.weights[l].T + net.biases[l], 0.0)
        hidden.append(out)
    logits = out @ net.weights[-1].T + net.biases[-1]
    if single:
        return logits[0], [h[0] for h in hidden]
    return logits, hidden


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def loss_and_gradients(net: MiniNet, x, y):
    """Cross-entropy summed over the batch plus gradient sums (not means)
    of that summed loss for every weight matrix and bias vector."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    batch = x.shape[0]
    acts = [x]
    out = x
    for l in range(net.num_hidden):
        out = np.maximum(out @ net.weights[l].T + net.biases[l], 0.0)
        acts.append(out)
    logits = out @ net.weights[-1].T + net.biases[-1]
    log_probs = _log_softmax(logits)
    rows = np.arange(batch)
    loss_sum = float(-log_probs[rows, y].sum())

    delta = np.exp(log_probs)
    delta[rows, y] -= 1.0  # d(loss_sum)/d(logits)
    grad_w = [None] * len(net.weights)
    grad_b = [None] * len(net.biases)
    for l in range(len(net.weights) - 1, -1, -1):
        grad_w[l] = delta.T @ acts[l]
        grad_b[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ net.weights[l]) * (acts[l] > 0.0)
    return loss_sum, grad_w, grad_b


def _copy_params(net: MiniNet) -> MiniNet:
    return replace(
        net,
        weights=[w.copy() for w in net.weights],
        biases=[b.copy() for b in net.biases],
    )


def train(net: MiniNet, data: Dataset, epochs: int, lr: float, batch_size: int = 32):
    """Minibatch SGD; returns (trained net, per-epoch mean-loss trace).
    Batch order is a deterministic stream keyed by (seed, epochs_trained),
    so successive training calls on one checkpoint do not repeat batches."""
    if len(data) == 0:
        raise ValueError("training data is empty")
    if lr < 0:
        raise ValueError(f"learning rate must be >= 0, got {lr}")
    if batch_size < 1:
        raise ValueError(f"batch size must be >= 1, got {batch_size}")
    out = _copy_params(net)
    rng = np.random.default_rng([net.seed, _STREAM_BATCHING, net.epochs_trained])
    n = len(data)
    trace = []
    for _ in range(int(epochs)):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch_size):
            batch = order[start : start + batch_size]
            loss_sum, grad_w, grad_b = loss_and_gradients(
                out, data.features[batch], data.labels[batch]
            )
            if not np.isfinite(loss_sum):
                raise TrainingDivergedError(f"non-finite loss after {len(trace)} epochs")
            scale = lr / batch.size
            for l in range(len(out.weights)):
                out.weights[l] -= scale * grad_w[l]
                out.biases[l] -= scale * grad_b[l]
                if not (
                    np.all(np.isfinite(out.weights[l])) and np.all(np.isfinite(out.biases[l]))
                ):
                    raise TrainingDivergedError(
                        f"non-finite parameters after {len(trace)} epochs"
                    )
            epoch_loss += loss_sum
        trace.append(epoch_loss / n)
    out = replace(out, epochs_trained=net.epochs_trained + int(epochs))
    return out, trace


def finetune(net: MiniNet, data: Dataset, epochs: int = 10, lr: float = 0.05, batch_size: int = 32) -> MiniNet:
    """Post-pruning training; identical mechanics to train."""
    tuned, _ = train(net, data, epochs=epochs, lr=lr, batch_size=batch_size)
    return tuned


def evaluate(net: MiniNet, split: Dataset):
    """Top-1 accuracy and mean cross-entropy over a split."""
    if len(split) == 0:
        raise ValueError("evaluation split is empty")
    logits, _ = forward(net, split.features)
    log_probs = _log_softmax(logits)
    rows = np.arange(len(split))
    mean_loss = float(-log_probs[rows, split.labels].mean())
    accuracy = float((logits.argmax(axis=1) == split.labels).mean())
    return accuracy, mean_loss


def capture(net: MiniNet, prune_split: Dataset) -> CaptureResult:
    """One diagnosis pass over the pruning set: per hidden layer, the
    post-ReLU activation dump plus gradient sums and current parameters.
    Gradient dumps hold sums over all samples; sample_count carries n."""
    n = len(prune_split)
    if n == 0:
        raise ValueError("pruning split is empty")
    x = prune_split.features
    labels = prune_split.labels.astype(np.uint32)
    _, hidden = forward(net, x)
    loss_sum, grad_w, grad_b = loss_and_gradients(net, x, prune_split.labels)
    layers = []
    for l in range(net.num_hidden):
        layer_id = l + 1
        layers.append(
            LayerCapture(
                layer_id=layer_id,
                activations=activation_dump(layer_id, hidden[l][:, :, None], labels),
                weight_gradients=weight_gradient_dump(layer_id, grad_w[l], n),
                bias_gradients=bias_gradient_dump(layer_id, grad_b[l], n),
                weights=weight_dump(layer_id, net.weights[l]),
                biases=bias_dump(layer_id, net.biases[l]),
            )
        )
    return CaptureResult(layers=layers, loss_sum=loss_sum, sample_count=n)


def write_capture(out_dir, result: CaptureResult) -> list:
    """Write one FPD1 file per (layer, kind); returns the paths."""
    from .dumpio import write_dump

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for layer in result.layers:
        for tag, dump in (
            ("activations", layer.activations),
            ("wgrad", layer.weight_gradients),
            ("bgrad", layer.bias_gradients),
            ("weights", layer.weights),
            ("biases", layer.biases),
        ):
            path = out / f"layer{layer.layer_id}_{tag}.fpd"
            write_dump(path, dump)
            paths.append(path)
    return paths


def synthetic_blobs(num_classes: int, dim: int, separation: float, count: int, seed: int) -> Dataset:
    """Isotropic Gaussian blobs around seeded random centers of norm
    `separation`; class sizes as equal as count allows, rows shuffled."""
    if num_classes < 2 or dim < 1 or count < num_classes:
        raise ValueError(
            f"need >= 2 classes, dim >= 1, count >= classes; got {num_classes}, {dim}, {count}"
        )
    rng = np.random.default_rng([int(seed), _STREAM_DATA])
    centers = rng.standard_normal((num_classes, dim))
    centers *= separation / np.linalg.norm(centers, axis=1, keepdims=True)
    per_class = [count // num_classes] * num_classes
    for k in range(count % num_classes):
        per_class[k] += 1
    features = np.concatenate(
        [centers[k] + rng.standard_normal((per_class[k], dim)) for k in range(num_classes)]
    )
    labels = np.concatenate(
        [np.full(per_class[k], k, dtype=np.int64) for k in range(num_classes)]
    )
    order = rng.permutation(count)
    return Dataset(features=features[order], labels=labels[order])


def stratified_split(data: Dataset, train_n: int, prune_n: int, test_n: int, seed: int) -> SplitDataset:
    """Split by interleaving shuffled per-class pools, so every split gets a
    near-proportional class mix at exactly the requested sizes."""
    n = len(data)
    if train_n < 1 or prune_n < 1 or test_n < 1:
        raise ValueError("every split needs at least 1 sample")
    if train_n + prune_n + test_n > n:
        raise ValueError(f"requested {train_n + prune_n + test_n} samples from {n}")
    rng = np.random.default_rng([int(seed), _STREAM_SPLIT])
    pools = [rng.permutation(np.nonzero(data.labels == c)[0]) for c in np.unique(data.labels)]
    interleaved = []
    cursor = 0
    while len(interleaved) < n:
        for pool in pools:
            if cursor < len(pool):
                interleaved.append(pool[cursor])
        cursor += 1
    order = np.array(interleaved)

    def take(start, size):
        idx = np.sort(order[start : start + size])
        return Dataset(features=data.features[idx], labels=data.labels[idx])

    splits = SplitDataset(
        train=take(0, train_n),
        prune=take(train_n, prune_n),
        test=take(train_n + prune_n, test_n),
    )
    _, counts = np.unique(splits.prune.labels, return_counts=True)
    if counts.min() < 2:
        raise ValueError("prune split has a class with fewer than 2 samples")
    return splits


def load_csv(path) -> Dataset:
    """CSV with a header row; the column named 'label' is the class index,
    every other column a numeric feature."""
    with open(path, newline="") as handle:
        header = next(csv.reader(handle))
        if "label" not in header:
            raise ValueError(f"{path}: no column named 'label'")
        label_col = header.index("label")
        rows = np.loadtxt(handle, delimiter=",", ndmin=2)
    if rows.shape[0] == 0:
        raise ValueError(f"{path}: no data rows")
    if rows.shape[1] != len(header):
        raise ValueError(f"{path}: rows have {rows.shape[1]} columns, header {len(header)}")
    labels = rows[:, label_col].astype(np.int64)
    if np.any(labels < 0):
        raise ValueError(f"{path}: negative class label")
    features = np.delete(rows, label_col, axis=1)
    return Dataset(features=features, labels=labels)


def save_checkpoint(path, net: MiniNet) -> None:
    """Versioned binary checkpoint; round-trips bit-exactly."""
    head = _CKPT_HEAD.pack(
        CHECKPOINT_MAGIC,
        CHECKPOINT_VERSION,
        net.seed,
        net.epochs_trained,
        len(net.sizes),
    )
    parts = [head, np.asarray(net.sizes, dtype="<u4").tobytes()]
    for w, b in zip(net.weights, net.biases):
        parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_checkpoint(path) -> MiniNet:
    raw = Path(path).read_bytes()
    if len(raw) < _CKPT_HEAD.size:
        raise TruncatedDumpError(f"{path}: shorter than checkpoint header")
    magic, version, seed, epochs_trained, num_sizes = _CKPT_HEAD.unpack_from(raw, 0)
    if magic != CHECKPOINT_MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise UnsupportedVersionError(f"{path}: unsupported checkpoint version {version}")
    offset = _CKPT_HEAD.size
    if len(raw) < offset + 4 * num_sizes:
        raise TruncatedDumpError(f"{path}: truncated size chain")
    sizes = tuple(
        int(s) for s in np.frombuffer(raw, dtype="<u4", count=num_sizes, offset=offset)
    )
    offset += 4 * num_sizes
    if len(sizes) < 2 or min(sizes) < 1:
        raise DumpFormatError(f"{path}: invalid size chain {sizes}")
    weights = []
    biases = []
    for l in range(1, len(sizes)):
        units, fan_in = sizes[l], sizes[l - 1]
        need = 8 * units * (fan_in + 1)
        if len(raw) < offset + need:
            raise TruncatedDumpError(f"{path}: truncated parameters at layer {l}")
        w = np.frombuffer(raw, dtype="<f8", count=units * fan_in, offset=offset)
        offset += 8 * units * fan_in
        b = np.frombuffer(raw, dtype="<f8", count=units, offset=offset)
        offset += 8 * units
        weights.append(w.astype(np.float64, copy=True).reshape(units, fan_in))
        biases.append(b.astype(np.float64, copy=True))
    if offset != len(raw):
        raise DumpFormatError(f"{path}: {len(raw) - offset} trailing bytes")
    net = MiniNet(
        sizes=sizes,
        weights=weights,
        biases=biases,
        seed=int(seed),
        epochs_trained=int(epochs_trained),
    )
    for w, b in zip(net.weights, net.biases):
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise DumpFormatError(f"{path}: non-finite parameters")
    return net
