"""FPD1 binary dump format: the file contract that decouples diagnosis
from whatever framework produced the model.

One file holds one (layer, kind) tensor. Header layout, little-endian:

    offset  size  field
    0       4     magic "FPD1"
    4       4     version (u32, = 1)
    8       1     kind (u8: 0 activations, 1 weight-gradient,
                  2 bias-gradient, 3 weights, 4 biases)
    9       4     layer_id (u32)
    13      4     unit_count J (u32)
    17      4     sample_count n (u32, 0 for parameter kinds)
    21      4     unit_dim d (u32)
    25      1     labels_present (u8 flag, 1 exactly for kind 0)

The float32 payload follows immediately: [n, J, d] sample-major for
activations, [J, d] for weight gradients/weights, [J] for bias
gradients/biases. For activations, n u32 class labels follow the payload.
File length must equal header + payload (+ labels) exactly.

Gradient dumps are stored pre-summed over the pruning dataset; the
reconstruction-error formula is linear in per-sample gradients, so the sum
carries everything needed at 1/n the size.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .errors import (
    BadMagicError,
    DumpFormatError,
    TruncatedDumpError,
    UnsupportedVersionError,
)

__all__ = [
    "KIND_ACTIVATIONS",
    "KIND_WEIGHT_GRADIENT",
    "KIND_BIAS_GRADIENT",
    "KIND_WEIGHTS",
    "KIND_BIASES",
    "HEADER_SIZE",
    "FpdHeader",
    "ActivationDump",
    "GradientDump",
    "ParamDump",
    "Dump",
    "activation_dump",
    "weight_gradient_dump",
    "bias_gradient_dump",
    "weight_dump",
    "bias_dump",
    "kind_name",
    "validate_dump",
    "write_dump",
    "read_dump",
]

MAGIC = b"FPD1"
VERSION = 1

KIND_ACTIVATIONS = 0
KIND_WEIGHT_GRADIENT = 1
KIND_BIAS_GRADIENT = 2
KIND_WEIGHTS = 3
KIND_BIASES = 4

_KIND_NAMES = {
    KIND_ACTIVATIONS: "activations",
    KIND_WEIGHT_GRADIENT: "weight-gradient",
    KIND_BIAS_GRADIENT: "bias-gradient",
    KIND_WEIGHTS: "weights",
    KIND_BIASES: "biases",
}

_HEADER = struct.Struct("<4sIBIIIIB")
HEADER_SIZE = _HEADER.size  # 26 bytes

_U32_MAX = 2**32 - 1


def kind_name(kind: int) -> str:
    return _KIND_NAMES.get(kind, f"unknown({kind})")


@dataclass(frozen=True)
class FpdHeader:
    kind: int
    layer_id: int
    unit_count: int
    sample_count: int
    unit_dim: int
    labels_present: int
    magic: bytes = MAGIC
    version: int = VERSION


@dataclass(frozen=True)
class ActivationDump:
    """Post-activation unit outputs: data [n, J, d] float32, labels [n] u32."""

    header: FpdHeader
    data: np.ndarray
    labels: np.ndarray


@dataclass(frozen=True)
class GradientDump:
    """Loss gradients summed over the pruning set: [J, d] for weights,
    [J] for biases; the sample count behind the sum sits in the header."""

    header: FpdHeader
    data: np.ndarray


@dataclass(frozen=True)
class ParamDump:
    """Current parameters: weight rows [J, d] or biases [J]."""

    header: FpdHeader
    data: np.ndarray


Dump = Union[ActivationDump, GradientDump, ParamDump]


def _check_u32(value: int, field: str) -> int:
    value = int(value)
    if not (0 <= value <= _U32_MAX):
        raise DumpFormatError(f"{field} {value} outside unsigned 32-bit range")
    return value


def activation_dump(layer_id: int, data, labels) -> ActivationDump:
    """Build a kind-0 dump from [n, J] or [n, J, d] samples and n labels."""
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise DumpFormatError(f"activation data must be [n, J] or [n, J, d], got shape {arr.shape}")
    lab = np.asarray(labels, dtype=np.uint32)
    n, j, d = arr.shape
    header = FpdHeader(
        kind=KIND_ACTIVATIONS,
        layer_id=_check_u32(layer_id, "layer_id"),
        unit_count=j,
        sample_count=n,
        unit_dim=d,
        labels_present=1,
    )
    dump = ActivationDump(header=header, data=arr, labels=lab)
    validate_dump(dump)
    return dump


def weight_gradient_dump(layer_id: int, data, sample_count: int) -> GradientDump:
    arr = np.atleast_2d(np.asarray(data, dtype=np.float32))
    header = FpdHeader(
        kind=KIND_WEIGHT_GRADIENT,
        layer_id=_check_u32(layer_id, "layer_id"),
        unit_count=arr.shape[0],
        sample_count=_check_u32(sample_count, "sample_count"),
        unit_dim=arr.shape[1],
        labels_present=0,
    )
    dump = GradientDump(header=header, data=arr)
    validate_dump(dump)
    return dump


def bias_gradient_dump(layer_id: int, data, sample_count: int) -> GradientDump:
    arr = np.asarray(data, dtype=np.float32).reshape(-1)
    header = FpdHeader(
        kind=KIND_BIAS_GRADIENT,
        layer_id=_check_u32(layer_id, "layer_id"),
        unit_count=arr.shape[0],
        sample_count=_check_u32(sample_count, "sample_count"),
        unit_dim=1,
        labels_present=0,
    )
    dump = GradientDump(header=header, data=arr)
    validate_dump(dump)
    return dump


def weight_dump(layer_id: int, data) -> ParamDump:
    arr = np.atleast_2d(np.asarray(data, dtype=np.float32))
    header = FpdHeader(
        kind=KIND_WEIGHTS,
        layer_id=_check_u32(layer_id, "layer_id"),
        unit_count=arr.shape[0],
        sample_count=0,
        unit_dim=arr.shape[1],
        labels_present=0,
    )
    dump = ParamDump(header=header, data=arr)
    validate_dump(dump)
    return dump


def bias_dump(layer_id: int, data) -> ParamDump:
    arr = np.asarray(data, dtype=np.float32).reshape(-1)
    header = FpdHeader(
        kind=KIND_BIASES,
        layer_id=_check_u32(layer_id, "layer_id"),
        unit_count=arr.shape[0],
        sample_count=0,
        unit_dim=1,
        labels_present=0,
    )
    dump = ParamDump(header=header, data=arr)
    validate_dump(dump)
    return dump


def _payload_shape(header: FpdHeader) -> tuple:
    if header.kind == KIND_ACTIVATIONS:
        return (header.sample_count, header.unit_count, header.unit_dim)
    if header.kind in (KIND_WEIGHT_GRADIENT, KIND_WEIGHTS):
        return (header.unit_count, header.unit_dim)
    return (header.unit_count,)


def _validate_header(header: FpdHeader) -> None:
    if header.magic != MAGIC:
        raise BadMagicError(f"bad magic {header.magic!r}, expected {MAGIC!r}")
    if header.version != VERSION:
        raise UnsupportedVersionError(f"unsupported format version {header.version}")
    if header.kind not in _KIND_NAMES:
        raise DumpFormatError(f"unknown dump kind {header.kind}")
    for field in ("layer_id", "unit_count", "sample_count", "unit_dim"):
        _check_u32(getattr(header, field), field)
    if header.unit_count < 1:
        raise DumpFormatError("unit_count must be >= 1")
    if header.unit_dim < 1:
        raise DumpFormatError("unit_dim must be >= 1")
    if header.labels_present not in (0, 1):
        raise DumpFormatError(f"labels_present flag must be 0 or 1, got {header.labels_present}")
    if (header.kind == KIND_ACTIVATIONS) != (header.labels_present == 1):
        raise DumpFormatError(
            f"labels_present={header.labels_present} invalid for kind {kind_name(header.kind)}"
        )
    if header.kind in (KIND_WEIGHTS, KIND_BIASES) and header.sample_count != 0:
        raise DumpFormatError(
            f"sample_count must be 0 for {kind_name(header.kind)} dumps, got {header.sample_count}"
        )
    if header.kind in (KIND_BIAS_GRADIENT, KIND_BIASES) and header.unit_dim != 1:
        raise DumpFormatError(
            f"unit_dim must be 1 for {kind_name(header.kind)} dumps, got {header.unit_dim}"
        )


def validate_dump(dump: Dump) -> None:
    """Check every format invariant; raises DumpFormatError on violation."""
    header = dump.header
    _validate_header(header)
    data = dump.data
    if data.dtype != np.float32:
        raise DumpFormatError(f"payload dtype must be float32, got {data.dtype}")
    expected = _payload_shape(header)
    if data.shape != expected:
        raise DumpFormatError(
            f"{kind_name(header.kind)} payload shape {data.shape} does not match header {expected}"
        )

    if header.kind == KIND_ACTIVATIONS:
        if not isinstance(dump, ActivationDump):
            raise DumpFormatError("kind 0 requires an ActivationDump")
        labels = dump.labels
        if labels.dtype != np.uint32:
            raise DumpFormatError(f"labels dtype must be uint32, got {labels.dtype}")
        if labels.shape != (header.sample_count,):
            raise DumpFormatError(
                f"labels length {labels.shape} does not match sample_count {header.sample_count}"
            )
        if header.sample_count < 2:
            raise DumpFormatError("activation dump needs at least 2 samples")
        _, counts = np.unique(labels, return_counts=True)
        if counts.min() < 2:
            raise DumpFormatError(
                "every class present in an activation dump needs at least 2 samples"
            )
    else:
        if isinstance(dump, ActivationDump):
            raise DumpFormatError(f"kind {header.kind} must not carry labels")
        if not np.all(np.isfinite(data)):
            raise DumpFormatError(
                f"non-finite values in {kind_name(header.kind)} payload"
            )


def write_dump(path, dump: Dump) -> None:
    """Serialize a validated dump; the result round-trips bit-exactly."""
    validate_dump(dump)
    header = dump.header
    blob = _HEADER.pack(
        header.magic,
        header.version,
        header.kind,
        header.layer_id,
        header.unit_count,
        header.sample_count,
        header.unit_dim,
        header.labels_present,
    )
    parts = [blob, np.ascontiguousarray(dump.data, dtype="<f4").tobytes()]
    if isinstance(dump, ActivationDump):
        parts.append(np.ascontiguousarray(dump.labels, dtype="<u4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_dump(path) -> Dump:
    """Parse and fully validate an FPD1 file."""
    raw = Path(path).read_bytes()
    if len(raw) < HEADER_SIZE:
        raise TruncatedDumpError(
            f"{path}: {len(raw)} bytes is shorter than the {HEADER_SIZE}-byte header"
        )
    magic, version, kind, layer_id, unit_count, sample_count, unit_dim, labels_present = (
        _HEADER.unpack_from(raw, 0)
    )
    header = FpdHeader(
        kind=kind,
        layer_id=layer_id,
        unit_count=unit_count,
        sample_count=sample_count,
        unit_dim=unit_dim,
        labels_present=labels_present,
        magic=magic,
        version=version,
    )
    _validate_header(header)

    shape = _payload_shape(header)
    payload_bytes = 4 * int(np.prod(shape))
    label_bytes = 4 * header.sample_count if header.labels_present else 0
    expected = HEADER_SIZE + payload_bytes + label_bytes
    if len(raw) < expected:
        raise TruncatedDumpError(
            f"{path}: expected {expected} bytes for the declared payload, found {len(raw)}"
        )
    if len(raw) > expected:
        raise DumpFormatError(f"{path}: {len(raw) - expected} trailing bytes after payload")

    data = np.frombuffer(raw, dtype="<f4", count=payload_bytes // 4, offset=HEADER_SIZE)
    data = data.astype(np.float32, copy=True).reshape(shape)
    if header.kind == KIND_ACTIVATIONS:
        labels = np.frombuffer(
            raw, dtype="<u4", count=header.sample_count, offset=HEADER_SIZE + payload_bytes
        ).astype(np.uint32, copy=True)
        dump: Dump = ActivationDump(header=header, data=data, labels=labels)
    elif header.kind in (KIND_WEIGHT_GRADIENT, KIND_BIAS_GRADIENT):
        dump = GradientDump(header=header, data=data)
    else:
        dump = ParamDump(header=header, data=data)
    validate_dump(dump)
    return dump
