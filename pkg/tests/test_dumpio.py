"""Binary dump format tests.

Expected byte layouts are assembled by hand with struct.pack from the
format definition (26-byte little-endian header, float32 payload, u32
labels for activation files), independent of the writer under test.
"""

import struct

import numpy as np
import pytest

from todprune import dumpio
from todprune.errors import (
    BadMagicError,
    DumpFormatError,
    TruncatedDumpError,
    UnsupportedVersionError,
)

HEADER = struct.Struct("<4sIBIIIIB")


def hand_header(kind, layer_id, j, n, d, labels_present, magic=b"FPD1", version=1):
    return HEADER.pack(magic, version, kind, layer_id, j, n, d, labels_present)


def hand_activation_file(layer_id, data, labels):
    data = np.asarray(data, dtype="<f4")
    labels = np.asarray(labels, dtype="<u4")
    n, j, d = data.shape
    return hand_header(0, layer_id, j, n, d, 1) + data.tobytes() + labels.tobytes()


def test_header_size():
    assert dumpio.HEADER_SIZE == 26
    assert HEADER.size == 26


def test_minimal_hand_built_file_parses(tmp_path):
    # n=2, J=1, d=1, labels [0, 1]... wait, single-sample classes are invalid;
    # use two samples of one class instead
    blob = hand_activation_file(
        7, np.array([[[0.5]], [[1.5]]], dtype="<f4"), np.array([0, 0], dtype="<u4")
    )
    path = tmp_path / "minimal.fpd"
    path.write_bytes(blob)
    dump = dumpio.read_dump(path)
    assert dump.header.kind == dumpio.KIND_ACTIVATIONS
    assert dump.header.layer_id == 7
    assert dump.header.unit_count == 1
    assert dump.header.sample_count == 2
    assert dump.header.unit_dim == 1
    assert dump.data.tolist() == [[[0.5]], [[1.5]]]
    assert dump.labels.tolist() == [0, 0]


def test_writer_emits_hand_assembled_bytes(tmp_path):
    data = np.arange(12, dtype=np.float32).reshape(2, 3, 2)
    labels = np.array([1, 1], dtype=np.uint32)
    dump = dumpio.activation_dump(4, data, labels)
    path = tmp_path / "acts.fpd"
    dumpio.write_dump(path, dump)
    expected = hand_activation_file(4, data, labels)
    assert path.read_bytes() == expected


def roundtrip(tmp_path, dump, name):
    path = tmp_path / name
    dumpio.write_dump(path, dump)
    return dumpio.read_dump(path)


def test_roundtrip_all_kinds_bitexact(tmp_path):
    rng = np.random.default_rng(0)
    acts = dumpio.activation_dump(
        1,
        rng.normal(size=(6, 4, 3)).astype(np.float32),
        np.array([0, 0, 1, 1, 2, 2], dtype=np.uint32),
    )
    wg = dumpio.weight_gradient_dump(1, rng.normal(size=(4, 5)).astype(np.float32), 6)
    bg = dumpio.bias_gradient_dump(1, rng.normal(size=4).astype(np.float32), 6)
    w = dumpio.weight_dump(1, rng.normal(size=(4, 5)).astype(np.float32))
    b = dumpio.bias_dump(1, rng.normal(size=4).astype(np.float32))

    back = roundtrip(tmp_path, acts, "a.fpd")
    assert back.header == acts.header
    assert back.data.tobytes() == acts.data.tobytes()
    assert back.labels.tobytes() == acts.labels.tobytes()

    for dump, name in ((wg, "wg.fpd"), (bg, "bg.fpd"), (w, "w.fpd"), (b, "b.fpd")):
        back = roundtrip(tmp_path, dump, name)
        assert back.header == dump.header
        assert back.data.tobytes() == dump.data.tobytes()


def test_one_mebibyte_payload_size(tmp_path):
    # 1 MiB of float32 activations: 512 samples x 128 units x 4 dims
    rng = np.random.default_rng(1)
    data = rng.normal(size=(512, 128, 4)).astype(np.float32)
    labels = (np.arange(512, dtype=np.uint32) % 2).astype(np.uint32)
    dump = dumpio.activation_dump(2, data, labels)
    path = tmp_path / "big.fpd"
    dumpio.write_dump(path, dump)
    assert data.nbytes == 1024 * 1024
    assert path.stat().st_size == 26 + data.nbytes + labels.nbytes
    back = dumpio.read_dump(path)
    assert back.data.tobytes() == data.tobytes()


def test_bad_magic(tmp_path):
    blob = hand_activation_file(
        1, np.zeros((2, 1, 1), dtype="<f4"), np.zeros(2, dtype="<u4")
    )
    path = tmp_path / "bad.fpd"
    path.write_bytes(b"FPD2" + blob[4:])
    with pytest.raises(BadMagicError):
        dumpio.read_dump(path)


def test_unsupported_version(tmp_path):
    data = np.zeros((2, 1, 1), dtype="<f4")
    labels = np.zeros(2, dtype="<u4")
    blob = hand_header(0, 1, 1, 2, 1, 1, version=9) + data.tobytes() + labels.tobytes()
    path = tmp_path / "v9.fpd"
    path.write_bytes(blob)
    with pytest.raises(UnsupportedVersionError):
        dumpio.read_dump(path)


def test_truncated_header(tmp_path):
    path = tmp_path / "short.fpd"
    path.write_bytes(b"FPD1\x01")
    with pytest.raises(TruncatedDumpError):
        dumpio.read_dump(path)


def test_truncated_payload_distinct_error(tmp_path):
    blob = hand_activation_file(
        1, np.zeros((2, 3, 1), dtype="<f4"), np.zeros(2, dtype="<u4")
    )
    path = tmp_path / "trunc.fpd"
    path.write_bytes(blob[:-8])
    with pytest.raises(TruncatedDumpError):
        dumpio.read_dump(path)
    assert not issubclass(TruncatedDumpError, BadMagicError)


def test_trailing_bytes_rejected(tmp_path):
    blob = hand_activation_file(
        1, np.zeros((2, 3, 1), dtype="<f4"), np.zeros(2, dtype="<u4")
    )
    path = tmp_path / "long.fpd"
    path.write_bytes(blob + b"\x00\x00")
    with pytest.raises(DumpFormatError):
        dumpio.read_dump(path)


def test_kind0_without_labels_flag_rejected(tmp_path):
    data = np.zeros((2, 1, 1), dtype="<f4")
    blob = hand_header(0, 1, 1, 2, 1, 0) + data.tobytes()
    path = tmp_path / "nolabels.fpd"
    path.write_bytes(blob)
    with pytest.raises(DumpFormatError):
        dumpio.read_dump(path)


def test_param_kind_with_labels_flag_rejected(tmp_path):
    data = np.zeros((3, 2), dtype="<f4")
    blob = hand_header(3, 1, 3, 0, 2, 1) + data.tobytes()
    path = tmp_path / "wlabels.fpd"
    path.write_bytes(blob)
    with pytest.raises(DumpFormatError):
        dumpio.read_dump(path)


def test_param_kind_nonzero_sample_count_rejected(tmp_path):
    data = np.zeros((3, 2), dtype="<f4")
    blob = hand_header(3, 1, 3, 5, 2, 0) + data.tobytes()
    path = tmp_path / "nparam.fpd"
    path.write_bytes(blob)
    with pytest.raises(DumpFormatError):
        dumpio.read_dump(path)


def test_bias_kind_unit_dim_must_be_1(tmp_path):
    data = np.zeros(3, dtype="<f4")
    blob = hand_header(4, 1, 3, 0, 2, 0) + data.tobytes()
    path = tmp_path / "bias.fpd"
    path.write_bytes(blob)
    with pytest.raises(DumpFormatError):
        dumpio.read_dump(path)


def test_unknown_kind_rejected(tmp_path):
    blob = hand_header(5, 1, 1, 0, 1, 0) + np.zeros(1, dtype="<f4").tobytes()
    path = tmp_path / "k5.fpd"
    path.write_bytes(blob)
    with pytest.raises(DumpFormatError):
        dumpio.read_dump(path)


def test_single_sample_class_rejected():
    with pytest.raises(DumpFormatError):
        dumpio.activation_dump(
            1,
            np.zeros((3, 1, 1), dtype=np.float32),
            np.array([0, 0, 1], dtype=np.uint32),
        )


def test_nonfinite_gradient_rejected():
    with pytest.raises(DumpFormatError):
        dumpio.weight_gradient_dump(
            1, np.array([[np.nan, 0.0]], dtype=np.float32), 4
        )
    with pytest.raises(DumpFormatError):
        dumpio.bias_dump(1, np.array([np.inf], dtype=np.float32))


def test_validation_is_total_on_noise(tmp_path):
    # random bytes must produce a typed format error, never an unrelated crash
    rng = np.random.default_rng(99)
    for i in range(200):
        path = tmp_path / f"noise{i}.bin"
        path.write_bytes(rng.bytes(int(rng.integers(0, 200))))
        with pytest.raises(DumpFormatError):
            dumpio.read_dump(path)


def test_validation_is_total_on_corrupted_headers(tmp_path):
    # flip every header byte of a valid file in turn; reads either succeed
    # with full validation or raise the typed error family
    blob = hand_activation_file(
        1, np.zeros((2, 2, 1), dtype="<f4"), np.zeros(2, dtype="<u4")
    )
    for offset in range(26):
        for flip in (0x01, 0x80, 0xFF):
            mutated = bytearray(blob)
            mutated[offset] ^= flip
            path = tmp_path / "mut.fpd"
            path.write_bytes(bytes(mutated))
            try:
                dumpio.read_dump(path)
            except DumpFormatError:
                pass


def test_zero_unit_count_rejected(tmp_path):
    blob = hand_header(3, 1, 0, 0, 1, 0)
    path = tmp_path / "zero.fpd"
    path.write_bytes(blob)
    with pytest.raises(DumpFormatError):
        dumpio.read_dump(path)
