"""Bit-exact binary serialization for feature matrices and checkpoints.

Matrix files: an 8-byte magic, little-endian header (rows, cols, dtype
code, hop seconds, pool factor, pad frames) and a row-major float32
payload.  Checkpoints: magic, version, the sha256 of the pipeline
configuration, epoch/step counters, optimizer hyperparameters, then
length-prefixed named float32 tensors (model parameters and Adam moments).
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import CompatibilityError, FormatError
from .model import PARAM_NAMES, BoundaryNet
from .optim import AdamState
from .spectral import FeatureMatrix

MATRIX_MAGIC = b"SSEGMAT1"
MATRIX_DTYPE_F32 = 1
CHECKPOINT_MAGIC = b"SSEGCKP1"
CHECKPOINT_VERSION = 1


def save_matrix(m: FeatureMatrix, path) -> None:
    """Write a FeatureMatrix; values are stored as little-endian float32."""
    values = np.ascontiguousarray(m.values, dtype="<f4")
    rows, cols = values.shape
    header = MATRIX_MAGIC + struct.pack(
        "<IIIdII", rows, cols, MATRIX_DTYPE_F32,
        float(m.hop_seconds), int(m.pool_factor), int(m.pad_frames),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(values.tobytes())


def load_matrix(path, kind: str = "net_input") -> FeatureMatrix:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(MATRIX_MAGIC) + 28:
        raise FormatError(f"{path}: matrix file too short")
    if data[: len(MATRIX_MAGIC)] != MATRIX_MAGIC:
        raise FormatError(f"{path}: bad matrix magic")
    rows, cols, dtype_code, hop_seconds, pool_factor, pad_frames = struct.unpack_from(
        "<IIIdII", data, len(MATRIX_MAGIC))
    if dtype_code != MATRIX_DTYPE_F32:
        raise FormatError(f"{path}: unsupported dtype code {dtype_code}")
    payload = data[len(MATRIX_MAGIC) + 28 :]
    expected = rows * cols * 4
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload holds {len(payload)} bytes, expected {expected}")
    values = np.frombuffer(payload, dtype="<f4").reshape(rows, cols).copy()
    return FeatureMatrix(values=values, hop_seconds=hop_seconds,
                         pool_factor=pool_factor, pad_frames=pad_frames,
                         kind=kind)


def _pack_tensor(name: str, array: np.ndarray) -> bytes:
    data = np.ascontiguousarray(array, dtype="<f4")
    encoded = name.encode("utf-8")
    parts = [struct.pack("<I", len(encoded)), encoded,
             struct.pack("<I", data.ndim)]
    parts.extend(struct.pack("<I", d) for d in data.shape)
    parts.append(data.tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(f"{self.path}: checkpoint truncated")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]


def save_checkpoint(model: BoundaryNet, adam: AdamState, path,
                    config_hash: str, epoch: int) -> None:
    """Persist parameters, Adam moments and counters, tagged by config hash."""
    tensors = []
    for name in PARAM_NAMES:
        tensors.append(_pack_tensor(name, model.params[name]))
    for name in PARAM_NAMES:
        tensors.append(_pack_tensor(f"adam.m/{name}", adam.m[name]))
        tensors.append(_pack_tensor(f"adam.v/{name}", adam.v[name]))
    header = b"".join([
        CHECKPOINT_MAGIC,
        struct.pack("<I", CHECKPOINT_VERSION),
        bytes.fromhex(config_hash).ljust(32, b"\0")[:32],
        struct.pack("<I", int(epoch)),
        struct.pack("<Q", int(adam.t)),
        struct.pack("<I", int(model.input_height)),
        struct.pack("<dddd", adam.lr, adam.beta1, adam.beta2, adam.eps),
        struct.pack("<I", len(tensors)),
    ])
    with open(path, "wb") as fh:
        fh.write(header)
        for blob in tensors:
            fh.write(blob)


def load_checkpoint(path, expected_hash: str = None):
    """Load a checkpoint; returns ``(model, adam, epoch, config_hash)``.

    If ``expected_hash`` is given and does not match the stored pipeline
    hash, the checkpoint was trained under a different configuration and a
    :class:`CompatibilityError` is raised.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if data[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: bad checkpoint magic")
    r = _Reader(data, path)
    r.take(len(CHECKPOINT_MAGIC))
    version = r.u32()
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    stored_hash = r.take(32).hex()
    epoch = r.u32()
    adam_t = r.u64()
    input_height = r.u32()
    lr, beta1, beta2, eps = struct.unpack("<dddd", r.take(32))
    n_tensors = r.u32()

    tensors = {}
    for _ in range(n_tensors):
        name = r.take(r.u32()).decode("utf-8")
        ndim = r.u32()
        shape = tuple(r.u32() for _ in range(ndim))
        count = int(np.prod(shape)) if shape else 1
        tensors[name] = np.frombuffer(r.take(count * 4), dtype="<f4").reshape(shape).copy()

    if expected_hash is not None and stored_hash != _normalize_hash(expected_hash):
        raise CompatibilityError(
            f"{path}: checkpoint pipeline hash {stored_hash[:12]}... does not "
            f"match expected {_normalize_hash(expected_hash)[:12]}..."
        )

    model = BoundaryNet(input_height=input_height)
    model.load_params({name: tensors[name] for name in PARAM_NAMES})
    adam = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps, t=adam_t)
    for name in PARAM_NAMES:
        adam.m[name] = tensors[f"adam.m/{name}"]
        adam.v[name] = tensors[f"adam.v/{name}"]
    return model, adam, epoch, stored_hash


def _normalize_hash(h: str) -> str:
    return bytes.fromhex(h).ljust(32, b"\0")[:32].hex()
