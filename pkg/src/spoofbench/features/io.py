"""Binary feature files.

Layout (little-endian): ``b"SBFT"``, u32 version, u64 T, u64 D, 32 ASCII bytes
of config digest, then ``T * D`` float64 values row-major.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"SBFT"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ32s")


class FeatureFileError(ValueError):
    pass


def write_features(path, data: np.ndarray, digest: str) -> None:
    data = np.ascontiguousarray(data, dtype="<f8")
    T, D = data.shape
    header = _HEADER.pack(MAGIC, VERSION, T, D, digest.encode("ascii")[:32].ljust(32, b"0"))
    Path(path).write_bytes(header + data.tobytes())


def read_features(path) -> tuple[np.ndarray, str]:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FeatureFileError(f"{path}: truncated header")
    magic, version, T, D, digest = _HEADER.unpack_from(raw)
    if magic != MAGIC or version != VERSION:
        raise FeatureFileError(f"{path}: not a version-{VERSION} feature file")
    body = raw[_HEADER.size:]
    if len(body) != 8 * T * D:
        raise FeatureFileError(f"{path}: expected {T}x{D} values, found {len(body) // 8}")
    return np.frombuffer(body, dtype="<f8").reshape(T, D).copy(), digest.decode("ascii")


def write_features_tsv(path, data: np.ndarray) -> None:
    np.savetxt(path, np.asarray(data), delimiter="\t", fmt="%.17g")
