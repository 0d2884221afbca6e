"""Binary tensor (WTEN1) and mask (WMSK1) files.

Both formats share a header: 5-byte magic, order ``n`` as little-endian
uint32, then ``n`` extents as little-endian uint64. WTEN1 follows with the
float64 (little-endian) entries in C order; WMSK1 with one byte (0 or 1) per
entry in the same order. Readers insist on the exact byte length.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from .tensor import as_tensor

TENSOR_MAGIC = b"WTEN1"
MASK_MAGIC = b"WMSK1"


def _header(magic: bytes, shape: Sequence[int]) -> bytes:
    return magic + struct.pack("<I", len(shape)) + struct.pack(f"<{len(shape)}Q", *shape)


def _parse(raw: bytes, magic: bytes, itemsize: int, path) -> tuple[tuple[int, ...], bytes]:
    if raw[:5] != magic:
        raise ValueError(f"{path}: bad magic {raw[:5]!r}, expected {magic!r}")
    if len(raw) < 9:
        raise ValueError(f"{path}: truncated header")
    (n,) = struct.unpack_from("<I", raw, 5)
    if n < 1:
        raise ValueError(f"{path}: order must be >= 1")
    head = 9 + 8 * n
    if len(raw) < head:
        raise ValueError(f"{path}: truncated header")
    shape = struct.unpack_from(f"<{n}Q", raw, 9)
    if any(d < 1 for d in shape):
        raise ValueError(f"{path}: zero extent in shape {shape}")
    body = raw[head:]
    expected = int(np.prod(shape)) * itemsize
    if len(body) != expected:
        raise ValueError(f"{path}: payload is {len(body)} bytes, expected {expected}")
    return tuple(int(d) for d in shape), body


def write_tensor(path, t: np.ndarray) -> None:
    t = as_tensor(t)
    with open(path, "wb") as fh:
        fh.write(_header(TENSOR_MAGIC, t.shape))
        fh.write(t.astype("<f8").tobytes(order="C"))


def read_tensor(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    shape, body = _parse(raw, TENSOR_MAGIC, 8, path)
    return as_tensor(np.frombuffer(body, dtype="<f8").astype(np.float64), shape)


def write_mask(path, mask) -> None:
    mask = np.asarray(getattr(mask, "mask", mask), dtype=bool)
    with open(path, "wb") as fh:
        fh.write(_header(MASK_MAGIC, mask.shape))
        fh.write(mask.astype(np.uint8).tobytes(order="C"))


def read_mask(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    shape, body = _parse(raw, MASK_MAGIC, 1, path)
    values = np.frombuffer(body, dtype=np.uint8)
    if np.any(values > 1):
        raise ValueError(f"{path}: mask bytes must be 0 or 1")
    return values.astype(bool).reshape(shape)


def factor_path(prefix, k: int) -> Path:
    """File holding factor ``k`` (zero-based) of a rank-1 weight; suffix is 1-based."""
    return Path(f"{prefix}.f{k + 1}")


def write_factors(prefix, factors: Sequence[np.ndarray]) -> None:
    for k, f in enumerate(factors):
        write_tensor(factor_path(prefix, k), np.asarray(f, dtype=np.float64).ravel())


def read_factors(prefix) -> list[np.ndarray]:
    factors = []
    k = 0
    while factor_path(prefix, k).exists():
        f = read_tensor(factor_path(prefix, k))
        if f.ndim != 1:
            raise ValueError(f"{factor_path(prefix, k)}: factor must be a vector, got shape {f.shape}")
        factors.append(f)
        k += 1
    if not factors:
        raise ValueError(f"no factor files found for prefix {prefix}")
    return factors
