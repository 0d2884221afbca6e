"""Raw video frames <-> order-4 tensors (height x width x channels x frames).

Each frame file holds little-endian float32 values stored planar: all of
channel 0 row by row, then channel 1, and so on. A sidecar text file of
``key=value`` lines gives ``height``, ``width``, ``channels``, ``frames``,
``min`` and ``max``; values are mapped from ``[min, max]`` onto ``[0, 1]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .tensor import as_tensor


@dataclass(frozen=True)
class FrameMeta:
    height: int
    width: int
    channels: int
    frames: int
    min: float = 0.0
    max: float = 1.0

    def __post_init__(self):
        for name in ("height", "width", "channels", "frames"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.max > self.min:
            raise ValueError(f"max ({self.max}) must exceed min ({self.min})")

    @property
    def frame_values(self) -> int:
        return self.height * self.width * self.channels

    @classmethod
    def read(cls, path) -> "FrameMeta":
        fields = {}
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            fields[key.strip()] = value.strip()
        ints = ("height", "width", "channels", "frames")
        unknown = set(fields) - set(ints) - {"min", "max"}
        if unknown:
            raise ValueError(f"{path}: unknown keys {sorted(unknown)}")
        missing = [k for k in ints if k not in fields]
        if missing:
            raise ValueError(f"{path}: missing keys {missing}")
        kwargs = {k: int(fields[k]) for k in ints}
        for k in ("min", "max"):
            if k in fields:
                kwargs[k] = float(fields[k])
        return cls(**kwargs)

    def write(self, path) -> None:
        Path(path).write_text(
            "".join(f"{k}={getattr(self, k)!r}\n" for k in ("height", "width", "channels", "frames", "min", "max"))
        )


def ingest_frames(paths: Sequence, meta: FrameMeta) -> np.ndarray:
    """Stack raw frames into a ``height x width x channels x frames`` tensor in [0, 1]."""
    if len(paths) != meta.frames:
        raise ValueError(f"meta declares {meta.frames} frames but {len(paths)} files were given")
    out = np.empty((meta.height, meta.width, meta.channels, meta.frames))
    for f, path in enumerate(paths):
        raw = np.fromfile(path, dtype="<f4")
        if raw.size != meta.frame_values or Path(path).stat().st_size != 4 * meta.frame_values:
            raise ValueError(f"{path}: expected {meta.frame_values} float32 values, got {raw.size}")
        if not np.all(np.isfinite(raw)) or raw.min() < meta.min or raw.max() > meta.max:
            raise ValueError(f"{path}: values outside the declared range [{meta.min}, {meta.max}]")
        planes = raw.astype(np.float64).reshape(meta.channels, meta.height, meta.width)
        out[:, :, :, f] = np.moveaxis(planes, 0, -1)
    return as_tensor((out - meta.min) / (meta.max - meta.min))


def emit_frames(t: np.ndarray, meta: FrameMeta, paths: Sequence) -> None:
    """Write a tensor back as raw frames, undoing the [0, 1] rescaling."""
    t = np.asarray(t, dtype=np.float64)
    expected = (meta.height, meta.width, meta.channels, meta.frames)
    if t.shape != expected:
        raise ValueError(f"tensor shape {t.shape} does not match meta {expected}")
    if len(paths) != meta.frames:
        raise ValueError(f"need {meta.frames} output paths, got {len(paths)}")
    values = t * (meta.max - meta.min) + meta.min
    for f, path in enumerate(paths):
        planes = np.moveaxis(values[:, :, :, f], -1, 0)
        planes.astype("<f4").tofile(path)
