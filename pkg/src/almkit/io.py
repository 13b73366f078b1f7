"""File formats for images, arrays, and run artifacts.

Grayscale images travel as binary PGM (P5, 8 or 16 bit, big-endian
sample order per the format); float arrays as raw little-endian
float64 with a JSON sidecar describing shape and layout. CSV output is
RFC-4180 flavored with LF line endings and a header row.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def write_pgm(path: str | Path, pixels: np.ndarray, maxval: int = 65535) -> None:
    """Write a 2-D array of integer gray levels in [0, maxval] as P5."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise ValueError("PGM output requires a 2-D array")
    if not 1 <= maxval <= 65535:
        raise ValueError("maxval must lie in [1, 65535]")
    if pixels.min() < 0 or pixels.max() > maxval:
        raise ValueError("pixel levels outside [0, maxval]")
    rows, cols = pixels.shape
    header = f"P5\n{cols} {rows}\n{maxval}\n".encode("ascii")
    dtype = ">u2" if maxval > 255 else "u1"
    Path(path).write_bytes(header + pixels.astype(dtype).tobytes())


def quantize_image(values: np.ndarray, maxval: int = 65535) -> np.ndarray:
    """Scale nonnegative values linearly onto [0, maxval] gray levels."""
    values = np.asarray(values, dtype=np.float64)
    top = values.max()
    if top <= 0.0:
        return np.zeros(values.shape, dtype=np.int64)
    return np.rint(values / top * maxval).astype(np.int64)


def read_pgm(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a binary P5 image; returns (pixels, maxval)."""
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        if pos >= len(data):
            raise ValueError(f"{path}: truncated PGM header")
        ch = data[pos : pos + 1]
        if ch == b"#":
            pos = data.index(b"\n", pos) + 1
        elif ch.isspace():
            pos += 1
        else:
            end = pos
            while end < len(data) and not data[end : end + 1].isspace():
                end += 1
            fields.append(int(data[pos:end]))
            pos = end
    cols, rows, maxval = fields
    if not 1 <= maxval <= 65535:
        raise ValueError(f"{path}: illegal maxval {maxval}")
    pos += 1  # single whitespace after maxval
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = rows * cols * dtype.itemsize
    raster = data[pos : pos + expected]
    if len(raster) != expected:
        raise ValueError(f"{path}: raster has {len(raster)} bytes, expected {expected}")
    pixels = np.frombuffer(raster, dtype=dtype).reshape(rows, cols).astype(np.int64)
    return pixels, maxval


def write_f64(path: str | Path, values: np.ndarray, metadata: dict | None = None) -> None:
    """Raw row-major little-endian float64 plus a JSON sidecar."""
    path = Path(path)
    values = np.ascontiguousarray(values, dtype="<f8")
    path.write_bytes(values.tobytes())
    sidecar = {
        "dtype": "f64",
        "order": "row-major",
        "shape": list(values.shape),
    }
    if values.ndim == 2 and values.shape[0] == values.shape[1]:
        sidecar["n"] = values.shape[0]
    if metadata:
        sidecar.update(metadata)
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n"
    )


def read_f64(path: str | Path) -> tuple[np.ndarray, dict]:
    """Read a raw float64 array using its JSON sidecar."""
    path = Path(path)
    sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    if sidecar.get("dtype") != "f64" or sidecar.get("order") != "row-major":
        raise ValueError(f"{path}: unsupported sidecar {sidecar}")
    shape = tuple(sidecar["shape"]) if "shape" in sidecar else (sidecar["n"], sidecar["n"])
    values = np.frombuffer(path.read_bytes(), dtype="<f8").reshape(shape)
    return values.copy(), sidecar


def write_csv(path: str | Path, header: str, rows: list[str]) -> None:
    """Write a CSV file with LF line endings and a header row."""
    Path(path).write_text("\n".join([header, *rows]) + "\n", newline="\n")
