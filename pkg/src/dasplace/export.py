"""CSV grids, binary PGM images and JSON manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

NODATA = 0


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isinf(v):
        return "-inf" if v < 0 else "inf"
    return f"{v:.6f}"


def write_grid_csv(path, image: np.ndarray) -> None:
    """One CSV row per image row, no header."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in image:
            w.writerow([_fmt(v) for v in row])


def write_table_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def write_pgm(path, image: np.ndarray) -> None:
    """Binary (P5) 8-bit graymap."""
    img = np.ascontiguousarray(image, dtype=np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    # header is exactly four whitespace-separated tokens for files we write
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise ValueError("only 8-bit PGM is supported")
    pixels = np.frombuffer(parts[4][: w * h], dtype=np.uint8)
    return pixels.reshape(h, w)


def db_to_gray(values_db: np.ndarray, min_db: float, max_db: float) -> np.ndarray:
    """Map ``[min_db, max_db]`` linearly onto gray levels 1..255.

    Values outside the range are clipped; ``-inf`` (no signal) becomes the
    nodata level 0.
    """
    v = np.asarray(values_db, dtype=float)
    span = max(max_db - min_db, 1e-12)
    scaled = 1.0 + np.clip((v - min_db) / span, 0.0, 1.0) * 254.0
    gray = np.where(np.isfinite(v), np.rint(np.nan_to_num(scaled, nan=0.0)), NODATA)
    return gray.astype(np.uint8)


def labels_to_gray(labels: np.ndarray, count: int) -> np.ndarray:
    """Spread ``count`` integer labels evenly over 1..255 (0 stays nodata)."""
    if count <= 1:
        return np.full(labels.shape, 255, dtype=np.uint8)
    step = 254.0 / (count - 1)
    return np.rint(1.0 + np.asarray(labels) * step).astype(np.uint8)


def write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def write_manifest(out_dir, payload: dict, artifacts) -> Path:
    """Write ``manifest.json`` with the payload and SHA-256 of every artifact."""
    out_dir = Path(out_dir)
    checksums = {
        str(Path(a).relative_to(out_dir)): sha256_file(a) for a in sorted(map(str, artifacts))
    }
    manifest = dict(payload)
    manifest["artifacts"] = checksums
    path = out_dir / "manifest.json"
    write_json(path, manifest)
    return path
