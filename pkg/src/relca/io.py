"""Text artifacts: space-time dumps, ASCII PGM/PPM renders and run manifests."""

from __future__ import annotations

import hashlib
import os
from pathlib import Path

import numpy as np

VAC_CHAR = "."


def _cell_width(frames) -> int:
    top = max((int(v) for v in np.asarray(frames).ravel() if v >= 0), default=0)
    return max(1, (top.bit_length() + 3) // 4)


def dump_spacetime(frames, times=None, width: int | None = None) -> str:
    """One line group per frame: ``t <time>`` then one line per row of cells.

    Cells are hex digits of the state value, padded to a common width, and
    negative entries (our array encoding of Vac) print as dots.  A 1-D
    frame is a single row; 2-D frames (e.g. Toom grids) print row by row.
    """
    arr = np.asarray(frames, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr[None, :]
    times = range(len(arr)) if times is None else times
    w = width or _cell_width(arr)
    out = []
    for t, frame in zip(times, arr):
        out.append(f"t {t}")
        rows = frame[None, :] if frame.ndim == 1 else frame
        for row in rows:
            out.append(" ".join(VAC_CHAR * w if v < 0 else format(int(v), f"0{w}x") for v in row))
        out.append("")
    return "\n".join(out)


def parse_spacetime(text: str) -> tuple[list[int], np.ndarray]:
    """Inverse of ``dump_spacetime``; Vac comes back as -1."""
    times, frames, rows = [], [], []
    for line in text.splitlines():
        if line.startswith("t "):
            times.append(int(line[2:]))
            rows = []
            frames.append(rows)
        elif line.strip():
            rows.append([-1 if c.strip(VAC_CHAR) == "" else int(c, 16) for c in line.split()])
    arr = np.array([r[0] if len(r) == 1 else r for r in frames], dtype=np.int64)
    return times, arr


def pgm(image, maxval: int | None = None) -> str:
    """ASCII P2 graymap, one pixel per cell; Vac (negative) renders black."""
    img = np.asarray(image, dtype=np.int64)
    if img.ndim == 1:
        img = img[None, :]
    maxval = maxval or max(1, int(img.max(initial=1)))
    h, w = img.shape
    lines = ["P2", f"{w} {h}", str(maxval)]
    lines += [" ".join(str(max(int(v), 0)) for v in row) for row in img]
    return "\n".join(lines) + "\n"


def ppm(image, maxval: int | None = None) -> str:
    """ASCII P3 pixmap: gray levels for states, red for Vac."""
    img = np.asarray(image, dtype=np.int64)
    if img.ndim == 1:
        img = img[None, :]
    top = max(1, int(img.max(initial=1)))
    maxval = maxval or top
    h, w = img.shape
    lines = ["P3", f"{w} {h}", "255"]
    for row in img:
        px = []
        for v in row:
            if v < 0:
                px.append("255 0 0")
            else:
                g = round(255 * int(v) / maxval)
                px.append(f"{g} {g} {g}")
        lines.append(" ".join(px))
    return "\n".join(lines) + "\n"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_text(path, text: str) -> Path:
    """Write with LF line endings regardless of platform."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)
    return p


def manifest(config: dict, files, version: str, wall_time: float) -> str:
    """key=value text: the config echo, version, wall time and a digest per output."""
    lines = [f"version={version}", f"wall_time={wall_time:.3f}"]
    lines += [f"config.{k}={config[k]}" for k in sorted(config)]
    for f in sorted(files, key=lambda p: os.path.basename(str(p))):
        lines.append(f"digest.{os.path.basename(str(f))}={sha256_file(f)}")
    return "\n".join(lines) + "\n"


def read_manifest(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        if line.strip() and not line.startswith("#"):
            k, _, v = line.partition("=")
            out[k] = v
    return out
