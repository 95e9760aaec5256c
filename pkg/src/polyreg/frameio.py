"""Frame and CSV file I/O for the command-line pipeline.

Frames are per-file grayscale images (PNG or binary PGM; other PIL-readable
formats work too), paired across the two streams by lexicographic filename
order. Color inputs are collapsed with the integer luma combination
``round((299*R + 587*G + 114*B) / 1000)``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .core import AffineTransform, GrayFrame
from .errors import FrameIOError

_FRAME_SUFFIXES = {".png", ".pgm", ".pbm", ".ppm", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}


def list_frame_files(directory: str | Path) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise FrameIOError(f"frame directory not found: {d}")
    return sorted(p for p in d.iterdir() if p.suffix.lower() in _FRAME_SUFFIXES)


def load_frame_file(path: str | Path, frame_index: int = 0) -> GrayFrame:
    try:
        with Image.open(path) as img:
            if img.mode in ("L", "I;16", "I"):
                arr = np.asarray(img.convert("L"), dtype=np.uint8)
            else:
                rgb = np.asarray(img.convert("RGB"), dtype=np.uint32)
                luma = (
                    299 * rgb[:, :, 0] + 587 * rgb[:, :, 1] + 114 * rgb[:, :, 2] + 500
                ) // 1000
                arr = luma.astype(np.uint8)
    except (OSError, UnidentifiedImageError) as exc:
        raise FrameIOError(f"cannot read frame {path}: {exc}") from exc
    return GrayFrame(arr, frame_index=frame_index)


def load_frames(
    directory: str | Path, frame_range: tuple[int, int] | None = None
) -> list[GrayFrame]:
    """Load a directory of frames in sorted order.

    ``frame_range`` is inclusive on both ends and indexes the sorted file
    list; frame_index on each result is the absolute position in that list.
    """
    files = list_frame_files(directory)
    if frame_range is not None:
        lo, hi = frame_range
        if lo < 0 or hi < lo:
            raise FrameIOError(f"invalid frame range {lo}:{hi}")
        if hi >= len(files):
            raise FrameIOError(
                f"frame range {lo}:{hi} exceeds the {len(files)} frames in {directory}"
            )
        picked = [(i, files[i]) for i in range(lo, hi + 1)]
    else:
        picked = list(enumerate(files))
    return [load_frame_file(path, frame_index=i) for i, path in picked]


def save_gray(path: str | Path, pixels: np.ndarray) -> None:
    try:
        Image.fromarray(np.asarray(pixels, dtype=np.uint8), mode="L").save(path)
    except OSError as exc:
        raise FrameIOError(f"cannot write frame {path}: {exc}") from exc


def save_overlay(path: str | Path, vis_fg: np.ndarray, warped_ir_fg: np.ndarray) -> None:
    """Visible foreground in green, warped infrared in red, overlap yellow."""
    h, w = vis_fg.shape
    rgb = np.zeros((h, w, 3), dtype=np.uint8)
    rgb[:, :, 1] = np.where(vis_fg, 255, 0)
    rgb[:, :, 0] = np.where(warped_ir_fg, 255, 0)
    try:
        Image.fromarray(rgb, mode="RGB").save(path)
    except OSError as exc:
        raise FrameIOError(f"cannot write overlay {path}: {exc}") from exc


TRANSFORM_CSV_HEADER = "frame,a,b,tx,c,d,ty,BR,updated"


def format_transform_row(
    frame_index: int, t: AffineTransform | None, br: float, updated: bool
) -> str:
    if t is None:
        cells = ["none"] * 6
    else:
        cells = [f"{v:.9g}" for v in (t.a, t.b, t.tx, t.c, t.d, t.ty)]
    return f"{frame_index}," + ",".join(cells) + f",{br:.9g},{int(updated)}"


def write_transforms_csv(path: str | Path, rows: list[str]) -> None:
    Path(path).write_text(TRANSFORM_CSV_HEADER + "\n" + "\n".join(rows) + ("\n" if rows else ""))


def load_transforms_csv(path: str | Path) -> list[tuple[int, AffineTransform | None, float]]:
    """Rows of (frame_index, transform or None, BR) from a transforms CSV."""
    p = Path(path)
    if not p.is_file():
        raise FrameIOError(f"transforms file not found: {p}")
    out: list[tuple[int, AffineTransform | None, float]] = []
    lines = p.read_text().splitlines()
    if not lines or lines[0] != TRANSFORM_CSV_HEADER:
        raise FrameIOError(f"{p}: missing transforms header")
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != 9:
            raise FrameIOError(f"{p}:{lineno}: expected 9 cells, got {len(cells)}")
        frame = int(cells[0])
        br = float(cells[7])
        if cells[1] == "none":
            out.append((frame, None, br))
        else:
            a, b, tx, c, d, ty = (float(v) for v in cells[1:7])
            out.append((frame, AffineTransform(a, b, tx, c, d, ty), br))
    return out
