"""Alignment-error scoring against ground-truth point pairs.

``Ex`` and ``Ey`` are per-axis root-mean-square residuals of the transform
applied to the infrared points, pooled over every pair of every listed
frame; the combined error is ``E = sqrt(Ex^2 + Ey^2)``, the overall RMS
point distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .core import AffineTransform, Point2
from .errors import InsufficientDataError


class AlignmentError(NamedTuple):
    ex: float
    ey: float
    e: float


@dataclass
class GroundTruthSet:
    """Per-frame lists of corresponding (infrared, visible) points."""

    frames: dict[int, list[tuple[Point2, Point2]]] = field(default_factory=dict)

    def add(self, frame_index: int, ir_point: Point2, vis_point: Point2) -> None:
        self.frames.setdefault(int(frame_index), []).append((ir_point, vis_point))

    def n_pairs(self) -> int:
        return sum(len(v) for v in self.frames.values())

    def subset(self, frame_indices: Iterable[int]) -> "GroundTruthSet":
        wanted = set(frame_indices)
        return GroundTruthSet(
            frames={f: list(p) for f, p in self.frames.items() if f in wanted}
        )


def alignment_error(gt: GroundTruthSet, t: AffineTransform) -> AlignmentError:
    """Pooled RMS residual of ``t`` over every ground-truth pair."""
    if gt.n_pairs() == 0:
        raise InsufficientDataError("no ground-truth pairs to evaluate")
    ir_pts = []
    vis_pts = []
    for pairs in gt.frames.values():
        for ir_p, vis_p in pairs:
            ir_pts.append(ir_p)
            vis_pts.append(vis_p)
    mapped = t.apply_points(np.asarray(ir_pts, dtype=float))
    resid = mapped - np.asarray(vis_pts, dtype=float)
    ex = float(np.sqrt(np.mean(resid[:, 0] ** 2)))
    ey = float(np.sqrt(np.mean(resid[:, 1] ** 2)))
    return AlignmentError(ex, ey, float(np.hypot(ex, ey)))


def load_ground_truth(path: str | Path) -> GroundTruthSet:
    """Read whitespace-separated lines: frame_index ir_x ir_y vis_x vis_y."""
    gt = GroundTruthSet()
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 5:
            raise ValueError(f"{path}:{lineno}: expected 5 fields, got {len(fields)}")
        f = int(fields[0])
        ir_x, ir_y, vis_x, vis_y = (float(v) for v in fields[1:])
        gt.add(f, Point2(ir_x, ir_y), Point2(vis_x, vis_y))
    return gt


def save_ground_truth(path: str | Path, gt: GroundTruthSet) -> None:
    lines = []
    for f in sorted(gt.frames):
        for ir_p, vis_p in gt.frames[f]:
            lines.append(f"{f} {ir_p.x:.9g} {ir_p.y:.9g} {vis_p.x:.9g} {vis_p.y:.9g}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


@dataclass(frozen=True)
class FrameScore:
    frame_index: int
    br: float
    error: AlignmentError | None  # None when the frame has no usable transform/pairs


def build_report(
    per_frame: list[FrameScore],
    pooled: AlignmentError | None = None,
    label: str = "all",
) -> str:
    """Machine-readable report: one CSV row per frame plus an aggregate section.

    The aggregate gives both the error pooled over all residuals (with the
    final transform) and the mean of the per-frame errors.
    """
    lines = ["frame,BR,Ex,Ey,E"]
    frame_errors = []
    for row in per_frame:
        if row.error is None:
            lines.append(f"{row.frame_index},{row.br:.9g},none,none,none")
        else:
            e = row.error
            lines.append(
                f"{row.frame_index},{row.br:.9g},{e.ex:.9g},{e.ey:.9g},{e.e:.9g}"
            )
            frame_errors.append(e.e)
    lines.append("")
    lines.append("section,label,n_frames,pooled_Ex,pooled_Ey,pooled_E,mean_frame_E")
    pooled_txt = (
        f"{pooled.ex:.9g},{pooled.ey:.9g},{pooled.e:.9g}" if pooled is not None else "none,none,none"
    )
    mean_frame = f"{np.mean(frame_errors):.9g}" if frame_errors else "none"
    lines.append(f"aggregate,{label},{len(per_frame)},{pooled_txt},{mean_frame}")
    return "\n".join(lines) + "\n"
