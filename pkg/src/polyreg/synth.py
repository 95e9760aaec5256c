"""Synthetic paired infrared/visible sequences with known ground truth.

A scene places 1-5 person-like silhouettes (an ellipse for torso and head,
rectangles for limbs, optionally a thin triangular antenna) on trajectories
inside a visible frame. The infrared stream renders the same geometry seen
through the inverse of the planted transform, with an optional fraction of
sub-shapes dropped and independent pixel noise, so intensities and shapes
differ across modalities while vertex correspondence stays exact. Landmark
points on the torso give ground-truth pairs for scoring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import AffineTransform, GrayFrame, Point2


@dataclass(frozen=True)
class SilhouettePart:
    """One sub-shape in silhouette-local coordinates.

    ``hw``/``hh`` are half extents (radii for ellipses). Triangles are
    isoceles with the apex up at ``cy - hh`` and base at ``cy + hh``. A
    "polygon" part ignores hw/hh and uses ``points``: a convex clockwise
    (y-down) vertex loop, offset by (cx, cy). Only droppable parts may be
    removed by modality dropout.
    """

    kind: str  # "ellipse" | "rect" | "triangle" | "polygon"
    cx: float
    cy: float
    hw: float = 0.0
    hh: float = 0.0
    droppable: bool = False
    points: tuple[tuple[float, float], ...] = ()

    def local_bounds(self) -> tuple[float, float, float, float]:
        """(min_x, min_y, max_x, max_y) around (cx, cy)."""
        if self.kind == "polygon":
            xs = [p[0] for p in self.points]
            ys = [p[1] for p in self.points]
            return (
                self.cx + min(xs),
                self.cy + min(ys),
                self.cx + max(xs),
                self.cy + max(ys),
            )
        return (self.cx - self.hw, self.cy - self.hh, self.cx + self.hw, self.cy + self.hh)


@dataclass(frozen=True)
class Silhouette:
    parts: tuple[SilhouettePart, ...]
    landmarks: tuple[Point2, ...]  # offsets from the anchor, on essential parts

    def half_extent(self) -> tuple[float, float]:
        bounds = [p.local_bounds() for p in self.parts]
        ex = max(max(abs(b[0]), abs(b[2])) for b in bounds)
        ey = max(max(abs(b[1]), abs(b[3])) for b in bounds)
        return ex, ey


def person_silhouette(scale: float = 1.0, *, arms: bool = True, spike: bool = False) -> Silhouette:
    """Person-like template: torso/head ellipse plus rectangular limbs.

    ``spike`` adds a thin triangular antenna on the head whose apex angle
    (about 19 degrees) matches no other vertex of the template.
    """
    s = float(scale)
    parts = [SilhouettePart("ellipse", 0.0, -5.0 * s, 9.0 * s, 22.0 * s)]
    if arms:
        parts.append(SilhouettePart("rect", -12.0 * s, -8.0 * s, 5.0 * s, 7.0 * s, droppable=True))
        parts.append(SilhouettePart("rect", 12.0 * s, -8.0 * s, 5.0 * s, 7.0 * s, droppable=True))
    parts.append(SilhouettePart("rect", -4.5 * s, 19.0 * s, 4.0 * s, 11.0 * s, droppable=True))
    parts.append(SilhouettePart("rect", 4.5 * s, 19.0 * s, 4.0 * s, 11.0 * s, droppable=True))
    if spike:
        parts.append(SilhouettePart("triangle", 0.0, -34.0 * s, 3.0 * s, 9.0 * s))
    landmarks = (
        Point2(0.0, -5.0 * s),
        Point2(0.0, -19.0 * s),
        Point2(0.0, 9.0 * s),
        Point2(-5.5 * s, -5.0 * s),
        Point2(5.5 * s, -5.0 * s),
    )
    return Silhouette(parts=tuple(parts), landmarks=landmarks)


def triangle_wave_trajectory(
    frames: int,
    cx: float,
    cy: float,
    amplitude: float,
    speed: float,
    phase: float = 0.0,
    axis: str = "x",
) -> np.ndarray:
    """Back-and-forth path at constant speed along one axis: (frames, 2).

    A pixel under the swept band is covered for roughly
    ``span / (2 * amplitude)`` of the time (span = silhouette extent along
    the axis), so amplitudes comfortably above the silhouette span keep
    every pixel mostly background.
    """
    t = np.arange(frames, dtype=float)
    u = np.mod(speed * t / amplitude + phase, 4.0)
    val = np.where(u < 1.0, u, np.where(u < 3.0, 2.0 - u, u - 4.0))
    out = np.empty((frames, 2))
    if axis == "x":
        out[:, 0] = cx + amplitude * val
        out[:, 1] = cy
    elif axis == "y":
        out[:, 0] = cx
        out[:, 1] = cy + amplitude * val
    else:
        raise ValueError("axis must be 'x' or 'y'")
    return out


@dataclass
class TargetSpec:
    silhouette: Silhouette
    trajectory: np.ndarray  # (frames, 2) visible-frame anchor positions

    def __post_init__(self) -> None:
        self.trajectory = np.asarray(self.trajectory, dtype=np.float64)
        if self.trajectory.ndim != 2 or self.trajectory.shape[1] != 2:
            raise ValueError("trajectory must be an (frames, 2) array")


@dataclass
class SceneSpec:
    width: int
    height: int
    frames: int
    truth: AffineTransform  # visible = truth(infrared)
    targets: list[TargetSpec]
    modality_dropout: float = 0.0
    noise_sigma: float = 0.0
    rng_seed: int = 0
    vis_background: float = 40.0
    vis_foreground: float = 200.0
    ir_background: float = 25.0
    ir_foreground: float = 215.0

    @property
    def n_targets(self) -> int:
        return len(self.targets)


@dataclass
class SyntheticSequence:
    spec: SceneSpec
    vis_frames: list[GrayFrame]
    ir_frames: list[GrayFrame]
    vis_masks: list[np.ndarray]
    ir_masks: list[np.ndarray]
    truth_pairs: list[list[tuple[Point2, Point2]]] = field(default_factory=list)


def _inside(part: SilhouettePart, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    if part.kind == "ellipse":
        return (dx / part.hw) ** 2 + (dy / part.hh) ** 2 <= 1.0
    if part.kind == "rect":
        return (np.abs(dx) <= part.hw) & (np.abs(dy) <= part.hh)
    if part.kind == "triangle":
        width = part.hw * (dy + part.hh) / (2.0 * part.hh)
        return (np.abs(dy) <= part.hh) & (np.abs(dx) <= width)
    if part.kind == "polygon":
        # convex clockwise (y-down) ring: inside iff on the inner side of
        # every edge (cross product of edge and offset vector non-negative)
        inside = np.ones_like(dx, dtype=bool)
        pts = part.points
        for i in range(len(pts)):
            x1, y1 = pts[i]
            x2, y2 = pts[(i + 1) % len(pts)]
            inside &= (x2 - x1) * (dy - y1) - (y2 - y1) * (dx - x1) >= 0.0
        return inside
    raise ValueError(f"unknown part kind {part.kind!r}")


def _paint(
    mask: np.ndarray,
    to_vis: AffineTransform,
    anchor: np.ndarray,
    sil: Silhouette,
    skip: frozenset[int],
) -> None:
    """Set mask pixels whose ``to_vis``-mapped centres fall inside the shape."""
    h, w = mask.shape
    inv = to_vis.inverse()
    for idx, part in enumerate(sil.parts):
        if idx in skip:
            continue
        px = anchor[0] + part.cx
        py = anchor[1] + part.cy
        bx0, by0, bx1, by1 = part.local_bounds()
        corners = np.array(
            [
                [anchor[0] + bx0, anchor[1] + by0],
                [anchor[0] + bx1, anchor[1] + by0],
                [anchor[0] + bx0, anchor[1] + by1],
                [anchor[0] + bx1, anchor[1] + by1],
            ]
        )
        local = inv.apply_points(corners)
        x0 = max(0, int(math.floor(local[:, 0].min())) - 1)
        x1 = min(w, int(math.ceil(local[:, 0].max())) + 2)
        y0 = max(0, int(math.floor(local[:, 1].min())) - 1)
        y1 = min(h, int(math.ceil(local[:, 1].max())) + 2)
        if x0 >= x1 or y0 >= y1:
            continue
        xs = np.arange(x0, x1, dtype=float)[None, :]
        ys = np.arange(y0, y1, dtype=float)[:, None]
        mx = to_vis.a * xs + to_vis.b * ys + to_vis.tx
        my = to_vis.c * xs + to_vis.d * ys + to_vis.ty
        mask[y0:y1, x0:x1] |= _inside(part, mx - px, my - py)


def _validate(spec: SceneSpec) -> AffineTransform:
    if not 1 <= spec.n_targets <= 5:
        raise ValueError("a scene needs between 1 and 5 targets")
    if spec.frames < 1:
        raise ValueError("a scene needs at least 1 frame")
    if not 0.0 <= spec.modality_dropout < 1.0:
        raise ValueError("modality_dropout must be in [0, 1)")
    if spec.noise_sigma < 0.0:
        raise ValueError("noise_sigma must be >= 0")
    inv = spec.truth.inverse()  # raises when not invertible
    for k, tgt in enumerate(spec.targets):
        if tgt.trajectory.shape != (spec.frames, 2):
            raise ValueError(f"target {k} trajectory must have shape ({spec.frames}, 2)")
        ex, ey = tgt.silhouette.half_extent()
        x = tgt.trajectory[:, 0]
        y = tgt.trajectory[:, 1]
        if (x - ex < 0).any() or (x + ex > spec.width - 1).any() or (y - ey < 0).any() or (
            y + ey > spec.height - 1
        ).any():
            raise ValueError(f"target {k} leaves the visible frame")
        # The infrared footprint is the preimage of the visible one.
        corners = np.stack(
            [
                np.column_stack([x - ex, y - ey]),
                np.column_stack([x + ex, y - ey]),
                np.column_stack([x - ex, y + ey]),
                np.column_stack([x + ex, y + ey]),
            ]
        )
        mapped = inv.apply_points(corners.reshape(-1, 2))
        if (
            (mapped[:, 0] < 0).any()
            or (mapped[:, 0] > spec.width - 1).any()
            or (mapped[:, 1] < 0).any()
            or (mapped[:, 1] > spec.height - 1).any()
        ):
            raise ValueError(f"target {k} leaves the infrared frame")
    return inv


def generate_sequence(spec: SceneSpec) -> SyntheticSequence:
    """Render the scene into both modalities with exact ground truth.

    Returns per-frame visible/infrared frames, per-stream foreground truth
    masks, and per-frame ground-truth (infrared, visible) landmark pairs.
    """
    inv = _validate(spec)
    rng = np.random.default_rng(spec.rng_seed)

    dropped: list[frozenset[int]] = []
    for tgt in spec.targets:
        droppable = [i for i, p in enumerate(tgt.silhouette.parts) if p.droppable]
        k = min(len(droppable), round(spec.modality_dropout * len(tgt.silhouette.parts)))
        if k > 0:
            sel = rng.choice(len(droppable), size=k, replace=False)
            dropped.append(frozenset(droppable[i] for i in sel))
        else:
            dropped.append(frozenset())

    identity = AffineTransform.identity()
    none = frozenset()
    seq = SyntheticSequence(spec=spec, vis_frames=[], ir_frames=[], vis_masks=[], ir_masks=[])
    shape = (spec.height, spec.width)
    for f in range(spec.frames):
        vis_mask = np.zeros(shape, dtype=bool)
        ir_mask = np.zeros(shape, dtype=bool)
        pairs: list[tuple[Point2, Point2]] = []
        for tgt, skip in zip(spec.targets, dropped):
            anchor = tgt.trajectory[f]
            _paint(vis_mask, identity, anchor, tgt.silhouette, none)
            _paint(ir_mask, spec.truth, anchor, tgt.silhouette, skip)
            for lm in tgt.silhouette.landmarks:
                vis_pt = Point2(anchor[0] + lm.x, anchor[1] + lm.y)
                pairs.append((inv.apply(vis_pt), vis_pt))
        vis = np.where(vis_mask, spec.vis_foreground, spec.vis_background).astype(np.float64)
        ir = np.where(ir_mask, spec.ir_foreground, spec.ir_background).astype(np.float64)
        if spec.noise_sigma > 0:
            vis += rng.normal(0.0, spec.noise_sigma, shape)
            ir += rng.normal(0.0, spec.noise_sigma, shape)
        seq.vis_frames.append(GrayFrame(vis, frame_index=f))
        seq.ir_frames.append(GrayFrame(ir, frame_index=f))
        seq.vis_masks.append(vis_mask)
        seq.ir_masks.append(ir_mask)
        seq.truth_pairs.append(pairs)
    return seq


# target count -> (silhouette scale, (x, y) lane anchors, swing amplitude).
# One target per row lane: horizontal swings can never collide, so the
# amplitude stays large relative to the silhouette width (low coverage duty).
_LAYOUTS: dict[int, tuple[float, tuple[tuple[int, int], ...], float]] = {
    1: (0.85, ((160, 120),), 75.0),
    2: (0.80, ((160, 85), (160, 155)), 70.0),
    3: (0.65, ((160, 70), (160, 120), (160, 170)), 70.0),
    4: (0.60, ((160, 54), (160, 98), (160, 142), (160, 186)), 70.0),
    5: (0.50, ((160, 52), (160, 86), (160, 120), (160, 154), (160, 188)), 70.0),
}


def standard_scene(
    n_targets: int,
    *,
    width: int = 320,
    height: int = 240,
    frames: int = 200,
    truth: AffineTransform | None = None,
    dropout: float = 0.0,
    noise_sigma: float = 0.0,
    seed: int = 0,
    speed: float = 3.0,
) -> SceneSpec:
    """Default multi-target scene: row lanes, horizontal oscillation.

    Targets sweep sideways at constant speed with per-target amplitude and
    phase drawn from ``seed``, so lane occupancy decorrelates over time and
    the swing keeps each pixel's coverage duty cycle well under one half,
    which a median warm-up bootstrap needs.
    """
    if n_targets not in _LAYOUTS:
        raise ValueError("n_targets must be between 1 and 5")
    base_scale, lanes, base_amp = _LAYOUTS[n_targets]
    rng = np.random.default_rng(seed)
    targets: list[TargetSpec] = []
    for k in range(n_targets):
        scale = base_scale * (0.94 + 0.12 * rng.random())
        sil = person_silhouette(scale)
        cx, cy = lanes[k]
        amplitude = base_amp + rng.uniform(-3.0, 3.0)
        phase = rng.uniform(0.0, 4.0)
        traj = triangle_wave_trajectory(frames, cx, cy, amplitude, speed, phase, axis="x")
        targets.append(TargetSpec(silhouette=sil, trajectory=traj))
    return SceneSpec(
        width=width,
        height=height,
        frames=frames,
        truth=truth if truth is not None else AffineTransform.identity(),
        targets=targets,
        modality_dropout=dropout,
        noise_sigma=noise_sigma,
        rng_seed=seed,
    )
