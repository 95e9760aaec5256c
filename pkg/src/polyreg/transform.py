"""Affine estimation from buffered matches and overlap-ratio selection.

RANSAC repeatedly fits an exact affine to 3 sampled pairs and keeps the
largest consensus, then refits by least squares on the winning inliers. A
candidate replaces the scene transform only when its blob overlap ratio
(intersection over union of warped infrared and visible foreground)
improves on the best seen so far.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AffineTransform, mask_intersection_count, mask_union_count, warp_mask
from .errors import DegenerateFitError, InsufficientDataError
from .matching import MatchPair

_COND_LIMIT = 1e12
_MIN_SAMPLE_AREA = 1.0  # px^2; reject near-collinear 3-point samples


@dataclass(frozen=True)
class RansacParams:
    iterations: int = 500
    inlier_threshold: float = 3.0
    min_inliers: int = 6
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.inlier_threshold <= 0:
            raise ValueError("inlier_threshold must be positive")
        if self.min_inliers < 3:
            raise ValueError("min_inliers must be >= 3")


@dataclass(frozen=True)
class RansacResult:
    transform: AffineTransform
    inlier_indices: np.ndarray  # indices into the input pair list
    mean_residual: float

    @property
    def n_inliers(self) -> int:
        return int(len(self.inlier_indices))


@dataclass(frozen=True)
class RegistrationState:
    """Best transform seen so far for the scene and its overlap ratio."""

    best_transform: AffineTransform | None = None
    best_br: float = 0.0
    frame_of_best: int = -1


def pairs_to_arrays(pairs: list[MatchPair]) -> tuple[np.ndarray, np.ndarray]:
    """Split match pairs into (n, 2) infrared and visible point arrays."""
    ir = np.array([[p.p_ir.x, p.p_ir.y] for p in pairs], dtype=np.float64).reshape(-1, 2)
    vis = np.array([[p.p_vis.x, p.p_vis.y] for p in pairs], dtype=np.float64).reshape(-1, 2)
    return ir, vis


def _fit_affine_arrays(ir: np.ndarray, vis: np.ndarray) -> AffineTransform:
    """Least-squares affine via the normal equations of the linear system.

    The x and y parameter triples decouple and share the same 3x3 Gram
    matrix, so one factorization solves both.
    """
    n = len(ir)
    if n < 3:
        raise DegenerateFitError("affine fit needs at least 3 point pairs")
    x = ir[:, 0]
    y = ir[:, 1]
    g = np.array(
        [
            [np.dot(x, x), np.dot(x, y), x.sum()],
            [np.dot(x, y), np.dot(y, y), y.sum()],
            [x.sum(), y.sum(), float(n)],
        ]
    )
    if not np.all(np.isfinite(g)) or np.linalg.cond(g) > _COND_LIMIT:
        raise DegenerateFitError("point configuration is rank deficient (collinear or coincident)")
    rhs = np.column_stack(
        [
            [np.dot(x, vis[:, 0]), np.dot(y, vis[:, 0]), vis[:, 0].sum()],
            [np.dot(x, vis[:, 1]), np.dot(y, vis[:, 1]), vis[:, 1].sum()],
        ]
    )
    sol = np.linalg.solve(g, rhs)  # columns: (a, b, tx), (c, d, ty)
    return AffineTransform(
        sol[0, 0], sol[1, 0], sol[2, 0], sol[0, 1], sol[1, 1], sol[2, 1]
    )


def fit_affine_lsq(pairs: list[MatchPair]) -> AffineTransform:
    """Affine minimizing the summed squared mapping error over all pairs."""
    ir, vis = pairs_to_arrays(pairs)
    return _fit_affine_arrays(ir, vis)


def _sample_triples(rng: np.random.Generator, n: int, iterations: int) -> np.ndarray:
    """(iterations, 3) index triples, distinct within each row."""
    idx = rng.integers(0, n, size=(iterations, 3))
    while True:
        bad = (
            (idx[:, 0] == idx[:, 1]) | (idx[:, 0] == idx[:, 2]) | (idx[:, 1] == idx[:, 2])
        )
        k = int(bad.sum())
        if not k:
            return idx
        idx[bad] = rng.integers(0, n, size=(k, 3))


def ransac_affine(pairs: list[MatchPair], params: RansacParams) -> RansacResult | None:
    """Robust affine fit over the buffered pairs.

    Per iteration: sample 3 distinct pairs, reject samples whose infrared
    triangle area is below 1 px^2, fit exactly, and count pairs with mapping
    residual <= ``inlier_threshold``. The largest consensus wins (ties:
    lower mean inlier residual, then earlier iteration); its inliers are
    refit by least squares. Returns None when the best consensus is smaller
    than ``min_inliers``.
    """
    if len(pairs) < 3:
        raise InsufficientDataError("RANSAC needs at least 3 point pairs")
    ir, vis = pairs_to_arrays(pairs)
    n = len(pairs)
    rng = np.random.default_rng(params.rng_seed)
    triples = _sample_triples(rng, n, params.iterations)

    p1 = ir[triples[:, 0]]
    p2 = ir[triples[:, 1]]
    p3 = ir[triples[:, 2]]
    area2 = np.abs(
        (p2[:, 0] - p1[:, 0]) * (p3[:, 1] - p1[:, 1])
        - (p2[:, 1] - p1[:, 1]) * (p3[:, 0] - p1[:, 0])
    )
    valid = area2 >= 2.0 * _MIN_SAMPLE_AREA
    if not valid.any():
        return None
    tri = triples[valid]  # (k, 3)

    # Batched exact 3-point fits: M @ (a,b,tx) = u and M @ (c,d,ty) = v.
    m = np.empty((len(tri), 3, 3))
    m[:, :, 0] = ir[tri, 0]
    m[:, :, 1] = ir[tri, 1]
    m[:, :, 2] = 1.0
    sols = np.linalg.solve(m, vis[tri])  # (k, 3, 2)

    thr2 = params.inlier_threshold**2
    best_count = -1
    best_mean = np.inf
    best_model: np.ndarray | None = None
    # Chunk the residual evaluation to bound memory at ~models*pairs floats.
    chunk = max(1, int(2_000_000 // max(n, 1)))
    for lo in range(0, len(tri), chunk):
        s = sols[lo : lo + chunk]  # (c, 3, 2)
        px = s[:, 0, 0, None] * ir[None, :, 0] + s[:, 1, 0, None] * ir[None, :, 1] + s[:, 2, 0, None]
        py = s[:, 0, 1, None] * ir[None, :, 0] + s[:, 1, 1, None] * ir[None, :, 1] + s[:, 2, 1, None]
        r2 = (px - vis[None, :, 0]) ** 2 + (py - vis[None, :, 1]) ** 2
        inl = r2 <= thr2
        counts = inl.sum(axis=1)
        means = np.full(len(counts), np.inf)
        nz = counts > 0
        means[nz] = np.sqrt(np.where(inl, r2, 0.0)).sum(axis=1)[nz] / counts[nz]
        # Stable lexsort keeps the earliest iteration among full ties.
        order = np.lexsort((means, -counts))
        c = order[0]
        cnt = int(counts[c])
        if cnt > best_count or (cnt == best_count and means[c] < best_mean):
            best_count = cnt
            best_mean = float(means[c])
            best_model = s[c]

    if best_model is None or best_count < params.min_inliers:
        return None

    px = best_model[0, 0] * ir[:, 0] + best_model[1, 0] * ir[:, 1] + best_model[2, 0]
    py = best_model[0, 1] * ir[:, 0] + best_model[1, 1] * ir[:, 1] + best_model[2, 1]
    r2 = (px - vis[:, 0]) ** 2 + (py - vis[:, 1]) ** 2
    inlier_idx = np.flatnonzero(r2 <= thr2)
    try:
        refit = _fit_affine_arrays(ir[inlier_idx], vis[inlier_idx])
    except DegenerateFitError:
        return None
    if not refit.is_invertible:
        # A consensus whose refit cannot warp anything is no candidate.
        return None
    return RansacResult(
        transform=refit,
        inlier_indices=inlier_idx,
        mean_residual=float(np.sqrt(r2[inlier_idx]).mean()),
    )


def overlap_ratio(ir_fg: np.ndarray, vis_fg: np.ndarray, t: AffineTransform) -> float:
    """Intersection-over-union of the warped infrared and visible foregrounds."""
    ir_fg = np.asarray(ir_fg, dtype=bool)
    vis_fg = np.asarray(vis_fg, dtype=bool)
    if ir_fg.shape != vis_fg.shape:
        raise ValueError(f"mask dimensions differ: {ir_fg.shape} vs {vis_fg.shape}")
    h, w = vis_fg.shape
    warped = warp_mask(ir_fg, t, w, h)
    union = mask_union_count(warped, vis_fg)
    if union == 0:
        return 0.0
    return mask_intersection_count(warped, vis_fg) / union


def update_registration(
    state: RegistrationState,
    candidate: AffineTransform,
    ir_fg: np.ndarray,
    vis_fg: np.ndarray,
    frame_index: int = -1,
) -> RegistrationState:
    """Adopt ``candidate`` iff its overlap ratio beats the stored best."""
    br = overlap_ratio(ir_fg, vis_fg, candidate)
    if br > state.best_br:
        return RegistrationState(best_transform=candidate, best_br=br, frame_of_best=frame_index)
    return state
