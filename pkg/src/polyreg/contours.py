"""Outer-contour extraction and polygon simplification.

Contours are traced clockwise (as displayed, y down) around the outer border
of each 8-connected foreground component; hole borders are never emitted.
Each contour is reduced to a small polygon by discrete curve evolution: the
vertex with the least relevance ``K = beta * l1 * l2 / (l1 + l2)`` (turn
angle ``beta`` in radians, adjacent segment lengths ``l1``, ``l2``) is
removed until the vertex budget is met, recomputing only the two neighbors
of each removed vertex.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .descriptors import _cross_z

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)

# Moore neighborhood in clockwise on-screen order starting at west.
_RING = ((-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1))
_RING_INDEX = {off: i for i, off in enumerate(_RING)}


@dataclass(eq=False)
class PolygonShape:
    """Clockwise polygon extracted from one foreground blob."""

    vertices: np.ndarray  # (n, 2) float64, (x, y)
    source_blob_id: int = 0
    frame_index: int = 0

    def __post_init__(self) -> None:
        self.vertices = np.asarray(self.vertices, dtype=np.float64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise ValueError("polygon vertices must be an (n, 2) array")
        if len(self.vertices) < 3:
            raise ValueError("a polygon needs at least 3 vertices")

    def __len__(self) -> int:
        return len(self.vertices)


def _trace_outer_border(fg: np.ndarray, start: tuple[int, int]) -> np.ndarray:
    """Moore border following from the topmost-leftmost component pixel.

    ``start`` is (y, x). Returns (n, 2) points as (x, y), clockwise on
    screen, without repeating the start point at the end. The walk stops
    when the opening transition (start pixel to its first successor) is
    about to repeat, which closes the border cycle exactly once even for
    one-pixel-wide structures that are walked out and back.
    """
    h, w = fg.shape
    sy, sx = start

    def is_fg(x: int, y: int) -> bool:
        return 0 <= x < w and 0 <= y < h and fg[y, x]

    def sweep(cx: int, cy: int, bx: int, by: int):
        """First foreground neighbor clockwise after the backtrack cell."""
        start_idx = _RING_INDEX[(bx - cx, by - cy)]
        for k in range(1, 9):
            ox, oy = _RING[(start_idx + k) % 8]
            px, py = cx + ox, cy + oy
            if is_fg(px, py):
                lx, ly = _RING[(start_idx + k - 1) % 8]
                return px, py, cx + lx, cy + ly
        return None

    points: list[tuple[int, int]] = [(sx, sy)]
    first = sweep(sx, sy, sx - 1, sy)  # west of start is background by construction
    if first is None:  # isolated pixel
        return np.array(points, dtype=np.float64)
    cx, cy, bx, by = first
    first_move = (cx, cy)
    points.append(first_move)
    seen: dict[tuple[int, int, int, int], int] = {}
    while True:
        state = (cx, cy, bx, by)
        if state in seen:  # walked a full period; keep exactly one cycle
            points = points[seen[state] :]
            return np.array(points, dtype=np.float64)
        seen[state] = len(points) - 1
        nxt = sweep(cx, cy, bx, by)
        if nxt is None:
            break
        px, py, bx, by = nxt
        if (cx, cy) == (sx, sy) and (px, py) == first_move:
            break
        cx, cy = px, py
        points.append((cx, cy))
    if len(points) > 1 and points[-1] == (sx, sy):
        points.pop()
    return np.array(points, dtype=np.float64)


def extract_outer_contours(mask: np.ndarray, min_area: int = 1) -> list[np.ndarray]:
    """Outer border of every 8-connected component with area >= ``min_area``.

    Returns one (n, 2) clockwise point array per component, in raster order
    of the components' topmost-leftmost pixels. Inner (hole) borders are
    discarded, as are degenerate borders of fewer than 3 points.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return []
    labels, n = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    areas = np.bincount(labels.ravel())
    # scipy's find_objects keeps label order == raster order of first pixels
    out: list[np.ndarray] = []
    for comp in range(1, n + 1):
        if areas[comp] < max(1, min_area):
            continue
        comp_mask = labels == comp
        first = np.argmax(comp_mask)  # row-major => topmost, then leftmost
        start = (first // mask.shape[1], first % mask.shape[1])
        pts = _trace_outer_border(comp_mask, start)
        if len(pts) >= 3:
            out.append(pts)
    return out


def _relevance(prev: np.ndarray, v: np.ndarray, nxt: np.ndarray) -> float:
    """DCE relevance of vertex ``v`` between its current neighbors."""
    d1x = v[0] - prev[0]
    d1y = v[1] - prev[1]
    d2x = nxt[0] - v[0]
    d2y = nxt[1] - v[1]
    l1 = math.hypot(d1x, d1y)
    l2 = math.hypot(d2x, d2y)
    if l1 == 0.0 or l2 == 0.0:
        return 0.0
    cos_b = (d1x * d2x + d1y * d2y) / (l1 * l2)
    cos_b = max(-1.0, min(1.0, cos_b))
    beta = math.acos(cos_b)  # turn angle, radians
    return beta * l1 * l2 / (l1 + l2)


def _dedup_cyclic(points: np.ndarray) -> np.ndarray:
    keep = np.ones(len(points), dtype=bool)
    for i in range(1, len(points)):
        if points[i, 0] == points[i - 1, 0] and points[i, 1] == points[i - 1, 1]:
            keep[i] = False
    pts = points[keep]
    while len(pts) > 1 and pts[0, 0] == pts[-1, 0] and pts[0, 1] == pts[-1, 1]:
        pts = pts[:-1]
    return pts


def dce_simplify(
    contour: np.ndarray,
    target_vertices: int,
    *,
    blob_id: int = 0,
    frame_index: int = 0,
) -> PolygonShape:
    """Reduce a closed contour to at most ``target_vertices`` salient points.

    Least-relevant vertices are removed one at a time; after each removal the
    relevances of the two neighbors are recomputed. Equal relevances are
    broken by removing the smaller contour index. The surviving vertices are
    a subsequence of the input points, in original order.
    """
    if target_vertices < 3:
        raise ValueError("target_vertices must be >= 3")
    pts = _dedup_cyclic(np.asarray(contour, dtype=np.float64))
    n = len(pts)
    if n < 3:
        raise ValueError("a contour needs at least 3 distinct points")

    if n <= target_vertices:
        return PolygonShape(pts.copy(), source_blob_id=blob_id, frame_index=frame_index)

    nxt = list(range(1, n)) + [0]
    prv = [n - 1] + list(range(n - 1))
    alive = [True] * n
    stamp = [0] * n
    heap: list[tuple[float, int, int]] = []
    for i in range(n):
        heapq.heappush(heap, (_relevance(pts[prv[i]], pts[i], pts[nxt[i]]), i, 0))

    remaining = n
    while remaining > target_vertices:
        k, i, s = heapq.heappop(heap)
        if not alive[i] or s != stamp[i]:
            continue
        alive[i] = False
        remaining -= 1
        p, q = prv[i], nxt[i]
        nxt[p] = q
        prv[q] = p
        for j in (p, q):
            stamp[j] += 1
            heapq.heappush(
                heap, (_relevance(pts[prv[j]], pts[j], pts[nxt[j]]), j, stamp[j])
            )

    # Removals can make originally non-adjacent revisits of the same point
    # (pinched blobs) adjacent; a polygon must not carry consecutive
    # duplicates, and fewer than 3 distinct survivors is no polygon at all.
    verts = _dedup_cyclic(pts[np.array(alive)])
    if len(verts) < 3:
        raise ValueError("contour degenerates below 3 distinct vertices")
    return PolygonShape(verts, source_blob_id=blob_id, frame_index=frame_index)


def prune_concave_branches(poly: PolygonShape, branch_len_max: float = 10.0) -> PolygonShape:
    """Drop short concave spurs until the polygon reaches a fixpoint.

    A vertex is removed when it is concave (non-positive cross-product sign
    under the clockwise y-down convention) and both adjacent edges are
    shorter than ``branch_len_max``. Scanning restarts from vertex 0 after
    each removal, and the polygon never shrinks below 3 vertices.
    """
    verts = [tuple(v) for v in poly.vertices]
    changed = True
    while changed and len(verts) > 3:
        changed = False
        n = len(verts)
        for i in range(n):
            p1 = verts[(i - 1) % n]
            p2 = verts[i]
            p3 = verts[(i + 1) % n]
            if _cross_z(p1, p2, p3) > 0.0:
                continue
            l1 = math.hypot(p2[0] - p1[0], p2[1] - p1[1])
            l2 = math.hypot(p3[0] - p2[0], p3[1] - p2[1])
            if l1 < branch_len_max and l2 < branch_len_max:
                del verts[i]
                changed = True
                break
    out = _dedup_cyclic(np.array(verts, dtype=np.float64))
    if len(out) < 3:
        raise ValueError("polygon degenerates below 3 distinct vertices")
    return PolygonShape(
        out,
        source_blob_id=poly.source_blob_id,
        frame_index=poly.frame_index,
    )
