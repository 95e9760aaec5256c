"""Vertex matching between infrared and visible polygons.

Matching runs one polygon pair at a time. Candidate vertex pairs must both
be convex, lie within ``ed_max`` pixels of each other, and have interior
angles within ``etheta_max`` degrees; ambiguities are resolved by the
normalized score ``S = alpha * Ed / ed_max + Etheta / etheta_max`` (lower is
better). Only matches on the best-matching polygon pairs survive, and
surviving matches accumulate in a fixed-capacity per-frame FIFO buffer.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .core import Point2
from .descriptors import VertexDescriptor


@dataclass(frozen=True)
class MatchParams:
    """Gates and weights for vertex matching."""

    ed_max: float = 65.0
    etheta_max: float = 40.0
    alpha: float = 1.0
    min_matches_per_polygon: int = 3

    def __post_init__(self) -> None:
        if self.ed_max <= 0 or self.etheta_max <= 0:
            raise ValueError("ed_max and etheta_max must be positive")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.min_matches_per_polygon < 1:
            raise ValueError("min_matches_per_polygon must be >= 1")


@dataclass(frozen=True)
class MatchPair:
    """One matched infrared/visible vertex pair."""

    p_ir: Point2
    p_vis: Point2
    score: float
    frame_index: int = 0


def match_keypoints(
    ir: list[VertexDescriptor],
    vis: list[VertexDescriptor],
    params: MatchParams,
    frame_index: int = 0,
) -> list[MatchPair]:
    """Match the vertices of one infrared polygon against one visible polygon.

    Each infrared keypoint keeps only its lowest-score gated candidate
    (ties: lower visible index); the surviving pairs are then accepted in
    ascending score order (ties: lower infrared index), and a pair whose
    visible keypoint was already taken is dropped.
    """
    best: list[tuple[float, int, int]] = []  # (score, ir index, vis index)
    for i, di in enumerate(ir):
        if not di.convex:
            continue
        choice: tuple[float, int] | None = None
        for j, dj in enumerate(vis):
            if not dj.convex:
                continue
            ed = math.hypot(
                di.position.x - dj.position.x, di.position.y - dj.position.y
            )
            if ed > params.ed_max:
                continue
            etheta = abs(di.theta - dj.theta)
            if etheta > params.etheta_max:
                continue
            s = params.alpha * ed / params.ed_max + etheta / params.etheta_max
            if choice is None or (s, j) < choice:
                choice = (s, j)
        if choice is not None:
            best.append((choice[0], i, choice[1]))

    best.sort()
    out: list[MatchPair] = []
    used_vis: set[int] = set()
    for s, i, j in best:
        if j in used_vis:
            continue
        used_vis.add(j)
        out.append(
            MatchPair(
                p_ir=ir[i].position, p_vis=vis[j].position, score=s, frame_index=frame_index
            )
        )
    return out


@dataclass
class PolygonPairMatches:
    """Matches retained for one assigned (infrared, visible) polygon pair."""

    ir_index: int
    vis_index: int
    matches: list[MatchPair]
    mean_score: float


def best_polygon_pairing(
    ir_polys: list[list[VertexDescriptor]],
    vis_polys: list[list[VertexDescriptor]],
    params: MatchParams,
    frame_index: int = 0,
) -> list[PolygonPairMatches]:
    """Assign polygons greedily by pair quality and keep only their matches.

    Every (infrared, visible) polygon pair is matched independently; pair
    quality is (match count, -mean score), lexicographic. Pairs are assigned
    best-first, each polygon at most once, and pairs with fewer than
    ``min_matches_per_polygon`` matches are dropped.
    """
    candidates: list[tuple[int, float, int, int, list[MatchPair]]] = []
    for i, ir_desc in enumerate(ir_polys):
        for j, vis_desc in enumerate(vis_polys):
            matches = match_keypoints(ir_desc, vis_desc, params, frame_index)
            if len(matches) < params.min_matches_per_polygon:
                continue
            mean_s = sum(m.score for m in matches) / len(matches)
            candidates.append((-len(matches), mean_s, i, j, matches))

    candidates.sort(key=lambda c: c[:4])
    out: list[PolygonPairMatches] = []
    used_ir: set[int] = set()
    used_vis: set[int] = set()
    for neg_count, mean_s, i, j, matches in candidates:
        if i in used_ir or j in used_vis:
            continue
        used_ir.add(i)
        used_vis.add(j)
        out.append(PolygonPairMatches(ir_index=i, vis_index=j, matches=matches, mean_score=mean_s))
    return out


@dataclass
class TemporalBuffer:
    """FIFO of per-frame match buckets, capped at ``capacity_frames``."""

    capacity_frames: int = 30
    _buckets: deque = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.capacity_frames < 1:
            raise ValueError("capacity_frames must be >= 1")
        self._buckets = deque(maxlen=self.capacity_frames)

    def push(self, frame_matches: list[MatchPair]) -> None:
        """Append one frame's matches, evicting the oldest bucket when full."""
        self._buckets.append(list(frame_matches))

    def all_matches(self) -> list[MatchPair]:
        """All buffered matches, oldest bucket first."""
        out: list[MatchPair] = []
        for bucket in self._buckets:
            out.extend(bucket)
        return out

    def __len__(self) -> int:
        return len(self._buckets)

    @property
    def total_matches(self) -> int:
        return sum(len(b) for b in self._buckets)
