"""Frame-by-frame registration pipeline.

Per frame and per stream: segment foreground, clean the mask, trace blob
contours, simplify each to a polygon and prune concave spurs, describe the
vertices, then match the two streams one polygon pair at a time. Surviving
matches feed the temporal buffer; a RANSAC candidate is fit from the whole
buffer and adopted only when its blob overlap ratio improves on the best
seen so far.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bgsub import BackgroundModel, clean_mask
from .config import PipelineParams
from .contours import dce_simplify, extract_outer_contours, prune_concave_branches
from .core import AffineTransform, GrayFrame
from .descriptors import VertexDescriptor, describe_polygon
from .errors import StreamMismatchError
from .matching import MatchPair, TemporalBuffer, best_polygon_pairing
from .transform import RansacResult, RegistrationState, ransac_affine, update_registration


@dataclass
class FrameResult:
    frame_index: int
    vis_mask: np.ndarray
    ir_mask: np.ndarray
    n_matches: int
    state: RegistrationState
    updated: bool


@dataclass
class PipelineRun:
    frames: list[FrameResult]
    state: RegistrationState

    @property
    def best_transform(self) -> AffineTransform | None:
        return self.state.best_transform


def describe_stream_polygons(
    mask: np.ndarray, params: PipelineParams, frame_index: int
) -> list[list[VertexDescriptor]]:
    """Contours -> simplified polygons -> per-vertex descriptor lists.

    Blobs whose simplification collapses below a triangle (pinched,
    line-like shapes) carry no matchable geometry and are skipped.
    """
    out: list[list[VertexDescriptor]] = []
    for blob_id, contour in enumerate(extract_outer_contours(mask, params.dce_min_area)):
        try:
            poly = dce_simplify(
                contour, params.dce_target_vertices, blob_id=blob_id, frame_index=frame_index
            )
            poly = prune_concave_branches(poly, params.dce_branch_len_max)
        except ValueError:
            continue
        out.append(describe_polygon(poly, polygon_id=blob_id))
    return out


class Registrar:
    """Stateful driver holding the background models, buffer, and best state."""

    def __init__(self, params: PipelineParams) -> None:
        self.params = params
        self.vis_model = BackgroundModel(
            params.bg_learning_rate, params.bg_threshold, params.bg_warmup_frames
        )
        self.ir_model = BackgroundModel(
            params.bg_learning_rate, params.bg_threshold, params.bg_warmup_frames
        )
        self.buffer = TemporalBuffer(capacity_frames=params.buffer_capacity)
        self.state = RegistrationState()

    def segment(self, vis: GrayFrame, ir: GrayFrame) -> tuple[np.ndarray, np.ndarray]:
        vis_mask = clean_mask(self.vis_model.update_and_segment(vis), self.params.bg_min_blob_area)
        ir_mask = clean_mask(self.ir_model.update_and_segment(ir), self.params.bg_min_blob_area)
        return vis_mask, ir_mask

    def match_frame(
        self, vis_mask: np.ndarray, ir_mask: np.ndarray, frame_index: int
    ) -> list[MatchPair]:
        vis_polys = describe_stream_polygons(vis_mask, self.params, frame_index)
        ir_polys = describe_stream_polygons(ir_mask, self.params, frame_index)
        paired = best_polygon_pairing(ir_polys, vis_polys, self.params.match, frame_index)
        matches: list[MatchPair] = []
        for pair in paired:
            matches.extend(pair.matches)
        return matches

    def estimate(self) -> RansacResult | None:
        pairs = self.buffer.all_matches()
        if len(pairs) < max(3, self.params.ransac.min_inliers):
            return None
        return ransac_affine(pairs, self.params.ransac)

    def step(self, vis: GrayFrame, ir: GrayFrame) -> FrameResult:
        if vis.pixels.shape != ir.pixels.shape:
            raise StreamMismatchError(
                f"frame {vis.frame_index}: visible {vis.pixels.shape} vs infrared {ir.pixels.shape}"
            )
        frame_index = vis.frame_index
        vis_mask, ir_mask = self.segment(vis, ir)
        matches = self.match_frame(vis_mask, ir_mask, frame_index)
        self.buffer.push(matches)
        candidate = self.estimate()
        updated = False
        if candidate is not None:
            new_state = update_registration(
                self.state, candidate.transform, ir_mask, vis_mask, frame_index=frame_index
            )
            updated = new_state is not self.state
            self.state = new_state
        return FrameResult(
            frame_index=frame_index,
            vis_mask=vis_mask,
            ir_mask=ir_mask,
            n_matches=len(matches),
            state=self.state,
            updated=updated,
        )


def register_streams(
    vis_frames: list[GrayFrame],
    ir_frames: list[GrayFrame],
    params: PipelineParams,
    on_frame=None,
) -> PipelineRun:
    """Run the full pipeline over two in-memory streams of equal length."""
    if len(vis_frames) != len(ir_frames):
        raise StreamMismatchError(
            f"stream lengths differ: visible {len(vis_frames)} vs infrared {len(ir_frames)}"
        )
    reg = Registrar(params)
    results: list[FrameResult] = []
    for vis, ir in zip(vis_frames, ir_frames):
        res = reg.step(vis, ir)
        results.append(res)
        if on_frame is not None:
            on_frame(res)
    return PipelineRun(frames=results, state=reg.state)
