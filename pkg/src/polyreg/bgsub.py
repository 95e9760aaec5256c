"""Foreground segmentation by selective running-average background modeling.

Each stream (infrared, visible) gets its own :class:`BackgroundModel`; the
modalities have unrelated intensity statistics, so nothing is shared.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .core import GrayFrame

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


class BackgroundModel:
    """Per-pixel running-average background estimate with selective update.

    During warm-up every frame updates the whole estimate and the output mask
    is forced empty; warm-up frames are also collected so the estimate can be
    re-seeded with their per-pixel median at the first post-warm-up frame,
    which keeps briefly-covered pixels from contaminating the background.
    After warm-up only pixels classified as background are blended, so pixels
    under a foreground object keep their background value (ghost suppression).
    """

    def __init__(
        self,
        learning_rate: float = 0.05,
        threshold: float = 30.0,
        warmup_frames: int = 10,
    ) -> None:
        if not 0.0 < learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if threshold < 0.0:
            raise ValueError("threshold must be >= 0")
        if warmup_frames < 0:
            raise ValueError("warmup_frames must be >= 0")
        self.learning_rate = float(learning_rate)
        self.threshold = float(threshold)
        self.warmup_frames = int(warmup_frames)
        self.mean: np.ndarray | None = None
        self._warmup_stack: list[np.ndarray] = []

    def update_and_segment(self, frame: GrayFrame) -> np.ndarray:
        """Classify foreground pixels of ``frame`` and update the model."""
        f = frame.pixels.astype(np.float64)
        if self.mean is None:
            self.mean = f.copy()
        elif self.mean.shape != f.shape:
            raise ValueError(
                f"frame shape {f.shape} does not match model shape {self.mean.shape}"
            )

        lr = self.learning_rate
        if frame.frame_index < self.warmup_frames:
            self._warmup_stack.append(f)
            self.mean = (1.0 - lr) * self.mean + lr * f
            return np.zeros(f.shape, dtype=bool)

        if self._warmup_stack:
            self.mean = np.median(np.stack(self._warmup_stack), axis=0)
            self._warmup_stack = []

        mask = np.abs(f - self.mean) > self.threshold
        bg = ~mask
        self.mean[bg] = (1.0 - lr) * self.mean[bg] + lr * f[bg]
        return mask


def clean_mask(mask: np.ndarray, min_blob_area: int) -> np.ndarray:
    """One pass of 3x3 majority filtering, then drop small 8-connected blobs.

    Majority filtering never sets a pixel that has fewer than 5 of its 9
    neighborhood cells set, so no foreground appears outside the 1-pixel
    dilation of the input.
    """
    mask = np.asarray(mask, dtype=bool)
    counts = ndimage.convolve(
        mask.astype(np.uint8), np.ones((3, 3), dtype=np.uint8), mode="constant", cval=0
    )
    out = counts >= 5
    if min_blob_area > 1 and out.any():
        labels, n = ndimage.label(out, structure=_EIGHT_CONNECTED)
        if n:
            areas = np.bincount(labels.ravel())
            small = areas < min_blob_area
            small[0] = False
            out[small[labels]] = False
    return out
