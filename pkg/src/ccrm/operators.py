"""Sensing operator of the CCRM camera and the closed-form camera formulas.

The capture model is a linear map H applied to the scene cube: every frame
is multiplied by the static encoding mask, scaled by its per-frame gain,
shifted one detector column per frame (plus its vertical calibration
offset), and accumulated into the single-exposure detector image.  Each
scene voxel therefore lands on exactly one detector pixel, which is what
makes H H^T diagonal and the solver's data step closed form.
"""

from __future__ import annotations

import math

import numpy as np

from .types import (
    PRIMARY_BLOCK,
    SECONDARY_BLOCK,
    CameraGeometry,
    EncodingMask,
    FrameCube,
    Measurement,
    MotionProfile,
)
from .validation import (
    as_cube_array,
    as_measurement,
    check_motion_matches_frames,
    check_scene_matches_mask,
)

__all__ = [
    "make_mask",
    "detector_dims",
    "forward",
    "adjoint",
    "overlap_weights",
    "compression_ratio",
    "frame_rate",
]

_MIN_MASK_DIM = 8  # room for both tracer blocks at the top-left corner


def make_mask(rows: int, cols: int, style: str = "binary", seed: int = 0) -> EncodingMask:
    """Draw a random encoding mask with the two calibration tracer blocks.

    ``binary`` draws each pixel 0/1 with probability 0.5 (1:1 blocked to
    transparent); ``grey`` draws uniform [0, 1] transmissions.  The 2x2
    primary block at (0, 0) and the 4x4 secondary block at (0, 4) are then
    forced to full transparency.  Deterministic for a fixed seed.
    """
    if style not in ("binary", "grey"):
        raise ValueError(f"unknown mask style {style!r}")
    if rows < _MIN_MASK_DIM or cols < _MIN_MASK_DIM:
        raise ValueError(
            f"mask must be at least {_MIN_MASK_DIM}x{_MIN_MASK_DIM} to hold the "
            f"calibration blocks, got {rows}x{cols}"
        )
    rng = np.random.default_rng(seed)
    if style == "binary":
        values = (rng.random((rows, cols)) < 0.5).astype(np.float64)
    else:
        values = rng.random((rows, cols))
    for b in (PRIMARY_BLOCK, SECONDARY_BLOCK):
        values[b.row : b.row + b.size, b.col : b.col + b.size] = 1.0
    return EncodingMask(values=values, style=style)


def detector_dims(mask: EncodingMask, frames: int, motion: MotionProfile) -> tuple[int, int]:
    """Detector size needed to hold ``frames`` swept copies of the mask.

    Columns grow by one per frame (single-pixel shift); rows grow by the
    span of the vertical offsets so no frame is clipped.
    """
    if frames < 1:
        raise ValueError("frames must be >= 1")
    check_motion_matches_frames(motion, frames)
    return mask.rows + motion.row_span, mask.cols + frames - 1


def forward(cube, mask: EncodingMask, motion: MotionProfile) -> Measurement:
    """Apply the sensing operator: encode, shift, and accumulate all frames.

    Accumulation runs in ascending frame order so results are bitwise
    reproducible.
    """
    x = as_cube_array(cube)
    check_scene_matches_mask(x, mask)
    check_motion_matches_frames(motion, x.shape[0])
    frames, m, n = x.shape
    rows, cols = detector_dims(mask, frames, motion)
    origin = motion.row_origin
    out = np.zeros((rows, cols), dtype=np.float64)
    a = mask.values
    offsets = motion.offsets
    gains = motion.gains
    for f in range(frames):
        r0 = origin + int(offsets[f])
        out[r0 : r0 + m, f : f + n] += gains[f] * (a * x[f])
    return Measurement(data=out, row_origin=origin)


def adjoint(meas, mask: EncodingMask, motion: MotionProfile, frames: int) -> FrameCube:
    """Transpose of :func:`forward`: read each frame's window back out."""
    check_motion_matches_frames(motion, frames)
    y = as_measurement(meas, motion)
    rows, cols = detector_dims(mask, frames, motion)
    if y.data.shape != (rows, cols):
        raise ValueError(
            f"measurement is {y.rows}x{y.cols} but the mask/motion geometry "
            f"requires {rows}x{cols}"
        )
    m, n = mask.rows, mask.cols
    a = mask.values
    origin = y.row_origin
    out = np.empty((frames, m, n), dtype=np.float64)
    for f in range(frames):
        r0 = origin + int(motion.offsets[f])
        out[f] = motion.gains[f] * a * y.data[r0 : r0 + m, f : f + n]
    return FrameCube(data=out)


def overlap_weights(mask: EncodingMask, motion: MotionProfile, frames: int) -> np.ndarray:
    """Per-detector-pixel sum of squared voxel weights (the diagonal of H H^T).

    Returned as a detector-shaped array; strictly positive wherever at
    least one voxel with nonzero mask value maps to the pixel.
    """
    check_motion_matches_frames(motion, frames)
    rows, cols = detector_dims(mask, frames, motion)
    origin = motion.row_origin
    out = np.zeros((rows, cols), dtype=np.float64)
    m, n = mask.rows, mask.cols
    a2 = mask.values**2
    for f in range(frames):
        r0 = origin + int(motion.offsets[f])
        out[r0 : r0 + m, f : f + n] += motion.gains[f] ** 2 * a2
    return out


def compression_ratio(cols_n: int, frames_f: int) -> float:
    """Raw cube size over measurement size along the sweep axis: N*F/(N+F-1)."""
    if cols_n < 1 or frames_f < 1:
        raise ValueError("cols and frames must both be >= 1")
    return cols_n * frames_f / (cols_n + frames_f - 1)


def frame_rate(geom: CameraGeometry) -> float:
    """Capture rate of the sweeping camera in frames per second: 2*pi*R*L/P."""
    return 2.0 * math.pi * geom.rotation_speed_r * geom.arm_length_l / geom.pixel_pitch_p
