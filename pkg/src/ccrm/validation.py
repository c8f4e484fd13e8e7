"""Input-coercion and consistency checks shared by operators, solver and CLI.

All helpers raise ``ValueError`` on bad input.  Arrays are returned as
float64 so downstream arithmetic is uniform.
"""

from __future__ import annotations

import numpy as np

from .types import EncodingMask, FrameCube, Measurement, MotionProfile

__all__ = [
    "as_cube_array",
    "as_measurement",
    "check_scene_matches_mask",
    "check_motion_matches_frames",
]


def as_cube_array(cube) -> np.ndarray:
    """Return a (frames, rows, cols) float64 array from a FrameCube or array."""
    if isinstance(cube, FrameCube):
        return cube.data
    arr = np.asarray(cube, dtype=np.float64)
    if arr.ndim != 3:
        raise ValueError(f"cube must be 3-D (frames, rows, cols), got ndim={arr.ndim}")
    if min(arr.shape) < 1:
        raise ValueError(f"cube dims must all be >= 1, got {arr.shape}")
    return arr


def as_measurement(meas, motion: MotionProfile) -> Measurement:
    """Coerce to a Measurement consistent with ``motion``'s row origin."""
    if isinstance(meas, Measurement):
        if meas.row_origin != motion.row_origin:
            raise ValueError(
                f"measurement row_origin {meas.row_origin} does not match the "
                f"motion profile (expected {motion.row_origin})"
            )
        return meas
    return Measurement(data=np.asarray(meas, dtype=np.float64), row_origin=motion.row_origin)


def check_scene_matches_mask(cube: np.ndarray, mask: EncodingMask) -> None:
    if cube.shape[1:] != (mask.rows, mask.cols):
        raise ValueError(
            f"scene frames are {cube.shape[1]}x{cube.shape[2]} but the mask is "
            f"{mask.rows}x{mask.cols}"
        )


def check_motion_matches_frames(motion: MotionProfile, frames: int) -> None:
    if motion.frames != frames:
        raise ValueError(
            f"motion profile has {motion.frames} offsets but {frames} frames were given"
        )
