"""Domain value types for the coded compressive rotating-mirror (CCRM) camera.

Array-valued fields are float64 / int64 numpy arrays.  The computational
functions in :mod:`ccrm.operators` and :mod:`ccrm.solver` accept either
these wrappers or bare arrays; see :mod:`ccrm.validation`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FrameCube",
    "BlockSpec",
    "EncodingMask",
    "MotionProfile",
    "Measurement",
    "CameraGeometry",
]


@dataclass
class FrameCube:
    """A dynamic scene: ``frames`` images of ``rows`` x ``cols`` intensities.

    Scene intensities are dimensionless, nominally in [0, 1].  Solver
    intermediates reuse this shape with unconstrained sign, so negativity
    is not rejected here; generators and non-negative reconstructions are
    checked where they are produced.
    """

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3:
            raise ValueError(f"cube must be 3-D (frames, rows, cols), got ndim={self.data.ndim}")
        if min(self.data.shape) < 1:
            raise ValueError(f"cube dims must all be >= 1, got {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("cube contains non-finite values")

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def rows(self) -> int:
        return self.data.shape[1]

    @property
    def cols(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class BlockSpec:
    """Square calibration block: origin (row, col) and edge size in pixels."""

    row: int
    col: int
    size: int


# Fixed tracer-block layout: 2x2 primary at the top-left corner, 4x4
# secondary right of it.  Both are fully transparent (value 1.0).
PRIMARY_BLOCK = BlockSpec(row=0, col=0, size=2)
SECONDARY_BLOCK = BlockSpec(row=0, col=4, size=4)


@dataclass
class EncodingMask:
    """Static encoding pattern with embedded calibration tracer blocks."""

    values: np.ndarray
    calib_primary: BlockSpec = PRIMARY_BLOCK
    calib_secondary: BlockSpec = SECONDARY_BLOCK
    style: str = "grey"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError(f"mask must be 2-D, got ndim={self.values.ndim}")
        if self.style not in ("binary", "grey"):
            raise ValueError(f"unknown mask style {self.style!r}")
        v = self.values
        if v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("mask transmissions must lie in [0, 1]")
        pb, sb = self.calib_primary, self.calib_secondary
        for name, b in (("primary", pb), ("secondary", sb)):
            block = v[b.row : b.row + b.size, b.col : b.col + b.size]
            if block.shape != (b.size, b.size):
                raise ValueError(f"{name} calibration block does not fit inside the mask")
            if not np.all(block == 1.0):
                raise ValueError(f"{name} calibration block must be fully transparent (1.0)")
        if _blocks_overlap(pb, sb):
            raise ValueError("calibration blocks overlap")
        if self.style == "binary":
            outside = v.copy()
            outside[pb.row : pb.row + pb.size, pb.col : pb.col + pb.size] = 0.0
            outside[sb.row : sb.row + sb.size, sb.col : sb.col + sb.size] = 0.0
            if not np.all((outside == 0.0) | (outside == 1.0)):
                raise ValueError("binary mask has values other than 0.0/1.0")

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


def _blocks_overlap(a: BlockSpec, b: BlockSpec) -> bool:
    return (
        a.row < b.row + b.size
        and b.row < a.row + a.size
        and a.col < b.col + b.size
        and b.col < a.col + a.size
    )


@dataclass
class MotionProfile:
    """Per-frame sweep calibration: integer vertical offsets, positive gains.

    Frame 0 is the reference, so ``offsets[0]`` must be 0.
    """

    offsets: np.ndarray
    gains: np.ndarray | None = None

    def __post_init__(self):
        self.offsets = np.asarray(self.offsets)
        if self.offsets.ndim != 1 or self.offsets.size < 1:
            raise ValueError("offsets must be a non-empty 1-D sequence")
        if not np.issubdtype(self.offsets.dtype, np.integer):
            rounded = np.rint(np.asarray(self.offsets, dtype=np.float64))
            if not np.array_equal(rounded, np.asarray(self.offsets, dtype=np.float64)):
                raise ValueError("offsets must be integers (whole pixels)")
            self.offsets = rounded
        self.offsets = self.offsets.astype(np.int64)
        if self.offsets[0] != 0:
            raise ValueError("offsets[0] must be 0 (frame 0 is the reference)")
        if self.gains is None:
            self.gains = np.ones(self.offsets.size, dtype=np.float64)
        self.gains = np.asarray(self.gains, dtype=np.float64)
        if self.gains.shape != self.offsets.shape:
            raise ValueError("gains must have the same length as offsets")
        if not np.all(self.gains > 0.0):
            raise ValueError("all gains must be > 0")

    @property
    def frames(self) -> int:
        return self.offsets.size

    @property
    def row_origin(self) -> int:
        """Detector row where a frame with offset 0 lands."""
        return int(-self.offsets.min())

    @property
    def row_span(self) -> int:
        return int(self.offsets.max() - self.offsets.min())

    @classmethod
    def zero(cls, frames: int) -> "MotionProfile":
        return cls(offsets=np.zeros(frames, dtype=np.int64))


@dataclass
class Measurement:
    """Single-exposure detector image plus the reference-row bookkeeping.

    ``row_origin`` is the detector row index where a frame with vertical
    offset 0 lands.  Values may be negative when additive noise undershoots.
    """

    data: np.ndarray
    row_origin: int = 0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValueError(f"measurement must be 2-D, got ndim={self.data.ndim}")
        if min(self.data.shape) < 1:
            raise ValueError(f"measurement dims must all be >= 1, got {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("measurement contains non-finite values")
        self.row_origin = int(self.row_origin)
        if self.row_origin < 0:
            raise ValueError("row_origin must be >= 0")

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class CameraGeometry:
    """Rotating-mirror geometry used by the frame-rate formula.

    rotation_speed_r : mirror rotation speed in rounds per second
    arm_length_l     : orthogonal mirror-to-detector distance in meters
    pixel_pitch_p    : detector pixel width in meters

    The frame-rate formula assumes the pixel pitch is much smaller than
    the arm length; violating ``P < L`` only warns (the arithmetic still
    evaluates) while non-positive dimensions are rejected outright.
    """

    rotation_speed_r: float
    arm_length_l: float
    pixel_pitch_p: float

    def __post_init__(self):
        if self.rotation_speed_r < 0:
            raise ValueError("rotation speed must be >= 0")
        if self.arm_length_l <= 0:
            raise ValueError("arm length must be > 0")
        if self.pixel_pitch_p <= 0:
            raise ValueError("pixel pitch must be > 0")
        if self.pixel_pitch_p >= self.arm_length_l:
            warnings.warn(
                "pixel pitch >= arm length: the small-angle frame-rate formula is not valid",
                stacklevel=2,
            )
