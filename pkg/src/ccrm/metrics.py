"""Reconstruction quality metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .validation import as_cube_array

__all__ = ["psnr", "centroid_track", "MetricsReport", "compare_cubes"]


def psnr(a, b, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical inputs."""
    if peak <= 0:
        raise ValueError("peak must be > 0")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def centroid_track(cube, threshold: float) -> list[tuple[float, float] | None]:
    """Intensity-weighted centroid of each frame over pixels above threshold.

    Frames with nothing above the threshold yield None.
    """
    if not 0.0 <= threshold < 1.0:
        raise ValueError("threshold must lie in [0, 1)")
    x = as_cube_array(cube)
    rows = np.arange(x.shape[1], dtype=np.float64)[:, None]
    cols = np.arange(x.shape[2], dtype=np.float64)[None, :]
    out: list[tuple[float, float] | None] = []
    for frame in x:
        w = np.where(frame > threshold, frame, 0.0)
        total = w.sum()
        if total == 0.0:
            out.append(None)
            continue
        out.append((float((w * rows).sum() / total), float((w * cols).sum() / total)))
    return out


@dataclass
class MetricsReport:
    """Frame-by-frame comparison of a reconstruction against ground truth."""

    per_frame_psnr: list[float] = field(default_factory=list)
    mean_psnr: float = math.nan
    per_frame_rel_err: list[float] = field(default_factory=list)
    centroid_rms: float = math.nan

    def to_dict(self) -> dict:
        return {
            "per_frame_psnr": self.per_frame_psnr,
            "mean_psnr": self.mean_psnr,
            "per_frame_rel_err": self.per_frame_rel_err,
            "centroid_rms": self.centroid_rms,
        }


def compare_cubes(recon, truth, peak: float = 1.0, threshold: float = 0.5) -> MetricsReport:
    """Per-frame PSNR / relative error plus the RMS centroid distance."""
    a = as_cube_array(recon)
    b = as_cube_array(truth)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    frame_psnr = [psnr(a[f], b[f], peak=peak) for f in range(a.shape[0])]
    rel_err = []
    for f in range(a.shape[0]):
        denom = float(np.linalg.norm(b[f]))
        diff = float(np.linalg.norm(a[f] - b[f]))
        if denom == 0.0:
            rel_err.append(0.0 if diff == 0.0 else math.inf)
        else:
            rel_err.append(diff / denom)
    cent_a = centroid_track(a, threshold)
    cent_b = centroid_track(b, threshold)
    sq = [
        (ra - rb) ** 2 + (ca - cb) ** 2
        for pa, pb in zip(cent_a, cent_b)
        if pa is not None and pb is not None
        for (ra, ca), (rb, cb) in [(pa, pb)]
    ]
    centroid_rms = math.sqrt(sum(sq) / len(sq)) if sq else math.nan
    return MetricsReport(
        per_frame_psnr=frame_psnr,
        mean_psnr=float(np.mean(frame_psnr)),
        per_frame_rel_err=rel_err,
        centroid_rms=centroid_rms,
    )
