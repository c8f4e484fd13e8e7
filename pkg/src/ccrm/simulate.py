"""Synthetic scenes, sweep jitter, noisy captures, and trace calibration.

Scene generators are pure functions of their spec (bitwise reproducible
for a fixed seed) and always emit intensities inside [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import ExtractionError
from .operators import detector_dims, forward
from .types import EncodingMask, FrameCube, Measurement, MotionProfile
from .validation import as_cube_array

__all__ = [
    "SceneSpec",
    "NoiseSpec",
    "gen_scene",
    "gen_motion",
    "simulate_capture",
    "degrade_mask",
    "extract_motion_profile",
]

SCENE_KINDS = ("moving_square", "droplet_train", "sparks")
MOTION_KINDS = ("zero", "sinusoid", "random_walk")


@dataclass
class SceneSpec:
    """Recipe for one synthetic dynamic scene."""

    kind: str
    rows: int = 64
    cols: int = 64
    frames: int = 32
    velocity: float = 1.0
    size: int = 8
    count: int = 1
    seed: int = 0
    color: str = "mono"

    def __post_init__(self):
        if self.kind not in SCENE_KINDS:
            raise ValueError(f"unknown scene kind {self.kind!r}; expected one of {SCENE_KINDS}")
        if min(self.rows, self.cols, self.frames) < 1:
            raise ValueError("scene dims must all be >= 1")
        if not np.isfinite(self.velocity):
            raise ValueError("velocity must be finite")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.size < 1:
            raise ValueError("size must be >= 1")
        if self.color not in ("mono", "rgb"):
            raise ValueError(f"color must be 'mono' or 'rgb', got {self.color!r}")


@dataclass
class NoiseSpec:
    """Additive zero-mean Gaussian detector noise."""

    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


def gen_scene(spec: SceneSpec):
    """Render the scene described by ``spec``.

    Returns one FrameCube for mono specs and a (red, green, blue) triple
    for rgb specs.
    """
    if spec.kind == "moving_square":
        channels = _moving_square(spec)
    elif spec.kind == "droplet_train":
        channels = _droplet_train(spec)
    else:
        channels = _sparks(spec)
    if spec.color == "mono":
        return FrameCube(data=channels[0])
    return tuple(FrameCube(data=c) for c in channels)


def _moving_square(spec: SceneSpec) -> list[np.ndarray]:
    size = spec.size
    if size > min(spec.rows, spec.cols):
        raise ValueError(f"square of size {size} does not fit a {spec.rows}x{spec.cols} field")
    row0 = (spec.rows - size) // 2
    col_start = min(2, spec.cols - size)
    cube = np.zeros((spec.frames, spec.rows, spec.cols), dtype=np.float64)
    for f in range(spec.frames):
        col = col_start + int(round(spec.velocity * f))
        col = min(max(col, 0), spec.cols - size)
        cube[f, row0 : row0 + size, col : col + size] = 1.0
    if spec.color == "rgb":
        return [cube, cube.copy(), cube.copy()]
    return [cube]


def _droplet_train(spec: SceneSpec) -> list[np.ndarray]:
    semi_c = max(1, spec.size // 2)
    semi_r = max(1, spec.size // 3)
    if 2 * semi_c + 1 > spec.cols or 2 * semi_r + 3 > spec.rows:
        raise ValueError(
            f"droplet of size {spec.size} does not fit a {spec.rows}x{spec.cols} field"
        )
    rng = np.random.default_rng(spec.seed)
    step = int(round(spec.velocity))
    rows = rng.integers(semi_r + 1, spec.rows - semi_r - 1, size=spec.count)
    jitter = max(1, spec.cols // (4 * spec.count))
    starts = [
        (round(i * spec.cols / spec.count) + int(rng.integers(0, jitter))) % spec.cols
        for i in range(spec.count)
    ]
    amps = rng.uniform(0.7, 1.0, size=spec.count)
    tints = _tints(rng, spec.count) if spec.color == "rgb" else None

    rr = np.arange(spec.rows)[:, None]
    cc = np.arange(spec.cols)[None, :]
    nch = 3 if spec.color == "rgb" else 1
    cube = np.zeros((nch, spec.frames, spec.rows, spec.cols), dtype=np.float64)
    for f in range(spec.frames):
        for i in range(spec.count):
            cen_c = (starts[i] + f * step) % spec.cols
            dc = (cc - cen_c + spec.cols // 2) % spec.cols - spec.cols // 2
            inside = ((rr - rows[i]) / semi_r) ** 2 + (dc / semi_c) ** 2 <= 1.0
            for ch in range(nch):
                tint = 1.0 if tints is None else tints[i][ch]
                np.maximum(cube[ch, f], inside * (amps[i] * tint), out=cube[ch, f])
    return [cube[ch] for ch in range(nch)]


def _sparks(spec: SceneSpec) -> list[np.ndarray]:
    if spec.size > min(spec.rows, spec.cols):
        raise ValueError(f"spark blob of size {spec.size} does not fit the field")
    rng = np.random.default_rng(spec.seed)
    n = spec.count
    pos0 = np.column_stack(
        [
            rng.uniform(0.45 * spec.rows, 0.7 * spec.rows, size=n),
            rng.uniform(0.2 * spec.cols, 0.8 * spec.cols, size=n),
        ]
    )
    # Upward-biased launch directions; gravity bends them back down.
    vel = np.column_stack(
        [
            rng.uniform(-1.2, -0.3, size=n) * spec.velocity,
            rng.uniform(-0.8, 0.8, size=n) * spec.velocity,
        ]
    )
    gravity = 0.045 * max(abs(spec.velocity), 0.25)
    amps = rng.uniform(0.6, 1.0, size=n)
    tints = _tints(rng, n) if spec.color == "rgb" else [(1.0,)] * n

    sigma_b = max(0.8, spec.size / 4.0)
    reach = 3.0 * sigma_b
    rr = np.arange(spec.rows)[:, None]
    cc = np.arange(spec.cols)[None, :]
    nch = 3 if spec.color == "rgb" else 1
    cube = np.zeros((nch, spec.frames, spec.rows, spec.cols), dtype=np.float64)
    for f in range(spec.frames):
        for i in range(n):
            r = pos0[i, 0] + vel[i, 0] * f + 0.5 * gravity * f * f
            c = pos0[i, 1] + vel[i, 1] * f
            if r < -reach or r > spec.rows + reach or c < -reach or c > spec.cols + reach:
                continue
            blob = np.exp(-(((rr - r) ** 2 + (cc - c) ** 2) / (2.0 * sigma_b**2)))
            blob[blob < np.exp(-4.5)] = 0.0
            for ch in range(nch):
                cube[ch, f] += amps[i] * tints[i][ch] * blob
    np.clip(cube, 0.0, 1.0, out=cube)
    return [cube[ch] for ch in range(nch)]


def _tints(rng: np.random.Generator, count: int) -> list[tuple[float, float, float]]:
    """Random RGB weights with unit peak so tints never push past 1.0."""
    tints = []
    for _ in range(count):
        t = rng.uniform(0.25, 1.0, size=3)
        tints.append(tuple(t / t.max()))
    return tints


def gen_motion(kind: str, frames: int, amplitude: float = 0.0, seed: int = 0) -> MotionProfile:
    """Generate a per-frame vertical jitter profile with offsets[0] = 0."""
    if kind not in MOTION_KINDS:
        raise ValueError(f"unknown motion kind {kind!r}; expected one of {MOTION_KINDS}")
    if frames < 1:
        raise ValueError("frames must be >= 1")
    if amplitude < 0:
        raise ValueError("amplitude must be >= 0")
    if kind == "zero":
        offsets = np.zeros(frames, dtype=np.int64)
    elif kind == "sinusoid":
        f = np.arange(frames)
        offsets = np.rint(amplitude * np.sin(2.0 * np.pi * f / frames)).astype(np.int64)
        offsets -= offsets[0]
    else:
        rng = np.random.default_rng(seed)
        offsets = np.zeros(frames, dtype=np.int64)
        bound = int(np.floor(amplitude))
        for f in range(1, frames):
            step = int(rng.integers(0, 2)) * 2 - 1
            offsets[f] = int(np.clip(offsets[f - 1] + step, -bound, bound))
    return MotionProfile(offsets=offsets)


def simulate_capture(cube, mask: EncodingMask, motion: MotionProfile, noise: NoiseSpec) -> Measurement:
    """Run the forward model and add seeded i.i.d. Gaussian detector noise.

    Noise is applied after the linear model and left unclipped, so noisy
    measurements may dip below zero.
    """
    meas = forward(cube, mask, motion)
    if noise.sigma == 0.0:
        return meas
    rng = np.random.default_rng(noise.seed)
    noisy = meas.data + rng.normal(0.0, noise.sigma, size=meas.data.shape)
    return Measurement(data=noisy, row_origin=meas.row_origin)


def degrade_mask(mask: EncodingMask, blur_sigma: float) -> EncodingMask:
    """Blurred (observed) version of a designed mask.

    Gaussian blur truncated at 3 sigma with a normalized kernel and
    replicate boundaries, clipped back to [0, 1].  The tracer blocks are
    re-clamped to full transparency so the calibration contract survives
    degradation.
    """
    if blur_sigma < 0:
        raise ValueError("blur_sigma must be >= 0")
    if blur_sigma == 0.0:
        values = mask.values.copy()
    else:
        values = gaussian_filter(mask.values, sigma=blur_sigma, mode="nearest", truncate=3.0)
        np.clip(values, 0.0, 1.0, out=values)
    for b in (mask.calib_primary, mask.calib_secondary):
        values[b.row : b.row + b.size, b.col : b.col + b.size] = 1.0
    return EncodingMask(
        values=values,
        calib_primary=mask.calib_primary,
        calib_secondary=mask.calib_secondary,
        style="grey",
    )


def extract_motion_profile(
    static_meas,
    mask: EncodingMask,
    frames: int,
    search_window: int = 5,
) -> MotionProfile:
    """Recover per-frame vertical offsets from a static calibration scan.

    Decodes detector columns left to right.  For frame f, the contributions
    of all earlier frames (whose positions are already known) are peeled
    off column f, leaving a scaled copy of the mask's leading column; the
    tracer-block row position is then the shift maximizing the normalized
    correlation between that residual and the block-anchored leading
    column, searched within ``search_window`` rows of the previous frame's
    position.  When the primary trace is too flat to localize (peak score
    below twice the local median), the wider 4x4 secondary block takes
    over with its higher light throughput.

    Only static, everywhere-positive scenes are supported; a dynamic or
    dark scene raises :class:`ExtractionError` with the failing frame.
    """
    if frames < 1:
        raise ValueError("frames must be >= 1")
    if search_window < 1:
        raise ValueError("search_window must be >= 1")
    if isinstance(static_meas, Measurement):
        y = static_meas.data
    else:
        y = np.asarray(static_meas, dtype=np.float64)
        if y.ndim != 2:
            raise ValueError("measurement must be 2-D")
    m, n = mask.rows, mask.cols
    rows, cols = y.shape
    if cols != n + frames - 1 or rows < m:
        raise ValueError(
            f"measurement {rows}x{cols} is inconsistent with a {m}x{n} mask and {frames} frames"
        )
    span = rows - m

    primary = mask.calib_primary
    secondary = mask.calib_secondary
    tmpl_p = mask.values[:, primary.col]
    tmpl_s = mask.values[:, secondary.col : secondary.col + secondary.size]

    resid = y.copy()
    positions = np.zeros(frames, dtype=np.int64)
    for f in range(frames):
        if f == 0:
            candidates = np.arange(0, span + 1)
        else:
            lo = max(0, positions[f - 1] - search_window)
            hi = min(span, positions[f - 1] + search_window)
            candidates = np.arange(lo, hi + 1)
        # Contrast is judged against a few extra rows of context so a
        # narrow tracking window still yields a meaningful local median.
        context = np.arange(max(0, candidates[0] - 4), min(span, candidates[-1] + 4) + 1)

        pos = _locate(resid[:, f], tmpl_p, candidates, context)
        if pos is None and f + secondary.col + secondary.size <= cols:
            band = resid[:, f + secondary.col : f + secondary.col + secondary.size]
            pos = _locate(band, tmpl_s, candidates, context)
        if pos is None:
            raise ExtractionError(f)
        positions[f] = pos

        # Peel this frame off the remaining columns.  The least-squares
        # scale against the matched column absorbs both the frame gain and
        # the (uniform) scene level, so the subtraction is exact for
        # noiseless static scans.
        col = resid[pos : pos + m, f]
        scale = float(col @ tmpl_p) / float(tmpl_p @ tmpl_p)
        resid[pos : pos + m, f : f + n] -= scale * mask.values

    offsets = positions - positions[0]
    return MotionProfile(offsets=offsets)


def _locate(
    band: np.ndarray,
    template: np.ndarray,
    candidates: np.ndarray,
    context: np.ndarray,
) -> int | None:
    """Best vertical placement of ``template`` inside ``band``.

    Scores every shift in ``context`` by zero-mean normalized correlation,
    picks the argmax restricted to ``candidates``, and returns None when
    the peak does not stand out (peak below twice the local median, or no
    positive correlation at all) so the caller can fall back to the wider
    block.
    """
    if band.ndim == 1:
        band = band[:, None]
    if template.ndim == 1:
        template = template[:, None]
    m = template.shape[0]
    t = template.ravel() - template.mean()
    t_norm = float(np.linalg.norm(t))
    if t_norm == 0.0:
        return None
    scores = {}
    for p in context:
        window = band[p : p + m].ravel()
        w = window - window.mean()
        w_norm = float(np.linalg.norm(w))
        scores[int(p)] = 0.0 if w_norm == 0.0 else float(w @ t) / (w_norm * t_norm)
    cand_scores = np.array([scores[int(p)] for p in candidates])
    best = int(np.argmax(cand_scores))
    peak = float(cand_scores[best])
    if peak <= 0.0:
        return None
    if len(scores) >= 3:
        local = float(np.median(np.abs(np.array(list(scores.values())))))
        if local > 0.0 and peak < 2.0 * local:
            return None
    elif peak < 0.7:
        # Too few placements to measure contrast; demand a decisive match.
        return None
    return int(candidates[best])
