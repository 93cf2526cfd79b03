"""Dimensionality transforms between real magnitudes and 3-vector inputs.

Two encoders are provided.  The context-window encoder packs the
previous/current/next spectrogram frame of each t-f cell into a vector;
its decoder simply reads back the middle component.  The color encoder
maps each normalized magnitude onto an RGB ramp (the piecewise-linear
limit of a hot colormap); its decoder projects an arbitrary RGB triple
back onto that curve, which for on-curve points is the exact inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError, VpsepError
from .vecmat import VecMatrix

SCALE_FLOOR = 1e-12


@dataclass(frozen=True)
class MagnitudeMatrix:
    """Normalized magnitude spectrogram (entries in [0,1]) plus the
    per-clip factor that restores raw magnitudes."""

    data: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeMismatchError(f"magnitudes must be 2-D, got ndim={arr.ndim}")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise VpsepError("normalized magnitudes must lie in [0, 1]")
        if not self.scale > 0:
            raise VpsepError(f"scale must be positive, got {self.scale}")
        object.__setattr__(self, "data", arr)


@dataclass(frozen=True)
class ColorParams:
    """Bias of the RGB ramp; the third segment needs 1 - 2n > 0."""

    n: float = 0.0938

    def __post_init__(self):
        if not 0.0 < self.n < 0.5:
            raise VpsepError(f"color bias must lie in (0, 0.5), got {self.n}")


def normalize(mag: np.ndarray, scale: float | None = None) -> MagnitudeMatrix:
    """Scale raw magnitudes into [0,1].

    With ``scale=None`` the clip's own maximum is used (floored at
    1e-12); pass the mixture's scale explicitly to normalize source
    targets, whose occasional overshoot is clamped to 1.
    """
    mag = np.asarray(mag, dtype=np.float64)
    if mag.size and mag.min() < 0.0:
        raise VpsepError("magnitudes must be nonnegative")
    if scale is None:
        scale = max(float(mag.max()) if mag.size else 0.0, SCALE_FLOOR)
    if not scale > 0:
        raise VpsepError(f"scale must be positive, got {scale}")
    return MagnitudeMatrix(np.clip(mag / scale, 0.0, 1.0), scale)


def denormalize(s: MagnitudeMatrix) -> np.ndarray:
    return s.data * s.scale


def window_frames(data: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(previous, current, next) frame copies with edge replication."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] < 1:
        raise ShapeMismatchError("need at least one frame column")
    prev = np.concatenate([data[:, :1], data[:, :-1]], axis=1)
    nxt = np.concatenate([data[:, 1:], data[:, -1:]], axis=1)
    return prev, data.copy(), nxt


def window_encode(s: MagnitudeMatrix) -> VecMatrix:
    """Context-window encoding: planes are the previous, current, and
    subsequent frames; first/last frames replicate the edge."""
    prev, cur, nxt = window_frames(s.data)
    return VecMatrix(prev, cur, nxt)


def window_decode(v: VecMatrix, scale: float = 1.0) -> MagnitudeMatrix:
    """The current-frame plane, clamped to [0,1]."""
    return MagnitudeMatrix(np.clip(v.p2, 0.0, 1.0), scale)


def window_stack(s: MagnitudeMatrix) -> np.ndarray:
    """Real-valued context of 3 frames stacked along frequency (3F x T),
    the input layout of the context-3 real baseline."""
    prev, cur, nxt = window_frames(s.data)
    return np.vstack([prev, cur, nxt])


def _ramp(x: np.ndarray, n: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    r = np.clip(x / n, 0.0, 1.0)
    g = np.clip((x - n) / n, 0.0, 1.0)
    b = np.clip((x - 2.0 * n) / (1.0 - 2.0 * n), 0.0, 1.0)
    return r, g, b


def color_encode(s: MagnitudeMatrix, p: ColorParams = ColorParams()) -> VecMatrix:
    """Map each magnitude x in [0,1] to an RGB triple on the ramp:
    r = clamp(x/n), g = clamp((x-n)/n), b = clamp((x-2n)/(1-2n))."""
    x = s.data
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise VpsepError("color encoding needs magnitudes in [0, 1]")
    r, g, b = _ramp(x, p.n)
    return VecMatrix(r, g, b)


def color_decode(
    v: VecMatrix, p: ColorParams = ColorParams(), scale: float = 1.0
) -> MagnitudeMatrix:
    """Project RGB triples back onto the ramp and return the curve
    parameter x in [0,1].

    The curve is three axis-aligned segments; the nearest point on each
    is a clamped coordinate projection, so the global nearest-curve x is
    exact.  On-curve inputs therefore invert the encoder; off-curve
    network outputs are projected, never rejected.
    """
    r, g, b = v.planes()
    n = p.n

    t1 = np.clip(r, 0.0, 1.0)
    d1 = (r - t1) ** 2 + g**2 + b**2
    x1 = t1 * n

    t2 = np.clip(g, 0.0, 1.0)
    d2 = (r - 1.0) ** 2 + (g - t2) ** 2 + b**2
    x2 = n + t2 * n

    t3 = np.clip(b, 0.0, 1.0)
    d3 = (r - 1.0) ** 2 + (g - 1.0) ** 2 + (b - t3) ** 2
    x3 = 2.0 * n + t3 * (1.0 - 2.0 * n)

    dist = np.stack([d1, d2, d3])
    xs = np.stack([x1, x2, x3])
    pick = np.argmin(dist, axis=0)
    x = np.take_along_axis(xs, pick[None], axis=0)[0]
    return MagnitudeMatrix(np.clip(x, 0.0, 1.0), scale)
