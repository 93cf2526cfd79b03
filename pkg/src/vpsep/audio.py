"""Waveform I/O, resampling, STFT geometry, and soft-mask reconstruction.

The analysis geometry is fixed at a 1024-sample Hann window with a
256-sample hop at 16 kHz.  Frames start at t*hop with no centering;
trailing samples that do not fill a whole window are left out of the
frame grid and only tracked through ``original_len``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import AudioError, ShapeMismatchError, WavFormatError

TARGET_RATE = 16000
WINDOW_LEN = 1024
HOP = 256
N_BINS = WINDOW_LEN // 2 + 1

# periodic Hann: only the very first tap is exactly zero, which keeps
# weighted overlap-add well conditioned everywhere else
_WINDOW = signal.get_window("hann", WINDOW_LEN, fftbins=True)

MASK_EPS = 1e-12
# overlap-add normalization is only trusted where the accumulated squared
# window reaches this fraction of its peak; below it samples taper to zero
OLA_REL_FLOOR = 1e-2


@dataclass(frozen=True)
class Waveform:
    """Mono waveform; samples nominally in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise AudioError(f"samples must be 1-D, got ndim={arr.ndim}")
        if not np.all(np.isfinite(arr)):
            raise AudioError("samples contain NaN or Inf")
        if self.sample_rate <= 0:
            raise AudioError(f"sample rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class ComplexSpectrogram:
    """Complex STFT frames (F x T) plus the source signal length."""

    bins: np.ndarray
    original_len: int

    def __post_init__(self):
        arr = np.asarray(self.bins, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[0] != N_BINS:
            raise AudioError(f"expected {N_BINS} bins, got shape {arr.shape}")
        object.__setattr__(self, "bins", arr)

    @property
    def n_frames(self) -> int:
        return self.bins.shape[1]

    def magnitude(self) -> np.ndarray:
        return np.abs(self.bins)

    def phase(self) -> np.ndarray:
        return np.angle(self.bins)


@dataclass(frozen=True)
class MaskPair:
    """Two soft masks in [0,1] that sum to one per t-f cell."""

    m1: np.ndarray
    m2: np.ndarray

    def __post_init__(self):
        m1 = np.asarray(self.m1, dtype=np.float64)
        m2 = np.asarray(self.m2, dtype=np.float64)
        if m1.shape != m2.shape:
            raise ShapeMismatchError(f"mask shapes differ: {m1.shape} vs {m2.shape}")
        if m1.size:
            if m1.min() < 0 or m1.max() > 1 or m2.min() < 0 or m2.max() > 1:
                raise AudioError("masks must lie in [0, 1]")
            if np.max(np.abs(m1 + m2 - 1.0)) > 1e-12:
                raise AudioError("masks must sum to 1 per cell")
        object.__setattr__(self, "m1", m1)
        object.__setattr__(self, "m2", m2)


def resample_to_16k(w: Waveform) -> Waveform:
    """Band-limited downsampling to 16 kHz.

    Polyphase windowed-sinc filter, Kaiser beta=8 with 64 taps per
    phase, cut off at the new Nyquist.  Upsampling is rejected.
    """
    if w.sample_rate == TARGET_RATE:
        return w
    if w.sample_rate < TARGET_RATE:
        raise AudioError(
            f"cannot upsample {w.sample_rate} Hz to {TARGET_RATE} Hz"
        )
    g = math.gcd(w.sample_rate, TARGET_RATE)
    up = TARGET_RATE // g
    down = w.sample_rate // g
    taps = signal.firwin(64 * up + 1, 1.0 / down, window=("kaiser", 8.0))
    out = signal.resample_poly(w.samples, up, down, window=taps)
    return Waveform(out, TARGET_RATE)


def n_frames_for(n_samples: int) -> int:
    if n_samples < WINDOW_LEN:
        raise AudioError(
            f"signal of {n_samples} samples is shorter than one window"
        )
    return 1 + (n_samples - WINDOW_LEN) // HOP


def covered_length(n_samples: int) -> int:
    """Sample count reachable by whole analysis frames."""
    return (n_frames_for(n_samples) - 1) * HOP + WINDOW_LEN


def stft(w: Waveform) -> ComplexSpectrogram:
    """Hann-windowed short-time transform with the fixed 1024/256 grid."""
    if w.sample_rate != TARGET_RATE:
        raise AudioError(f"stft expects {TARGET_RATE} Hz input, got {w.sample_rate}")
    x = w.samples
    t = n_frames_for(len(x))
    idx = np.arange(WINDOW_LEN)[None, :] + HOP * np.arange(t)[:, None]
    frames = x[idx] * _WINDOW
    bins = np.fft.rfft(frames, axis=1).T
    return ComplexSpectrogram(bins, original_len=len(x))


def istft(s: ComplexSpectrogram) -> Waveform:
    """Weighted overlap-add synthesis.

    Each frame is windowed again on synthesis and the result divided by
    the accumulated squared window, so unmodified spectra reconstruct the
    interior of the signal exactly.  Where that accumulation is close to
    zero (the outermost samples of the first and last hop) the division
    would amplify content that modified spectra leak under the window
    taper, so those samples are left undivided and simply taper to zero.
    The returned waveform is padded with zeros up to ``original_len``.
    """
    t = s.n_frames
    frames = np.fft.irfft(s.bins.T, n=WINDOW_LEN, axis=1)
    covered = (t - 1) * HOP + WINDOW_LEN
    num = np.zeros(covered)
    den = np.zeros(covered)
    wsq = _WINDOW * _WINDOW
    for k in range(t):
        sl = slice(k * HOP, k * HOP + WINDOW_LEN)
        num[sl] += frames[k] * _WINDOW
        den[sl] += wsq
    y = num
    live = den > OLA_REL_FLOOR * np.max(den)
    y[live] /= den[live]
    if s.original_len < covered:
        raise AudioError("original_len inconsistent with frame count")
    out = np.zeros(s.original_len)
    out[:covered] = y
    return Waveform(out, TARGET_RATE)


def soft_mask(mag1: np.ndarray, mag2: np.ndarray) -> MaskPair:
    """Ratio masks m_k = mag_k / (mag1 + mag2 + eps), renormalized so the
    pair sums to exactly one; silent cells split evenly."""
    mag1 = np.asarray(mag1, dtype=np.float64)
    mag2 = np.asarray(mag2, dtype=np.float64)
    if mag1.shape != mag2.shape:
        raise ShapeMismatchError(f"shape mismatch: {mag1.shape} vs {mag2.shape}")
    if mag1.size and (mag1.min() < 0 or mag2.min() < 0):
        raise AudioError("magnitudes must be nonnegative")
    total = mag1 + mag2 + MASK_EPS
    m1 = mag1 / total
    m2 = mag2 / total
    s = m1 + m2
    live = s > 0
    m1 = np.where(live, m1 / np.where(live, s, 1.0), 0.5)
    m2 = 1.0 - m1
    return MaskPair(m1, m2)


def apply_mask_and_reconstruct(
    mix: ComplexSpectrogram, masks: MaskPair
) -> tuple[Waveform, Waveform]:
    """Scale the mixture magnitude by each mask, keep the mixture phase,
    and invert both."""
    if masks.m1.shape != mix.bins.shape:
        raise ShapeMismatchError(
            f"mask shape {masks.m1.shape} != spectrogram shape {mix.bins.shape}"
        )
    mag = np.abs(mix.bins)
    phase = np.exp(1j * np.angle(mix.bins))
    s1 = ComplexSpectrogram(masks.m1 * mag * phase, mix.original_len)
    s2 = ComplexSpectrogram(masks.m2 * mag * phase, mix.original_len)
    return istft(s1), istft(s2)


# --- WAV I/O ---------------------------------------------------------------

_FMT_PCM = 0x0001
_FMT_FLOAT = 0x0003
_FMT_EXTENSIBLE = 0xFFFE


def _parse_chunks(data: bytes):
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError("not a RIFF/WAVE file")
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + size]
        if len(body) < size:
            raise WavFormatError(f"truncated {cid!r} chunk")
        yield cid, body
        pos += 8 + size + (size & 1)  # chunks are word-aligned


def _read_wav_channels(path) -> tuple[list[np.ndarray], int]:
    with open(path, "rb") as fh:
        data = fh.read()
    fmt = None
    raw = None
    for cid, body in _parse_chunks(data):
        if cid == b"fmt ":
            if len(body) < 16:
                raise WavFormatError("fmt chunk too short")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
            if fmt[0] == _FMT_EXTENSIBLE and len(body) >= 40:
                (sub,) = struct.unpack_from("<H", body, 24)
                fmt = (sub,) + fmt[1:]
        elif cid == b"data":
            raw = body
    if fmt is None or raw is None:
        raise WavFormatError("missing fmt or data chunk")
    codec, channels, rate, _, block_align, bits = fmt
    if channels < 1:
        raise WavFormatError("no channels")
    if codec == _FMT_PCM and bits == 16:
        flat = np.frombuffer(raw[: len(raw) - len(raw) % 2], dtype="<i2")
        flat = flat.astype(np.float64) / 32768.0
    elif codec == _FMT_FLOAT and bits == 32:
        flat = np.frombuffer(raw[: len(raw) - len(raw) % 4], dtype="<f4")
        flat = flat.astype(np.float64)
    else:
        raise WavFormatError(f"unsupported codec: format={codec:#06x}, bits={bits}")
    usable = len(flat) - len(flat) % channels
    frames = flat[:usable].reshape(-1, channels)
    return [frames[:, c].copy() for c in range(channels)], rate


def wav_read(path, channel: int | None = None) -> Waveform:
    """Read one channel of a PCM16 or float32 WAV file.

    Mono files need no ``channel``; multichannel files require one
    (iKala-style stems keep separate signals per channel).
    """
    chans, rate = _read_wav_channels(path)
    if len(chans) == 1:
        if channel not in (None, 0):
            raise WavFormatError(f"mono file has no channel {channel}")
        picked = chans[0]
    else:
        if channel is None:
            raise WavFormatError(
                f"file has {len(chans)} channels; pick one explicitly"
            )
        if not 0 <= channel < len(chans):
            raise WavFormatError(f"no channel {channel} in {len(chans)}-channel file")
        picked = chans[channel]
    return Waveform(picked, rate)


def wav_read_channels(path) -> list[Waveform]:
    chans, rate = _read_wav_channels(path)
    return [Waveform(c, rate) for c in chans]


def wav_write(path, w: Waveform | list[Waveform], fmt: str = "pcm16") -> None:
    """Write mono (or interleaved multichannel) PCM16/float32 WAV.

    PCM16 uses the int/32768 convention, so data originating from 16-bit
    samples round-trips bit-exactly and anything else is within 1 LSB.
    """
    waves = [w] if isinstance(w, Waveform) else list(w)
    if not waves:
        raise WavFormatError("nothing to write")
    rate = waves[0].sample_rate
    n = len(waves[0])
    if any(x.sample_rate != rate or len(x) != n for x in waves):
        raise WavFormatError("channels must share rate and length")
    frames = np.stack([x.samples for x in waves], axis=1)
    if fmt == "pcm16":
        ints = np.clip(np.round(frames * 32768.0), -32768, 32767).astype("<i2")
        payload = ints.tobytes()
        codec, bits = _FMT_PCM, 16
    elif fmt == "float32":
        payload = frames.astype("<f4").tobytes()
        codec, bits = _FMT_FLOAT, 32
    else:
        raise WavFormatError(f"unknown output format {fmt!r}")
    channels = frames.shape[1]
    block_align = channels * bits // 8
    header = b"".join(
        [
            b"RIFF",
            struct.pack("<I", 36 + len(payload)),
            b"WAVE",
            b"fmt ",
            struct.pack(
                "<IHHIIHH",
                16,
                codec,
                channels,
                rate,
                rate * block_align,
                block_align,
                bits,
            ),
            b"data",
            struct.pack("<I", len(payload)),
        ]
    )
    with open(path, "wb") as fh:
        fh.write(header + payload)
        if len(payload) & 1:
            fh.write(b"\x00")
