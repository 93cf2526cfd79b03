"""Clip corpus handling: manifest I/O, synthetic stem generation, and
frame extraction for training.

A corpus lives under one root directory:

    <root>/manifest.tsv                  clip_id / split / duration header + rows
    <root>/<clip-id>/mix.wav
    <root>/<clip-id>/vocal.wav
    <root>/<clip-id>/music.wav
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal

from .audio import (
    TARGET_RATE,
    Waveform,
    resample_to_16k,
    stft,
    wav_read,
    wav_write,
)
from .config import ExperimentConfig
from .errors import DatasetError
from .transform import (
    ColorParams,
    color_encode,
    normalize,
    window_encode,
    window_stack,
)
from .vecmat import VecMatrix, vm_take_cols, vm_vstack

MANIFEST_NAME = "manifest.tsv"
MANIFEST_HEADER = ("clip_id", "split", "duration")
SPLITS = ("train", "test")


@dataclass(frozen=True)
class ClipEntry:
    clip_id: str
    split: str
    duration: float
    root: Path

    def __post_init__(self):
        if self.split not in SPLITS:
            raise DatasetError(
                f"clip {self.clip_id!r}: split must be train or test, got {self.split!r}"
            )
        if self.duration <= 0:
            raise DatasetError(f"clip {self.clip_id!r}: nonpositive duration")

    @property
    def clip_dir(self) -> Path:
        return Path(self.root) / self.clip_id

    @property
    def mix_path(self) -> Path:
        return self.clip_dir / "mix.wav"

    @property
    def vocal_path(self) -> Path:
        return self.clip_dir / "vocal.wav"

    @property
    def music_path(self) -> Path:
        return self.clip_dir / "music.wav"


@dataclass(frozen=True)
class DatasetManifest:
    root: Path
    clips: tuple[ClipEntry, ...]

    def split(self, name: str) -> list[ClipEntry]:
        return [c for c in self.clips if c.split == name]

    @property
    def train_clips(self) -> list[ClipEntry]:
        return self.split("train")

    @property
    def test_clips(self) -> list[ClipEntry]:
        return self.split("test")


def load_manifest(root) -> DatasetManifest:
    root = Path(root)
    path = root / MANIFEST_NAME
    if not path.is_file():
        raise DatasetError(f"no {MANIFEST_NAME} under {root}")
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise DatasetError(f"{path}: empty manifest")
    header = tuple(lines[0].rstrip("\n").split("\t"))
    if header != MANIFEST_HEADER:
        raise DatasetError(
            f"{path}: header must be {chr(9).join(MANIFEST_HEADER)!r}"
        )
    clips = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        cols = line.split("\t")
        if len(cols) != 3:
            raise DatasetError(f"{path}:{lineno}: expected 3 tab-separated columns")
        clip_id, split, dur_s = (c.strip() for c in cols)
        if clip_id in seen:
            raise DatasetError(f"{path}:{lineno}: duplicate clip id {clip_id!r}")
        seen.add(clip_id)
        try:
            duration = float(dur_s)
        except ValueError as e:
            raise DatasetError(f"{path}:{lineno}: bad duration {dur_s!r}") from e
        clips.append(ClipEntry(clip_id, split, duration, root))
    return DatasetManifest(root, tuple(clips))


def write_manifest(manifest: DatasetManifest) -> Path:
    path = Path(manifest.root) / MANIFEST_NAME
    rows = ["\t".join(MANIFEST_HEADER)]
    for c in manifest.clips:
        rows.append(f"{c.clip_id}\t{c.split}\t{c.duration:.6f}")
    path.write_text("\n".join(rows) + "\n")
    return path


def _fade_ends(x: np.ndarray, rate: int, fade_s: float = 0.010) -> np.ndarray:
    """Raised-cosine fade at both ends; forces exact zeros at the edges so
    overlap-add reconstruction is lossless from sample 0."""
    n = len(x)
    k = min(int(round(fade_s * rate)), n // 2)
    if k < 1:
        return x
    ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(k) / k)
    y = x.copy()
    y[:k] *= ramp
    y[-k:] *= ramp[::-1]
    return y


def _synth_vocal(rng: np.random.Generator, n: int, rate: int) -> np.ndarray:
    """Vibrato-modulated harmonic tone: a narrowband moving partial stack."""
    t = np.arange(n) / rate
    f0 = rng.uniform(200.0, 380.0)
    vib_rate = rng.uniform(4.5, 6.5)
    vib_depth = rng.uniform(0.006, 0.02)
    inst_f0 = f0 * (1.0 + vib_depth * np.sin(2 * np.pi * vib_rate * t))
    phase = 2 * np.pi * np.cumsum(inst_f0) / rate
    amps = np.array([0.30, 0.15, 0.075]) * rng.uniform(0.85, 1.15, size=3)
    x = np.zeros(n)
    for h, a in enumerate(amps, start=1):
        x += a * np.sin(h * phase + rng.uniform(0, 2 * np.pi))
    return x


def _synth_music(rng: np.random.Generator, n: int, rate: int) -> np.ndarray:
    """Sustained low triad plus lowpassed noise: wideband stationary bed."""
    t = np.arange(n) / rate
    root = rng.uniform(80.0, 105.0)
    x = np.zeros(n)
    for ratio in (1.0, 1.25, 1.5):
        x += 0.11 * np.sin(2 * np.pi * root * ratio * t + rng.uniform(0, 2 * np.pi))
    sos = signal.butter(6, 180.0, btype="low", fs=rate, output="sos")
    x += 0.09 * signal.sosfilt(sos, rng.standard_normal(n))
    return x


def synth_dataset(root, seed: int = 0, n_train: int = 6, n_test: int = 4,
                  duration_s: float = 4.0) -> DatasetManifest:
    """Generate a paired-stem corpus of harmonic 'vocal' and triad-plus-noise
    'music' clips. Deterministic for a given seed; stems are faded to zero at
    the edges and scaled so the mixture stays inside (-1, 1)."""
    root = Path(root)
    if n_train < 1 or n_test < 0:
        raise DatasetError("need at least one training clip")
    if duration_s <= 0.2:
        raise DatasetError("duration_s too short")
    rate = TARGET_RATE
    n = int(round(duration_s * rate))
    clips = []
    for i in range(n_train + n_test):
        rng = np.random.default_rng([seed, i])
        vocal = _fade_ends(_synth_vocal(rng, n, rate), rate)
        music = _fade_ends(_synth_music(rng, n, rate), rate)
        mix = vocal + music
        peak = np.max(np.abs(mix))
        if peak > 0.90:
            g = 0.90 / peak
            vocal, music, mix = vocal * g, music * g, mix * g
        clip_id = f"clip{i:03d}"
        split = "train" if i < n_train else "test"
        entry = ClipEntry(clip_id, split, n / rate, root)
        entry.clip_dir.mkdir(parents=True, exist_ok=True)
        wav_write(entry.vocal_path, Waveform(vocal, rate), fmt="float32")
        wav_write(entry.music_path, Waveform(music, rate), fmt="float32")
        wav_write(entry.mix_path, Waveform(mix, rate), fmt="float32")
        clips.append(entry)
    manifest = DatasetManifest(root, tuple(clips))
    write_manifest(manifest)
    return manifest


def load_clip_stems(entry: ClipEntry) -> tuple[Waveform, Waveform]:
    """Vocal and music stems resampled to the working rate, equal length."""
    vocal = resample_to_16k(wav_read(entry.vocal_path))
    music = resample_to_16k(wav_read(entry.music_path))
    if len(vocal.samples) != len(music.samples):
        raise DatasetError(
            f"clip {entry.clip_id!r}: stem lengths differ "
            f"({len(vocal.samples)} vs {len(music.samples)})"
        )
    return vocal, music


def load_clip_mixture(entry: ClipEntry) -> Waveform:
    if entry.mix_path.is_file():
        return resample_to_16k(wav_read(entry.mix_path))
    vocal, music = load_clip_stems(entry)
    return Waveform(vocal.samples + music.samples, vocal.sample_rate)


def clip_training_frames(entry: ClipEntry, config: ExperimentConfig):
    """Encoded (input, target) column blocks for one clip.

    Inputs are the encoded mixture magnitudes; targets stack the encoded
    vocal magnitudes over the encoded music magnitudes. All three spectra
    share the mixture's normalization scale so the sources stay comparable.
    """
    vocal, music = load_clip_stems(entry)
    mix = Waveform(vocal.samples + music.samples, vocal.sample_rate)
    spec_mix = stft(mix)
    norm_mix = normalize(spec_mix.magnitude())
    norm_voc = normalize(stft(vocal).magnitude(), scale=norm_mix.scale)
    norm_mus = normalize(stft(music).magnitude(), scale=norm_mix.scale)

    if config.transform == "color":
        params = ColorParams(config.color_n)
        x = color_encode(norm_mix, params)
        target = vm_vstack(color_encode(norm_voc, params),
                           color_encode(norm_mus, params))
    elif config.transform == "window" and config.kind == "vp":
        x = window_encode(norm_mix)
        target = vm_vstack(window_encode(norm_voc), window_encode(norm_mus))
    elif config.transform == "window":
        x = window_stack(norm_mix)
        target = np.vstack([norm_voc.data, norm_mus.data])
    else:
        x = norm_mix.data
        target = np.vstack([norm_voc.data, norm_mus.data])
    return x, target


def load_training_frames(manifest: DatasetManifest, config: ExperimentConfig):
    """All training-split frames concatenated along columns, clip order."""
    train = manifest.train_clips
    if not train:
        raise DatasetError("manifest has no training clips")
    xs, ts = [], []
    for entry in train:
        x, t = clip_training_frames(entry, config)
        xs.append(x)
        ts.append(t)
    if isinstance(xs[0], VecMatrix):
        x_all = VecMatrix(*(np.hstack([m.planes()[k] for m in xs]) for k in range(3)))
        t_all = VecMatrix(*(np.hstack([m.planes()[k] for m in ts]) for k in range(3)))
    else:
        x_all = np.hstack(xs)
        t_all = np.hstack(ts)
    return x_all, t_all


def _take_cols(block, idx: np.ndarray):
    if isinstance(block, VecMatrix):
        return vm_take_cols(block, idx)
    return np.ascontiguousarray(block[:, idx])


def make_batches(x_all, t_all, batch_frames: int, rng: np.random.Generator):
    """Shuffle frame columns and slice into minibatches (last one ragged)."""
    n = x_all.cols if isinstance(x_all, VecMatrix) else x_all.shape[1]
    order = rng.permutation(n)
    batches = []
    for start in range(0, n, batch_frames):
        idx = order[start:start + batch_frames]
        batches.append((_take_cols(x_all, idx), _take_cols(t_all, idx)))
    return batches


def build_training_set(manifest: DatasetManifest, config: ExperimentConfig,
                       rng: np.random.Generator | None = None):
    """One shuffled pass of minibatches over the training split."""
    if rng is None:
        rng = np.random.default_rng([config.seed, 1])
    x_all, t_all = load_training_frames(manifest, config)
    return make_batches(x_all, t_all, config.batch_frames, rng)
