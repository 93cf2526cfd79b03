"""Vocal/music separation with vector-valued and plain dense networks.

Magnitude spectra are lifted to three-component vectors (either spectral
coloring or a sliding three-frame window), processed by networks whose
layers combine vector activations and vector weights through cross
products, and decoded back to magnitudes that drive soft ratio masks.
"""

from .audio import (
    HOP,
    N_BINS,
    TARGET_RATE,
    WINDOW_LEN,
    ComplexSpectrogram,
    MaskPair,
    Waveform,
    apply_mask_and_reconstruct,
    covered_length,
    istft,
    n_frames_for,
    resample_to_16k,
    soft_mask,
    stft,
    wav_read,
    wav_read_channels,
    wav_write,
)
from .config import MODEL_SPECS, MODELS, ExperimentConfig, make_config, read_config_file
from .dataset import (
    ClipEntry,
    DatasetManifest,
    build_training_set,
    load_manifest,
    synth_dataset,
    write_manifest,
)
from .errors import (
    AudioError,
    CheckpointError,
    ConfigError,
    DatasetError,
    ShapeMismatchError,
    TrainingDivergedError,
    VpsepError,
    WavFormatError,
)
from .metrics import (
    BssResult,
    Decomposition,
    GlobalMetrics,
    aggregate_global,
    bss_decompose,
    nsdr,
    sdr_only,
    sdr_sir_sar,
)
from .network import (
    RealNetwork,
    VPNetwork,
    init_real_network,
    init_vp_network,
    loss_j,
    param_count,
    real_backward,
    real_forward,
    vp_backward,
    vp_forward,
)
from .optim import AdamState, adam_init, adam_step, sgd_step
from .pipeline import (
    ClipEval,
    EvalReport,
    ModelCheckpoint,
    checkpoint_load,
    checkpoint_save,
    evaluate,
    evaluate_ideal,
    separate,
    separate_ideal,
    train,
)
from .transform import (
    ColorParams,
    MagnitudeMatrix,
    color_decode,
    color_encode,
    denormalize,
    normalize,
    window_decode,
    window_encode,
    window_stack,
)
from .vecmat import Vec3, VecMatrix, cross, dot, vec_matmul, vec_matmul_naive

__version__ = "0.1.0"

__all__ = [
    "AdamState", "AudioError", "BssResult", "CheckpointError", "ClipEntry",
    "ClipEval", "ColorParams", "ComplexSpectrogram", "ConfigError",
    "DatasetError", "DatasetManifest", "Decomposition", "EvalReport",
    "ExperimentConfig",
    "GlobalMetrics", "HOP", "MODELS", "MODEL_SPECS", "MagnitudeMatrix",
    "MaskPair", "ModelCheckpoint", "N_BINS", "RealNetwork",
    "ShapeMismatchError", "TARGET_RATE", "TrainingDivergedError", "Vec3",
    "VecMatrix", "VPNetwork", "VpsepError", "Waveform", "WavFormatError",
    "WINDOW_LEN", "adam_init", "adam_step", "aggregate_global",
    "apply_mask_and_reconstruct", "bss_decompose", "build_training_set",
    "checkpoint_load", "checkpoint_save", "color_decode", "color_encode",
    "covered_length", "cross", "denormalize", "dot", "evaluate",
    "evaluate_ideal", "init_real_network", "init_vp_network", "istft",
    "load_manifest", "loss_j", "make_config", "n_frames_for", "normalize",
    "nsdr", "param_count", "read_config_file", "real_backward",
    "real_forward", "resample_to_16k", "sdr_only", "sdr_sir_sar",
    "separate", "separate_ideal", "sgd_step", "soft_mask", "stft",
    "synth_dataset", "train", "vec_matmul", "vec_matmul_naive",
    "vp_backward", "vp_forward", "wav_read", "wav_read_channels",
    "wav_write", "window_decode", "window_encode", "window_stack",
    "write_manifest",
]
