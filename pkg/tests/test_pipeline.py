import numpy as np
import pytest

import vpsep.pipeline as pipeline
from vpsep import (
    MODELS,
    N_BINS,
    TARGET_RATE,
    ExperimentConfig,
    ModelCheckpoint,
    VecMatrix,
    Waveform,
    checkpoint_load,
    checkpoint_save,
    evaluate,
    evaluate_ideal,
    init_real_network,
    init_vp_network,
    load_manifest,
    param_count,
    resample_to_16k,
    separate,
    separate_ideal,
    train,
    vp_forward,
)
from vpsep.dataset import load_clip_mixture, load_clip_stems
from vpsep.errors import (
    CheckpointError,
    DatasetError,
    TrainingDivergedError,
    VpsepError,
)
from vpsep.pipeline import checkpoint_summary


def small_cfg(**kw):
    base = dict(model="CVPNN", hidden_width=24, hidden_layers=2,
                batch_frames=64, epochs=2, seed=0)
    base.update(kw)
    return ExperimentConfig(**base)


def fresh_ckpt(model="CVPNN", width=24, layers=2, seed=0):
    cfg = ExperimentConfig(model=model, hidden_width=width, hidden_layers=layers)
    sizes = cfg.network_sizes(N_BINS)
    if cfg.kind == "vp":
        net = init_vp_network(sizes, seed=seed)
    else:
        net = init_real_network(sizes, seed=seed)
    return ModelCheckpoint(model=model, hidden_width=width, hidden_layers=layers,
                           transform=cfg.transform, color_n=cfg.color_n,
                           network=net)


def test_train_zero_epochs_returns_initialization(tiny_corpus):
    cfg = small_cfg(epochs=0)
    ckpt, history = train(cfg, tiny_corpus)
    assert history == []
    assert ckpt.epochs_trained == 0
    assert ckpt.final_j is None
    want = init_vp_network(cfg.network_sizes(N_BINS), seed=[cfg.seed, 0])
    for got, ref in zip(ckpt.network.parameter_planes(),
                        want.parameter_planes()):
        assert np.array_equal(got, ref)


def test_train_history_shrinks(tiny_corpus):
    cfg = small_cfg(epochs=6)
    ckpt, history = train(cfg, tiny_corpus)
    assert len(history) == 6
    assert history[-1] < history[0]
    assert ckpt.final_j == history[-1]
    assert ckpt.epochs_trained == 6
    assert all(np.isfinite(h) for h in history)


def test_train_is_deterministic(tiny_corpus):
    a, ha = train(small_cfg(), tiny_corpus)
    b, hb = train(small_cfg(), tiny_corpus)
    assert ha == hb
    for pa, pb in zip(a.network.parameter_planes(),
                      b.network.parameter_planes()):
        assert np.array_equal(pa, pb)
    c, hc = train(small_cfg(seed=1), tiny_corpus)
    assert hc != ha


def test_train_epoch_callback(tiny_corpus):
    seen = []
    _, history = train(small_cfg(epochs=3), tiny_corpus,
                       on_epoch=lambda e, j: seen.append((e, j)))
    assert [e for e, _ in seen] == [0, 1, 2]
    assert [j for _, j in seen] == history


def test_train_real_model(tiny_corpus):
    cfg = ExperimentConfig(model="DNN1", hidden_width=24, hidden_layers=2,
                           epochs=3, batch_frames=64)
    ckpt, history = train(cfg, tiny_corpus)
    assert ckpt.kind == "real"
    assert history[-1] < history[0]


def test_train_divergence_reported(tiny_corpus, monkeypatch):
    real_loss = pipeline.loss_j

    def poisoned(p1, t1, p2, t2):
        _, grads = real_loss(p1, t1, p2, t2)
        return float("nan"), grads

    monkeypatch.setattr(pipeline, "loss_j", poisoned)
    with pytest.raises(TrainingDivergedError, match="epoch 0"):
        train(small_cfg(epochs=1), tiny_corpus)


def test_separate_preserves_length_and_sum(tiny_corpus):
    ckpt = fresh_ckpt()
    mix = load_clip_mixture(tiny_corpus.test_clips[0])
    est_v, est_m = separate(ckpt, mix)
    assert len(est_v) == len(mix)
    assert len(est_m) == len(mix)
    total = est_v.samples + est_m.samples
    rel = np.max(np.abs(total - mix.samples)) / np.max(np.abs(mix.samples))
    assert rel < 1e-6


def test_separate_odd_length_input(tiny_corpus):
    ckpt = fresh_ckpt()
    full = load_clip_mixture(tiny_corpus.test_clips[0])
    mix = Waveform(full.samples[:17333], TARGET_RATE)
    est_v, est_m = separate(ckpt, mix)
    assert len(est_v) == 17333
    rel = np.max(np.abs(est_v.samples + est_m.samples - mix.samples))
    assert rel / np.max(np.abs(mix.samples)) < 1e-6


def test_separate_resamples_input():
    ckpt = fresh_ckpt()
    rate = 44100
    t = np.arange(rate) / rate
    mix = Waveform(0.4 * np.sin(2 * np.pi * 330 * t), rate)
    est_v, est_m = separate(ckpt, mix)
    want = resample_to_16k(mix)
    assert est_v.sample_rate == TARGET_RATE
    assert len(est_v) == len(want)
    rel = np.max(np.abs(est_v.samples + est_m.samples - want.samples))
    assert rel / np.max(np.abs(want.samples)) < 1e-6


def test_separate_deterministic(tiny_corpus):
    ckpt = fresh_ckpt()
    mix = load_clip_mixture(tiny_corpus.test_clips[1])
    a_v, a_m = separate(ckpt, mix)
    b_v, b_m = separate(ckpt, mix)
    assert np.array_equal(a_v.samples, b_v.samples)
    assert np.array_equal(a_m.samples, b_m.samples)


@pytest.mark.parametrize("model", MODELS)
def test_all_models_train_and_separate(model, tiny_corpus):
    cfg = ExperimentConfig(model=model, hidden_width=16, hidden_layers=1,
                           epochs=1, batch_frames=64)
    ckpt, history = train(cfg, tiny_corpus)
    assert len(history) == 1
    assert param_count(ckpt.network) > 0
    mix = load_clip_mixture(tiny_corpus.test_clips[0])
    est_v, est_m = separate(ckpt, mix)
    rel = np.max(np.abs(est_v.samples + est_m.samples - mix.samples))
    assert rel / np.max(np.abs(mix.samples)) < 1e-6


def test_separate_ideal_soft_and_binary(tiny_corpus):
    entry = tiny_corpus.test_clips[0]
    vocal, music = load_clip_stems(entry)
    mix = load_clip_mixture(entry)
    for kind in ("soft", "binary"):
        est_v, est_m = separate_ideal(mix, vocal, music, kind=kind)
        assert len(est_v) == len(mix)
        err_v = np.sqrt(np.mean((est_v.samples - vocal.samples) ** 2))
        base = np.sqrt(np.mean((mix.samples - vocal.samples) ** 2))
        assert err_v < base  # the oracle must beat the raw mixture
    with pytest.raises(VpsepError):
        separate_ideal(mix, vocal, music, kind="wiener")


def test_evaluate_report_consistency(tiny_corpus):
    ckpt = fresh_ckpt()
    report = evaluate(ckpt, tiny_corpus, filter_len=16, split="test")
    assert report.model == "CVPNN"
    assert report.arch == "24x2"
    assert report.context == 1
    assert len(report.clips) == 4  # 2 clips x 2 sources

    voc = [c for c in report.clips if c.source == "vocal"]
    lengths = np.array([c.n_samples for c in voc], dtype=float)
    w = lengths / lengths.sum()
    assert report.vocal.gnsdr == pytest.approx(
        float(w @ [c.nsdr for c in voc]), abs=1e-12)
    assert report.vocal.gsir == pytest.approx(
        float(w @ [c.sir for c in voc]), abs=1e-12)
    assert report.music.gsar == pytest.approx(
        float(w @ [c.sar for c in report.clips if c.source == "music"]),
        abs=1e-12)


def test_evaluate_table_layout(tiny_corpus):
    ckpt = fresh_ckpt()
    report = evaluate(ckpt, tiny_corpus, filter_len=16)
    table = report.table_tsv()
    lines = table.strip().split("\n")
    assert lines[0] == "model\tarch\tcontext\tGNSDR\tGSIR\tGSAR"
    cols = lines[1].split("\t")
    assert cols[0] == "CVPNN"
    assert cols[1] == "24x2"
    assert cols[2] == "1"
    assert float(cols[3]) == pytest.approx(report.vocal.gnsdr, abs=1e-12)
    per_clip = report.per_clip_tsv()
    assert per_clip.startswith("clip_id\tsource\tn_samples\tSDR\tSIR\tSAR\tNSDR")
    assert len(per_clip.strip().split("\n")) == 5


def test_evaluate_parallel_matches_serial(tiny_corpus):
    ckpt = fresh_ckpt()
    serial = evaluate(ckpt, tiny_corpus, filter_len=16, workers=1)
    parallel = evaluate(ckpt, tiny_corpus, filter_len=16, workers=2)
    assert parallel.vocal.gnsdr == pytest.approx(serial.vocal.gnsdr, abs=1e-9)
    assert [c.clip_id for c in parallel.clips] == [c.clip_id for c in serial.clips]


def test_evaluate_empty_split_raises(tmp_path, tiny_corpus):
    ckpt = fresh_ckpt()
    from vpsep import DatasetManifest

    only_train = DatasetManifest(
        tiny_corpus.root, tuple(tiny_corpus.train_clips))
    with pytest.raises(DatasetError, match="no clips"):
        evaluate(ckpt, only_train, split="test")


def test_evaluate_ideal_reports_oracle_label(tiny_corpus):
    report = evaluate_ideal(tiny_corpus, kind="soft", filter_len=16)
    assert report.model == "IDEAL-soft"
    assert report.arch == "-"
    assert report.vocal.gnsdr > 0.0


def test_checkpoint_roundtrip_preserves_behavior(tiny_corpus, tmp_path):
    ckpt, _ = train(small_cfg(epochs=1), tiny_corpus)
    path = tmp_path / "model.ckpt"
    checkpoint_save(path, ckpt)
    back = checkpoint_load(path)
    assert back.model == ckpt.model
    assert back.arch == ckpt.arch
    assert back.transform == ckpt.transform
    assert back.color_n == ckpt.color_n
    assert back.epochs_trained == 1
    assert back.final_j == ckpt.final_j
    assert back.sizes == ckpt.sizes
    for a, b in zip(ckpt.network.parameter_planes(),
                    back.network.parameter_planes()):
        assert np.array_equal(a, b)
    rng = np.random.default_rng(0)
    x = VecMatrix(*(rng.uniform(0, 1, (N_BINS, 5)) for _ in range(3)))
    ya, _ = vp_forward(ckpt.network, x)
    yb, _ = vp_forward(back.network, x)
    for pa, pb in zip(ya.planes(), yb.planes()):
        assert np.array_equal(pa, pb)


def test_checkpoint_roundtrip_real_model(tiny_corpus, tmp_path):
    cfg = ExperimentConfig(model="DNN3", hidden_width=16, hidden_layers=1,
                           epochs=0)
    ckpt, _ = train(cfg, tiny_corpus)
    path = tmp_path / "real.ckpt"
    checkpoint_save(path, ckpt)
    back = checkpoint_load(path)
    assert back.kind == "real"
    assert back.sizes == [3 * N_BINS, 16, 2 * N_BINS]
    for a, b in zip(ckpt.network.parameter_planes(),
                    back.network.parameter_planes()):
        assert np.array_equal(a, b)


def test_checkpoint_detects_corruption(tmp_path):
    ckpt = fresh_ckpt(width=8, layers=1)
    path = tmp_path / "c.ckpt"
    checkpoint_save(path, ckpt)
    data = bytearray(path.read_bytes())

    flipped = tmp_path / "flipped.ckpt"
    mid = len(data) // 2
    corrupted = bytearray(data)
    corrupted[mid] ^= 0xFF
    flipped.write_bytes(bytes(corrupted))
    with pytest.raises(CheckpointError, match="checksum"):
        checkpoint_load(flipped)

    cut = tmp_path / "cut.ckpt"
    cut.write_bytes(bytes(data[:40]))
    with pytest.raises(CheckpointError):
        checkpoint_load(cut)

    tiny = tmp_path / "tiny.ckpt"
    tiny.write_bytes(b"VPNC\x01")
    with pytest.raises(CheckpointError, match="truncated"):
        checkpoint_load(tiny)

    not_ckpt = tmp_path / "plain.ckpt"
    not_ckpt.write_bytes(b"this is not a checkpoint at all..")
    with pytest.raises(CheckpointError, match="not a model checkpoint"):
        checkpoint_load(not_ckpt)

    import struct

    versioned = bytearray(data)
    struct.pack_into("<I", versioned, 4, 99)
    vpath = tmp_path / "v99.ckpt"
    vpath.write_bytes(bytes(versioned))
    with pytest.raises(CheckpointError, match="version"):
        checkpoint_load(vpath)


def test_checkpoint_expect_model(tmp_path):
    ckpt = fresh_ckpt(model="WVPNN", width=8, layers=1)
    path = tmp_path / "w.ckpt"
    checkpoint_save(path, ckpt)
    loaded = checkpoint_load(path, expect_model="WVPNN")
    assert loaded.model == "WVPNN"
    with pytest.raises(CheckpointError, match="expected"):
        checkpoint_load(path, expect_model="CVPNN")


def test_checkpoint_summary_lines(tmp_path):
    ckpt = fresh_ckpt(width=8, layers=1)
    text = checkpoint_summary(ckpt)
    assert "model: CVPNN" in text
    assert "arch: 8x1" in text
    assert f"parameters: {param_count(ckpt.network)}" in text
    assert "final_j: none" in text


def test_model_checkpoint_sizes_property():
    ckpt = fresh_ckpt(model="DNN3", width=32, layers=2)
    cfg = ExperimentConfig(model="DNN3", hidden_width=32, hidden_layers=2)
    assert ckpt.sizes == cfg.network_sizes(N_BINS)
