"""Acceptance suite: one test per criterion, one visible pass line each.

Property-based and oracle checks run in seconds; three criteria carry
real training runs (backbone pre-training on a 20-font x 200-word desk
corpus, a 2000-step adversarial run on a 5-writer toy set, and the
8-row loss ablation), which together take roughly half an hour on one
CPU core.  Heavy artifacts are module-scoped fixtures shared across
criteria.
"""

import itertools
import math
import time
from pathlib import Path

import numpy as np
import pytest
import torch
from PIL import Image
from scipy import linalg

import helpers
from conftest import CORPUS_AUGMENT, TRAIN_WORDS, TEST_WRITER_FONTS, TRAIN_WRITER_FONTS, _write_split
from test_evaluation import analytic_fid_oracle, brute_levenshtein, random_spd
from test_network import generator_total_loss
from test_objectives import ctc_oracle
from test_synth_corpus import affine_resample_oracle, grid_points, random_images
from vatr.content import Charset, OutOfCharsetError, default_glyph_table
from vatr.dataset import load_dataset, partition_scenarios, sample_style_set, vocabulary
from vatr.evaluation import BackboneExtractor, cer, corpus_cer, fid, fid_from_stats, fid_per_writer, wer
from vatr.network import (
    ContentGuidedDecoder,
    ConvBackbone,
    ModelConfig,
    build_models,
    decode,
    generate_word_images,
    greedy_ctc_decode,
    image_tensor_to_uint8,
    load_checkpoint,
    uint8_to_image_tensor,
)
from vatr.objectives import (
    LossFlags,
    adv_loss_discriminator,
    adv_loss_generator,
    ctc_required_length,
    cycle_loss,
    htr_loss,
    total_loss,
    writer_class_loss,
)
from vatr.synth_corpus import build_corpus, build_manifest, tps_warp
from vatr.training import (
    GanTrainConfig,
    PretrainConfig,
    load_backbone_checkpoint,
    pretrain_backbone,
    train_gan,
)

torch.set_num_threads(1)

GLYPHS = default_glyph_table()


def announce(capsys, criterion: int, message: str):
    with capsys.disabled():
        print(f"\n[ACCEPTANCE {criterion:02d}] PASS - {message}")


# ---------------------------------------------------------------------------
# Heavy shared fixtures
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def desk_corpus(tmp_path_factory, desk_font_pool):
    """The 20-font x 200-word synthetic corpus used by criterion 7."""
    stems = ["pen", "ink", "page", "word", "note", "line", "hand", "book", "read",
             "write", "tall", "blue", "fast", "slow", "open", "star", "tree",
             "lamp", "door", "moon", "sun", "sky", "rain", "wind", "leaf", "rock",
             "sand", "wave", "fire", "cold", "warm", "soft", "hard", "long",
             "short", "high", "low", "new", "old", "big"]
    words = [a + b for a in stems for b in ["", "s", "er", "ing", "ed"]][:200]
    manifest = build_manifest(desk_font_pool, words, base_seed=5)
    out = tmp_path_factory.mktemp("desk_corpus")
    return build_corpus(manifest, out, shard_size=1000, params=CORPUS_AUGMENT)


@pytest.fixture(scope="module")
def pretrain_run(desk_corpus, tmp_path_factory):
    config = PretrainConfig(steps_per_epoch=250, max_epochs=70, patience=30, seed=0)
    start = time.monotonic()
    result = pretrain_backbone(desk_corpus, config, ModelConfig.desk(),
                               tmp_path_factory.mktemp("pretrain"))
    return {"result": result, "elapsed_s": time.monotonic() - start, "config": config}


@pytest.fixture(scope="module")
def five_writer_split(tmp_path_factory):
    fonts = {**TRAIN_WRITER_FONTS, **TEST_WRITER_FONTS}  # 5 distinct hands
    manifest = _write_split(tmp_path_factory.mktemp("five_writers"), fonts,
                            TRAIN_WORDS, seed0=4000)
    return load_dataset(manifest)


GAN_MODEL_CONFIG = ModelConfig.desk(decoder_channels=48, aux_channels=24)


@pytest.fixture(scope="module")
def gan_run(five_writer_split, pretrain_run, tmp_path_factory):
    config = GanTrainConfig(total_steps=2000, seed=0, checkpoint_every_steps=500)
    assert config.batch_size == 8 and config.lr == 2e-4
    start = time.monotonic()
    result = train_gan(
        five_writer_split, pretrain_run["result"].checkpoint_path,
        GAN_MODEL_CONFIG, config, GLYPHS, tmp_path_factory.mktemp("gan"),
    )
    return {"result": result, "elapsed_s": time.monotonic() - start}


# ---------------------------------------------------------------------------
# Criterion 1: loss formula unit suite, exact to 1e-6, under a minute
# ---------------------------------------------------------------------------


def test_criterion_01_loss_formulas(capsys):
    start = time.monotonic()
    assert adv_loss_discriminator(torch.tensor([1.0]), torch.tensor([-1.0])).item() == pytest.approx(0.0, abs=1e-6)
    assert adv_loss_discriminator(torch.tensor([0.0]), torch.tensor([0.0])).item() == pytest.approx(2.0, abs=1e-6)
    assert adv_loss_discriminator(torch.tensor([-1.0]), torch.tensor([1.0])).item() == pytest.approx(4.0, abs=1e-6)
    assert adv_loss_generator(torch.tensor([2.0])).item() == pytest.approx(-2.0, abs=1e-6)

    assert writer_class_loss(torch.full((4,), 0.25), 1).item() == pytest.approx(math.log(4), abs=1e-6)

    features = torch.randn(5, 7, generator=torch.Generator().manual_seed(0))
    assert cycle_loss(features, features.clone()).item() == pytest.approx(0.0, abs=1e-6)
    other = torch.randn(5, 7, generator=torch.Generator().manual_seed(1))
    assert cycle_loss(features, other).item() == pytest.approx(cycle_loss(other, features).item(), abs=1e-6)
    assert cycle_loss(features, features + 1).item() == pytest.approx(1.0, abs=1e-6)

    breakdown = total_loss(adv=1.0, htr=2.0, writer_class=3.0, cycle=4.0)
    assert breakdown.total == pytest.approx(10.0, abs=1e-6)

    elapsed = time.monotonic() - start
    assert elapsed < 60.0
    announce(capsys, 1, f"hinge/CE/cycle/total formulas exact to 1e-6 in {elapsed:.2f}s")


# ---------------------------------------------------------------------------
# Criterion 2: CTC equals the exhaustive alignment-enumeration oracle
# ---------------------------------------------------------------------------


def test_criterion_02_ctc_oracle_equivalence(capsys):
    rng = np.random.default_rng(2)
    n_cases = 0
    for charset_size in (1, 2, 3):
        charset = Charset(codepoints=[ord("a") + i for i in range(charset_size)])
        blank = len(charset)
        labels = [
            "".join(combo)
            for length in (1, 2)
            for combo in itertools.product(charset.chars(), repeat=length)
        ]
        for t_steps in range(1, 5):
            for label in labels:
                target = tuple(charset.encode(label))
                if ctc_required_length(list(target)) > t_steps:
                    with pytest.raises(ValueError):
                        htr_loss(torch.full((t_steps, charset_size + 1),
                                            1.0 / (charset_size + 1)), label, charset)
                    continue
                probs = rng.uniform(0.05, 1.0, size=(t_steps, charset_size + 1))
                probs /= probs.sum(axis=1, keepdims=True)
                expected = ctc_oracle(probs, target, blank)
                got = htr_loss(torch.tensor(probs), label, charset).item()
                assert got == pytest.approx(expected, abs=1e-6), (charset_size, t_steps, label)
                n_cases += 1
    announce(capsys, 2, f"CTC matches brute-force alignment sums on {n_cases} cases (T<=4, |label|<=2, charset<=3)")


# ---------------------------------------------------------------------------
# Criterion 3: FID oracle
# ---------------------------------------------------------------------------


def test_criterion_03_fid_oracle(capsys):
    assert fid_from_stats([0.0], [[1.0]], [1.0], [[1.0]]) == pytest.approx(1.0, abs=1e-12)

    rng = np.random.default_rng(3)
    x_same = rng.normal(size=(256, 8))
    assert fid(x_same, x_same.copy()) < 1e-8

    mu1, mu2 = rng.normal(size=8), rng.normal(size=8)
    cov1, cov2 = random_spd(8, rng), random_spd(8, rng, scale=1.5)
    xs = rng.multivariate_normal(mu1, cov1, size=10_000)
    ys = rng.multivariate_normal(mu2, cov2, size=10_000)
    expected = analytic_fid_oracle(mu1, cov1, mu2, cov2)
    got = fid(xs, ys)
    rel = abs(got - expected) / expected
    assert rel < 0.05
    announce(capsys, 3, f"sampled dim-8 n=10k FID within {rel * 100:.2f}% of analytic; FID(X,X)<1e-8; 1-D case exact")


# ---------------------------------------------------------------------------
# Criterion 4: edit-distance oracle on 1,000 random pairs
# ---------------------------------------------------------------------------


def test_criterion_04_edit_distance_oracle(capsys):
    rng = np.random.default_rng(4)
    alphabet = list("abc")
    for _ in range(1000):
        hyp = "".join(rng.choice(alphabet, size=rng.integers(0, 9)))
        ref = "".join(rng.choice(alphabet, size=rng.integers(1, 9)))
        expected = brute_levenshtein(hyp, ref)
        assert cer(hyp, ref) == pytest.approx(expected / len(ref), abs=1e-12)

    words = ["inky", "pen", "quill", "nib"]
    for _ in range(200):
        hyp = " ".join(rng.choice(words, size=rng.integers(0, 5)))
        ref = " ".join(rng.choice(words, size=rng.integers(1, 5)))
        expected = brute_levenshtein(tuple(hyp.split()), tuple(ref.split()))
        assert wer(hyp, ref) == pytest.approx(expected / len(ref.split()), abs=1e-12)
    announce(capsys, 4, "CER/WER equal brute-force Levenshtein on 1000 + 200 random pairs")


# ---------------------------------------------------------------------------
# Criterion 5: TPS identity and affine consistency on 20 random images
# ---------------------------------------------------------------------------


def test_criterion_05_tps_properties(capsys):
    rng = np.random.default_rng(5)
    for image in random_images(20, rng):
        pts = grid_points(*image.shape)
        np.testing.assert_array_equal(tps_warp(image, pts, pts), image)

    rng = np.random.default_rng(6)
    worst = 0
    for image in random_images(20, rng):
        h, w = image.shape
        theta = rng.uniform(-0.07, 0.07)
        scale = rng.uniform(0.88, 0.96)
        tx, ty = rng.uniform(1.2, 3.1, size=2)
        c, s = scale * math.cos(theta), scale * math.sin(theta)
        fwd = np.array([[c, -s, tx], [s, c, ty], [0.0, 0.0, 1.0]])
        src = grid_points(h, w, n=4)
        dst = src @ fwd[:2, :2].T + fwd[:2, 2]
        warped = tps_warp(image, src, dst)
        expected = affine_resample_oracle(image, np.linalg.inv(fwd)[:2])
        worst = max(worst, int(np.abs(warped.astype(int) - expected.astype(int)).max()))
    assert worst <= 1
    announce(capsys, 5, f"TPS zero-displacement bit-exact and affine-consistent (max |diff| {worst} level) on 20 images each")


# ---------------------------------------------------------------------------
# Criterion 6: shapes, gradients, parameter counts
# ---------------------------------------------------------------------------


def test_criterion_06_shape_and_gradient_suite(capsys):
    torch.manual_seed(6)
    cfg = ModelConfig.desk(embed_dim=32, heads=2, layers=1, style_samples=2,
                           noise_std=0.0, decoder_channels=32, aux_channels=8,
                           disc_channels=8)
    charset = Charset.from_text("abcdef")
    decoder = ContentGuidedDecoder(cfg, charset=charset)
    style = torch.randn(20, cfg.embed_dim)
    with torch.no_grad():
        for k in range(1, 21):
            out = decode(decoder, torch.randn(k, cfg.embed_dim), style)
            assert out.image.shape == (1, 64, 64 * k), k

    for d, cs in [(32, charset), (32, Charset.from_text("ab")), (64, charset)]:
        probe = ContentGuidedDecoder(ModelConfig.desk(embed_dim=d, heads=2), charset=cs)
        n_params = sum(p.numel() for p in probe.query_proj.parameters())
        assert n_params == 256 * d + d

    torch.manual_seed(7)
    bundle = build_models(
        ModelConfig.desk(embed_dim=32, heads=2, layers=1, style_samples=2,
                         noise_std=0.25, decoder_channels=24, aux_channels=12,
                         disc_channels=8),
        Charset.from_text("abcdefgh"), ["w0", "w1"], glyphs=GLYPHS, seed=7,
    )
    for module in (bundle.style_encoder, bundle.decoder, bundle.discriminator,
                   bundle.recognizer, bundle.writer_classifier):
        module.double().eval()
    g = torch.Generator().manual_seed(8)
    style_images = [torch.rand(1, 64, 48, generator=g, dtype=torch.float64) * 2 - 1
                    for _ in range(2)]
    params = [p for p in bundle.generator_parameters() if p.requires_grad]
    rel = helpers.finite_difference_check(
        lambda: generator_total_loss(bundle, style_images, ["ab", "cd"], writer_idx=0),
        params, n_probe=32, seed=9,
    )
    announce(capsys, 6, f"decode 64x(64k) for k=1..20; query layer 256d+d; finite-diff rel err {rel:.2e} < 1e-3")


# ---------------------------------------------------------------------------
# Criterion 7: pre-training signal on the desk corpus
# ---------------------------------------------------------------------------


def test_criterion_07_pretraining_signal(pretrain_run, capsys):
    result = pretrain_run["result"]
    config = pretrain_run["config"]
    assert config.lr == 2e-5
    assert config.lr_decay_per_step == pytest.approx(10 ** (-1 / 90000), rel=1e-12)
    assert config.patience == 30

    # Schedule closed form at t = 0, 1, 90000.
    param = torch.nn.Parameter(torch.zeros(1))
    opt = torch.optim.Adam([param], lr=config.lr)
    sched = torch.optim.lr_scheduler.ExponentialLR(opt, gamma=config.lr_decay_per_step)
    assert opt.param_groups[0]["lr"] == pytest.approx(2e-5, rel=1e-12)
    param.grad = torch.zeros(1)
    opt.step()
    sched.step()
    assert opt.param_groups[0]["lr"] == pytest.approx(2e-5 * 10 ** (-1 / 90000), rel=1e-9)
    for _ in range(89_999):
        sched.step()
    assert opt.param_groups[0]["lr"] == pytest.approx(2e-6, rel=1e-6)

    assert pretrain_run["elapsed_s"] < 3 * 3600, "must finish within 3h on CPU"
    assert result.best_val_accuracy > 0.90, (
        f"validation font accuracy {result.best_val_accuracy:.3f} <= 0.90"
    )
    announce(capsys, 7, (
        f"20-font x 200-word corpus: val accuracy {result.best_val_accuracy:.3f} > 0.90 "
        f"in {pretrain_run['elapsed_s'] / 60:.1f} min ({result.epochs_run} pseudo-epochs); "
        f"lr schedule exact at t=0,1,90000"
    ))


# ---------------------------------------------------------------------------
# Criterion 8: end-to-end smoke, 2000 adversarial steps
# ---------------------------------------------------------------------------


def _eval_protocol(split, n_words=12, seed=500):
    """Fixed (writer, style images, words, noise seed) tuples for CER/FID."""
    rng = np.random.default_rng(seed)
    vocab = sorted(vocabulary(split))
    plan = []
    for idx, writer in enumerate(sorted(split)):
        style_set = sample_style_set(split[writer], p=GAN_MODEL_CONFIG.style_samples,
                                     seed=seed + idx)
        style_images = [uint8_to_image_tensor(s.image) for s in style_set.images]
        words = [vocab[int(i)] for i in rng.integers(len(vocab), size=n_words)]
        plan.append((writer, style_images, words, seed + 31 * idx))
    return plan


def _generated_cer(bundle, plan):
    pairs = []
    with torch.no_grad():
        for writer, style_images, words, noise_seed in plan:
            images = generate_word_images(bundle, style_images, words, noise_seed=noise_seed)
            for word, image in zip(words, images):
                log_probs = bundle.recognizer(image.unsqueeze(0))
                hyp = greedy_ctc_decode(log_probs, bundle.recognizer.blank, bundle.charset)[0]
                pairs.append((hyp, word))
    return corpus_cer(pairs)


def _generated_fid(bundle, plan, split, extractor):
    real = {w: extractor([s.image for s in split[w]]) for w, _, _, _ in plan}
    fake = {}
    with torch.no_grad():
        for writer, style_images, words, noise_seed in plan:
            images = generate_word_images(bundle, style_images, words, noise_seed=noise_seed)
            fake[writer] = extractor([image_tensor_to_uint8(t) for t in images])
    return fid_per_writer(real, fake)


def test_criterion_08_end_to_end_smoke(gan_run, pretrain_run, five_writer_split, capsys):
    result = gan_run["result"]
    rows = result.metrics_path.read_text().splitlines()
    assert len(rows) == 2001  # header + 2000 steps, so the run was NaN-free
    for row in rows[1:]:
        for value in row.split(",")[1:]:
            assert math.isfinite(float(value))

    payload = load_backbone_checkpoint(pretrain_run["result"].checkpoint_path)
    backbone = ConvBackbone(ModelConfig.desk())
    backbone.load_state_dict(payload["backbone"])
    extractor = BackboneExtractor(backbone, source="synthetic-pretrain")

    bundle_init = load_checkpoint(result.init_checkpoint_path, glyphs=GLYPHS)
    bundle_final = load_checkpoint(result.checkpoint_path, glyphs=GLYPHS)
    plan = _eval_protocol(five_writer_split)

    cer_init = _generated_cer(bundle_init, plan)
    cer_final = _generated_cer(bundle_final, plan)
    assert cer_final < cer_init, f"CER did not improve: {cer_init:.3f} -> {cer_final:.3f}"

    fid_init = _generated_fid(bundle_init, plan, five_writer_split, extractor)
    fid_final = _generated_fid(bundle_final, plan, five_writer_split, extractor)
    assert fid_final < fid_init, f"FID did not improve: {fid_init:.2f} -> {fid_final:.2f}"

    # Checkpoint round trip reproduces generation bit for bit.
    writer, style_images, words, noise_seed = plan[0]
    before = generate_word_images(bundle_final, style_images, words[:3], noise_seed=noise_seed)
    reloaded = load_checkpoint(result.checkpoint_path, glyphs=GLYPHS)
    after = generate_word_images(reloaded, style_images, words[:3], noise_seed=noise_seed)
    for a, b in zip(before, after):
        assert torch.equal(a, b)

    announce(capsys, 8, (
        f"2000 steps NaN-free in {gan_run['elapsed_s'] / 60:.1f} min; "
        f"CER {cer_init:.3f} -> {cer_final:.3f}; per-writer FID {fid_init:.1f} -> {fid_final:.1f}; "
        f"checkpoint round-trip bit-identical"
    ))


# ---------------------------------------------------------------------------
# Criterion 9: all 8 loss-flag ablation rows run
# ---------------------------------------------------------------------------


def test_criterion_09_ablation_rows(toy_handwriting, tmp_path, capsys):
    two_writers = {w: toy_handwriting["train"][w] for w in ("w0", "w1")}
    config = ModelConfig.desk(embed_dim=32, heads=2, layers=1, style_samples=2,
                              noise_std=0.25, decoder_channels=24,
                              aux_channels=12, disc_channels=8)
    rows = LossFlags.ablation_rows()
    assert len(rows) == 8
    for i, flags in enumerate(rows):
        gan = GanTrainConfig(batch_size=3, total_steps=50, seed=i,
                             checkpoint_every_steps=10_000, loss_flags=flags)
        result = train_gan(two_writers, None, config, gan, GLYPHS, tmp_path / f"row{i}")
        assert result.checkpoint_path.exists()
        n_steps = len(result.metrics_path.read_text().splitlines()) - 1
        assert n_steps == 50, f"row {i} ran {n_steps} steps"
    announce(capsys, 9, "all 8 loss-toggle rows (adv fixed on) ran 50 steps each without error")


# ---------------------------------------------------------------------------
# Criterion 10: out-of-charset generation paths
# ---------------------------------------------------------------------------


def test_criterion_10_out_of_charset(gan_run, five_writer_split, tmp_path, capsys):
    bundle = load_checkpoint(gan_run["result"].checkpoint_path, glyphs=GLYPHS)
    style_set = sample_style_set(five_writer_split["w0"],
                                 p=GAN_MODEL_CONFIG.style_samples, seed=0)
    style_images = [uint8_to_image_tensor(s.image) for s in style_set.images]
    images = generate_word_images(bundle, style_images, ["δω"], noise_seed=1)
    assert images[0].shape == (1, 64, 128)

    # The one-hot baseline, trained on the same data, must reject it.
    two_writers = {w: five_writer_split[w] for w in ("w0", "w1")}
    onehot_config = ModelConfig.desk(embed_dim=32, heads=2, layers=1,
                                     style_samples=2, noise_std=0.25,
                                     decoder_channels=24, aux_channels=12,
                                     disc_channels=8, content_mode="one-hot")
    gan = GanTrainConfig(batch_size=3, total_steps=20, seed=0,
                         checkpoint_every_steps=10_000)
    onehot_run = train_gan(two_writers, None, onehot_config, gan, GLYPHS,
                           tmp_path / "onehot")
    onehot_bundle = load_checkpoint(onehot_run.checkpoint_path, glyphs=GLYPHS)
    with pytest.raises(OutOfCharsetError):
        generate_word_images(onehot_bundle, style_images, ["δω"], noise_seed=1)
    announce(capsys, 10, "archetype mode generates 'δω' after toy training; one-hot mode raises OutOfCharsetError")


# ---------------------------------------------------------------------------
# Criterion 11: scenario partition soundness
# ---------------------------------------------------------------------------


def test_criterion_11_scenario_partition_soundness(toy_handwriting, capsys):
    train, test = toy_handwriting["train"], toy_handwriting["test"]
    scenarios = partition_scenarios(train, test)
    train_vocab = vocabulary(train)
    train_writers = set(train)
    n_checked = 0
    for writer, word in scenarios["IV-S"].pairs:
        assert word in train_vocab and writer in train_writers
        n_checked += 1
    for writer, word in scenarios["IV-U"].pairs:
        assert word in train_vocab and writer not in train_writers
        n_checked += 1
    for writer, word in scenarios["OOV-S"].pairs:
        assert word not in train_vocab and writer in train_writers
        n_checked += 1
    for writer, word in scenarios["OOV-U"].pairs:
        assert word not in train_vocab and writer not in train_writers
        n_checked += 1
    assert n_checked == sum(len(s.pairs) for s in scenarios.values())
    announce(capsys, 11, f"IV/OOV x seen/unseen membership verified exhaustively on {n_checked} pairs")
