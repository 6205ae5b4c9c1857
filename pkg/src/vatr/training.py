"""Training orchestration.

Two stages: (a) supervised pre-training of the style backbone as a font
classifier on the synthetic corpus (adaptive-moment optimizer, per-step
exponential decay, early stopping on validation accuracy), and (b)
adversarial training of the full generator against the discriminator,
text recognizer and writer classifier, with per-term loss toggles.

Each alternating step first updates the auxiliary networks (the
discriminator sees real and generated images; the recognizer and writer
classifier train on real images only), then updates the generator
through every enabled loss on its generated batch.
"""

from __future__ import annotations

import copy
import logging
import math
from configparser import ConfigParser
from dataclasses import dataclass, field, fields, asdict
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .content import Charset, GlyphTable
from .dataset import StyleSet, WordSample, all_samples, char_frequency, sample_style_set
from .network import (
    ConvBackbone,
    ModelBundle,
    ModelConfig,
    build_models,
    decode,
    generate_word_images,
    image_tensor_to_uint8,
    load_checkpoint,
    save_checkpoint,
    uint8_to_image_tensor,
)
from .objectives import (
    LossFlags,
    adv_loss_discriminator,
    adv_loss_generator,
    batched_htr_loss,
    cycle_loss,
    total_loss,
)
from .synth_corpus import CorpusIndex

logger = logging.getLogger(__name__)

# Second argument of train_gan: pre-train the backbone on writer identity
# of the real dataset instead of loading a synthetic-corpus checkpoint.
WRITER_PRETRAIN = "writer-pretrain"

BACKBONE_CHECKPOINT_VERSION = 1
METRICS_HEADER = "step,adv_d,adv_g,htr,class,cycle,total"


class TrainingDiverged(RuntimeError):
    """A loss went non-finite; carries the last good checkpoint path."""

    def __init__(self, step: int, last_checkpoint: Path | None):
        self.step = step
        self.last_checkpoint = last_checkpoint
        where = f"last good checkpoint: {last_checkpoint}" if last_checkpoint else "no checkpoint saved yet"
        super().__init__(f"non-finite loss at step {step}; {where}")


@dataclass
class PretrainConfig:
    """Backbone pre-training schedule; defaults follow the full-scale recipe."""

    batch_size: int = 32
    lr: float = 2e-5
    lr_decay_per_step: float = 10.0 ** (-1.0 / 90000.0)
    patience: int = 30  # pseudo-epochs without val improvement
    steps_per_epoch: int = 1000
    max_epochs: int = 1000
    val_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if min(self.batch_size, self.steps_per_epoch, self.max_epochs) <= 0:
            raise ValueError("batch_size, steps_per_epoch and max_epochs must be positive")
        if self.lr <= 0 or not (0 < self.lr_decay_per_step <= 1):
            raise ValueError("lr must be positive and decay in (0, 1]")
        if self.patience < 0:
            raise ValueError("patience must be >= 0")


@dataclass
class GanTrainConfig:
    """Adversarial training schedule; lr 2e-4, batch 8 as in the recipe."""

    batch_size: int = 8
    lr: float = 2e-4
    epochs: int = 7000
    steps_per_epoch: int = 1000
    total_steps: int | None = None  # desk override; defaults to epochs * steps_per_epoch
    loss_flags: LossFlags = field(default_factory=LossFlags)
    seed: int = 0
    checkpoint_every_steps: int = 500
    cycle_detach_real: bool = True
    style_seed: int = 0  # style-set sampling stream

    def __post_init__(self):
        if min(self.batch_size, self.epochs, self.steps_per_epoch) <= 0:
            raise ValueError("batch_size, epochs and steps_per_epoch must be positive")
        if self.lr <= 0:
            raise ValueError("lr must be positive")

    @property
    def steps(self) -> int:
        return self.total_steps if self.total_steps is not None else self.epochs * self.steps_per_epoch


class FontClassifier(nn.Module):
    """Backbone + pooled linear head used for style pre-training."""

    def __init__(self, model_config: ModelConfig, n_classes: int):
        super().__init__()
        self.backbone = ConvBackbone(model_config)
        self.head = nn.Linear(self.backbone.out_channels, n_classes)

    def forward(self, images: torch.Tensor, widths: torch.Tensor | None = None) -> torch.Tensor:
        feat = self.backbone(images)
        if widths is None:
            pooled = feat.mean(dim=(2, 3))
        else:
            factor = images.shape[-1] / feat.shape[-1]
            valid = torch.clamp(
                torch.ceil(torch.as_tensor(widths, dtype=torch.float32) / factor).long(),
                min=1, max=feat.shape[-1],
            )
            mask = (torch.arange(feat.shape[-1])[None, :] < valid[:, None]).float()
            mask = mask[:, None, None, :]
            pooled = (feat * mask).sum(dim=(2, 3)) / (mask.sum(dim=(2, 3)) * feat.shape[2])
        return self.head(pooled)


def pad_image_batch(images: list[torch.Tensor]) -> tuple[torch.Tensor, torch.Tensor]:
    """Stack variable-width (1, 64, w) tensors, padding with white (+1)."""
    widths = torch.tensor([img.shape[-1] for img in images])
    batch = torch.full((len(images), 1, images[0].shape[-2], int(widths.max())), 1.0)
    for i, img in enumerate(images):
        batch[i, :, :, : img.shape[-1]] = img
    return batch, widths


def save_backbone_checkpoint(path: str | Path, model_config: ModelConfig,
                             classifier: FontClassifier, n_classes: int,
                             history: list) -> None:
    torch.save({
        "format_version": BACKBONE_CHECKPOINT_VERSION,
        "model_config": asdict(model_config),
        "n_classes": n_classes,
        "backbone": classifier.backbone.state_dict(),
        "head": classifier.head.state_dict(),
        "history": history,
    }, str(path))


def load_backbone_checkpoint(path: str | Path) -> dict:
    payload = torch.load(str(path), map_location="cpu", weights_only=False)
    if payload.get("format_version") != BACKBONE_CHECKPOINT_VERSION:
        raise ValueError(f"unsupported backbone checkpoint version {payload.get('format_version')!r}")
    return payload


@dataclass
class PretrainResult:
    checkpoint_path: Path
    best_val_accuracy: float
    epochs_run: int
    steps_run: int
    history: list  # (epoch, val_accuracy, lr)


def _make_optimizer(params, lr: float) -> torch.optim.Adam:
    return torch.optim.Adam(params, lr=lr)


def pretrain_backbone(
    corpus: CorpusIndex,
    config: PretrainConfig,
    model_config: ModelConfig,
    out_dir: str | Path,
) -> PretrainResult:
    """Train the backbone to recognize the rendering font of corpus images.

    Cross-entropy objective, exponential per-step lr decay, early stopping
    once validation accuracy has not improved for ``patience``
    pseudo-epochs.  The best-validation state is what gets saved.
    """
    if corpus.n_fonts < 2:
        raise ValueError(f"corpus has {corpus.n_fonts} font class(es); need at least 2")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(len(corpus))
    n_val = max(1, int(round(config.val_fraction * len(corpus))))
    val_idx, train_idx = order[:n_val], order[n_val:]
    if len(train_idx) == 0:
        raise ValueError("corpus too small for the requested validation fraction")

    classifier = FontClassifier(model_config, corpus.n_fonts)
    optimizer = _make_optimizer(classifier.parameters(), config.lr)
    scheduler = torch.optim.lr_scheduler.ExponentialLR(optimizer, gamma=config.lr_decay_per_step)

    def load_batch(indices) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        images, labels = [], []
        for i in indices:
            image, font, _, _ = corpus.load(int(i))
            images.append(uint8_to_image_tensor(image))
            labels.append(font)
        batch, widths = pad_image_batch(images)
        return batch, widths, torch.tensor(labels, dtype=torch.long)

    @torch.no_grad()
    def validation_accuracy() -> float:
        classifier.eval()
        correct = 0
        for start in range(0, len(val_idx), config.batch_size):
            batch, widths, labels = load_batch(val_idx[start : start + config.batch_size])
            pred = classifier(batch, widths).argmax(dim=1)
            correct += int((pred == labels).sum())
        classifier.train()
        return correct / len(val_idx)

    best_acc = -1.0
    best_state = None
    epochs_since_improve = 0
    history = []
    step = 0
    epochs_run = 0
    for epoch in range(1, config.max_epochs + 1):
        for _ in range(config.steps_per_epoch):
            batch, widths, labels = load_batch(rng.choice(train_idx, size=config.batch_size))
            loss = F.cross_entropy(classifier(batch, widths), labels)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            scheduler.step()
            step += 1
        acc = validation_accuracy()
        history.append((epoch, acc, scheduler.get_last_lr()[0]))
        logger.info("pretrain epoch %d: val accuracy %.4f", epoch, acc)
        epochs_run = epoch
        if acc > best_acc:
            best_acc = acc
            best_state = copy.deepcopy(classifier.state_dict())
            epochs_since_improve = 0
        else:
            epochs_since_improve += 1
            if epochs_since_improve > config.patience:
                logger.info("early stop after %d epochs without improvement", epochs_since_improve)
                break

    classifier.load_state_dict(best_state)
    path = out_dir / "backbone.pt"
    save_backbone_checkpoint(path, model_config, classifier, corpus.n_fonts, history)
    return PretrainResult(
        checkpoint_path=path, best_val_accuracy=best_acc,
        epochs_run=epochs_run, steps_run=step, history=history,
    )


def pretrain_backbone_on_writers(
    train_split: dict[str, list[WordSample]],
    config: PretrainConfig,
    model_config: ModelConfig,
    out_dir: str | Path,
) -> PretrainResult:
    """Writer-identity variant of backbone pre-training on real data."""
    samples = all_samples(train_split)
    writers = sorted(train_split)
    if len(writers) < 2:
        raise ValueError("writer pre-training needs at least 2 writers")
    index = _InMemoryIndex(samples, {w: i for i, w in enumerate(writers)})
    return pretrain_backbone(index, config, model_config, out_dir)


class _InMemoryIndex:
    """CorpusIndex-shaped view over loaded WordSamples (labels = writers)."""

    def __init__(self, samples: list[WordSample], writer_to_idx: dict[str, int]):
        self.samples = samples
        self.writer_to_idx = writer_to_idx
        self.n_fonts = len(writer_to_idx)

    def __len__(self) -> int:
        return len(self.samples)

    def load(self, position: int):
        s = self.samples[position]
        return s.image, self.writer_to_idx[s.writer_id], s.transcription, position


# ---------------------------------------------------------------------------
# Adversarial training
# ---------------------------------------------------------------------------


@dataclass
class GanResult:
    checkpoint_path: Path
    init_checkpoint_path: Path
    metrics_path: Path
    steps_run: int


def make_query_batch(bundle: ModelBundle, texts: list[str]):
    """Pad per-text query sequences into (B, k_max, d) plus a validity mask."""
    k_max = max(len(t) for t in texts)
    dtype = bundle.decoder.query_proj.weight.dtype
    queries = torch.zeros(len(texts), k_max, bundle.config.embed_dim, dtype=dtype)
    mask = torch.zeros(len(texts), k_max)
    for i, t in enumerate(texts):
        queries[i, : len(t)] = bundle.content_queries(t)
        mask[i, : len(t)] = 1.0
    return queries, mask


def _recognition_loss(bundle: ModelBundle, images: torch.Tensor,
                      widths: torch.Tensor, texts: list[str]) -> torch.Tensor:
    log_probs = bundle.recognizer(images)
    k_max = max(len(t) for t in texts)
    targets = torch.zeros(len(texts), k_max, dtype=torch.long)
    for i, t in enumerate(texts):
        targets[i, : len(t)] = torch.tensor(bundle.charset.encode(t))
    input_lengths = torch.tensor(
        [bundle.recognizer.time_steps(int(w)) for w in widths], dtype=torch.long
    )
    target_lengths = torch.tensor([len(t) for t in texts], dtype=torch.long)
    return batched_htr_loss(log_probs, targets, input_lengths, target_lengths,
                            blank=bundle.recognizer.blank)


def charset_from_split(train_split: dict[str, list[WordSample]]) -> Charset:
    freq = char_frequency(train_split)
    return Charset.from_counts(freq.counts)


def train_gan(
    train_split: dict[str, list[WordSample]],
    pretrained: str | Path | None,
    model_config: ModelConfig,
    config: GanTrainConfig,
    glyphs: GlyphTable,
    out_dir: str | Path,
    pretrain_config: PretrainConfig | None = None,
    resume_from: str | Path | None = None,
) -> GanResult:
    """Alternating adversarial training of the full model.

    ``pretrained`` selects the backbone initialization: None (from
    scratch), a synthetic-corpus backbone checkpoint path, or
    :data:`WRITER_PRETRAIN` to first train the backbone on writer identity
    of this dataset.  Checkpoints: the initial state, a rolling latest,
    and the final state; metrics are logged per step to CSV.
    ``resume_from`` restores weights, optimizer and RNG state from an
    earlier checkpoint and continues its step counter.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    p = model_config.style_samples
    eligible = {w: s for w, s in train_split.items() if len(s) >= p}
    dropped = sorted(set(train_split) - set(eligible))
    if dropped:
        logger.warning("writers with fewer than %d samples excluded: %s", p, dropped)
    if len(eligible) < 2:
        raise ValueError(f"need at least 2 writers with >= {p} samples, have {len(eligible)}")

    writers = sorted(eligible)
    writer_to_idx = {w: i for i, w in enumerate(writers)}
    charset = charset_from_split(eligible)
    bundle = build_models(model_config, charset, writers, glyphs=glyphs, seed=config.seed)

    if pretrained == WRITER_PRETRAIN:
        wp_config = pretrain_config or PretrainConfig(
            steps_per_epoch=50, max_epochs=8, patience=8, seed=config.seed
        )
        result = pretrain_backbone_on_writers(eligible, wp_config, model_config,
                                              out_dir / "writer_pretrain")
        payload = load_backbone_checkpoint(result.checkpoint_path)
        bundle.style_encoder.backbone.load_state_dict(payload["backbone"])
        logger.info("writer pre-training reached %.3f accuracy", result.best_val_accuracy)
    elif pretrained is not None:
        payload = load_backbone_checkpoint(pretrained)
        backbone_fields = ("embed_dim", "downsample_factor", "blocks_per_stage")
        ours = {k: getattr(model_config, k) for k in backbone_fields}
        theirs = {k: payload["model_config"].get(k) for k in backbone_fields}
        if ours != theirs:
            logger.warning("backbone checkpoint topology %s differs from model %s", theirs, ours)
        bundle.style_encoder.backbone.load_state_dict(payload["backbone"])
        logger.info("loaded pre-trained backbone from %s", pretrained)

    torch.manual_seed(config.seed + 1)
    rng = np.random.default_rng(config.seed)

    pool = all_samples(eligible)
    texts_pool = [s.transcription for s in pool]
    style_tensors = {
        w: [uint8_to_image_tensor(s.image) for s in samples] for w, samples in eligible.items()
    }

    opt_g = _make_optimizer(bundle.generator_parameters(), config.lr)
    aux_params = (
        list(bundle.discriminator.parameters())
        + list(bundle.recognizer.parameters())
        + list(bundle.writer_classifier.parameters())
    )
    opt_aux = _make_optimizer(aux_params, config.lr)

    start_step = 0
    if resume_from is not None:
        resumed = load_checkpoint(resume_from, glyphs=glyphs)
        for name in ("style_encoder", "decoder", "discriminator", "recognizer",
                     "writer_classifier"):
            getattr(bundle, name).load_state_dict(getattr(resumed, name).state_dict())
        extra = torch.load(str(resume_from), map_location="cpu", weights_only=False)["extra"]
        start_step = int(extra.get("step", 0))
        if "opt_g" in extra:
            opt_g.load_state_dict(extra["opt_g"])
            opt_aux.load_state_dict(extra["opt_aux"])
        if "torch_rng" in extra:
            torch.set_rng_state(extra["torch_rng"])
            rng = np.random.default_rng()
            rng.bit_generator.state = extra["np_rng"]
        logger.info("resumed from %s at step %d", resume_from, start_step)

    def train_state() -> dict:
        return {
            "opt_g": opt_g.state_dict(),
            "opt_aux": opt_aux.state_dict(),
            "torch_rng": torch.get_rng_state(),
            "np_rng": rng.bit_generator.state,
        }

    init_path = out_dir / "model_init.pt"
    save_checkpoint(init_path, bundle, extra={"step": start_step})
    latest_path = out_dir / "model_latest.pt"
    last_good: Path | None = init_path

    flags = config.loss_flags
    metrics_path = out_dir / "metrics.csv"
    rows = [METRICS_HEADER]

    def sample_style(writer: str, step: int) -> list[torch.Tensor]:
        indices = np.sort(
            np.random.default_rng(config.style_seed + step).choice(
                len(style_tensors[writer]), size=p, replace=False
            )
        )
        return [style_tensors[writer][i] for i in indices]

    for step in range(start_step + 1, start_step + config.steps + 1):
        writer = writers[int(rng.integers(len(writers)))]
        style_images = sample_style(writer, step)
        text_batch = [texts_pool[int(i)] for i in rng.integers(len(pool), size=config.batch_size)]
        real_ids = rng.integers(len(pool), size=config.batch_size)
        real_samples = [pool[int(i)] for i in real_ids]
        real_batch, real_widths = pad_image_batch(
            [uint8_to_image_tensor(s.image) for s in real_samples]
        )
        real_writer_idx = torch.tensor(
            [writer_to_idx[s.writer_id] for s in real_samples], dtype=torch.long
        )
        fake_widths = torch.tensor([64 * len(t) for t in text_batch])

        # Generate once; the detached batch feeds the discriminator update
        # and the same graph then carries every generator loss.
        style = bundle.style_encoder(style_images)
        queries, mask = make_query_batch(bundle, text_batch)
        fake, _ = bundle.decoder(queries, style, query_mask=mask)

        # Phase 1: auxiliary networks. Discriminator sees real and (frozen)
        # fake; recognizer and writer classifier train on real only.
        d_loss = adv_loss_discriminator(
            bundle.discriminator(real_batch, real_widths),
            bundle.discriminator(fake.detach(), fake_widths),
        )
        r_loss = _recognition_loss(bundle, real_batch, real_widths,
                                   [s.transcription for s in real_samples])
        c_loss = F.cross_entropy(bundle.writer_classifier(real_batch, real_widths),
                                 real_writer_idx)
        aux_total = d_loss + r_loss + c_loss
        opt_aux.zero_grad()
        aux_total.backward()
        opt_aux.step()

        # Phase 2: generator through every enabled loss on its batch.
        # Auxiliary weights are frozen here: their gradients are not needed
        # for the generator update and skipping them saves real time.
        for p_aux in aux_params:
            p_aux.requires_grad_(False)

        adv_g = adv_loss_generator(bundle.discriminator(fake, fake_widths))
        htr_g = None
        if flags.htr:
            htr_g = _recognition_loss(bundle, fake, fake_widths, text_batch)
        class_g = None
        if flags.writer_class:
            logits = bundle.writer_classifier(fake, fake_widths)
            target = torch.full((len(text_batch),), writer_to_idx[writer], dtype=torch.long)
            class_g = F.cross_entropy(logits, target)
        cyc = None
        if flags.cycle:
            fake_style = bundle.style_encoder(
                [fake[i : i + 1, 0, :, : int(fake_widths[i])] for i in range(fake.shape[0])]
            )
            real_branch = style.mean(dim=0)
            if config.cycle_detach_real:
                real_branch = real_branch.detach()
            cyc = cycle_loss(real_branch, fake_style.mean(dim=0))

        breakdown = total_loss(adv=adv_g, htr=htr_g, writer_class=class_g,
                               cycle=cyc, flags=flags)
        opt_g.zero_grad()
        breakdown.total.backward()
        opt_g.step()
        for p_aux in aux_params:
            p_aux.requires_grad_(True)

        values = breakdown.as_floats()
        d_value = float(d_loss.detach())
        if not (math.isfinite(d_value) and math.isfinite(values["total"])):
            metrics_path.write_text("\n".join(rows) + "\n", encoding="utf-8")
            raise TrainingDiverged(step, last_good)
        rows.append(
            f"{step},{d_value:.6f},{values['adv']:.6f},{values['htr']:.6f},"
            f"{values['class']:.6f},{values['cycle']:.6f},{values['total']:.6f}"
        )

        if step % config.checkpoint_every_steps == 0:
            save_checkpoint(latest_path, bundle, extra={"step": step, **train_state()})
            last_good = latest_path
            logger.info("step %d: adv_d %.3f adv_g %.3f total %.3f",
                        step, d_value, values["adv"], values["total"])

    final_path = out_dir / "model_final.pt"
    save_checkpoint(final_path, bundle, extra={"step": start_step + config.steps, **train_state()})
    metrics_path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return GanResult(
        checkpoint_path=final_path, init_checkpoint_path=init_path,
        metrics_path=metrics_path, steps_run=start_step + config.steps,
    )


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


def load_style_folder(folder: str | Path) -> list[torch.Tensor]:
    """Load every PNG in a folder as a height-normalized style example."""
    from PIL import Image

    from .dataset import normalize_height

    paths = sorted(Path(folder).glob("*.png"))
    if not paths:
        raise ValueError(f"no .png style examples in {folder}")
    out = []
    for path in paths:
        image = normalize_height(np.asarray(Image.open(path).convert("L")))
        out.append(uint8_to_image_tensor(image))
    return out


def generate(
    checkpoint: str | Path | ModelBundle,
    style: StyleSet | list[torch.Tensor] | str | Path,
    texts: list[str],
    noise_seed: int = 0,
    glyphs: GlyphTable | None = None,
    out_dir: str | Path | None = None,
) -> list[np.ndarray]:
    """Generate one styled word image per text, as 8-bit grayscale arrays.

    ``style`` may be a StyleSet, a list of image tensors, or a folder of
    PNG examples.  In archetype mode any glyph-covered text works; the
    one-hot baseline rejects out-of-charset characters.
    """
    if not texts:
        raise ValueError("texts must be nonempty")
    if isinstance(checkpoint, ModelBundle):
        bundle = checkpoint
    else:
        bundle = load_checkpoint(checkpoint, glyphs=glyphs)
    if bundle.glyphs is None and glyphs is not None:
        bundle.glyphs = glyphs

    if isinstance(style, StyleSet):
        style_images = [uint8_to_image_tensor(s.image) for s in style.images]
    elif isinstance(style, (str, Path)):
        style_images = load_style_folder(style)
    else:
        style_images = list(style)

    tensors = generate_word_images(bundle, style_images, texts, noise_seed=noise_seed)
    images = [image_tensor_to_uint8(t) for t in tensors]
    if out_dir is not None:
        from PIL import Image

        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for i, (text, image) in enumerate(zip(texts, images)):
            safe = "".join(ch if ch.isalnum() else "_" for ch in text)[:40]
            Image.fromarray(image).save(out_dir / f"{i:04d}_{safe}.png")
    return images


# ---------------------------------------------------------------------------
# Config files
# ---------------------------------------------------------------------------


def _coerce(dataclass_type, section) -> dict:
    kwargs = {}
    hints = {f.name: f.type for f in fields(dataclass_type)}
    for key in section:
        if key not in hints:
            raise ValueError(f"unknown config key {key!r} for {dataclass_type.__name__}")
        raw = section[key]
        hint = str(hints[key])
        if "bool" in hint:
            kwargs[key] = section.getboolean(key)
        elif "int" in hint:
            kwargs[key] = int(raw)
        elif "float" in hint:
            kwargs[key] = float(raw)
        else:
            kwargs[key] = raw
    return kwargs


def parse_config_file(path: str | Path):
    """Parse an INI config with [model], [pretrain], [train], [losses] sections."""
    parser = ConfigParser()
    read = parser.read(str(path))
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")
    model = ModelConfig(**_coerce(ModelConfig, parser["model"])) if parser.has_section("model") else ModelConfig()
    pretrain = (
        PretrainConfig(**_coerce(PretrainConfig, parser["pretrain"]))
        if parser.has_section("pretrain") else PretrainConfig()
    )
    flags = LossFlags(**_coerce(LossFlags, parser["losses"])) if parser.has_section("losses") else LossFlags()
    train_kwargs = _coerce(GanTrainConfig, parser["train"]) if parser.has_section("train") else {}
    train = GanTrainConfig(loss_flags=flags, **train_kwargs)
    return model, pretrain, train


def write_config_file(path: str | Path, model: ModelConfig, pretrain: PretrainConfig,
                      train: GanTrainConfig) -> None:
    """Serialize the resolved configuration back out (for run archiving)."""
    parser = ConfigParser()
    parser["model"] = {k: str(v) for k, v in asdict(model).items()}
    parser["pretrain"] = {k: str(v) for k, v in asdict(pretrain).items()}
    train_dict = asdict(train)
    flags = train_dict.pop("loss_flags")
    train_dict = {k: str(v) for k, v in train_dict.items() if v is not None}
    parser["train"] = train_dict
    parser["losses"] = {k: str(v) for k, v in flags.items()}
    with Path(path).open("w", encoding="utf-8") as fh:
        parser.write(fh)
