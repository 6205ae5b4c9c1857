"""Differentiable model components.

The generator is a style encoder (residual conv backbone feeding a
multi-head self-attention encoder) plus a content-guided decoder
(transformer decoder whose queries are projected glyph archetypes,
cross-attending the style vectors, followed by a convolutional image
decoder).  Auxiliary networks: a patch discriminator, a CTC text
recognizer and a writer classifier.

Shape conventions: images are (B, 1, 64, W) in [-1, 1]; style vectors
are (N, d) where N is the summed spatial extent of the backbone maps
over the style examples; decoded images are 64 x (64 * n_chars).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .content import GLYPH_PIXELS, Charset, GlyphTable, archetype_matrix

IMG_HEIGHT = 64
CHAR_PATCH = 4  # each character starts as a 4x4 spatial patch
UPSAMPLE_STAGES = 4  # 4 doublings: 4 -> 64 px
CHAR_WIDTH = CHAR_PATCH * 2 ** UPSAMPLE_STAGES  # 64 px of output per character

CHECKPOINT_VERSION = 1


@dataclass
class ModelConfig:
    """Hyperparameters shared by every component.

    The defaults are the full-scale settings (embed size 512, 3 layers of
    8 heads, 15 style samples, /32 backbone); desk configurations shrink
    them but keep the same structure.
    """

    embed_dim: int = 512
    layers: int = 3
    heads: int = 8
    style_samples: int = 15
    noise_std: float = 1.0
    downsample_factor: int = 32
    decoder_channels: int = 512  # channel count of the reshaped character patches
    blocks_per_stage: int = 2
    ff_mult: int = 4
    use_positional: bool = True
    content_mode: str = "archetype"  # or "one-hot"
    disc_channels: int = 64
    aux_channels: int = 64  # recognizer / writer classifier width

    def __post_init__(self):
        if self.embed_dim % self.heads != 0:
            raise ValueError("embed_dim must be divisible by heads")
        if self.layers < 1 or self.style_samples < 1:
            raise ValueError("layers and style_samples must be >= 1")
        stages = math.log2(self.downsample_factor)
        if stages != int(stages) or self.downsample_factor < 8:
            raise ValueError("downsample_factor must be a power of two >= 8")
        if self.content_mode not in ("archetype", "one-hot"):
            raise ValueError(f"unknown content_mode {self.content_mode!r}")

    @classmethod
    def desk(cls, **overrides) -> "ModelConfig":
        """A small configuration that trains in minutes on a CPU."""
        base = dict(
            embed_dim=64, layers=2, heads=4, style_samples=4,
            noise_std=0.5, downsample_factor=16, decoder_channels=64,
            blocks_per_stage=1, ff_mult=2, disc_channels=16, aux_channels=32,
        )
        base.update(overrides)
        return cls(**base)


def sinusoidal_positions(n: int, dim: int, device=None) -> torch.Tensor:
    """Standard fixed sin/cos positional encodings, shape (n, dim)."""
    position = torch.arange(n, dtype=torch.float32, device=device).unsqueeze(1)
    half = torch.arange(0, dim, 2, dtype=torch.float32, device=device)
    freq = torch.exp(-math.log(10000.0) * half / dim)
    angles = position * freq
    out = torch.zeros(n, dim, device=device)
    out[:, 0::2] = torch.sin(angles)
    out[:, 1::2] = torch.cos(angles[:, : dim - dim // 2])
    return out


def _gn(channels: int) -> nn.GroupNorm:
    return nn.GroupNorm(math.gcd(8, channels), channels)


class ResBlock(nn.Module):
    def __init__(self, in_ch: int, out_ch: int, stride: int = 1):
        super().__init__()
        self.conv1 = nn.Conv2d(in_ch, out_ch, 3, stride, 1, bias=False)
        self.norm1 = _gn(out_ch)
        self.conv2 = nn.Conv2d(out_ch, out_ch, 3, 1, 1, bias=False)
        self.norm2 = _gn(out_ch)
        if stride != 1 or in_ch != out_ch:
            self.skip = nn.Conv2d(in_ch, out_ch, 1, stride, bias=False)
        else:
            self.skip = nn.Identity()

    def forward(self, x):
        h = F.relu(self.norm1(self.conv1(x)))
        h = self.norm2(self.conv2(h))
        return F.relu(h + self.skip(x))


class ConvBackbone(nn.Module):
    """Reduced residual stack: stem /4 then stride-2 stages up to /downsample."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        n_stages = int(math.log2(config.downsample_factor)) - 2
        dim = config.embed_dim
        stem_ch = max(8, dim // 2 ** n_stages)
        self.stem = nn.Sequential(
            nn.Conv2d(1, stem_ch, 7, 2, 3, bias=False), _gn(stem_ch), nn.ReLU(inplace=True),
            nn.MaxPool2d(3, 2, 1),
        )
        stages = []
        ch = stem_ch
        for i in range(n_stages):
            out_ch = max(8, dim // 2 ** (n_stages - 1 - i))
            blocks = [ResBlock(ch, out_ch, stride=2)]
            blocks += [ResBlock(out_ch, out_ch) for _ in range(config.blocks_per_stage - 1)]
            stages.append(nn.Sequential(*blocks))
            ch = out_ch
        self.stages = nn.Sequential(*stages)
        self.out_channels = ch

    def forward(self, x):
        return self.stages(self.stem(x))


class MultiHeadAttention(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.heads = heads
        self.scale = (dim // heads) ** -0.5
        self.to_q = nn.Linear(dim, dim)
        self.to_k = nn.Linear(dim, dim)
        self.to_v = nn.Linear(dim, dim)
        self.out = nn.Linear(dim, dim)

    def forward(self, query, memory, memory_valid=None, out_valid=None):
        # query: (B, Tq, D); memory: (B, Tk, D); *_valid: (B, T) bool flags.
        # Padded memory positions are excluded from the softmax; padded
        # output rows are zeroed so they cannot leak downstream.
        b, tq, dim = query.shape
        tk = memory.shape[1]
        hd = dim // self.heads

        def split(t, length):
            return t.view(b, length, self.heads, hd).transpose(1, 2)

        q = split(self.to_q(query), tq) * self.scale
        k = split(self.to_k(memory), tk)
        v = split(self.to_v(memory), tk)
        scores = q @ k.transpose(-2, -1)
        if memory_valid is not None:
            bad = ~memory_valid.bool()
            scores = scores.masked_fill(bad[:, None, None, :], float("-inf"))
        attn = torch.softmax(scores, dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(b, tq, dim)
        out = self.out(out)
        if out_valid is not None:
            out = out * out_valid.to(out.dtype).unsqueeze(-1)
        return out


class FeedForward(nn.Module):
    def __init__(self, dim: int, mult: int):
        super().__init__()
        self.net = nn.Sequential(nn.Linear(dim, dim * mult), nn.ReLU(inplace=True),
                                 nn.Linear(dim * mult, dim))

    def forward(self, x):
        return self.net(x)


class EncoderLayer(nn.Module):
    """Pre-norm self-attention layer: zeroed weights reduce to identity."""

    def __init__(self, dim: int, heads: int, ff_mult: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = MultiHeadAttention(dim, heads)
        self.norm2 = nn.LayerNorm(dim)
        self.ff = FeedForward(dim, ff_mult)

    def forward(self, x):
        h = self.norm1(x)
        x = x + self.attn(h, h)
        x = x + self.ff(self.norm2(x))
        return x


class DecoderLayer(nn.Module):
    """Self-attention over content queries, then cross-attention to style."""

    def __init__(self, dim: int, heads: int, ff_mult: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.self_attn = MultiHeadAttention(dim, heads)
        self.norm2 = nn.LayerNorm(dim)
        self.cross_attn = MultiHeadAttention(dim, heads)
        self.norm3 = nn.LayerNorm(dim)
        self.ff = FeedForward(dim, ff_mult)

    def forward(self, x, style, query_mask=None):
        h = self.norm1(x)
        x = x + self.self_attn(h, h, memory_valid=query_mask, out_valid=query_mask)
        x = x + self.cross_attn(self.norm2(x), style, out_valid=query_mask)
        x = x + self.ff(self.norm3(x))
        return x


class StyleEncoder(nn.Module):
    """Maps a set of style example images to the style vector sequence."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.backbone = ConvBackbone(config)
        self.layers = nn.ModuleList(
            EncoderLayer(config.embed_dim, config.heads, config.ff_mult)
            for _ in range(config.layers)
        )

    def flatten_features(self, images: list[torch.Tensor]) -> torch.Tensor:
        """Backbone maps, flattened row-major and concatenated: (1, N, d)."""
        rows = []
        for img in images:
            if img.ndim == 3:
                img = img.unsqueeze(0)
            if img.shape[-2] != IMG_HEIGHT:
                raise ValueError(f"style images must be {IMG_HEIGHT} px high, got {img.shape[-2]}")
            feat = self.backbone(img)  # (1, d, h, w)
            _, d, h, w = feat.shape
            rows.append(feat.permute(0, 2, 3, 1).reshape(1, h * w, d))
        return torch.cat(rows, dim=1)

    def transform(self, seq: torch.Tensor) -> torch.Tensor:
        if self.config.use_positional:
            seq = seq + sinusoidal_positions(seq.shape[1], seq.shape[2], seq.device)
        for layer in self.layers:
            seq = layer(seq)
        return seq

    def forward(self, images: list[torch.Tensor]) -> torch.Tensor:
        """Style vectors (N, d) for one writer's example images."""
        return self.transform(self.flatten_features(images)).squeeze(0)


@dataclass
class DecoderOutput:
    """Decoded content features and the generated image for one string."""

    features: torch.Tensor  # (k, d)
    image: torch.Tensor  # (1, 64, 64*k), values in [-1, 1]


class UpBlock(nn.Module):
    def __init__(self, in_ch: int, out_ch: int):
        super().__init__()
        self.block = ResBlock(in_ch, out_ch)

    def forward(self, x):
        return self.block(F.interpolate(x, scale_factor=2, mode="nearest"))


class ContentGuidedDecoder(nn.Module):
    """Transformer decoder over content queries plus convolutional renderer."""

    def __init__(self, config: ModelConfig, charset: Charset | None = None):
        super().__init__()
        self.config = config
        dim = config.embed_dim
        # Archetype query layer: 256*d + d parameters, charset-independent.
        self.query_proj = nn.Linear(GLYPH_PIXELS, dim)
        if config.content_mode == "one-hot":
            if charset is None:
                raise ValueError("one-hot content mode needs a charset")
            self.one_hot_embedding = nn.Embedding(len(charset), dim)
        else:
            self.one_hot_embedding = None
        self.layers = nn.ModuleList(
            DecoderLayer(dim, config.heads, config.ff_mult) for _ in range(config.layers)
        )
        self.final_norm = nn.LayerNorm(dim)

        c0 = config.decoder_channels
        self.patch_proj = nn.Linear(dim, c0 * CHAR_PATCH * CHAR_PATCH)
        chans = [c0]
        for _ in range(UPSAMPLE_STAGES):
            chans.append(max(8, chans[-1] // 2))
        self.up_blocks = nn.ModuleList(UpBlock(a, b) for a, b in zip(chans, chans[1:]))
        self.to_image = nn.Conv2d(chans[-1], 1, 3, 1, 1)

    def embed_archetypes(self, glyph_rows: torch.Tensor) -> torch.Tensor:
        """Project flattened 16x16 archetypes (k, 256) to queries (k, d)."""
        return self.query_proj(glyph_rows)

    def embed_one_hot(self, indices: torch.Tensor) -> torch.Tensor:
        if self.one_hot_embedding is None:
            raise ValueError("decoder was not built in one-hot mode")
        return self.one_hot_embedding(indices)

    def forward(
        self,
        queries: torch.Tensor,
        style: torch.Tensor,
        query_mask: torch.Tensor | None = None,
        noise_generator: torch.Generator | None = None,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """queries (B, k, d), style (N, d) -> images (B, 1, 64, 64k), features (B, k, d)."""
        if queries.ndim != 3:
            raise ValueError("queries must be (batch, n_chars, embed_dim)")
        if style.ndim != 2 or style.shape[1] != queries.shape[2]:
            raise ValueError(
                f"style vectors {tuple(style.shape)} do not match query dim {queries.shape[2]}"
            )
        b, k, dim = queries.shape
        x = queries
        if self.config.use_positional:
            x = x + sinusoidal_positions(k, dim, x.device)
        memory = style.unsqueeze(0).expand(b, -1, -1)
        for layer in self.layers:
            x = layer(x, memory, query_mask=query_mask)
        features = self.final_norm(x)

        noisy = features
        if self.config.noise_std > 0:
            noise = torch.randn(
                features.shape, generator=noise_generator,
                device=features.device, dtype=features.dtype,
            )
            noisy = features + self.config.noise_std * noise

        patches = self.patch_proj(noisy)  # (B, k, c0*16)
        c0 = self.config.decoder_channels
        patches = patches.view(b, k, c0, CHAR_PATCH, CHAR_PATCH)
        # Characters stack along width: (B, c0, 4, 4k).
        canvas = patches.permute(0, 2, 3, 1, 4).reshape(b, c0, CHAR_PATCH, k * CHAR_PATCH)
        for block in self.up_blocks:
            canvas = block(canvas)
        image = torch.tanh(self.to_image(canvas))
        return image, features


class Discriminator(nn.Module):
    """Patch-style convolutional discriminator with spectral normalization."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        c = config.disc_channels
        sn = nn.utils.parametrizations.spectral_norm
        self.body = nn.Sequential(
            sn(nn.Conv2d(1, c, 4, 2, 1)), nn.LeakyReLU(0.2, inplace=True),
            sn(nn.Conv2d(c, 2 * c, 4, 2, 1)), nn.LeakyReLU(0.2, inplace=True),
            sn(nn.Conv2d(2 * c, 4 * c, 4, 2, 1)), nn.LeakyReLU(0.2, inplace=True),
        )
        self.head = sn(nn.Conv2d(4 * c, 1, 3, 1, 1))

    def forward(self, images: torch.Tensor, widths: torch.Tensor | None = None) -> torch.Tensor:
        """Per-image scalar scores, averaging the patch map over valid width."""
        if images.shape[-2] != IMG_HEIGHT:
            raise ValueError(f"discriminator expects height {IMG_HEIGHT}")
        patches = self.head(self.body(images)).squeeze(1)  # (B, hp, wp)
        if widths is None:
            return patches.mean(dim=(1, 2))
        valid = _ceil_div_lengths(widths, 8, patches.shape[-1], images.device)
        mask = _width_mask(patches.shape[-1], valid).unsqueeze(1)
        return (patches * mask).sum(dim=(1, 2)) / (mask.sum(dim=(1, 2)) * patches.shape[1])


class Recognizer(nn.Module):
    """Conv-recurrent text recognizer; one output column per 4 px of width."""

    def __init__(self, config: ModelConfig, charset: Charset):
        super().__init__()
        c = config.aux_channels
        self.n_symbols = len(charset) + 1  # + blank, last index
        self.blank = len(charset)
        self.convs = nn.Sequential(
            nn.Conv2d(1, c, 3, 2, 1), _gn(c), nn.ReLU(inplace=True),
            nn.Conv2d(c, 2 * c, 3, 2, 1), _gn(2 * c), nn.ReLU(inplace=True),
            nn.Conv2d(2 * c, 2 * c, 3, (2, 1), 1), _gn(2 * c), nn.ReLU(inplace=True),
            nn.Conv2d(2 * c, 2 * c, 3, (2, 1), 1), _gn(2 * c), nn.ReLU(inplace=True),
        )
        self.rnn = nn.GRU(2 * c, c, batch_first=True, bidirectional=True)
        self.head = nn.Linear(2 * c, self.n_symbols)

    def time_steps(self, width: int) -> int:
        return math.ceil(width / 4)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        """Log probabilities (T, B, n_symbols) for CTC."""
        if images.shape[-2] != IMG_HEIGHT:
            raise ValueError(f"recognizer expects height {IMG_HEIGHT}")
        feat = self.convs(images)  # (B, C, 4, T)
        feat = feat.mean(dim=2).transpose(1, 2)  # (B, T, C)
        feat, _ = self.rnn(feat)
        logits = self.head(feat)  # (B, T, S)
        return F.log_softmax(logits, dim=-1).transpose(0, 1)


class WriterClassifier(nn.Module):
    """Convolutional classifier over the training writers."""

    def __init__(self, config: ModelConfig, n_writers: int):
        super().__init__()
        c = config.aux_channels
        self.n_writers = n_writers
        self.body = nn.Sequential(
            nn.Conv2d(1, c, 3, 2, 1), _gn(c), nn.ReLU(inplace=True),
            nn.Conv2d(c, 2 * c, 3, 2, 1), _gn(2 * c), nn.ReLU(inplace=True),
            nn.Conv2d(2 * c, 4 * c, 3, 2, 1), _gn(4 * c), nn.ReLU(inplace=True),
        )
        self.head = nn.Linear(4 * c, n_writers)

    def forward(self, images: torch.Tensor, widths: torch.Tensor | None = None) -> torch.Tensor:
        """Logits (B, n_writers); pooling masked to each sample's valid width."""
        if images.shape[-2] != IMG_HEIGHT:
            raise ValueError(f"writer classifier expects height {IMG_HEIGHT}")
        feat = self.body(images)  # (B, C, h, w)
        if widths is None:
            pooled = feat.mean(dim=(2, 3))
        else:
            valid = _ceil_div_lengths(widths, 8, feat.shape[-1], images.device)
            mask = _width_mask(feat.shape[-1], valid)[:, None, None, :]
            pooled = (feat * mask).sum(dim=(2, 3)) / (mask.sum(dim=(2, 3)) * feat.shape[2])
        return self.head(pooled)


def _ceil_div_lengths(widths, factor, cap, device):
    w = torch.as_tensor(widths, device=device)
    return torch.clamp((w + factor - 1) // factor, min=1, max=cap)


def _width_mask(total: int, valid: torch.Tensor) -> torch.Tensor:
    return (torch.arange(total, device=valid.device)[None, :] < valid[:, None]).float()


# ---------------------------------------------------------------------------
# Operation wrappers
# ---------------------------------------------------------------------------


def encode_style(encoder: StyleEncoder, images: list[torch.Tensor]) -> torch.Tensor:
    """Style vectors (N, d) with N = sum of h*w over the example images."""
    return encoder(images)


def decode(
    decoder: ContentGuidedDecoder,
    content_queries: torch.Tensor,
    style: torch.Tensor,
    noise_seed: int | None = None,
) -> DecoderOutput:
    """Generate one word image from (k, d) content queries and (N, d) style."""
    if content_queries.ndim != 2:
        raise ValueError("content queries must be (n_chars, embed_dim)")
    generator = None
    if noise_seed is not None:
        generator = torch.Generator(device=content_queries.device)
        generator.manual_seed(noise_seed)
    image, features = decoder(
        content_queries.unsqueeze(0), style, noise_generator=generator
    )
    return DecoderOutput(features=features.squeeze(0), image=image.squeeze(0))


def discriminate(disc: Discriminator, images: torch.Tensor) -> torch.Tensor:
    if images.ndim == 3:
        images = images.unsqueeze(0)
    return disc(images)


def recognize(recognizer: Recognizer, image: torch.Tensor) -> torch.Tensor:
    """Row-stochastic (T, n_symbols) matrix of per-timestep probabilities."""
    if image.ndim == 3:
        image = image.unsqueeze(0)
    log_probs = recognizer(image)  # (T, 1, S)
    return log_probs.squeeze(1).exp()


def classify_writer(classifier: WriterClassifier, image: torch.Tensor) -> torch.Tensor:
    """Probability distribution over the training writers."""
    if image.ndim == 3:
        image = image.unsqueeze(0)
    return torch.softmax(classifier(image), dim=-1).squeeze(0)


def greedy_ctc_decode(log_probs: torch.Tensor, blank: int, charset: Charset) -> list[str]:
    """Collapse the argmax path: merge repeats, drop blanks."""
    ids = log_probs.argmax(dim=-1).transpose(0, 1)  # (B, T)
    out = []
    for row in ids:
        text = []
        prev = -1
        for s in row.tolist():
            if s != prev and s != blank:
                text.append(chr(charset.codepoints[s]))
            prev = s
        out.append("".join(text))
    return out


def generate_word_images(
    bundle: "ModelBundle",
    style_images: list[torch.Tensor],
    texts: list[str],
    noise_seed: int | None = None,
) -> list[torch.Tensor]:
    """Render each text in the style of the example images.

    Returns one (1, 64, 64*k) tensor in [-1, 1] per text.  Archetype mode
    accepts any glyph-covered text; one-hot mode is limited to the
    training charset.
    """
    if not texts:
        raise ValueError("texts must be nonempty")
    with torch.no_grad():
        style = bundle.style_encoder(style_images)
        out = []
        for i, text in enumerate(texts):
            queries = bundle.content_queries(text)
            seed = None if noise_seed is None else noise_seed + i
            out.append(decode(bundle.decoder, queries, style, noise_seed=seed).image)
    return out


def image_tensor_to_uint8(image: torch.Tensor) -> np.ndarray:
    """[-1, 1] tensor (1, H, W) -> uint8 grayscale (H, W)."""
    arr = ((image.squeeze(0).clamp(-1, 1) + 1.0) * 127.5).round()
    return arr.to(torch.uint8).cpu().numpy()


def uint8_to_image_tensor(image: np.ndarray) -> torch.Tensor:
    """uint8 grayscale (H, W) -> float tensor (1, H, W) in [-1, 1]."""
    return torch.from_numpy(image.astype(np.float32) / 127.5 - 1.0).unsqueeze(0)


# ---------------------------------------------------------------------------
# Model bundle and checkpointing
# ---------------------------------------------------------------------------


@dataclass
class ModelBundle:
    """Every trainable component plus the pieces needed to rebuild them."""

    config: ModelConfig
    charset: Charset
    writers: list[str]
    style_encoder: StyleEncoder
    decoder: ContentGuidedDecoder
    discriminator: Discriminator
    recognizer: Recognizer
    writer_classifier: WriterClassifier
    glyphs: GlyphTable | None = None

    def generator_parameters(self):
        yield from self.style_encoder.parameters()
        yield from self.decoder.parameters()

    def content_queries(self, text: str) -> torch.Tensor:
        """Learned (k, d) queries for ``text`` under the configured mode."""
        if self.config.content_mode == "one-hot":
            idx = torch.tensor(self.charset.encode(text), dtype=torch.long)
            return self.decoder.embed_one_hot(idx)
        if self.glyphs is None:
            raise ValueError("archetype mode needs a glyph table")
        dtype = self.decoder.query_proj.weight.dtype
        rows = torch.tensor(archetype_matrix(self.glyphs, text), dtype=dtype)
        return self.decoder.embed_archetypes(rows)


def build_models(
    config: ModelConfig,
    charset: Charset,
    writers: list[str],
    glyphs: GlyphTable | None = None,
    seed: int = 0,
) -> ModelBundle:
    torch.manual_seed(seed)
    return ModelBundle(
        config=config,
        charset=charset,
        writers=list(writers),
        style_encoder=StyleEncoder(config),
        decoder=ContentGuidedDecoder(config, charset=charset),
        discriminator=Discriminator(config),
        recognizer=Recognizer(config, charset),
        writer_classifier=WriterClassifier(config, len(writers)),
        glyphs=glyphs,
    )


def save_checkpoint(path: str | Path, bundle: ModelBundle, extra: dict | None = None) -> None:
    """Single-archive checkpoint: versioned header, config, charset, weights."""
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "model_config": asdict(bundle.config),
        "charset_codepoints": bundle.charset.codepoints,
        "charset_counts": bundle.charset.counts,
        "writers": bundle.writers,
        "state": {
            "style_encoder": bundle.style_encoder.state_dict(),
            "decoder": bundle.decoder.state_dict(),
            "discriminator": bundle.discriminator.state_dict(),
            "recognizer": bundle.recognizer.state_dict(),
            "writer_classifier": bundle.writer_classifier.state_dict(),
        },
        "extra": extra or {},
    }
    torch.save(payload, str(path))


def load_checkpoint(path: str | Path, glyphs: GlyphTable | None = None) -> ModelBundle:
    payload = torch.load(str(path), map_location="cpu", weights_only=False)
    version = payload.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version!r}")
    config = ModelConfig(**payload["model_config"])
    charset = Charset(payload["charset_codepoints"], payload["charset_counts"])
    bundle = build_models(config, charset, payload["writers"], glyphs=glyphs)
    for name, state in payload["state"].items():
        getattr(bundle, name).load_state_dict(state)
    return bundle


def checkpoint_extra(path: str | Path) -> dict:
    return torch.load(str(path), map_location="cpu", weights_only=False).get("extra", {})
