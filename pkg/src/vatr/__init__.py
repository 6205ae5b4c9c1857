"""Few-shot styled handwritten text generation from visual glyph archetypes.

A complete desk-scale pipeline: Unifont-format glyph parsing and dense
content encodings, a synthetic calligraphic pre-training corpus, a
transformer style encoder and content-guided image decoder trained
adversarially with text-recognition, writer-classification and style
cycle losses, plus FID/CER evaluation protocols.
"""

from .content import (
    BinaryGlyph,
    Charset,
    ContentQuerySeq,
    GlyphTable,
    default_glyph_table,
    embed_content,
    load_unifont,
    one_hot_encode,
    render_archetype,
)
from .network import ModelConfig, build_models, load_checkpoint, save_checkpoint
from .objectives import LossBreakdown, LossFlags
from .training import GanTrainConfig, PretrainConfig, generate, pretrain_backbone, train_gan

__all__ = [
    "BinaryGlyph",
    "Charset",
    "ContentQuerySeq",
    "GlyphTable",
    "GanTrainConfig",
    "LossBreakdown",
    "LossFlags",
    "ModelConfig",
    "PretrainConfig",
    "build_models",
    "default_glyph_table",
    "embed_content",
    "generate",
    "load_checkpoint",
    "load_unifont",
    "one_hot_encode",
    "pretrain_backbone",
    "render_archetype",
    "save_checkpoint",
    "train_gan",
]

__version__ = "0.1.0"
