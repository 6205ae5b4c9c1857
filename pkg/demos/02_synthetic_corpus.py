#!/usr/bin/env python3
"""The synthetic pre-training corpus.

Word images are rendered as (font, word) pairs and passed through the
augmentation chain: rotation, thin plate spline warping, gaussian blur,
ink dilation and brightness/contrast jitter.  A manifest enumerates the
full cross product with one RNG seed per record, so the corpus is byte
reproducible.
"""

import os
from pathlib import Path

import numpy as np
from PIL import Image

from vatr.synth_corpus import (
    AugmentParams,
    CorpusIndex,
    augment,
    build_corpus,
    build_manifest,
    render_word_image,
)

OUT = "demo_out"
FONTS = sorted(str(p) for p in Path("/usr/share/fonts/truetype/dejavu").glob("*.ttf"))


def main():
    os.makedirs(OUT, exist_ok=True)

    # One word, increasingly augmented.
    base = render_word_image(FONTS[0], "quill", None, 64)
    panels = [base]
    for seed in range(4):
        panels.append(augment(base, AugmentParams(), seed=seed))
    width = max(p.shape[1] for p in panels)
    canvas = np.full((len(panels) * 68, width), 255, dtype=np.uint8)
    for i, p in enumerate(panels):
        canvas[i * 68 : i * 68 + 64, : p.shape[1]] = p
    Image.fromarray(canvas).save(f"{OUT}/augment_chain.png")
    print(f"wrote {OUT}/augment_chain.png (top row unaugmented)")

    # A small corpus: 6 fonts x 8 words, sharded.
    words = ["pen", "ink", "page", "note", "quill", "scroll", "nib", "vellum"]
    manifest = build_manifest(FONTS, words, base_seed=11)
    print(f"manifest: {len(FONTS)} fonts x {len(words)} words = {manifest.n_records} records")
    index = build_corpus(manifest, f"{OUT}/corpus", shard_size=16)
    print(f"built {len(index)} images into {sorted(os.listdir(OUT + '/corpus'))[:4]} ...")

    # Round trip one record through the shard index.
    image, font_label, word, record_id = index.load(7)
    print(f"record {record_id}: font={font_label} word={word!r} image={image.shape}")

    # Determinism: rebuilding produces identical bytes.
    build_corpus(manifest, f"{OUT}/corpus_again", shard_size=16)
    a = Path(f"{OUT}/corpus/shard_00000.bin").read_bytes()
    b = Path(f"{OUT}/corpus_again/shard_00000.bin").read_bytes()
    print(f"rebuild byte-identical: {a == b}")


if __name__ == "__main__":
    main()
