#!/usr/bin/env python3
"""Glyph archetypes: the content representation.

Every character the model can write is represented by its 16x16 binary
rendering from a Unifont-format glyph table, flattened and linearly
projected into the model's embedding space.  Because the projection
layer is a fixed 256 -> d map, the content vocabulary is whatever the
glyph file covers; no per-character parameters exist anywhere.
"""

import numpy as np
from PIL import Image

from vatr.content import Charset, default_glyph_table, embed_content, one_hot_encode, render_archetype

OUT = "demo_out"


def main():
    import os

    os.makedirs(OUT, exist_ok=True)
    table = default_glyph_table()
    print(f"packaged desk glyph table covers {table.coverage} codepoints")
    print("(a full Unifont release covers 55k+; pass its .hex to load_unifont)")

    # A strip of archetypes across scripts: Latin, digits, punctuation, Greek.
    text = "Vatr19!δωΦ"
    cells = [render_archetype(table, ord(ch)).bitmap for ch in text]
    strip = (1 - np.concatenate(cells, axis=1)) * np.uint8(255)
    big = np.kron(strip, np.ones((8, 8), dtype=np.uint8))
    Image.fromarray(big).save(f"{OUT}/archetype_strip.png")
    print(f"wrote {OUT}/archetype_strip.png for text {text!r}")

    # Dense content queries: one row per character, d columns.
    rng = np.random.default_rng(0)
    d = 64
    weight, bias = rng.normal(size=(256, d)) * 0.05, np.zeros(d)
    seq = embed_content(table, "that", weight, bias)
    print(f"embed_content('that') -> {seq.queries.shape} matrix, mode={seq.mode}")
    print(f"projection parameters: 256*{d} + {d} = {256 * d + d} (charset-independent)")

    # The one-hot baseline needs a fixed charset and fails outside it.
    charset = Charset.from_text("abcdefghijklmnopqrstuvwxyz")
    emb = rng.normal(size=(len(charset), d))
    print(f"one-hot embedding parameters: {len(charset)}*{d} = {emb.size} (grows with charset)")
    one_hot_encode(charset, "that", emb)
    try:
        one_hot_encode(charset, "δ", emb)
    except Exception as exc:
        print(f"one-hot on 'δ' -> {type(exc).__name__}: {exc}")


if __name__ == "__main__":
    main()
