#!/usr/bin/env python3
"""Regenerate src/vatr/data/desk_glyphs.hex.

Renders a desk-scale glyph set (printable ASCII, Latin-1, Greek, common
punctuation) from DejaVuSans into 16x16 binary cells and writes them in
the standard Unifont ``.hex`` record format: halfwidth glyphs as 32 hex
digits (8x16 cell), wider ones as 64 digits (16x16 cell).  The output is
a stand-in for a real Unifont release, which covers far more codepoints
but is not redistributed with this package.
"""

from __future__ import annotations

import unicodedata
from pathlib import Path

import numpy as np
from fontTools.ttLib import TTFont
from PIL import Image, ImageDraw, ImageFont

FONT_PATH = "/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf"
OUT_PATH = Path(__file__).resolve().parents[1] / "src" / "vatr" / "data" / "desk_glyphs.hex"

CANVAS = 48
BASELINE = 28  # glyph band is rows [BASELINE-12, BASELINE+4): baseline sits at row 12 of 16
FONT_SIZE = 13

REJECTED_CATEGORIES = {"Cc", "Cf", "Cs", "Mn", "Mc", "Me"}


def codepoint_pool() -> list[int]:
    pool = list(range(0x20, 0x7F))  # printable ASCII
    pool += list(range(0xA1, 0x100))  # Latin-1 punctuation and letters
    pool += list(range(0x386, 0x3CF))  # Greek (modern, incl. accented vowels)
    pool += [0x2013, 0x2014, 0x2018, 0x2019, 0x201C, 0x201D, 0x2026]
    return pool


def render_cell(font: ImageFont.FreeTypeFont, ch: str) -> np.ndarray | None:
    img = Image.new("L", (CANVAS, CANVAS), 0)
    draw = ImageDraw.Draw(img)
    draw.text((16, BASELINE), ch, fill=255, font=font, anchor="ls")
    arr = (np.asarray(img) > 127).astype(np.uint8)
    band = arr[BASELINE - 12 : BASELINE + 4, :]

    cols = np.flatnonzero(band.any(axis=0))
    if cols.size == 0:
        return np.zeros((16, 8), dtype=np.uint8)  # blank glyph (space)
    width = cols[-1] - cols[0] + 1
    if width > 16:
        return None
    cell_w = 8 if width <= 8 else 16
    cell = np.zeros((16, cell_w), dtype=np.uint8)
    x0 = (cell_w - width) // 2
    cell[:, x0 : x0 + width] = band[:, cols[0] : cols[-1] + 1]
    return cell


def cell_to_hex(cell: np.ndarray) -> str:
    digits_per_row = cell.shape[1] // 4
    out = []
    for row in cell:
        value = 0
        for bit in row:
            value = (value << 1) | int(bit)
        out.append(f"{value:0{digits_per_row}X}")
    return "".join(out)


def main() -> None:
    font = ImageFont.truetype(FONT_PATH, FONT_SIZE)
    cmap = TTFont(FONT_PATH).getBestCmap()
    records = []
    for cp in codepoint_pool():
        if unicodedata.category(chr(cp)) in REJECTED_CATEGORIES:
            continue
        if cp != 0x20 and cp not in cmap:
            continue
        cell = render_cell(font, chr(cp))
        if cell is None:
            print(f"skip U+{cp:04X}: wider than 16px")
            continue
        records.append(f"{cp:04X}:{cell_to_hex(cell)}")
    OUT_PATH.parent.mkdir(parents=True, exist_ok=True)
    OUT_PATH.write_text("\n".join(records) + "\n", encoding="utf-8")
    half = sum(1 for r in records if len(r.split(":")[1]) == 32)
    print(f"wrote {len(records)} glyphs ({half} halfwidth) to {OUT_PATH}")


if __name__ == "__main__":
    main()
