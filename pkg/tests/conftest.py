"""Session fixtures: glyph table, toy writer datasets, font pools."""

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from vatr.content import default_glyph_table
from vatr.dataset import load_dataset, save_manifest
from vatr.synth_corpus import AugmentParams, augment, font_covers, render_word_image

DEJAVU = Path("/usr/share/fonts/truetype/dejavu")

TRAIN_WRITER_FONTS = {
    "w0": DEJAVU / "DejaVuSans.ttf",
    "w1": DEJAVU / "DejaVuSerif.ttf",
    "w2": DEJAVU / "DejaVuSansMono.ttf",
}
TEST_WRITER_FONTS = {
    "w3": DEJAVU / "DejaVuSans-Bold.ttf",
    "w4": DEJAVU / "DejaVuSerif-Bold.ttf",
}

TRAIN_WORDS = [
    "and", "the", "ink", "pen", "page", "word", "hand", "note",
    "line", "fast", "slow", "open", "read", "write", "tall", "blue",
    "red", "sun", "moon", "star", "tree", "book", "lamp", "door",
]
IV_TEST_WORDS = TRAIN_WORDS[:12]
OOV_TEST_WORDS = ["quiz", "jump", "vex", "fog", "myth", "crab", "dusk", "plow"]

# Mild per-sample irregularity so each "writer" is a consistent but not
# pixel-identical hand.
_WRITER_AUGMENT = AugmentParams(
    rotation_deg=1.5, tps_grid=4, tps_sigma=1.0, blur_sigma=0.6,
    dilation_radius=0, jitter=(0.05, 0.05),
)


def _write_split(out_dir: Path, writer_fonts: dict, words: list[str], seed0: int) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    seed = seed0
    for writer, font in sorted(writer_fonts.items()):
        for word in words:
            image = render_word_image(font, word, None, 64)
            image = augment(image, _WRITER_AUGMENT, seed)
            name = f"{writer}_{word}.png"
            Image.fromarray(image).save(out_dir / name)
            rows.append((name, writer, word))
            seed += 1
    manifest = out_dir / "manifest.tsv"
    save_manifest(rows, manifest)
    return manifest


@pytest.fixture(scope="session")
def glyph_table():
    return default_glyph_table()


@pytest.fixture(scope="session")
def toy_handwriting(tmp_path_factory):
    """Five font-writers: 3 train (24 words each), 2 unseen test writers."""
    root = tmp_path_factory.mktemp("toy_handwriting")
    train_manifest = _write_split(root / "train", TRAIN_WRITER_FONTS, TRAIN_WORDS, seed0=1000)
    test_manifest = _write_split(
        root / "test", TEST_WRITER_FONTS, IV_TEST_WORDS + OOV_TEST_WORDS, seed0=9000
    )
    return {
        "train_manifest": train_manifest,
        "test_manifest": test_manifest,
        "train": load_dataset(train_manifest),
        "test": load_dataset(test_manifest),
    }


# Symbol-only faces carry no letterforms and are curated out, mirroring
# the manual font filtering a real corpus build needs.
EXCLUDED_FONTS = {"cmex10.ttf", "cmsy10.ttf"}

# Corpus augmentation for the pre-training fixtures: geometric wobble and
# photometric jitter, but no ink dilation (a fixed dilation erases the
# stroke-weight cue that separates bold from regular faces).
CORPUS_AUGMENT = AugmentParams(
    rotation_deg=2.0, tps_grid=4, tps_sigma=1.5, blur_sigma=0.8,
    dilation_radius=0, jitter=(0.15, 0.15),
)


@pytest.fixture(scope="session")
def desk_font_pool():
    """20 visually distinct TTFs covering lowercase ASCII, greedily picked."""
    import matplotlib

    candidates = sorted(DEJAVU.glob("*.ttf"))
    candidates += sorted((Path(matplotlib.get_data_path()) / "fonts" / "ttf").glob("*.ttf"))
    usable, seen = [], set()
    for path in candidates:
        if path.name in seen or path.name in EXCLUDED_FONTS:
            continue
        seen.add(path.name)
        if font_covers(str(path), "abcdefghijklmnopqrstuvwxyz"):
            usable.append(str(path))
    assert len(usable) >= 20, f"need >= 20 usable fonts, found {len(usable)}"

    rendered = {}
    for font in usable:
        img = render_word_image(font, "handwrote", None, 64)
        rendered[font] = np.asarray(
            Image.fromarray(img).resize((256, 64))
        ).astype(np.float64)

    def distance(a, b):
        return np.abs(rendered[a] - rendered[b]).mean()

    chosen = [usable[0]]
    while len(chosen) < 20:
        best = max(
            (f for f in usable if f not in chosen),
            key=lambda f: min(distance(f, c) for c in chosen),
        )
        chosen.append(best)
    return sorted(chosen)
