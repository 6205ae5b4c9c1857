"""Glyph archetypes and content encodings.

Text to be generated is represented as a sequence of dense query vectors,
one per character.  Each character is looked up in a glyph table (the
standard Unifont ``.hex`` record format), rendered as a 16x16 binary
bitmap, flattened row-major and linearly projected to the model embedding
size.  A one-hot baseline encoder over a fixed charset is provided for
ablations; unlike the archetype path it cannot handle characters outside
its charset.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

GLYPH_SIZE = 16
GLYPH_PIXELS = GLYPH_SIZE * GLYPH_SIZE

# Unicode categories that are never rendered: control/format codes and
# combining marks.  They have no standalone visual archetype.
_REJECTED_CATEGORIES = {"Cc", "Cf", "Cs", "Mn", "Mc", "Me"}


class GlyphParseError(ValueError):
    """Raised for a malformed or duplicate record in a .hex glyph file."""


class MissingGlyphError(KeyError):
    """Raised when a codepoint is not covered by the glyph table."""

    def __init__(self, codepoint: int):
        self.codepoint = codepoint
        super().__init__(f"no glyph for codepoint U+{codepoint:04X} ({chr(codepoint)!r})")

    def __str__(self) -> str:
        return self.args[0]


class UnsupportedCodepointError(ValueError):
    """Raised for combining marks and control codes, which are not rendered."""


@dataclass(frozen=True)
class BinaryGlyph:
    """A 16x16 binary bitmap for one Unicode codepoint."""

    codepoint: int
    bitmap: np.ndarray  # (16, 16) uint8, values in {0, 1}

    def __post_init__(self):
        if self.bitmap.shape != (GLYPH_SIZE, GLYPH_SIZE):
            raise ValueError(f"glyph bitmap must be 16x16, got {self.bitmap.shape}")
        if not np.isin(self.bitmap, (0, 1)).all():
            raise ValueError("glyph bitmap values must be 0 or 1")

    def flattened(self) -> np.ndarray:
        """Row-major (top-left origin) flattening to a length-256 vector."""
        return self.bitmap.reshape(GLYPH_PIXELS)


class GlyphTable:
    """Immutable codepoint -> BinaryGlyph map loaded from a .hex file."""

    def __init__(self, glyphs: dict[int, BinaryGlyph]):
        self._glyphs = dict(glyphs)

    @property
    def coverage(self) -> int:
        return len(self._glyphs)

    def __contains__(self, codepoint: int) -> bool:
        return codepoint in self._glyphs

    def __getitem__(self, codepoint: int) -> BinaryGlyph:
        try:
            return self._glyphs[codepoint]
        except KeyError:
            raise MissingGlyphError(codepoint) from None

    def codepoints(self) -> list[int]:
        return sorted(self._glyphs)

    def covers_text(self, text: str) -> bool:
        return all(ord(ch) in self._glyphs for ch in text)


def _expand_hex_row(hexdigits: str, width: int) -> np.ndarray:
    value = int(hexdigits, 16)
    bits = [(value >> (width - 1 - i)) & 1 for i in range(width)]
    return np.array(bits, dtype=np.uint8)


def _parse_hex_record(codepoint: int, hexbits: str) -> BinaryGlyph:
    bitmap = np.zeros((GLYPH_SIZE, GLYPH_SIZE), dtype=np.uint8)
    if len(hexbits) == 32:
        # Halfwidth 8x16 glyph, horizontally centered into columns 4..11.
        for row in range(16):
            bitmap[row, 4:12] = _expand_hex_row(hexbits[2 * row : 2 * row + 2], 8)
    elif len(hexbits) == 64:
        for row in range(16):
            bitmap[row, :] = _expand_hex_row(hexbits[4 * row : 4 * row + 4], 16)
    else:
        raise ValueError(f"expected 32 or 64 hex digits, got {len(hexbits)}")
    return BinaryGlyph(codepoint=codepoint, bitmap=bitmap)


def load_unifont(path: str | Path) -> GlyphTable:
    """Parse a Unifont-format ``.hex`` glyph file into a GlyphTable.

    Each record is one line ``CODEPOINT:HEXBITS`` where CODEPOINT is 4-6
    uppercase hex digits and HEXBITS is 32 digits (halfwidth, 8x16) or 64
    digits (fullwidth, 16x16).  Blank lines and ``#`` comment lines are
    skipped.  Malformed lines and duplicate codepoints raise
    :class:`GlyphParseError` naming the offending line.
    """
    path = Path(path)
    glyphs: dict[int, BinaryGlyph] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            head, sep, hexbits = line.partition(":")
            if not sep:
                raise GlyphParseError(f"{path.name}:{lineno}: missing ':' separator")
            try:
                codepoint = int(head, 16)
            except ValueError:
                raise GlyphParseError(
                    f"{path.name}:{lineno}: bad codepoint field {head!r}"
                ) from None
            if codepoint in glyphs:
                raise GlyphParseError(
                    f"{path.name}:{lineno}: duplicate codepoint U+{codepoint:04X}"
                )
            try:
                glyphs[codepoint] = _parse_hex_record(codepoint, hexbits)
            except ValueError as exc:
                raise GlyphParseError(f"{path.name}:{lineno}: {exc}") from None
    return GlyphTable(glyphs)


def default_glyph_table() -> GlyphTable:
    """Load the desk-scale glyph table shipped with the package.

    Covers printable ASCII, Latin-1 letters and Greek.  For full Unicode
    coverage pass a real Unifont release file to :func:`load_unifont`.
    """
    return load_unifont(Path(__file__).parent / "data" / "desk_glyphs.hex")


def render_archetype(table: GlyphTable, codepoint: int) -> BinaryGlyph:
    """Return the stored 16x16 bitmap for ``codepoint``, unmodified.

    Combining marks and control codes are rejected: they carry no
    standalone shape to imitate.
    """
    category = unicodedata.category(chr(codepoint))
    if category in _REJECTED_CATEGORIES:
        raise UnsupportedCodepointError(
            f"U+{codepoint:04X} has category {category}; "
            "combining and control codepoints are not rendered"
        )
    return table[codepoint]


def archetype_matrix(table: GlyphTable, text: str) -> np.ndarray:
    """Stack flattened archetypes of ``text`` into a (len(text), 256) matrix."""
    if not text:
        raise ValueError("text must be nonempty")
    rows = [render_archetype(table, ord(ch)).flattened() for ch in text]
    return np.stack(rows).astype(np.float64)


@dataclass
class ContentQuerySeq:
    """Query vectors for one content string: one d-dimensional row per character."""

    string: str
    queries: np.ndarray  # (k, d)
    mode: str  # "archetype" or "one-hot"

    def __post_init__(self):
        if self.queries.shape[0] != len(self.string):
            raise ValueError(
                f"query row count {self.queries.shape[0]} != "
                f"character count {len(self.string)}"
            )


def embed_content(
    table: GlyphTable, text: str, weight: np.ndarray, bias: np.ndarray
) -> ContentQuerySeq:
    """Project flattened archetypes through a 256->d linear map.

    Row j of the result is ``flatten(archetype(text[j])) @ weight + bias``.
    The layer has exactly ``256*d + d`` parameters regardless of how many
    codepoints the glyph table covers.
    """
    weight = np.asarray(weight, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if weight.shape[0] != GLYPH_PIXELS:
        raise ValueError(f"weight must be 256xd, got {weight.shape}")
    if bias.shape != (weight.shape[1],):
        raise ValueError(f"bias shape {bias.shape} does not match d={weight.shape[1]}")
    flat = archetype_matrix(table, text)
    return ContentQuerySeq(string=text, queries=flat @ weight + bias, mode="archetype")


@dataclass
class Charset:
    """Ordered codepoint list with training-frequency counts.

    Order is the canonical character -> index mapping used by the one-hot
    baseline and the text recognizer.
    """

    codepoints: list[int]
    counts: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.codepoints)) != len(self.codepoints):
            raise ValueError("charset codepoints must be unique")
        for cp, n in self.counts.items():
            if n < 0:
                raise ValueError(f"negative count for U+{cp:04X}")
        self._index = {cp: i for i, cp in enumerate(self.codepoints)}

    @classmethod
    def from_counts(cls, counts: dict[int, int]) -> "Charset":
        return cls(codepoints=sorted(counts), counts=dict(counts))

    @classmethod
    def from_text(cls, text: str) -> "Charset":
        counts: dict[int, int] = {}
        for ch in text:
            counts[ord(ch)] = counts.get(ord(ch), 0) + 1
        return cls.from_counts(counts)

    def __len__(self) -> int:
        return len(self.codepoints)

    def __contains__(self, codepoint: int) -> bool:
        return codepoint in self._index

    def index(self, codepoint: int) -> int:
        if codepoint not in self._index:
            raise OutOfCharsetError(codepoint)
        return self._index[codepoint]

    def chars(self) -> str:
        return "".join(chr(cp) for cp in self.codepoints)

    def encode(self, text: str) -> list[int]:
        return [self.index(ord(ch)) for ch in text]


class OutOfCharsetError(KeyError):
    """A codepoint not in the fixed charset was given to the one-hot encoder."""

    def __init__(self, codepoint: int):
        self.codepoint = codepoint
        super().__init__(
            f"U+{codepoint:04X} ({chr(codepoint)!r}) is not in the charset; "
            "the one-hot content encoding only supports its fixed charset"
        )

    def __str__(self) -> str:
        return self.args[0]


def one_hot_encode(charset: Charset, text: str, embedding: np.ndarray) -> ContentQuerySeq:
    """Baseline content encoding: row j is the embedding row of text[j].

    The embedding table has ``|charset| * d`` parameters and grows with the
    charset, which is the documented limitation of this baseline.
    """
    if not text:
        raise ValueError("text must be nonempty")
    embedding = np.asarray(embedding, dtype=np.float64)
    if embedding.shape[0] != len(charset):
        raise ValueError(
            f"embedding has {embedding.shape[0]} rows for a "
            f"{len(charset)}-symbol charset"
        )
    rows = [embedding[charset.index(ord(ch))] for ch in text]
    return ContentQuerySeq(string=text, queries=np.stack(rows), mode="one-hot")
