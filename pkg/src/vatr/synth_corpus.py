"""Synthetic calligraphic pre-training corpus.

Word images are rendered as (font, word) pairs composited over paper-like
backgrounds, then passed through an augmentation chain: rotation, thin
plate spline deformation, gaussian blur, grayscale ink dilation and
brightness/contrast jitter.  A manifest enumerates the full font x word
cross product (optionally subsampled) with one unique RNG seed per
record, so every output byte is reproducible from the manifest alone.

Images are grayscale uint8, white paper (255) with dark ink.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

logger = logging.getLogger(__name__)

DEFAULT_HEIGHT = 64


class FontCoverageError(ValueError):
    """The font cannot render every character of the requested word."""


class TpsSolveError(ValueError):
    """The TPS system is singular (collinear or duplicate control points)."""


# ---------------------------------------------------------------------------
# Thin plate spline
# ---------------------------------------------------------------------------


def _tps_kernel(r2: np.ndarray) -> np.ndarray:
    # U(r) = r^2 * log(r^2), with U(0) = 0.
    out = np.zeros_like(r2)
    mask = r2 > 0
    out[mask] = r2[mask] * np.log(r2[mask])
    return out


class TpsMap:
    """A fitted thin plate spline mapping R^2 -> R^2.

    Interpolates ``destination[i] = f(source[i])`` exactly and degrades to
    the affine part far from the control points.  Points are (x, y).
    """

    def __init__(self, source: np.ndarray, weights: np.ndarray, affine: np.ndarray):
        self.source = source
        self.weights = weights  # (n, 2)
        self.affine = affine  # (3, 2) rows: constant, x, y

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        d = points[:, None, :] - self.source[None, :, :]
        r2 = (d ** 2).sum(axis=2)
        u = _tps_kernel(r2)
        out = u @ self.weights
        out += self.affine[0]
        out += points @ self.affine[1:]
        return out


def tps_fit(source_points: np.ndarray, displaced_points: np.ndarray) -> TpsMap:
    """Solve the standard TPS system for the map source -> displaced."""
    src = np.asarray(source_points, dtype=np.float64)
    dst = np.asarray(displaced_points, dtype=np.float64)
    if src.ndim != 2 or src.shape[1] != 2 or src.shape != dst.shape:
        raise ValueError(f"control points must be matching n x 2 arrays, got {src.shape} and {dst.shape}")
    n = src.shape[0]
    if n < 3:
        raise ValueError("TPS needs at least 3 control points")

    d = src[:, None, :] - src[None, :, :]
    K = _tps_kernel((d ** 2).sum(axis=2))
    P = np.concatenate([np.ones((n, 1)), src], axis=1)
    L = np.zeros((n + 3, n + 3))
    L[:n, :n] = K
    L[:n, n:] = P
    L[n:, :n] = P.T
    rhs = np.zeros((n + 3, 2))
    rhs[:n] = dst
    try:
        params = np.linalg.solve(L, rhs)
    except np.linalg.LinAlgError:
        raise TpsSolveError(
            "singular TPS system: control points are collinear or duplicated"
        ) from None
    return TpsMap(source=src, weights=params[:n], affine=params[n:])


def _sample_bilinear(image: np.ndarray, xs: np.ndarray, ys: np.ndarray, fill: float) -> np.ndarray:
    """Bilinearly sample ``image`` at float coords, ``fill`` outside.

    Coordinates within 1e-6 px of an integer are snapped so that
    numerically-identity warps reproduce the input bit for bit.
    """
    h, w = image.shape
    xs = np.where(np.abs(xs - np.rint(xs)) < 1e-6, np.rint(xs), xs)
    ys = np.where(np.abs(ys - np.rint(ys)) < 1e-6, np.rint(ys), ys)
    inside = (xs >= 0) & (xs <= w - 1) & (ys >= 0) & (ys <= h - 1)

    xc = np.clip(xs, 0, w - 1)
    yc = np.clip(ys, 0, h - 1)
    x0 = np.floor(xc).astype(np.int64)
    y0 = np.floor(yc).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xc - x0
    fy = yc - y0

    img = image.astype(np.float64)
    val = (
        img[y0, x0] * (1 - fy) * (1 - fx)
        + img[y0, x1] * (1 - fy) * fx
        + img[y1, x0] * fy * (1 - fx)
        + img[y1, x1] * fy * fx
    )
    return np.where(inside, val, fill)


def _resample(image: np.ndarray, xs: np.ndarray, ys: np.ndarray, fill: float) -> np.ndarray:
    values = _sample_bilinear(image, xs.ravel(), ys.ravel(), fill).reshape(image.shape)
    if image.dtype == np.uint8:
        return np.clip(np.rint(values), 0, 255).astype(np.uint8)
    return values.astype(image.dtype)


def tps_warp(
    image: np.ndarray,
    source_points: np.ndarray,
    displaced_points: np.ndarray,
    fill: float = 255.0,
) -> np.ndarray:
    """Warp ``image`` so that pixels at source_points land on displaced_points.

    The inverse map (fitted displaced -> source) is evaluated on the output
    grid and the input is bilinearly resampled; out-of-bounds samples take
    the ``fill`` background value.
    """
    if image.ndim != 2:
        raise ValueError("expected a single-channel image")
    inverse = tps_fit(displaced_points, source_points)
    h, w = image.shape
    gx, gy = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    grid = np.stack([gx.ravel(), gy.ravel()], axis=1)
    mapped = inverse(grid)
    return _resample(image, mapped[:, 0].reshape(h, w), mapped[:, 1].reshape(h, w), fill)


def _affine_warp(image: np.ndarray, matrix: np.ndarray, fill: float) -> np.ndarray:
    """Resample with an inverse 2x3 affine map (output -> input coords)."""
    h, w = image.shape
    gx, gy = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    xs = matrix[0, 0] * gx + matrix[0, 1] * gy + matrix[0, 2]
    ys = matrix[1, 0] * gx + matrix[1, 1] * gy + matrix[1, 2]
    return _resample(image, xs, ys, fill)


def rotate_image(image: np.ndarray, angle_deg: float, fill: float = 255.0) -> np.ndarray:
    """Rotate about the image center, bilinear, background fill."""
    theta = np.deg2rad(angle_deg)
    c, s = np.cos(theta), np.sin(theta)
    h, w = image.shape
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    # Inverse rotation: output pixel -> input pixel.
    matrix = np.array(
        [
            [c, -s, cx - c * cx + s * cy],
            [s, c, cy - s * cx - c * cy],
        ]
    )
    return _affine_warp(image, matrix, fill)


# ---------------------------------------------------------------------------
# Augmentation chain
# ---------------------------------------------------------------------------


@dataclass
class AugmentParams:
    """Magnitudes for the augmentation chain.

    ``rotation_deg``, ``blur_sigma`` and ``jitter`` are ranges sampled per
    image from the record seed; ``tps_sigma`` is the std of the control
    point displacements; ``dilation_radius`` is applied as given (a 3x3
    minimum filter at radius 1 and so on).  All magnitudes default to
    mild values chosen for desk-scale realism; they are configuration, not
    measured quantities.
    """

    rotation_deg: float = 3.0
    tps_grid: int = 4
    tps_sigma: float = 2.0
    blur_sigma: float = 1.2
    dilation_radius: int = 1
    jitter: tuple[float, float] = (0.15, 0.15)  # brightness, contrast deltas

    def __post_init__(self):
        if self.rotation_deg < 0 or self.tps_sigma < 0 or self.blur_sigma < 0:
            raise ValueError("augmentation magnitudes must be >= 0")
        if self.dilation_radius < 0:
            raise ValueError("dilation_radius must be >= 0")
        if self.tps_grid < 2:
            raise ValueError("tps_grid must be >= 2 per axis")
        if self.jitter[0] < 0 or self.jitter[1] < 0:
            raise ValueError("jitter deltas must be >= 0")

    @classmethod
    def none(cls) -> "AugmentParams":
        return cls(rotation_deg=0.0, tps_sigma=0.0, blur_sigma=0.0,
                   dilation_radius=0, jitter=(0.0, 0.0))


def _tps_augment(image: np.ndarray, grid: int, sigma: float, rng: np.random.Generator) -> np.ndarray:
    h, w = image.shape
    xs = np.linspace(0, w - 1, grid)
    ys = np.linspace(0, h - 1, grid)
    src = np.array([[x, y] for y in ys for x in xs])
    offsets = rng.normal(0.0, sigma, size=src.shape)
    # Border control points stay fixed so the canvas stays anchored.
    border = (
        (src[:, 0] == 0) | (src[:, 0] == w - 1) | (src[:, 1] == 0) | (src[:, 1] == h - 1)
    )
    offsets[border] = 0.0
    return tps_warp(image, src, src + offsets)


def augment(image: np.ndarray, params: AugmentParams, seed: int) -> np.ndarray:
    """Apply rotation -> TPS -> blur -> dilation -> jitter, seeded.

    Geometric transforms run before photometric ones so interpolation
    artifacts are not blurred twice.  Zero-magnitude stages are skipped,
    so all-zero params return the input unchanged.
    """
    from scipy import ndimage

    if image.ndim != 2:
        raise ValueError("expected a single-channel grayscale image")
    rng = np.random.default_rng(seed)
    out = image

    if params.rotation_deg > 0:
        angle = rng.uniform(-params.rotation_deg, params.rotation_deg)
        out = rotate_image(out, angle)
    if params.tps_sigma > 0:
        out = _tps_augment(out, params.tps_grid, params.tps_sigma, rng)
    if params.blur_sigma > 0:
        sigma = rng.uniform(0.0, params.blur_sigma)
        if sigma > 0.05:
            out = ndimage.gaussian_filter(out.astype(np.float64), sigma)
            out = np.clip(np.rint(out), 0, 255).astype(np.uint8)
    if params.dilation_radius > 0:
        # Dark ink on light paper: thickening strokes is a minimum filter.
        size = 2 * params.dilation_radius + 1
        out = ndimage.minimum_filter(out, size=size)
    jb, jc = params.jitter
    if jb > 0 or jc > 0:
        brightness = rng.uniform(-jb, jb) * 255.0
        contrast = 1.0 + rng.uniform(-jc, jc)
        x = out.astype(np.float64)
        x = (x - x.mean()) * contrast + x.mean() + brightness
        out = np.clip(np.rint(x), 0, 255).astype(np.uint8)
    return out


# ---------------------------------------------------------------------------
# Word rendering
# ---------------------------------------------------------------------------

_CMAP_CACHE: dict[str, set[int]] = {}


def _font_charset(font_path: str) -> set[int]:
    if font_path not in _CMAP_CACHE:
        from fontTools.ttLib import TTFont

        _CMAP_CACHE[font_path] = set(TTFont(font_path).getBestCmap())
    return _CMAP_CACHE[font_path]


def font_covers(font_path: str, word: str) -> bool:
    charset = _font_charset(font_path)
    return all(ord(ch) in charset or ch == " " for ch in word)


def render_word_image(
    font: str | Path,
    word: str,
    background: np.ndarray | None = None,
    height_px: int = DEFAULT_HEIGHT,
) -> np.ndarray:
    """Render ``word`` in ``font`` over a paper background.

    Output height is exactly ``height_px`` and width follows the text
    advance.  With no background a plain white page is used.  Raises
    :class:`FontCoverageError` if the font lacks a glyph of the word.
    """
    if not word:
        raise ValueError("word must be nonempty")
    font_path = str(font)
    if not font_covers(font_path, word):
        missing = [ch for ch in word if ord(ch) not in _font_charset(font_path) and ch != " "]
        raise FontCoverageError(f"font {Path(font_path).name} lacks glyphs for {missing!r}")

    size = max(8, int(round(height_px * 0.6)))
    ftfont = ImageFont.truetype(font_path, size)
    margin = max(2, height_px // 8)
    advance = ImageDraw.Draw(Image.new("L", (1, 1))).textlength(word, font=ftfont)
    width = int(np.ceil(advance)) + 2 * margin

    page = Image.new("L", (width, height_px), 255)
    draw = ImageDraw.Draw(page)
    baseline = int(round(height_px * 0.72))
    draw.text((margin, baseline), word, font=ftfont, fill=0, anchor="ls")
    ink = np.asarray(page, dtype=np.float64) / 255.0

    if background is None:
        paper = np.full((height_px, width), 255.0)
    else:
        paper = _tile_crop(background, height_px, width).astype(np.float64)
    return np.clip(np.rint(paper * ink), 0, 255).astype(np.uint8)


def _tile_crop(background: np.ndarray, h: int, w: int) -> np.ndarray:
    reps = (int(np.ceil(h / background.shape[0])), int(np.ceil(w / background.shape[1])))
    return np.tile(background, reps)[:h, :w]


# ---------------------------------------------------------------------------
# Manifest and corpus building
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorpusRecord:
    record_id: int
    font_idx: int
    word_idx: int
    background_idx: int  # -1 means plain white
    seed: int


@dataclass
class CorpusManifest:
    """Enumeration of (font, word, background, seed) records.

    By default the records are the full |fonts| x |words| cross product,
    kept implicit so that full-scale manifests (10^8 records) stay cheap;
    a subsampled manifest materializes its record index list.
    """

    fonts: list[str]
    words: list[str]
    backgrounds: list[str] = field(default_factory=list)
    base_seed: int = 0
    selected: np.ndarray | None = None  # indices into the cross product, or None for all

    @property
    def n_records(self) -> int:
        if self.selected is not None:
            return len(self.selected)
        return len(self.fonts) * len(self.words)

    def record(self, position: int) -> CorpusRecord:
        idx = int(self.selected[position]) if self.selected is not None else position
        n_words = len(self.words)
        bg = idx % len(self.backgrounds) if self.backgrounds else -1
        return CorpusRecord(
            record_id=idx,
            font_idx=idx // n_words,
            word_idx=idx % n_words,
            background_idx=bg,
            seed=self.base_seed + idx,
        )

    def iter_records(self):
        for position in range(self.n_records):
            yield self.record(position)

    def validate(self) -> None:
        if not self.fonts or not self.words:
            raise ValueError("manifest needs at least one font and one word")
        if self.selected is not None:
            if len(np.unique(self.selected)) != len(self.selected):
                raise ValueError("subsampled record indices must be unique")
            if self.selected.max(initial=-1) >= len(self.fonts) * len(self.words):
                raise ValueError("record index out of range")
        # seeds are base_seed + record_id with unique record ids: unique by construction

    def save(self, path: str | Path) -> None:
        lines = [f"# corpus manifest: base_seed={self.base_seed}"]
        lines += [f"F\t{f}" for f in self.fonts]
        lines += [f"W\t{w}" for w in self.words]
        lines += [f"B\t{b}" for b in self.backgrounds]
        if self.selected is None:
            lines.append("ALL")
        else:
            lines += [f"R\t{int(i)}" for i in self.selected]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "CorpusManifest":
        fonts: list[str] = []
        words: list[str] = []
        backgrounds: list[str] = []
        selected: list[int] = []
        implicit = False
        base_seed = 0
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.startswith("#"):
                if "base_seed=" in line:
                    base_seed = int(line.split("base_seed=")[1])
                continue
            if line == "ALL":
                implicit = True
                continue
            tag, _, rest = line.partition("\t")
            if tag == "F":
                fonts.append(rest)
            elif tag == "W":
                words.append(rest)
            elif tag == "B":
                backgrounds.append(rest)
            elif tag == "R":
                selected.append(int(rest))
            elif line.strip():
                raise ValueError(f"bad manifest line: {line!r}")
        sel = None if implicit else np.array(selected, dtype=np.int64)
        manifest = cls(fonts=fonts, words=words, backgrounds=backgrounds,
                       base_seed=base_seed, selected=sel)
        manifest.validate()
        return manifest


def build_manifest(
    fonts: list[str],
    words: list[str],
    backgrounds: list[str] | None = None,
    subsample: float = 1.0,
    base_seed: int = 0,
) -> CorpusManifest:
    """Enumerate all font x word pairs, optionally keeping a random fraction."""
    if not 0 < subsample <= 1.0:
        raise ValueError("subsample must be in (0, 1]")
    manifest = CorpusManifest(
        fonts=list(fonts), words=list(words),
        backgrounds=list(backgrounds or []), base_seed=base_seed,
    )
    if subsample < 1.0:
        total = len(fonts) * len(words)
        keep = max(1, int(round(subsample * total)))
        rng = np.random.default_rng(base_seed)
        manifest.selected = np.sort(rng.choice(total, size=keep, replace=False))
    manifest.validate()
    return manifest


# Shard record layout: record_id u32 | height u16 | width u16 | font u16
# | word utf-8 length u16 | word bytes | image bytes (height*width).
_HEADER = np.dtype([
    ("record_id", "<u4"), ("height", "<u2"), ("width", "<u2"),
    ("font", "<u2"), ("word_len", "<u2"),
])


def _shard_name(shard_idx: int) -> str:
    return f"shard_{shard_idx:05d}.bin"


def build_corpus(
    manifest: CorpusManifest,
    out_dir: str | Path,
    shard_size: int = 1000,
    height_px: int = DEFAULT_HEIGHT,
    params: AugmentParams | None = None,
) -> "CorpusIndex":
    """Render every manifest record into binary shards plus a TSV index.

    Records whose font cannot cover their word are skipped with a warning,
    mirroring manual font filtering.  Output bytes are fully determined by
    (manifest, params).
    """
    manifest.validate()
    if params is None:
        params = AugmentParams()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest.save(out_dir / "manifest.txt")

    backgrounds = [_load_gray(p) for p in manifest.backgrounds]
    index_rows = []
    skipped = 0
    shard_idx = -1
    shard_fh = None
    in_shard = 0
    try:
        for rec in manifest.iter_records():
            font = manifest.fonts[rec.font_idx]
            word = manifest.words[rec.word_idx]
            try:
                image = render_word_image(
                    font, word,
                    backgrounds[rec.background_idx] if rec.background_idx >= 0 else None,
                    height_px,
                )
            except FontCoverageError as exc:
                logger.warning("skipping record %d: %s", rec.record_id, exc)
                skipped += 1
                continue
            image = augment(image, params, rec.seed)

            if shard_fh is None or in_shard >= shard_size:
                if shard_fh is not None:
                    shard_fh.close()
                shard_idx += 1
                shard_fh = (out_dir / _shard_name(shard_idx)).open("wb")
                in_shard = 0
            offset = shard_fh.tell()
            word_bytes = word.encode("utf-8")
            header = np.zeros((), dtype=_HEADER)
            header["record_id"] = rec.record_id
            header["height"], header["width"] = image.shape
            header["font"] = rec.font_idx
            header["word_len"] = len(word_bytes)
            shard_fh.write(header.tobytes())
            shard_fh.write(word_bytes)
            shard_fh.write(image.tobytes())
            index_rows.append((rec.record_id, _shard_name(shard_idx), offset, rec.font_idx, word))
            in_shard += 1
    finally:
        if shard_fh is not None:
            shard_fh.close()

    lines = [
        f"# n_fonts: {len(manifest.fonts)}",
        f"# skipped: {skipped}",
        "# record_id\tshard\toffset\tfont_label\tword",
    ]
    lines += [f"{r}\t{s}\t{o}\t{f}\t{w}" for r, s, o, f, w in index_rows]
    (out_dir / "index.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if skipped:
        logger.warning("corpus build skipped %d of %d records", skipped, manifest.n_records)
    return CorpusIndex(out_dir)


def _load_gray(path: str | Path) -> np.ndarray:
    return np.asarray(Image.open(path).convert("L"))


class CorpusIndex:
    """Random access to a built corpus through its index file."""

    def __init__(self, corpus_dir: str | Path):
        self.dir = Path(corpus_dir)
        self.n_fonts = 0
        self.entries: list[tuple[int, str, int, int, str]] = []
        for line in (self.dir / "index.tsv").read_text(encoding="utf-8").splitlines():
            if line.startswith("#"):
                if line.startswith("# n_fonts:"):
                    self.n_fonts = int(line.split(":")[1])
                continue
            rid, shard, offset, font, word = line.split("\t")
            self.entries.append((int(rid), shard, int(offset), int(font), word))

    def __len__(self) -> int:
        return len(self.entries)

    def load(self, position: int) -> tuple[np.ndarray, int, str, int]:
        """Return (image, font_label, word, record_id) for one entry."""
        rid, shard, offset, font, word = self.entries[position]
        with (self.dir / shard).open("rb") as fh:
            fh.seek(offset)
            header = np.frombuffer(fh.read(_HEADER.itemsize), dtype=_HEADER)[0]
            stored_word = fh.read(int(header["word_len"])).decode("utf-8")
            image = np.frombuffer(
                fh.read(int(header["height"]) * int(header["width"])), dtype=np.uint8
            ).reshape(int(header["height"]), int(header["width"]))
        if stored_word != word or int(header["font"]) != font:
            raise ValueError(f"index row {position} does not match shard payload")
        return image, font, word, rid

    def labels(self) -> np.ndarray:
        return np.array([font for _, _, _, font, _ in self.entries], dtype=np.int64)
