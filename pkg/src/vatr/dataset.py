"""Real handwriting dataset ingestion and evaluation partitioning.

Datasets arrive as TSV manifests (``image_path<TAB>writer_id<TAB>
transcription``).  Images are normalized to 64 px height with
proportional width at load time.  On top of the loaded samples this
module computes character frequency statistics with a long-tail
threshold, samples few-shot style sets, and partitions the four
evaluation scenarios (in/out-of-vocabulary content x seen/unseen style).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

logger = logging.getLogger(__name__)

TARGET_HEIGHT = 64
DEFAULT_LONG_TAIL_THRESHOLD = 1000
DEFAULT_STYLE_SAMPLES = 15

SCENARIOS = ("IV-S", "IV-U", "OOV-S", "OOV-U")


@dataclass
class WordSample:
    """One word image with its transcription and writer identity."""

    image: np.ndarray  # uint8, height TARGET_HEIGHT
    transcription: str
    writer_id: str

    def __post_init__(self):
        if self.image.shape[0] != TARGET_HEIGHT:
            raise ValueError(f"sample height must be {TARGET_HEIGHT}, got {self.image.shape[0]}")
        if not self.transcription:
            raise ValueError("transcription must be nonempty")


@dataclass
class StyleSet:
    """The few-shot style examples for one writer."""

    writer_id: str
    images: list[WordSample]

    def __post_init__(self):
        if any(s.writer_id != self.writer_id for s in self.images):
            raise ValueError("style set mixes writers")

    def __len__(self) -> int:
        return len(self.images)


def normalize_height(image: np.ndarray, height: int = TARGET_HEIGHT) -> np.ndarray:
    """Rescale to the target height keeping width proportional."""
    h, w = image.shape[:2]
    if h == height:
        return image
    new_w = max(1, int(round(w * height / h)))
    resized = Image.fromarray(image).resize((new_w, height), Image.BILINEAR)
    return np.asarray(resized)


def load_dataset(manifest_path: str | Path) -> dict[str, list[WordSample]]:
    """Load a TSV manifest into samples grouped by writer.

    Relative image paths resolve against the manifest directory.  A
    missing image file is an error naming the path; records with an empty
    transcription are rejected with a warning.
    """
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    grouped: dict[str, list[WordSample]] = {}
    for lineno, line in enumerate(manifest_path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"{manifest_path.name}:{lineno}: expected 3 tab-separated fields")
        rel_path, writer_id, transcription = parts
        if not transcription:
            logger.warning("%s:%d: empty transcription, record rejected", manifest_path.name, lineno)
            continue
        img_path = (base / rel_path) if not Path(rel_path).is_absolute() else Path(rel_path)
        if not img_path.exists():
            raise FileNotFoundError(f"{manifest_path.name}:{lineno}: image not found: {img_path}")
        image = normalize_height(np.asarray(Image.open(img_path).convert("L")))
        grouped.setdefault(writer_id, []).append(
            WordSample(image=image, transcription=transcription, writer_id=writer_id)
        )
    return grouped


def all_samples(grouped: dict[str, list[WordSample]]) -> list[WordSample]:
    out = []
    for writer in sorted(grouped):
        out.extend(grouped[writer])
    return out


def vocabulary(grouped: dict[str, list[WordSample]]) -> set[str]:
    return {s.transcription for s in all_samples(grouped)}


@dataclass
class FrequencyTable:
    """Per-codepoint training occurrence counts plus a long-tail threshold."""

    counts: dict[int, int]
    long_tail_threshold: int = DEFAULT_LONG_TAIL_THRESHOLD

    def count(self, codepoint: int) -> int:
        return self.counts.get(codepoint, 0)

    @property
    def long_tail(self) -> set[int]:
        return {cp for cp, n in self.counts.items() if n < self.long_tail_threshold}

    def is_long_tail(self, codepoint: int) -> bool:
        return self.count(codepoint) < self.long_tail_threshold

    def total(self) -> int:
        return sum(self.counts.values())

    def to_csv(self, path: str | Path) -> None:
        lines = ["codepoint,count,is_long_tail"]
        for cp in sorted(self.counts):
            lines.append(f"{cp},{self.counts[cp]},{int(self.is_long_tail(cp))}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def most_common(self, n: int) -> list[str]:
        ranked = sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return [chr(cp) for cp, _ in ranked[:n]]


def char_frequency(
    train_samples: list[WordSample] | dict[str, list[WordSample]],
    long_tail_threshold: int = DEFAULT_LONG_TAIL_THRESHOLD,
) -> FrequencyTable:
    """Count every transcription codepoint in the training split."""
    if isinstance(train_samples, dict):
        train_samples = all_samples(train_samples)
    if not train_samples:
        raise ValueError("training sample set is empty")
    counts: dict[int, int] = {}
    for sample in train_samples:
        for ch in sample.transcription:
            counts[ord(ch)] = counts.get(ord(ch), 0) + 1
    return FrequencyTable(counts=counts, long_tail_threshold=long_tail_threshold)


@dataclass
class LongTailSubsets:
    """Samples containing rare characters, plus the digits-only slice."""

    flagged: list[WordSample]
    digits_only: list[WordSample]


def long_tail_words(samples: list[WordSample], freq: FrequencyTable) -> LongTailSubsets:
    """Select samples with at least one long-tail character.

    The digits-only subset holds samples whose transcription is entirely
    digits, reported alongside for the rare-character evaluation.
    """
    flagged = [
        s for s in samples if any(freq.is_long_tail(ord(ch)) for ch in s.transcription)
    ]
    digits_only = [s for s in samples if s.transcription.isdigit()]
    return LongTailSubsets(flagged=flagged, digits_only=digits_only)


def sample_style_set(
    writer_samples: list[WordSample],
    p: int = DEFAULT_STYLE_SAMPLES,
    seed: int = 0,
) -> StyleSet:
    """Draw P distinct style examples of one writer, deterministic in seed."""
    if not writer_samples:
        raise ValueError("writer has no samples")
    writer_id = writer_samples[0].writer_id
    if len(writer_samples) < p:
        raise ValueError(
            f"writer {writer_id!r} has {len(writer_samples)} samples, needs {p}"
        )
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(writer_samples), size=p, replace=False))
    return StyleSet(writer_id=writer_id, images=[writer_samples[i] for i in idx])


@dataclass
class ScenarioSplit:
    """Evaluation pairs (writer, word) for one of the four scenarios."""

    scenario: str
    pairs: list[tuple[str, str]]

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")

    def __len__(self) -> int:
        return len(self.pairs)


def partition_scenarios(
    train_split: dict[str, list[WordSample]],
    test_split: dict[str, list[WordSample]],
    max_pairs_per_scenario: int | None = None,
    seed: int = 0,
) -> dict[str, ScenarioSplit]:
    """Build the four content x style evaluation splits.

    Words come from the test vocabulary, divided into in-vocabulary (also
    seen in training) and out-of-vocabulary; writers are seen (training)
    or unseen (test-only).  An empty out-of-vocabulary set is an error:
    the test split adds no new words to evaluate on.
    """
    train_vocab = vocabulary(train_split)
    test_vocab = vocabulary(test_split)
    iv_words = sorted(test_vocab & train_vocab)
    oov_words = sorted(test_vocab - train_vocab)
    if not oov_words:
        raise ValueError("test vocabulary adds no out-of-vocabulary words")

    seen_writers = sorted(train_split)
    unseen_writers = sorted(set(test_split) - set(train_split))

    rng = np.random.default_rng(seed)
    splits = {}
    for scenario, writers, words in [
        ("IV-S", seen_writers, iv_words),
        ("IV-U", unseen_writers, iv_words),
        ("OOV-S", seen_writers, oov_words),
        ("OOV-U", unseen_writers, oov_words),
    ]:
        pairs = [(w, word) for w in writers for word in words]
        if max_pairs_per_scenario is not None and len(pairs) > max_pairs_per_scenario:
            keep = rng.choice(len(pairs), size=max_pairs_per_scenario, replace=False)
            pairs = [pairs[i] for i in np.sort(keep)]
        splits[scenario] = ScenarioSplit(scenario=scenario, pairs=pairs)
    return splits


def save_manifest(samples: list[tuple[str, str, str]], path: str | Path) -> None:
    """Write (image_path, writer_id, transcription) rows as a TSV manifest."""
    lines = [f"{p}\t{w}\t{t}" for p, w, t in samples]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
