"""Evaluation metrics and protocols.

FID between Gaussian fits of feature distributions (pluggable feature
extractor; the desk default reuses the style backbone), averaged per
writer for the styled protocol; character and word error rates from edit
distance; the four-scenario report; and the long-tail threshold sweep.

The matrix square root inside FID uses the symmetric eigendecomposition
of sqrt(C1) @ C2 @ sqrt(C1), which is numerically stabler than taking
the square root of the plain product.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .dataset import ScenarioSplit, StyleSet, WordSample, FrequencyTable, sample_style_set
from .network import (
    ModelBundle,
    generate_word_images,
    image_tensor_to_uint8,
    uint8_to_image_tensor,
)

logger = logging.getLogger(__name__)

EIG_TOLERANCE = 1e-6


class CovarianceSqrtError(ValueError):
    """Covariance square root failed: eigenvalues negative beyond tolerance."""


@dataclass
class FeatureSet:
    """Extractor features for a set of samples."""

    features: np.ndarray  # (n, m)
    extractor_id: str = "raw"
    sample_ids: list | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D (n, m) array")
        if not np.isfinite(self.features).all():
            raise ValueError("features contain non-finite entries")


def _as_features(x) -> np.ndarray:
    if isinstance(x, FeatureSet):
        return x.features
    return np.asarray(x, dtype=np.float64)


def _psd_sqrt(matrix: np.ndarray, tol: float) -> np.ndarray:
    values, vectors = np.linalg.eigh(matrix)
    if values.min() < -tol:
        raise CovarianceSqrtError(
            f"covariance square root failed: min eigenvalue {values.min():.3e} "
            f"below -{tol:.1e}"
        )
    values = np.clip(values, 0.0, None)
    return (vectors * np.sqrt(values)) @ vectors.T


def fid_from_stats(
    mean_a: np.ndarray, cov_a: np.ndarray, mean_b: np.ndarray, cov_b: np.ndarray
) -> float:
    """Frechet distance between two Gaussians from their population stats."""
    mean_a = np.atleast_1d(np.asarray(mean_a, dtype=np.float64))
    mean_b = np.atleast_1d(np.asarray(mean_b, dtype=np.float64))
    cov_a = np.atleast_2d(np.asarray(cov_a, dtype=np.float64))
    cov_b = np.atleast_2d(np.asarray(cov_b, dtype=np.float64))

    scale = max(1.0, float(np.abs(cov_a).max()), float(np.abs(cov_b).max()))
    tol = EIG_TOLERANCE * scale
    sqrt_a = _psd_sqrt((cov_a + cov_a.T) / 2, tol)
    inner = sqrt_a @ cov_b @ sqrt_a
    inner_vals, _ = np.linalg.eigh((inner + inner.T) / 2)
    if inner_vals.min() < -tol * scale:
        raise CovarianceSqrtError(
            f"covariance square root failed: min eigenvalue {inner_vals.min():.3e}"
        )
    trace_sqrt = np.sqrt(np.clip(inner_vals, 0.0, None)).sum()

    diff = mean_a - mean_b
    value = float(diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * trace_sqrt)
    return max(value, 0.0)


def fid(real, fake) -> float:
    """FID between two feature sets (sample means and covariances)."""
    real = _as_features(real)
    fake = _as_features(fake)
    if real.shape[1] != fake.shape[1]:
        raise ValueError(f"feature dims differ: {real.shape[1]} vs {fake.shape[1]}")
    if real.shape[0] < 2 or fake.shape[0] < 2:
        raise ValueError("need at least 2 samples per side for covariance")
    return fid_from_stats(
        real.mean(axis=0), np.cov(real, rowvar=False),
        fake.mean(axis=0), np.cov(fake, rowvar=False),
    )


def fid_per_writer(
    real_by_writer: dict[str, np.ndarray],
    fake_by_writer: dict[str, np.ndarray],
    min_count: int = 2,
) -> float:
    """Unweighted mean of per-writer FIDs.

    Writers missing from either side or below ``min_count`` samples are
    excluded with a warning.
    """
    scores = []
    for writer in sorted(real_by_writer):
        real = _as_features(real_by_writer[writer])
        fake_arr = fake_by_writer.get(writer)
        if fake_arr is None:
            logger.warning("writer %s has no generated samples, excluded", writer)
            continue
        fake_feats = _as_features(fake_arr)
        if real.shape[0] < min_count or fake_feats.shape[0] < min_count:
            logger.warning("writer %s below min sample count, excluded", writer)
            continue
        scores.append(fid(real, fake_feats))
    if not scores:
        raise ValueError("no writer had enough samples for FID")
    return float(np.mean(scores))


# ---------------------------------------------------------------------------
# Edit-distance metrics
# ---------------------------------------------------------------------------


def edit_distance(a, b) -> int:
    """Levenshtein distance between two sequences (dynamic programming)."""
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i] + [0] * len(b)
        for j, cb in enumerate(b, 1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb))
        prev = cur
    return prev[len(b)]


def cer(hypothesis: str, reference: str) -> float:
    """Character error rate: edit distance over reference length."""
    if not reference:
        raise ValueError("reference must be nonempty")
    return edit_distance(hypothesis, reference) / len(reference)


def wer(hypothesis: str, reference: str) -> float:
    """Word error rate over whitespace tokens (punctuation stays attached)."""
    ref_tokens = reference.split()
    if not ref_tokens:
        raise ValueError("reference must contain at least one token")
    return edit_distance(hypothesis.split(), ref_tokens) / len(ref_tokens)


def corpus_cer(pairs: list[tuple[str, str]]) -> float:
    """Total edits over total reference characters across (hyp, ref) pairs."""
    if not pairs:
        raise ValueError("no pairs given")
    edits = sum(edit_distance(h, r) for h, r in pairs)
    chars = sum(len(r) for _, r in pairs)
    if chars == 0:
        raise ValueError("references are empty")
    return edits / chars


def corpus_wer(pairs: list[tuple[str, str]]) -> float:
    if not pairs:
        raise ValueError("no pairs given")
    edits = sum(edit_distance(h.split(), r.split()) for h, r in pairs)
    tokens = sum(len(r.split()) for _, r in pairs)
    if tokens == 0:
        raise ValueError("references are empty")
    return edits / tokens


# ---------------------------------------------------------------------------
# Feature extraction
# ---------------------------------------------------------------------------


class BackboneExtractor:
    """Pooled style-backbone features; the in-repo desk FID extractor.

    Accepts either a ModelBundle (uses its style encoder's backbone) or a
    bare backbone module, e.g. one restored from a pre-training checkpoint.
    """

    def __init__(self, bundle: ModelBundle | torch.nn.Module, source: str = "checkpoint"):
        self.backbone = (
            bundle.style_encoder.backbone if isinstance(bundle, ModelBundle) else bundle
        )
        self.extractor_id = f"style-backbone:{source}"

    def __call__(self, images: list[np.ndarray]) -> np.ndarray:
        feats = []
        with torch.no_grad():
            for img in images:
                t = uint8_to_image_tensor(img).unsqueeze(0)
                fmap = self.backbone(t)
                feats.append(fmap.mean(dim=(2, 3)).squeeze(0).numpy())
        return np.stack(feats)


def extract_features(extractor, images: list[np.ndarray]) -> FeatureSet:
    return FeatureSet(
        features=extractor(images),
        extractor_id=getattr(extractor, "extractor_id", "custom"),
    )


# ---------------------------------------------------------------------------
# Scenario report and long-tail sweep
# ---------------------------------------------------------------------------


def _default_generate_fn(bundle: ModelBundle, split_by_writer, p_style: int, seed: int):
    style_cache: dict[str, list] = {}

    def generate(writer: str, word: str, pair_idx: int) -> np.ndarray:
        if writer not in style_cache:
            style_set = sample_style_set(split_by_writer[writer], p=p_style, seed=seed)
            style_cache[writer] = [uint8_to_image_tensor(s.image) for s in style_set.images]
        image = generate_word_images(
            bundle, style_cache[writer], [word], noise_seed=seed + pair_idx
        )[0]
        return image_tensor_to_uint8(image)

    return generate


def scenario_report(
    bundle: ModelBundle,
    scenarios: dict[str, ScenarioSplit],
    train_split: dict[str, list[WordSample]],
    test_split: dict[str, list[WordSample]],
    extractor,
    p_style: int | None = None,
    seed: int = 0,
    generate_fn=None,
    real_images_fn=None,
) -> dict[str, float | None]:
    """Per-writer-averaged FID for each of the four scenarios.

    Empty scenarios are reported as None.  The real reference set per
    writer defaults to all of that writer's split samples;
    ``real_images_fn(writer)`` overrides it.  ``generate_fn`` may be
    injected for testing; by default each pair's word is generated in the
    writer's style sampled from their real samples.
    """
    p = p_style or bundle.config.style_samples
    split_all = {**test_split, **train_split}
    if generate_fn is None:
        generate_fn = _default_generate_fn(bundle, split_all, p, seed)
    if real_images_fn is None:
        real_images_fn = lambda writer: [s.image for s in split_all[writer]]

    extractor_id = getattr(extractor, "extractor_id", "custom")
    report: dict[str, float | None] = {}
    for name in ("IV-S", "IV-U", "OOV-S", "OOV-U"):
        split = scenarios.get(name)
        if split is None or not split.pairs:
            logger.warning("scenario %s is empty, reported as absent", name)
            report[name] = None
            continue
        fake_by_writer: dict[str, list[np.ndarray]] = {}
        for idx, (writer, word) in enumerate(split.pairs):
            fake_by_writer.setdefault(writer, []).append(generate_fn(writer, word, idx))
        real_feats = {w: extractor(real_images_fn(w)) for w in fake_by_writer}
        fake_feats = {w: extractor(imgs) for w, imgs in fake_by_writer.items()}
        report[name] = fid_per_writer(real_feats, fake_feats)
    logger.info("scenario report (extractor=%s): %s", extractor_id, report)
    return report


def report_to_csv(report: dict[str, float | None], path: str | Path, extractor_id: str) -> None:
    lines = ["scenario,fid,extractor"]
    for name, value in report.items():
        fid_str = "" if value is None else f"{value:.6f}"
        lines.append(f"{name},{fid_str},{extractor_id}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass
class SweepResult:
    """(threshold, fid, n_words) points for the long-tail threshold sweep."""

    points: list[tuple[int, float, int]]
    log_x: bool = True

    def __post_init__(self):
        thresholds = [t for t, _, _ in self.points]
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError("thresholds must be strictly increasing")

    def to_csv(self, path: str | Path) -> None:
        lines = ["threshold,fid,n_words"]
        lines += [f"{t},{v:.6f},{n}" for t, v, n in self.points]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def long_tail_sweep(
    bundle: ModelBundle,
    test_samples: list[WordSample],
    freq: FrequencyTable,
    thresholds: list[int],
    extractor,
    split_by_writer: dict[str, list[WordSample]] | None = None,
    p_style: int | None = None,
    seed: int = 0,
    generate_fn=None,
) -> SweepResult:
    """FID on test words containing a sub-threshold character, per threshold.

    Thresholds whose filtered subset is empty (or too small for FID) are
    skipped with a warning.
    """
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be strictly increasing")
    if split_by_writer is None:
        split_by_writer = {}
        for s in test_samples:
            split_by_writer.setdefault(s.writer_id, []).append(s)
    p = p_style or bundle.config.style_samples
    if generate_fn is None:
        generate_fn = _default_generate_fn(bundle, split_by_writer, p, seed)

    points = []
    for threshold in thresholds:
        subset = [
            s for s in test_samples
            if any(freq.count(ord(ch)) < threshold for ch in s.transcription)
        ]
        if len(subset) < 2:
            logger.warning("threshold %d: subset too small (%d), skipped", threshold, len(subset))
            continue
        fakes = [
            generate_fn(s.writer_id, s.transcription, i) for i, s in enumerate(subset)
        ]
        real_feats = extractor([s.image for s in subset])
        fake_feats = extractor(fakes)
        points.append((threshold, fid(real_feats, fake_feats), len(subset)))
    return SweepResult(points=points)
