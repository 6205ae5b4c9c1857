"""Command-line entry point.

Subcommands cover the whole pipeline: ``render-archetypes``,
``build-corpus``, ``pretrain``, ``train``, ``generate`` and ``evaluate``.
Exit codes: 0 on success, 1 on runtime failure (with a one-line
diagnostic on stderr), 2 on usage errors.  Every training/evaluation run
archives its resolved configuration and a log file inside its output
directory, and no subcommand writes outside that directory (plus the
optional cache under ``$VATR_CACHE``).
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

CACHE_ENV = "VATR_CACHE"


def _cache_dir() -> Path | None:
    value = os.environ.get(CACHE_ENV)
    return Path(value) if value else None


def load_glyphs(path: str | None):
    """Load a glyph table, going through the $VATR_CACHE npz cache if set."""
    from .content import BinaryGlyph, GlyphTable, default_glyph_table, load_unifont

    if path is None:
        return default_glyph_table()
    cache = _cache_dir()
    if cache is None:
        return load_unifont(path)

    stat = Path(path).stat()
    key = hashlib.sha256(f"{Path(path).resolve()}:{stat.st_size}:{stat.st_mtime_ns}".encode())
    cache_file = cache / "glyphs" / f"{key.hexdigest()[:24]}.npz"
    if cache_file.exists():
        data = np.load(cache_file)
        cps = data["codepoints"]
        bitmaps = data["bitmaps"]
        glyphs = {
            int(cp): BinaryGlyph(codepoint=int(cp), bitmap=bitmaps[i])
            for i, cp in enumerate(cps)
        }
        return GlyphTable(glyphs)
    table = load_unifont(path)
    cache_file.parent.mkdir(parents=True, exist_ok=True)
    cps = table.codepoints()
    np.savez_compressed(
        cache_file,
        codepoints=np.array(cps, dtype=np.int64),
        bitmaps=np.stack([table[cp].bitmap for cp in cps]),
    )
    return table


def _setup_run_dir(out_dir: Path, model, pretrain, train) -> None:
    from .training import write_config_file

    out_dir.mkdir(parents=True, exist_ok=True)
    write_config_file(out_dir / "config.ini", model, pretrain, train)
    handler = logging.FileHandler(out_dir / "run.log")
    handler.setFormatter(logging.Formatter("%(asctime)s %(name)s %(levelname)s %(message)s"))
    logging.getLogger("vatr").addHandler(handler)
    logging.getLogger("vatr").setLevel(logging.INFO)


def _load_configs(args):
    from .network import ModelConfig
    from .training import GanTrainConfig, PretrainConfig, parse_config_file

    if getattr(args, "config", None):
        model, pretrain, train = parse_config_file(args.config)
    else:
        model, pretrain, train = ModelConfig(), PretrainConfig(), GanTrainConfig()
    if getattr(args, "seed", None) is not None:
        pretrain.seed = args.seed
        train.seed = args.seed
    return model, pretrain, train


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_render_archetypes(args) -> int:
    from PIL import Image

    from .content import render_archetype

    table = load_glyphs(args.glyphs)
    cells = [render_archetype(table, ord(ch)).bitmap for ch in args.text]
    strip = np.concatenate(cells, axis=1) * np.uint8(255)
    strip = 255 - strip  # ink dark on white
    if args.scale > 1:
        strip = np.kron(strip, np.ones((args.scale, args.scale), dtype=np.uint8))
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(strip).save(args.out)
    print(f"wrote {len(cells)}-glyph strip to {args.out}")
    return 0


def cmd_build_corpus(args) -> int:
    from .synth_corpus import build_corpus, build_manifest

    fonts = sorted(str(p) for ext in ("*.ttf", "*.otf") for p in Path(args.fonts).glob(ext))
    if not fonts:
        raise ValueError(f"no .ttf/.otf fonts under {args.fonts}")
    words = [w.strip() for w in Path(args.words).read_text(encoding="utf-8").splitlines() if w.strip()]
    backgrounds = []
    if args.backgrounds:
        backgrounds = sorted(
            str(p) for ext in ("*.png", "*.jpg") for p in Path(args.backgrounds).glob(ext)
        )
    manifest = build_manifest(fonts, words, backgrounds, subsample=args.subsample,
                              base_seed=args.seed)
    index = build_corpus(manifest, args.out, shard_size=args.shard_size)
    print(f"built {len(index)} images over {len(fonts)} fonts into {args.out}")
    return 0


def cmd_pretrain(args) -> int:
    from .synth_corpus import CorpusIndex
    from .training import pretrain_backbone

    model, pretrain, train = _load_configs(args)
    out_dir = Path(args.out)
    _setup_run_dir(out_dir, model, pretrain, train)
    corpus = CorpusIndex(args.corpus)
    result = pretrain_backbone(corpus, pretrain, model, out_dir)
    print(
        f"pretrained backbone: best val accuracy {result.best_val_accuracy:.4f} "
        f"after {result.epochs_run} epochs ({result.steps_run} steps) -> {result.checkpoint_path}"
    )
    return 0


def cmd_train(args) -> int:
    from .dataset import load_dataset
    from .training import train_gan

    model, pretrain_cfg, train_cfg = _load_configs(args)
    out_dir = Path(args.out)
    _setup_run_dir(out_dir, model, pretrain_cfg, train_cfg)
    glyphs = load_glyphs(args.glyphs)
    split = load_dataset(args.data)
    result = train_gan(
        split, args.pretrained, model, train_cfg, glyphs, out_dir,
        resume_from=args.resume,
    )
    print(f"trained {result.steps_run} steps -> {result.checkpoint_path}")
    print(f"metrics: {result.metrics_path}")
    return 0


def cmd_generate(args) -> int:
    from .training import generate

    glyphs = load_glyphs(args.glyphs)
    texts = []
    for chunk in args.text:
        texts.extend(t for t in chunk.split(",") if t)
    images = generate(args.checkpoint, args.style, texts,
                      noise_seed=args.seed or 0, glyphs=glyphs, out_dir=args.out)
    print(f"generated {len(images)} image(s) into {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    from .dataset import char_frequency, load_dataset, partition_scenarios, all_samples
    from .evaluation import (
        BackboneExtractor, long_tail_sweep, report_to_csv, scenario_report,
    )
    from .network import load_checkpoint

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    glyphs = load_glyphs(args.glyphs)
    bundle = load_checkpoint(args.checkpoint, glyphs=glyphs)
    train_split = load_dataset(args.train_data)
    test_split = load_dataset(args.test_data)
    extractor = BackboneExtractor(bundle, source=Path(args.checkpoint).name)

    wanted = args.scenario.lower()
    if wanted != "none":
        scenarios = partition_scenarios(
            train_split, test_split, max_pairs_per_scenario=args.max_pairs, seed=args.seed or 0,
        )
        if wanted != "all":
            scenarios = {k: v for k, v in scenarios.items() if k.lower() == wanted}
            if not scenarios:
                raise ValueError(f"unknown scenario {args.scenario!r}")
        report = scenario_report(
            bundle, scenarios, train_split, test_split, extractor, seed=args.seed or 0,
        )
        report_to_csv(report, out_dir / "scenarios.csv", extractor.extractor_id)
        print(f"scenario FIDs: {report} -> {out_dir / 'scenarios.csv'}")

    if args.sweep:
        thresholds = [int(t) for t in args.sweep.split(",")]
        freq = char_frequency(train_split, long_tail_threshold=args.long_tail_threshold)
        sweep = long_tail_sweep(
            bundle, all_samples(test_split), freq, thresholds, extractor,
            split_by_writer=test_split, seed=args.seed or 0,
        )
        sweep.to_csv(out_dir / "sweep.csv")
        print(f"sweep points: {len(sweep.points)} -> {out_dir / 'sweep.csv'}")
    return 0


# ---------------------------------------------------------------------------
# Parser and dispatch
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vatr",
        description="Few-shot styled handwritten text generation from glyph archetypes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render-archetypes", help="render glyph archetypes to a PNG strip")
    p.add_argument("--text", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--glyphs", help=".hex glyph file (default: packaged desk set)")
    p.add_argument("--scale", type=int, default=4)
    p.set_defaults(func=cmd_render_archetypes)

    p = sub.add_parser("build-corpus", help="render the synthetic pre-training corpus")
    p.add_argument("--fonts", required=True, help="directory of .ttf/.otf fonts")
    p.add_argument("--words", required=True, help="text file, one word per line")
    p.add_argument("--backgrounds", help="directory of background images")
    p.add_argument("--out", required=True)
    p.add_argument("--subsample", type=float, default=1.0)
    p.add_argument("--shard-size", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_build_corpus)

    p = sub.add_parser("pretrain", help="pre-train the style backbone as a font classifier")
    p.add_argument("--corpus", required=True, help="directory built by build-corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="INI config file")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("train", help="adversarial training of the full model")
    p.add_argument("--data", required=True, help="TSV manifest of the training split")
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="INI config file")
    p.add_argument("--pretrained",
                   help="backbone checkpoint path, or 'writer-pretrain'")
    p.add_argument("--resume", help="checkpoint to resume from")
    p.add_argument("--glyphs")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="generate styled text images")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--style", required=True, help="folder of style example PNGs")
    p.add_argument("--text", required=True, action="append",
                   help="text to render (repeatable, or comma-separated)")
    p.add_argument("--out", required=True)
    p.add_argument("--glyphs")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="scenario FIDs and the long-tail sweep")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--train-data", required=True)
    p.add_argument("--test-data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scenario", default="all",
                   help="all, none, or one of iv-s/iv-u/oov-s/oov-u")
    p.add_argument("--sweep", help="comma-separated long-tail thresholds")
    p.add_argument("--long-tail-threshold", type=int, default=1000)
    p.add_argument("--max-pairs", type=int, default=50)
    p.add_argument("--glyphs")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_evaluate)
    return parser


def dispatch(argv: list[str] | None = None) -> int:
    """Run one subcommand; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except Exception as exc:  # one-line diagnostic, exit 1
        print(f"error: {exc}", file=sys.stderr)
        logger.debug("traceback", exc_info=True)
        return 1


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING)
    return dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
