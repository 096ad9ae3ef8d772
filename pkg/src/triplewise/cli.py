"""Command-line pipeline: synth, prepare, train, generate, evaluate.

Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime abort.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, TrainConfig, load_config
from .data import (
    CorpusFormatError,
    Vocabulary,
    build_vocabulary,
    load_corpus,
    save_corpus,
    tokenize,
)
from .manifest import write_manifest
from .metrics import evaluate, write_report
from .plotting import plot_metric_report, plot_training_curves
from .sampling import batch_generate
from .synthetic import generate_synthetic_corpus
from .training import (
    BEST_CHECKPOINT,
    LATEST_CHECKPOINT,
    LOG_FILENAME,
    CheckpointError,
    NonFiniteLossError,
    load_checkpoint,
    train,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


class CliParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def cmd_synth(args) -> int:
    if args.n < 1:
        return _fail(EXIT_USAGE, "--n must be >= 1")
    out = Path(args.out)
    try:
        triples = generate_synthetic_corpus(args.seed, args.n)
        save_corpus(triples, out)
    except OSError as exc:
        return _fail(EXIT_DATA, f"cannot write corpus: {exc}")
    write_manifest(out.with_suffix(out.suffix + ".manifest.json"), "synth",
                   args.seed, None, [], [out])
    print(f"wrote {len(triples)} triples to {out}")
    return EXIT_OK


def cmd_prepare(args) -> int:
    try:
        train_triples = list(load_corpus(args.train))
        if args.valid:
            for _ in load_corpus(args.valid):
                pass
        vocab = build_vocabulary(train_triples, args.vocab_size)
    except (OSError, CorpusFormatError, ValueError) as exc:
        return _fail(EXIT_DATA, str(exc))
    out = Path(args.out)
    try:
        vocab.save(out)
    except OSError as exc:
        return _fail(EXIT_DATA, f"cannot write vocabulary: {exc}")
    inputs = [args.train] + ([args.valid] if args.valid else [])
    write_manifest(out.with_suffix(out.suffix + ".manifest.json"), "prepare",
                   None, {"vocab_size": args.vocab_size}, inputs, [out])
    print(f"wrote vocabulary of size {len(vocab)} to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    try:
        config = load_config(args.config) if args.config else TrainConfig()
    except OSError as exc:
        return _fail(EXIT_DATA, f"cannot read config: {exc}")
    except ConfigError as exc:
        return _fail(EXIT_USAGE, str(exc))
    out_dir = Path(args.out_dir)
    try:
        train_triples = list(load_corpus(args.train))
        valid_triples = list(load_corpus(args.valid))
        vocab = Vocabulary.load(args.vocab) if args.vocab else None
    except (OSError, CorpusFormatError, ValueError) as exc:
        return _fail(EXIT_DATA, str(exc))
    resume_from = None
    if args.resume:
        resume_from = out_dir / LATEST_CHECKPOINT
        if not resume_from.exists():
            return _fail(EXIT_DATA, f"no checkpoint to resume from at {resume_from}")
    try:
        result = train(config, train_triples, valid_triples, out_dir=out_dir,
                       vocab=vocab, resume_from=resume_from)
    except CheckpointError as exc:
        return _fail(EXIT_DATA, str(exc))
    except NonFiniteLossError as exc:
        out_dir.mkdir(parents=True, exist_ok=True)
        diagnostic = out_dir / "abort_diagnostic.json"
        diagnostic.write_text(
            json.dumps({"step": exc.step, "loss": exc.breakdown}, indent=2) + "\n",
            encoding="utf-8",
        )
        return _fail(EXIT_RUNTIME, f"non-finite loss; diagnostic record at {diagnostic}")
    flat_records = [r.to_flat_dict() for r in result.records]
    curves = out_dir / "training_curves.png"
    if flat_records:
        plot_training_curves(flat_records, curves)
    outputs = [out_dir / LATEST_CHECKPOINT, out_dir / LOG_FILENAME]
    for extra in (out_dir / BEST_CHECKPOINT, curves):
        if extra.exists():
            outputs.append(extra)
    inputs = [args.train, args.valid] + ([args.vocab] if args.vocab else [])
    write_manifest(out_dir / "manifest.json", "train", config.seed,
                   config.to_dict(), inputs, outputs)
    last = result.records[-1] if result.records else None
    if last is not None:
        print(f"trained {last.epoch} epochs ({result.step} steps); "
              f"val total {last.val['total']:.4f}, "
              f"KL/word {last.val_kl_per_word:.4f}")
    return EXIT_OK


def _read_posts(path: str) -> list[list[str]]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [line for line in text.splitlines() if line.strip()]
    if lines and lines[0].lstrip().startswith("{"):
        return [triple.post for triple in load_corpus(path)]
    return [tokenize(line) for line in lines]


def cmd_generate(args) -> int:
    if args.n_samples < 1:
        return _fail(EXIT_USAGE, "--n-samples must be >= 1")
    n_samples = args.n_samples
    if args.strategy == "greedy" and n_samples > 1:
        print("warning: --strategy greedy ignores --n-samples > 1", file=sys.stderr)
        n_samples = 1
    try:
        model, vocab, _, _, _, _ = load_checkpoint(args.checkpoint)
        posts = _read_posts(args.posts)
    except (OSError, CheckpointError, CorpusFormatError, ValueError) as exc:
        return _fail(EXIT_DATA, str(exc))
    out = Path(args.out)
    try:
        records = batch_generate(posts, model, vocab, args.seed, args.strategy,
                                 n_samples, out_path=out)
    except (OSError, ValueError) as exc:
        return _fail(EXIT_DATA, str(exc))
    write_manifest(out.with_suffix(out.suffix + ".manifest.json"), "generate",
                   args.seed,
                   {"strategy": args.strategy, "n_samples": n_samples},
                   [args.checkpoint, args.posts], [out])
    print(f"wrote {len(records)} generations to {out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    out = Path(args.out)
    try:
        report = evaluate(args.predictions, args.references, args.embeddings)
    except (OSError, ValueError) as exc:
        return _fail(EXIT_DATA, str(exc))
    try:
        write_report(report, out)
    except OSError as exc:
        return _fail(EXIT_DATA, f"cannot write report: {exc}")
    figure = out.with_suffix(".png")
    plot_metric_report(report.to_dict(), figure)
    write_manifest(out.with_suffix(out.suffix + ".manifest.json"), "evaluate",
                   None, None,
                   [args.predictions, args.references, args.embeddings],
                   [out, figure])
    print(json.dumps(report.to_dict()))
    return EXIT_OK


def build_parser() -> CliParser:
    parser = CliParser(prog="triplewise",
                       description="Train and run the triple-wise question generator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic corpus")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--n", type=int, required=True)
    p_synth.add_argument("--out", required=True)
    p_synth.set_defaults(func=cmd_synth)

    p_prep = sub.add_parser("prepare", help="build a vocabulary from the train split")
    p_prep.add_argument("--train", required=True)
    p_prep.add_argument("--valid")
    p_prep.add_argument("--vocab-size", type=int, default=40000)
    p_prep.add_argument("--out", required=True)
    p_prep.set_defaults(func=cmd_prepare)

    p_train = sub.add_parser("train", help="train a model")
    p_train.add_argument("--config", help="key=value config file (preset=paper|desk)")
    p_train.add_argument("--train", required=True)
    p_train.add_argument("--valid", required=True)
    p_train.add_argument("--vocab", help="vocabulary file from `prepare`")
    p_train.add_argument("--out-dir", required=True)
    p_train.add_argument("--resume", action="store_true",
                         help="continue from the latest checkpoint in --out-dir")
    p_train.set_defaults(func=cmd_train)

    p_gen = sub.add_parser("generate", help="generate questions for posts")
    p_gen.add_argument("--checkpoint", required=True)
    p_gen.add_argument("--posts", required=True,
                       help="corpus JSONL or plain text, one post per line")
    p_gen.add_argument("--strategy", choices=("greedy", "sample"), default="greedy")
    p_gen.add_argument("--n-samples", type=int, default=1)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=cmd_generate)

    p_eval = sub.add_parser("evaluate", help="score predictions against references")
    p_eval.add_argument("--predictions", required=True)
    p_eval.add_argument("--references", required=True)
    p_eval.add_argument("--embeddings", required=True)
    p_eval.add_argument("--out", required=True)
    p_eval.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
