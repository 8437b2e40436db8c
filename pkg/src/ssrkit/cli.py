"""Command-line surface.

Exit codes: 0 ok, 1 usage error, 2 data validation error, 3 runtime failure.
Logs go to stderr (verbosity via SSR_LOG={error|info|debug}); data goes to
files or stdout only.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from . import analysis, kb, metrics, synth
from .codec import MODE_FULL, MODE_PAIR
from .corpus_io import load_corpus, save_corpus
from .errors import CorpusFormatError, SSRError, TrainingDivergedError
from .model import (
    ModelConfig,
    class_weights,
    decode_beam,
    load_model,
    predict_corpus,
    save_model,
    train,
    train_seq2seq,
    undersample,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3

log = logging.getLogger("ssrkit")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we use 1
        raise UsageError(message)


def _setup_logging() -> None:
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("SSR_LOG", "error").lower(), logging.ERROR
    )
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(message)s")


def _write_json(obj, path) -> None:
    Path(path).write_text(
        json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _on_off(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def cmd_analyze(args) -> int:
    corpus = load_corpus(args.corpus)
    report = {}
    if args.stat in ("histogram", "all"):
        report["histogram"] = analysis.relation_histogram(corpus)
    if args.stat in ("pair-dominant", "all"):
        table = analysis.pair_dominant_table(corpus)
        report["pair_dominant"] = {
            "global_dominant": table.global_dominant,
            "num_pairs": table.num_pairs,
            "non_global_fraction": table.non_global_fraction(),
            "tie_count": table.tie_count,
            "pairs": {f"{vt}|{vc}": hist for (vt, vc), hist in sorted(table.table.items())},
        }
    if args.stat in ("distance", "all"):
        dist = analysis.distance_distribution(corpus)
        report["distance"] = {
            lbl: {str(d): n for d, n in row.items()} for lbl, row in dist.counts.items()
        }
    _write_json(report, args.out)
    stem = Path(args.out).with_suffix("")
    if args.csv:
        if "histogram" in report:
            Path(f"{stem}.histogram.csv").write_text(
                analysis.histogram_csv(report["histogram"]), encoding="utf-8"
            )
        if "distance" in report:
            Path(f"{stem}.distance.csv").write_text(
                analysis.distance_csv(analysis.distance_distribution(corpus)), encoding="utf-8"
            )
    if args.figures:
        from . import plots

        if "histogram" in report:
            plots.save_histogram_figure(report["histogram"], f"{stem}.histogram.png")
        if "distance" in report:
            plots.save_distance_figure(
                analysis.distance_distribution(corpus), f"{stem}.distance.png"
            )
    return EXIT_OK


def _train_config(args, label_space: str) -> ModelConfig:
    return ModelConfig(
        label_space=label_space,
        embed_dim=args.embed_dim,
        num_layers=args.num_layers,
        num_heads=args.num_heads,
        max_len=args.max_len,
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        loss_mode="weighted" if args.balanced_loss else "plain",
        architecture=args.arch,
    )


def _run_training(args, train_corpus, val_corpus):
    manifest = {
        "command": "train",
        "flags": {
            "mode": args.mode,
            "aux": args.aux,
            "lr": args.lr,
            "balanced_loss": args.balanced_loss,
            "undersample": args.undersample,
            "arch": args.arch,
            "epochs": args.epochs,
            "batch_size": args.batch_size,
        },
        "seed": args.seed,
        "data_hashes": {"train": _sha256(args.train), "val": _sha256(args.val)},
    }
    if args.undersample:
        train_corpus = undersample(train_corpus, seed=args.seed)
        manifest["undersample_kept_fraction"] = train_corpus.meta["undersample"]["kept_fraction"]
    cfg = _train_config(args, train_corpus.label_space.name)
    weights = class_weights(train_corpus) if args.balanced_loss else None
    if args.arch == "seq2seq":
        return train_seq2seq(cfg, train_corpus, val_corpus, include_aux=args.aux,
                             manifest=manifest)
    return train(cfg, train_corpus, val_corpus, weights=weights, mode=args.mode,
                 include_aux=args.aux, manifest=manifest)


def cmd_train(args) -> int:
    if args.arch == "seq2seq" and args.mode == MODE_PAIR:
        raise UsageError("--arch seq2seq is incompatible with --mode pair")
    train_corpus = load_corpus(args.train)
    val_corpus = load_corpus(args.val)
    model = _run_training(args, train_corpus, val_corpus)
    save_model(model, args.model_out)
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(args.model)
    corpus = load_corpus(args.corpus)
    if model.config.architecture == "seq2seq":
        preds = {}
        targets = (1, 2, 4, 5)
        for seq in corpus.sequences:
            decoded = decode_beam(model, seq, args.beam_width)
            for t, lbl in zip(targets, decoded):
                if seq.relation_for(t) is not None:
                    preds[(seq.id, t)] = lbl
    else:
        preds = predict_corpus(model, corpus)
    report = metrics.evaluate(preds, corpus)
    out = report.to_dict()
    out["predictions"] = {f"{sid}|{t}": lbl for (sid, t), lbl in sorted(preds.items())}
    _write_json(out, args.out)
    return EXIT_OK


def cmd_reformulate(args) -> int:
    records = kb.load_kb_records(args.kb)
    corpus = kb.reformulate(records, args.n, args.seed)
    corpus = kb.map_corpus(corpus, args.map)
    save_corpus(corpus, args.out)
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = synth.SynthSpec.from_json(args.spec)
    corpus = synth.generate(spec)
    save_corpus(corpus, args.out)
    return EXIT_OK


def cmd_serialize(args) -> int:
    from .codec import serialize_full, serialize_pair

    corpus = load_corpus(args.corpus)
    lines = []
    for seq in corpus.sequences:
        for rel in seq.relations:
            if args.mode == MODE_PAIR:
                ts = serialize_pair(seq, rel.target_index, args.aux)
            else:
                ts = serialize_full(seq, rel.target_index, args.aux)
            lines.append(json.dumps(
                {"id": seq.id, "target": rel.target_index, "mode": ts.mode,
                 "tokens": list(ts.tokens)},
                sort_keys=True,
            ))
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        lrs = [float(s) for s in args.lrs.split(",") if s]
    except ValueError as exc:
        raise UsageError(f"bad --lrs value: {exc}")
    if not lrs:
        raise UsageError("--lrs must name at least one learning rate")
    if args.arch == "seq2seq":
        raise UsageError("sweep supports the classifier architecture only")
    train_corpus = load_corpus(args.train)
    val_corpus = load_corpus(args.val)
    runs = []
    reports = []
    for lr in lrs:
        run_args = argparse.Namespace(**vars(args), lr=lr)
        model = _run_training(run_args, train_corpus, val_corpus)
        preds = predict_corpus(model, val_corpus)
        report = metrics.evaluate(preds, val_corpus)
        reports.append((f"lr={lr:g}", report))
        runs.append({"lr": lr, "history": model.manifest["history"],
                     "val_macro_top1": report.macro_top1, "val_top1": report.top1})
    rows = metrics.compare(reports)
    Path(args.out).write_text(metrics.comparison_csv(rows), encoding="utf-8")
    stem = Path(args.out).with_suffix("")
    _write_json({"runs": runs}, f"{stem}.runs.json")
    if args.figures:
        from . import plots

        plots.save_sweep_figure(runs, f"{stem}.collapse.png")
    return EXIT_OK


def _add_train_flags(p, with_lr=True):
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--mode", choices=[MODE_PAIR, MODE_FULL], default=MODE_FULL)
    p.add_argument("--aux", type=_on_off, default=True)
    if with_lr:
        p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--balanced-loss", dest="balanced_loss", type=_on_off, default=False)
    p.add_argument("--undersample", type=_on_off, default=False)
    p.add_argument("--arch", choices=["classifier", "seq2seq"], default="classifier")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=32)
    p.add_argument("--embed-dim", dest="embed_dim", type=int, default=128)
    p.add_argument("--num-layers", dest="num_layers", type=int, default=2)
    p.add_argument("--num-heads", dest="num_heads", type=int, default=4)
    p.add_argument("--max-len", dest="max_len", type=int, default=192)


def build_parser() -> _Parser:
    parser = _Parser(prog="ssrkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="corpus pattern statistics")
    p.add_argument("--corpus", required=True)
    p.add_argument("--stat", choices=["histogram", "pair-dominant", "distance", "all"],
                   default="all")
    p.add_argument("--out", required=True)
    p.add_argument("--csv", action="store_true", help="also write plot-ready CSVs")
    p.add_argument("--figures", action="store_true", help="also render PNG figures")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("train", help="train a relation model")
    _add_train_flags(p)
    p.add_argument("--model-out", dest="model_out", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--beam-width", dest="beam_width", type=int, default=4)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("reformulate", help="convert KB records to pretraining sequences")
    p.add_argument("--kb", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--map", choices=[kb.KEEP3, kb.MAP_TO_4], default=kb.KEEP3)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_reformulate)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("serialize", help="dump token sequences for a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--mode", choices=[MODE_PAIR, MODE_FULL], default=MODE_FULL)
    p.add_argument("--aux", type=_on_off, default=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_serialize)

    p = sub.add_parser("sweep", help="learning-rate sweep with collapse diagnostics")
    p.add_argument("--lrs", required=True, help="comma-separated learning rates")
    _add_train_flags(p, with_lr=False)
    p.add_argument("--out", required=True, help="comparison table CSV")
    p.add_argument("--figures", action="store_true")
    p.set_defaults(fn=cmd_sweep)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CorpusFormatError,) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingDivergedError as exc:
        print(f"training failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except SSRError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, RuntimeError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
