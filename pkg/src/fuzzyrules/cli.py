"""Command line interface.

Subcommands cover the whole workflow: synth (planted-rule dataset), prepare
(split + fuzzifier dry run), train, evaluate, extract, sweep and serve. Exit
codes: 0 success, 2 configuration/usage errors, 1 data/runtime errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint, stable_json
from .config import RunConfig, load_run_config
from .data import SyntheticConfig, assemble_split, synthesize, temporal_split, write_dataset
from .errors import ConfigError, DataError
from .metrics import (
    DEFAULT_THRESHOLDS,
    TIE_SHUFFLES,
    ranking_report,
    score_network,
    threshold_sweep,
)
from .pipeline import load_data_dir, prepare_splits, run_training
from .reports import history_csv, metrics_doc, rule_doc, sweep_csv, sweep_doc
from .rules import parse_rule, render

log = logging.getLogger("fuzzyrules")

DEFAULT_SYNTH_RULE = "(f0 ∧ ¬f1) ∨ (f2 ∧ f3)"


def _write_text(path, text: str) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text, encoding="utf-8")
    log.info("wrote %s", p)


def _load_checkpoint_arg(path) -> Checkpoint:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"checkpoint not found: {p}")
    return load_checkpoint(p)


def _split_time(args, ckpt: Checkpoint):
    if getattr(args, "split_time", None) is not None:
        return args.split_time
    meta_split = ckpt.meta.get("split_time")
    if meta_split is None:
        raise ConfigError("no --split-time given and the checkpoint records none")
    return meta_split


def _validation_matrix(args, ckpt: Checkpoint):
    """Validation split of the data directory, fuzzified with the checkpoint."""
    dataset = load_data_dir(args.data)
    _, val_imps = temporal_split(dataset.impressions, _split_time(args, ckpt))
    frame = assemble_split(dataset, val_imps)
    x_val = ckpt.fuzzifier.transform(frame.rows)
    return frame, x_val


def _parse_thresholds(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(p) for p in text.split(",") if p.strip() != "")
    except ValueError:
        raise ConfigError(f"cannot parse thresholds {text!r}") from None
    if not vals:
        raise ConfigError("threshold list is empty")
    for t in vals:
        if not (0.0 <= t < 1.0):
            raise ConfigError(f"threshold {t} must satisfy 0 <= t < 1")
    return vals


def _thresholds(args, ckpt: Checkpoint) -> tuple[float, ...]:
    if getattr(args, "thresholds", None):
        return _parse_thresholds(args.thresholds)
    meta = ckpt.meta.get("thresholds")
    if meta:
        return tuple(float(t) for t in meta)
    return DEFAULT_THRESHOLDS


def cmd_synth(args) -> int:
    names = [f"f{i}" for i in range(args.n_atoms)]
    try:
        rule = parse_rule(args.rule, names)
    except ValueError as exc:
        raise ConfigError(f"invalid --rule: {exc}") from None
    config = SyntheticConfig(
        planted_rule=rule,
        n_atoms=args.n_atoms,
        n_impressions=args.n_impressions,
        candidates_per_impression=args.candidates,
        n_users=args.n_users,
        n_articles=args.n_articles,
        click_noise=args.noise,
        atom_probability=args.atom_probability,
        seed=args.seed,
    )
    dataset = synthesize(config)
    write_dataset(dataset, args.out, ground_truth=rule)
    # a ready-to-run config splitting the last 20% of impressions off for validation
    split_index = max(1, int(config.n_impressions * 0.8))
    split_time = config.start_time + split_index * config.impression_step
    run_config = RunConfig(split_time=split_time)
    _write_text(
        Path(args.out) / "run_config.json",
        json.dumps(run_config.to_json(), indent=2, sort_keys=True) + "\n",
    )
    print(f"synthetic dataset with rule {render(rule, names)} written to {args.out}")
    return 0


def cmd_prepare(args) -> int:
    dataset = load_data_dir(args.data)
    split_time = args.split_time
    if split_time is None and args.config:
        split_time = load_run_config(args.config).split_time
    if split_time is None:
        raise ConfigError("prepare needs --split-time or --config")
    prepared = prepare_splits(dataset, split_time)
    doc = {
        "n_train_impressions": len(prepared.train_frame.slices),
        "n_val_impressions": len(prepared.val_frame.slices),
        "n_train_rows": int(prepared.x_train.shape[0]),
        "n_val_rows": int(prepared.x_val.shape[0]),
        "n_atoms": int(prepared.x_train.shape[1]),
        "atoms": list(prepared.fuzzifier.vocabulary_.names),
        "warnings": dataset.warnings,
    }
    text = stable_json(doc)
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_train(args) -> int:
    dataset = load_data_dir(args.data)
    run_config = load_run_config(args.config)
    prepared = prepare_splits(dataset, run_config.split_time)
    result = run_training(prepared, run_config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = {
        "split_time": run_config.split_time,
        "hidden_layers": list(run_config.hidden_layers),
        "output_kind": run_config.output_kind,
        "n_train_impressions": len(prepared.train_frame.slices),
        "n_val_impressions": len(prepared.val_frame.slices),
        "skipped_no_positive": result.skipped_no_positive,
        "warnings": dataset.warnings,
    }
    if run_config.thresholds is not None:
        meta["thresholds"] = list(run_config.thresholds)
    save_checkpoint(out / "checkpoint.json", result.state, prepared.fuzzifier,
                    run_config.training, meta)
    _write_text(out / "history.csv", history_csv(result.history))
    final = result.history[-1]
    auc = "n/a" if final.auc is None else f"{final.auc:.4f}"
    print(f"checkpoint written to {out / 'checkpoint.json'} (validation AUC {auc})")
    return 0


def cmd_evaluate(args) -> int:
    ckpt = _load_checkpoint_arg(args.checkpoint)
    frame, x_val = _validation_matrix(args, ckpt)
    scores = score_network(ckpt.state, x_val)
    stable = ranking_report(frame.labels, scores, frame.slices)
    expected = ranking_report(
        frame.labels,
        scores,
        frame.slices,
        tie_shuffles=TIE_SHUFFLES,
        shuffle_seed=ckpt.train_config.seed,
    )
    text = stable_json(metrics_doc(stable, expected))
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    auc = "n/a" if stable.auc is None else f"{stable.auc:.4f}"
    log.info("validation AUC %s over %d impressions", auc, stable.n_impressions)
    return 0


def cmd_extract(args) -> int:
    ckpt = _load_checkpoint_arg(args.checkpoint)
    if not (0.0 <= args.threshold < 1.0):
        raise ConfigError(f"--threshold must satisfy 0 <= t < 1, got {args.threshold}")
    doc = rule_doc(ckpt.state, ckpt.vocabulary, args.threshold, args.mode)
    text = stable_json(doc)
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    if args.mode == "full":
        log.info("rule at t=%s: %s", args.threshold, doc["text"])
    else:
        log.info("%d weighted rules at t=%s", len(doc["rules"]), args.threshold)
    return 0


def cmd_sweep(args) -> int:
    ckpt = _load_checkpoint_arg(args.checkpoint)
    frame, x_val = _validation_matrix(args, ckpt)
    thresholds = _thresholds(args, ckpt)
    rows = threshold_sweep(
        ckpt.state,
        x_val,
        frame.labels,
        frame.slices,
        thresholds=thresholds,
        vocab=ckpt.vocabulary,
        tie_shuffles=TIE_SHUFFLES,
        shuffle_seed=ckpt.train_config.seed,
    )
    max_w = float(np.max(np.abs(ckpt.state.weights()[-1])))
    if args.out_csv:
        _write_text(args.out_csv, sweep_csv(rows))
    if args.out_json:
        _write_text(args.out_json, stable_json(sweep_doc(rows, max_w)))
    if not args.out_csv and not args.out_json:
        sys.stdout.write(sweep_csv(rows))
    return 0


def cmd_serve(args) -> int:
    from .server import serve

    ckpt = _load_checkpoint_arg(args.checkpoint)
    serve(
        ckpt,
        data_dir=args.data,
        host=args.host,
        port=args.port,
        ui_dir=args.ui_dir,
        split_time=args.split_time,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fuzzyrules",
        description="Rule-learning recommender on layered fuzzy logic networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic planted-rule dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n-atoms", type=int, default=6)
    p.add_argument("--n-impressions", type=int, default=1000)
    p.add_argument("--candidates", type=int, default=5)
    p.add_argument("--n-users", type=int, default=50)
    p.add_argument("--n-articles", type=int, default=400)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--atom-probability", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rule", default=DEFAULT_SYNTH_RULE,
                   help="planted rule over atom names f0..fN")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("prepare", help="split, fit the fuzzifier and report counts")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--split-time", default=None)
    p.add_argument("--config", default=None, help="run config supplying split_time")
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="train a network and write a checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--config", required=True, help="run config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="ranking metrics of a checkpoint on the validation split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split-time", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("extract", help="extract the crisp rule at a threshold")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--mode", choices=("full", "weighted"), default="full")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("sweep", help="metrics and complexity across thresholds")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split-time", default=None)
    p.add_argument("--thresholds", default=None, help="comma separated, e.g. 0,0.25,0.5")
    p.add_argument("--out-csv", default=None)
    p.add_argument("--out-json", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve", help="serve rules/metrics over HTTP (plus an optional UI)")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split-time", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--ui-dir", default=None, help="static directory served at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the usage message
        return int(exc.code) if exc.code else 0
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("%s", exc)
        return 2
    except (DataError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
