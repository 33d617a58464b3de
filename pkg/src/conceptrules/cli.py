"""Experiment driver: dataset generation, staged training and evaluation.

Every command writes its artifacts plus a manifest (command, effective
config, seed, artifact paths, timings) into the output directory; reruns
with identical flags and seed produce identical artifacts, timings aside.

Exit codes: 0 success, 2 usage or missing input file, 3 data/contract
error, 4 numeric divergence.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import DecisionTreeBaseline, LogisticRegressionBaseline
from .datasets import GENERATORS, LabeledDataset, generate, load_csv, save_csv, split_dataset
from .errors import (CheckpointError, ConceptRulesError, ContractError,
                     TrainingDivergenceError)
from .explain import counterfactual_report, sensitivity, tau_sweep
from .metrics import macro_roc_auc
from .pipeline import ReasoningPipeline
from .reasoner import (explain_misclassifications, global_rules, mean_rule_length,
                       rule_error_rate)
from .training import (Checkpoint, TrainConfig, build_encoder, encode_split,
                       load_checkpoint, save_checkpoint, train_encoder,
                       train_joint, train_reasoner)

EVAL_KINDS = ("auc", "rules", "errors", "sensitivity", "counterfactual",
              "tau-sweep", "baselines")
DEFAULT_TAU_GRID = (0.1, 1.0, 10.0, 100.0)
OUTDIR_ENV = "CONCEPTRULES_OUTDIR"


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


# -- config file -----------------------------------------------------------------


_FIELD_TYPES = {f.name: f for f in dataclasses.fields(TrainConfig)}


def _parse_config_value(key: str, raw: str):
    if key not in _FIELD_TYPES:
        raise ContractError(f"unknown config key {key!r}")
    raw = raw.strip()
    if key in ("betas", "hidden_sizes"):
        return tuple(float(v) if key == "betas" else int(v)
                     for v in raw.strip("()[] ").split(",") if v.strip())
    current = getattr(TrainConfig(), key)
    if isinstance(current, bool):
        return raw.lower() in ("1", "true", "yes")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    return raw


def read_config_file(path: Path) -> dict:
    """Flat `key = value` lines; '#' starts a comment."""
    overrides = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ContractError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        overrides[key] = _parse_config_value(key, raw)
    return overrides


def build_config(args) -> TrainConfig:
    """Defaults, then config file, then explicit CLI flags."""
    overrides: dict = {}
    if getattr(args, "config", None):
        overrides.update(read_config_file(Path(args.config)))
    for flag in ("seed", "epochs", "temperature", "batch_size", "learning_rate",
                 "semantics", "embedding_dim", "patience"):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[flag] = value
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ContractError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        overrides[key.strip()] = _parse_config_value(key.strip(), raw)
    return TrainConfig().replace(**overrides)


# -- manifests ---------------------------------------------------------------------


def write_manifest(out_dir: Path, payload: dict) -> Path:
    path = out_dir / "manifest.json"
    tmp = out_dir / "manifest.json.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
    return path


def write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def write_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if not rows:
            fh.write("")
            return
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def _out_dir(args) -> Path:
    out = args.out or os.environ.get(OUTDIR_ENV) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _require_file(path_str: str) -> Path:
    path = Path(path_str)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return path


def _load_dataset(args) -> LabeledDataset:
    path = _require_file(args.data)
    name = getattr(args, "name", None) or path.stem
    return load_csv(path, name=name)


# -- commands ---------------------------------------------------------------------


def cmd_generate(args) -> int:
    out = _out_dir(args)
    started = time.time()
    dataset = split_dataset(generate(args.dataset, args.n, args.seed), args.seed)
    csv_path = out / f"{args.dataset}.csv"
    save_csv(dataset, csv_path)
    write_manifest(out, {
        "version": __version__,
        "command": "generate",
        "argv": list(sys.argv[1:]),
        "dataset": args.dataset,
        "n": args.n,
        "seed": args.seed,
        "artifacts": {"dataset_csv": str(csv_path)},
        "timings": {"total_s": time.time() - started},
    })
    print(f"wrote {csv_path} ({dataset.n_samples} rows, "
          f"{dataset.n_concepts} concepts)")
    return 0


def cmd_train(args) -> int:
    out = _out_dir(args)
    started = time.time()
    dataset = _load_dataset(args)
    cfg = build_config(args).replace(stage=args.stage)
    if args.stage == "encoder":
        ckpt = train_encoder(dataset, cfg)
    elif args.stage == "dcr":
        if not args.encoder:
            raise ContractError("--stage dcr requires --encoder <checkpoint>")
        ckpt = train_reasoner(dataset, cfg, load_checkpoint(_require_file(args.encoder)))
    else:
        ckpt = train_joint(dataset, cfg)
    ckpt_path = out / f"{args.stage}.json"
    save_checkpoint(ckpt, ckpt_path)

    final = ckpt.history[-1] if ckpt.history else {}
    metrics = {"epochs_run": len(ckpt.history),
               "final_train_loss": final.get("train_loss"),
               "final_val_loss": final.get("val_loss")}
    if args.stage in ("dcr", "joint"):
        pipe = ReasoningPipeline.from_checkpoint(ckpt)
        x_te, _, y_te = dataset.split_arrays("test")
        metrics["test_auc"] = macro_roc_auc(pipe.execute(x_te).scores, y_te)
    write_manifest(out, {
        "version": __version__,
        "command": "train",
        "argv": list(sys.argv[1:]),
        "stage": args.stage,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "data": str(args.data),
        "artifacts": {"checkpoint": str(ckpt_path)},
        "metrics": metrics,
        "timings": {"total_s": time.time() - started},
    })
    for key, value in metrics.items():
        print(f"{key}: {value}")
    print(f"wrote {ckpt_path}")
    return 0


def _check_compatibility(ckpt: Checkpoint, dataset: LabeledDataset) -> None:
    if ckpt.meta.get("input_dim") != dataset.n_features:
        raise ContractError("checkpoint expects input_dim=%s but dataset has %d features"
                            % (ckpt.meta.get("input_dim"), dataset.n_features))
    if ckpt.meta.get("n_concepts") != dataset.n_concepts:
        raise ContractError("checkpoint expects n_concepts=%s but dataset has %d concepts"
                            % (ckpt.meta.get("n_concepts"), dataset.n_concepts))


def cmd_eval(args) -> int:
    out = _out_dir(args)
    started = time.time()
    dataset = _load_dataset(args)
    ckpt = load_checkpoint(_require_file(args.checkpoint))
    _check_compatibility(ckpt, dataset)
    if not any(k.startswith("reasoner.") for k in ckpt.params):
        raise CheckpointError("evaluation needs a checkpoint holding the rule head "
                              "(train with --stage dcr or joint)")
    pipe = ReasoningPipeline.from_checkpoint(ckpt)
    x_te, c_te, y_te = dataset.split_arrays("test")
    artifacts: dict[str, str] = {}
    result_summary: dict = {}

    if args.which == "auc":
        auc = macro_roc_auc(pipe.execute(x_te).scores, y_te)
        path = out / "auc.json"
        write_json(path, {"test_auc": auc, "n_test": int(len(y_te))})
        artifacts["auc"] = str(path)
        result_summary["test_auc"] = auc
        print(f"test_auc: {auc:.6f}")

    elif args.which == "rules":
        result = pipe.execute(x_te)
        rules = global_rules(result, pipe.threshold, mode=args.mode, labels=y_te)
        records = rules.to_records()
        write_json(out / "rules.json", records)
        write_csv(out / "rules.csv", records)
        artifacts["rules"] = str(out / "rules.json")
        result_summary["n_distinct_rules"] = len(records)
        result_summary["mean_rule_length"] = mean_rule_length(result, pipe.threshold)
        print(rules.render())

    elif args.which == "errors":
        result = pipe.execute(x_te)
        rows = explain_misclassifications(result, y_te, pipe.threshold)
        payload = {"misclassifications": rows}
        if dataset.rule_table:
            payload["rule_errors"] = rule_error_rate(result, c_te, dataset.rule_table,
                                                     pipe.threshold)
            payload["rule_errors_vs_true_concepts"] = rule_error_rate(
                result, c_te, dataset.rule_table, pipe.threshold, concepts="true")
        write_json(out / "errors.json", payload)
        write_csv(out / "errors.csv", [
            {"concepts": " ".join(str(v) for v in r["concepts"]),
             "rule": r["rule"], "predicted": r["predicted"], "label": r["label"]}
            for r in rows])
        artifacts["errors"] = str(out / "errors.json")
        result_summary["n_misclassified"] = len(rows)
        print(f"misclassified: {len(rows)} of {len(y_te)}")

    elif args.which == "sensitivity":
        report = sensitivity(pipe, x_te, n_perturb=args.n_perturb, seed=args.seed)
        write_json(out / "sensitivity.json",
                   {"auc": report.auc, "n_skipped": report.n_skipped,
                    "curve": report.to_records()})
        write_csv(out / "sensitivity.csv", report.to_records())
        artifacts["sensitivity"] = str(out / "sensitivity.json")
        result_summary["sensitivity_auc"] = report.auc
        print(f"sensitivity_auc: {report.auc:.6f}")

    elif args.which == "counterfactual":
        bundle = pipe.encode(x_te)
        report = counterfactual_report(pipe.reasoner, bundle, threshold=pipe.threshold)
        write_json(out / "counterfactual.json",
                   {"auc": report.auc,
                    "mean_confidence": report.mean_confidence.tolist(),
                    "n_concepts": report.n_concepts})
        write_csv(out / "counterfactual.csv", report.to_records())
        artifacts["counterfactual"] = str(out / "counterfactual.json")
        result_summary["confidence_auc"] = report.auc
        print(f"confidence_auc: {report.auc:.6f}")

    elif args.which == "tau-sweep":
        encoder = build_encoder(ckpt)
        train_bundle, ytr = encode_split(dataset, encoder, "train")
        val_bundle, yva = encode_split(dataset, encoder, "val")
        test_bundle, yte = encode_split(dataset, encoder, "test")
        cfg = ckpt.config.replace(stage="dcr")
        rows = tau_sweep(train_bundle, ytr, val_bundle, yva, test_bundle, yte,
                         dataset.n_classes, cfg, args.tau_grid, jobs=args.jobs)
        write_json(out / "tau_sweep.json", rows)
        write_csv(out / "tau_sweep.csv", rows)
        artifacts["tau_sweep"] = str(out / "tau_sweep.json")
        for row in rows:
            print(f"tau={row['temperature']:g}: rule_length={row['mean_rule_length']:.2f} "
                  f"auc={row['auc']:.4f}")

    elif args.which == "baselines":
        encoder = build_encoder(ckpt)
        train_bundle, ytr = encode_split(dataset, encoder, "train")
        test_bundle, yte = encode_split(dataset, encoder, "test")
        dcr_auc = macro_roc_auc(pipe.execute(x_te).scores, y_te)
        logreg = LogisticRegressionBaseline().fit(train_bundle.degrees, ytr)
        logreg_auc = macro_roc_auc(logreg.decision_function(test_bundle.degrees), yte)
        tree = DecisionTreeBaseline(max_depth=args.tree_depth).fit(train_bundle.degrees, ytr)
        tree_auc = macro_roc_auc(tree.decision_function(test_bundle.degrees), yte)
        payload = {"dcr_auc": dcr_auc, "logreg_auc": logreg_auc, "tree_auc": tree_auc,
                   "logreg_coefficients": logreg.coefficients(),
                   "tree_rules": tree.leaf_rules()}
        write_json(out / "baselines.json", payload)
        artifacts["baselines"] = str(out / "baselines.json")
        result_summary.update({k: payload[k] for k in ("dcr_auc", "logreg_auc", "tree_auc")})
        print(f"dcr_auc: {dcr_auc:.4f}  logreg_auc: {logreg_auc:.4f}  "
              f"tree_auc: {tree_auc:.4f}")

    write_manifest(out, {
        "version": __version__,
        "command": "eval",
        "argv": list(sys.argv[1:]),
        "which": args.which,
        "seed": args.seed,
        "checkpoint": str(args.checkpoint),
        "data": str(args.data),
        "config": ckpt.config.to_dict(),
        "artifacts": artifacts,
        "results": result_summary,
        "timings": {"total_s": time.time() - started},
    })
    return 0


# -- argument parsing ----------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conceptrules",
        description="Generate benchmarks, train the concept-rule model, and run "
                    "the interpretability evaluations.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a benchmark dataset CSV")
    gen.add_argument("dataset", choices=sorted(GENERATORS))
    gen.add_argument("--n", type=positive_int, default=3000)
    gen.add_argument("--seed", type=int, default=1)
    gen.add_argument("--out", default=None, help=f"output dir (default ${OUTDIR_ENV} or .)")
    gen.set_defaults(func=cmd_generate)

    def add_config_flags(p):
        p.add_argument("--config", default=None, help="flat key=value config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--epochs", type=int, default=None)
        p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
        p.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
        p.add_argument("--temperature", type=float, default=None)
        p.add_argument("--embedding-dim", dest="embedding_dim", type=int, default=None)
        p.add_argument("--semantics", choices=("goedel", "product"), default=None)
        p.add_argument("--patience", type=int, default=None)
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override any config field")

    tr = sub.add_parser("train", help="train one stage")
    tr.add_argument("--stage", choices=("encoder", "dcr", "joint"), required=True)
    tr.add_argument("--data", required=True, help="dataset CSV from `generate`")
    tr.add_argument("--name", default=None, help="dataset name (default: file stem)")
    tr.add_argument("--encoder", default=None, help="encoder checkpoint for --stage dcr")
    tr.add_argument("--out", default=None)
    add_config_flags(tr)
    tr.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="run an evaluation against a checkpoint")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--name", default=None)
    ev.add_argument("--which", choices=EVAL_KINDS, required=True)
    ev.add_argument("--out", default=None)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--mode", choices=("predicted", "labeled"), default="predicted",
                    help="rule aggregation mode for --which rules")
    ev.add_argument("--n-perturb", dest="n_perturb", type=int, default=10)
    ev.add_argument("--tau-grid", dest="tau_grid", type=float, nargs="+",
                    default=list(DEFAULT_TAU_GRID))
    ev.add_argument("--tree-depth", dest="tree_depth", type=int, default=4)
    ev.add_argument("--jobs", type=int, default=1,
                    help="parallel workers for tau-sweep points")
    ev.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TrainingDivergenceError as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return 4
    except ConceptRulesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
