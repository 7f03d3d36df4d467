"""Command-line driver: training runs, transforms, evaluation, sweeps.

Errors print a single machine-parsable line to stderr of the form
``error[E_CODE]: message`` and exit nonzero (2 for usage/config problems,
1 for data or runtime failures). Exit status 0 means every requested
artifact was written.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .data import DataFormatError, load_dataset
from .distance import best_match, save_transform_csv, transform
from .clustering import nmi, rand_index
from .pipeline import (
    TrainConfig,
    cluster_dataset,
    discover_shapelets,
    load_shapelets_json,
    save_loss_log_csv,
    save_metrics_json,
    save_shapelets_json,
)
from .candidates import save_candidates_csv
from .network import save_checkpoint

SWEEP_KS = (1, 2, 5, 10, 20)

CONFIG_HELP = """\
Config file format: one `key = value` per line, `#` comments allowed.
Keys are the long flag names with dashes as underscores, e.g.

    epochs = 200
    ratios = 0.1,0.2,0.3
    no_dbi = true

Precedence: command-line flags > config file > built-in defaults.
"""


class UsageError(ValueError):
    pass


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="shapeclust",
        description="Learn shapelets from unlabeled time series and cluster "
        "the series in the shapelet-transformed space.",
        epilog=CONFIG_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--mode", choices=["train", "transform", "evaluate", "sweep"])
    p.add_argument("--dataset", help="input series file")
    p.add_argument(
        "--format",
        choices=["auto", "ucr_tsv", "uea_ts"],
        help="input format (default: auto, where .ts means uea_ts, else ucr_tsv)",
    )
    p.add_argument("--out", help="output directory for artifacts")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--k", type=int, help="number of shapelets (default 2)")
    p.add_argument("--ratios", help="comma-separated window length ratios")
    p.add_argument("--epochs", type=int, help="training epochs (default 100; 400 = full setting)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--lr", type=float, help="SGD learning rate (default 0.001)")
    p.add_argument("--lambda", dest="lam", type=float, help="triplet weight (default 0.01)")
    p.add_argument("--alpha", type=float, help="smooth-max temperature (default 50)")
    p.add_argument("--restarts", type=int, help="final K-means restarts (default 10)")
    p.add_argument("--c-num", type=int, help="cluster count (default: label class count)")
    p.add_argument("--batch", type=int, help="training batch size (default 10)")
    p.add_argument("--grid-len", type=int, help="candidate grid length (default 32)")
    p.add_argument("--embed-dim", type=int, help="embedding dimension (default 16)")
    p.add_argument("--channels", type=int, help="conv channels (default 40)")
    p.add_argument("--stride", type=int, help="candidate window stride (default N/50)")
    p.add_argument("--cell-cap", type=int, help="windows kept per instance/variable/ratio cell")
    p.add_argument("--max-candidates", type=int, help="global candidate pool cap (default 3000)")
    p.add_argument(
        "--anchors-per-epoch",
        type=int,
        help="training anchors per epoch; 0 = full pass over the pool (default 64)",
    )
    p.add_argument("--no-triplet", action="store_true", default=None, help="disable the triplet objective")
    p.add_argument("--no-diversity", action="store_true", default=None, help="disable the diversity objective")
    p.add_argument("--no-dbi", action="store_true", default=None, help="disable the DBI objective")
    p.add_argument("--shapelets", help="shapelet dump (transform mode)")
    p.add_argument("--assignments", help="stored assignments JSON (evaluate mode)")
    p.add_argument("--dump-candidates", action="store_true", default=None, help="also dump the candidate pool CSV")
    return p


_BOOL_KEYS = {"no_triplet", "no_diversity", "no_dbi", "dump_candidates"}
_INT_KEYS = {
    "k", "epochs", "seed", "restarts", "c_num", "batch", "grid_len",
    "embed_dim", "channels", "stride", "cell_cap", "max_candidates",
    "anchors_per_epoch",
}
_FLOAT_KEYS = {"lr", "lam", "alpha"}
_STR_KEYS = {"mode", "dataset", "format", "out", "shapelets", "assignments", "ratios"}


def _parse_config_file(path: str) -> dict:
    values: dict = {}
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}")
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"config line {lineno}: expected key = value")
            key, _, val = line.partition("=")
            key = key.strip().replace("-", "_")
            val = val.strip()
            if key in _BOOL_KEYS:
                values[key] = val.lower() in ("1", "true", "yes", "on")
            elif key in _INT_KEYS:
                values[key] = int(val)
            elif key in _FLOAT_KEYS:
                values[key] = float(val)
            elif key in _STR_KEYS:
                values[key] = val
            else:
                raise UsageError(f"config line {lineno}: unknown key {key!r}")
    return values


def _merged_options(args: argparse.Namespace) -> dict:
    opts: dict = {}
    if args.config:
        opts.update(_parse_config_file(args.config))
    for key, val in vars(args).items():
        if key == "config":
            continue
        if val is not None:
            opts[key] = val
    return opts


def _parse_ratios(text) -> tuple:
    if text is None:
        return None
    try:
        ratios = tuple(float(tok) for tok in str(text).split(",") if tok.strip())
    except ValueError:
        raise UsageError(f"bad --ratios value {text!r}")
    if not ratios:
        raise UsageError("--ratios needs at least one value")
    return ratios


def _train_config(opts: dict) -> TrainConfig:
    kwargs = {}
    mapping = {
        "k": "k",
        "epochs": "epochs",
        "seed": "seed",
        "lr": "lr",
        "lam": "lam",
        "alpha": "alpha",
        "restarts": "restarts",
        "c_num": "c_num",
        "batch": "batch_size",
        "grid_len": "grid_len",
        "embed_dim": "embed_dim",
        "channels": "channels",
        "stride": "stride",
        "cell_cap": "per_cell_cap",
        "max_candidates": "max_candidates",
        "anchors_per_epoch": "anchors_per_epoch",
    }
    for opt_key, cfg_key in mapping.items():
        if opts.get(opt_key) is not None:
            kwargs[cfg_key] = opts[opt_key]
    ratios = _parse_ratios(opts.get("ratios"))
    if ratios is not None:
        kwargs["ratios"] = ratios
    if opts.get("no_triplet"):
        kwargs["use_triplet"] = False
    if opts.get("no_diversity"):
        kwargs["use_diversity"] = False
    if opts.get("no_dbi"):
        kwargs["use_dbi"] = False
    try:
        return TrainConfig(**kwargs)
    except ValueError as exc:
        raise UsageError(str(exc))


def _require(opts: dict, key: str, mode: str) -> str:
    val = opts.get(key)
    if not val:
        raise UsageError(f"--{key.replace('_', '-')} is required in {mode} mode")
    return val


def _load(opts: dict):
    path = _require(opts, "dataset", opts.get("mode", "?"))
    if not os.path.exists(path):
        raise UsageError(f"dataset file not found: {path}")
    return load_dataset(path, format=opts.get("format", "auto"))


def _write_plot_data(out_dir, dataset, shapelets, matrix, assignment):
    """Plot-ready CSVs: shapelet curves, best-match overlays, 2-D scatter."""
    with open(os.path.join(out_dir, "plot_shapelets.csv"), "w", encoding="utf-8") as fh:
        fh.write("shapelet,variable,position,value\n")
        for si, sh in enumerate(shapelets):
            for pos, val in enumerate(sh.values):
                fh.write(f"{si},{sh.variable},{pos},{repr(float(val))}\n")
    labels = dataset.labels
    with open(os.path.join(out_dir, "plot_matches.csv"), "w", encoding="utf-8") as fh:
        fh.write("instance,label,shapelet,variable,offset,length,distance\n")
        for m, inst in enumerate(dataset.instances):
            lab = labels[m] if labels is not None else ""
            for si, sh in enumerate(shapelets):
                d, offset = best_match(sh.values, inst.values[sh.variable])
                fh.write(
                    f"{inst.id},{lab},{si},{sh.variable},{offset},"
                    f"{sh.length},{repr(float(d))}\n"
                )
    if matrix.shape[1] in (1, 2):
        with open(os.path.join(out_dir, "plot_scatter.csv"), "w", encoding="utf-8") as fh:
            dims = ",".join(f"d_{j + 1}" for j in range(matrix.shape[1]))
            fh.write(f"instance,label,cluster,{dims}\n")
            for m, inst in enumerate(dataset.instances):
                lab = labels[m] if labels is not None else ""
                coords = ",".join(repr(float(v)) for v in matrix[m])
                fh.write(f"{inst.id},{lab},{assignment.labels[m]},{coords}\n")


def _save_assignments(path, assignment, seed, restarts):
    payload = {
        "labels": [int(x) for x in assignment.labels],
        "c_num": int(assignment.c_num),
        "inertia": assignment.inertia,
        "seed": seed,
        "restarts": restarts,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)


def _run_train(opts: dict, out_dir: str) -> list[str]:
    dataset = _load(opts)
    config = _train_config(opts)
    result = discover_shapelets(dataset, config)
    matrix, assignment, metrics = cluster_dataset(
        dataset,
        result.shapelets,
        c_num=config.c_num,
        seed=config.seed,
        restarts=config.restarts,
    )
    expected = []

    def emit(name, writer):
        path = os.path.join(out_dir, name)
        writer(path)
        expected.append(path)

    emit("shapelets.json", lambda p: save_shapelets_json(result.shapelets, p))
    emit("training_log.csv", lambda p: save_loss_log_csv(result.loss_log, p))
    emit("metrics.json", lambda p: save_metrics_json(metrics, p))
    emit("transform.csv", lambda p: save_transform_csv(matrix, p))
    emit(
        "assignments.json",
        lambda p: _save_assignments(p, assignment, config.seed, config.restarts),
    )
    emit("checkpoint.json", lambda p: save_checkpoint(result.params, result.arch, p))
    _write_plot_data(out_dir, dataset, result.shapelets, matrix, assignment)
    expected.append(os.path.join(out_dir, "plot_shapelets.csv"))
    expected.append(os.path.join(out_dir, "plot_matches.csv"))
    if opts.get("dump_candidates"):
        emit("candidates.csv", lambda p: save_candidates_csv(result.candidates, p))
    print(
        f"train: k={config.k} nmi={metrics['nmi']} ri={metrics['ri']} "
        f"dbi={metrics['dbi']:.4f} -> {out_dir}"
    )
    return expected


def _run_sweep(opts: dict, out_dir: str) -> list[str]:
    dataset = _load(opts)
    rows = []
    expected = []
    for k in SWEEP_KS:
        sub = dict(opts)
        sub["k"] = k
        config = _train_config(sub)
        result = discover_shapelets(dataset, config)
        _, _, metrics = cluster_dataset(
            dataset,
            result.shapelets,
            c_num=config.c_num,
            seed=config.seed,
            restarts=config.restarts,
        )
        k_dir = os.path.join(out_dir, f"k_{k}")
        os.makedirs(k_dir, exist_ok=True)
        save_shapelets_json(result.shapelets, os.path.join(k_dir, "shapelets.json"))
        save_metrics_json(metrics, os.path.join(k_dir, "metrics.json"))
        expected.append(os.path.join(k_dir, "metrics.json"))
        rows.append((k, metrics))
        print(f"sweep: k={k} nmi={metrics['nmi']} ri={metrics['ri']} dbi={metrics['dbi']:.4f}")
    path = os.path.join(out_dir, "sweep.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("k,nmi,ri,dbi,inertia\n")
        for k, m in rows:
            nmi_s = "" if m["nmi"] is None else repr(float(m["nmi"]))
            ri_s = "" if m["ri"] is None else repr(float(m["ri"]))
            fh.write(f"{k},{nmi_s},{ri_s},{repr(float(m['dbi']))},{repr(float(m['inertia']))}\n")
    expected.append(path)
    return expected


def _run_transform(opts: dict, out_dir: str) -> list[str]:
    dataset = _load(opts)
    dump = _require(opts, "shapelets", "transform")
    if not os.path.exists(dump):
        raise UsageError(f"shapelet dump not found: {dump}")
    shapelets = load_shapelets_json(dump)
    if not shapelets:
        raise UsageError("shapelet dump is empty; an empty transform cannot be clustered")
    matrix = transform(dataset, shapelets)
    path = os.path.join(out_dir, "transform.csv")
    save_transform_csv(matrix, path)
    print(f"transform: wrote {matrix.shape[0]}x{matrix.shape[1]} matrix -> {path}")
    return [path]


def _run_evaluate(opts: dict, out_dir: str) -> list[str]:
    dataset = _load(opts)
    asn_path = _require(opts, "assignments", "evaluate")
    if not os.path.exists(asn_path):
        raise UsageError(f"assignments file not found: {asn_path}")
    with open(asn_path, "r", encoding="utf-8") as fh:
        stored = json.load(fh)
    pred = np.array(stored["labels"])
    if dataset.labels is None:
        raise UsageError("evaluate mode needs a labeled dataset")
    if len(pred) != dataset.n_instances:
        raise DataFormatError(
            f"stored assignment covers {len(pred)} instances, dataset has "
            f"{dataset.n_instances}"
        )
    metrics = {
        "nmi": nmi(pred, dataset.labels),
        "ri": rand_index(pred, dataset.labels),
        "n_instances": dataset.n_instances,
    }
    path = os.path.join(out_dir, "metrics.json")
    save_metrics_json(metrics, path)
    print(f"evaluate: nmi={metrics['nmi']:.4f} ri={metrics['ri']:.4f} -> {path}")
    return [path]


def run(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _merged_options(args)
        mode = opts.get("mode")
        if not mode:
            raise UsageError("--mode is required (train, transform, evaluate, sweep)")
        out_dir = _require(opts, "out", mode)
        os.makedirs(out_dir, exist_ok=True)
        runner = {
            "train": _run_train,
            "sweep": _run_sweep,
            "transform": _run_transform,
            "evaluate": _run_evaluate,
        }[mode]
        expected = runner(opts, out_dir)
    except UsageError as exc:
        print(f"error[E_USAGE]: {exc}", file=sys.stderr)
        return 2
    except DataFormatError as exc:
        print(f"error[E_PARSE]: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error[E_CONFIG]: {exc}", file=sys.stderr)
        return 2
    except FloatingPointError as exc:
        print(f"error[E_NUMERIC]: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"error[E_RUNTIME]: {exc}", file=sys.stderr)
        return 1
    missing = [path for path in expected if not os.path.exists(path)]
    if missing:
        print(f"error[E_ARTIFACT]: missing artifacts: {missing}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
