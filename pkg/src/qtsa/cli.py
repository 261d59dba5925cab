"""Command-line surface reproducing the experiment pipeline as data files.

Subcommands: gen-data, train, eval, scan-region, compare-circuits,
noise-sweep.  Every command takes --config (run configuration), --seed and
--out; outputs are plain CSV/JSON so plotting stays external.  Exit codes:
0 success, 1 usage/configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from . import config as run_config
from .analysis import (
    GridSpec2D,
    class_separation,
    compare_circuits,
    confusion_metrics,
    scan_region,
)
from .config import ConfigError
from .noise import noise_sweep
from .power import generate_dataset, load_dataset_csv, save_dataset_csv, split_dataset
from .training import TrainedModel, train


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit code 1 on usage errors
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _load_inputs(args) -> tuple:
    cp = run_config.read_config(args.config)
    model = run_config.load_grid(cp)
    dist, n_samples = run_config.load_distribution(cp)
    return cp, model, dist, n_samples


def _dataset_for(cp, grid, dist, n_samples, seed):
    path = run_config.load_dataset_path(cp)
    if path:
        return load_dataset_csv(path)
    return generate_dataset(grid, n_samples, dist, seed)


def _model_for(cp, out_dir: Path) -> TrainedModel:
    path = run_config.load_model_path(cp)
    if path is None:
        candidate = out_dir / "model.json"
        if not candidate.exists():
            raise ConfigError("no trained model: set [data] model or run `train` first")
        path = candidate
    return TrainedModel.load(path)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_gen_data(args) -> None:
    cp, grid, dist, n_samples = _load_inputs(args)
    dataset = generate_dataset(grid, n_samples, dist, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset_csv(dataset, out / "dataset.csv")
    zeros, ones = dataset.class_counts()
    print(f"wrote {out / 'dataset.csv'} ({len(dataset)} samples, {zeros} unstable / {ones} stable)")


def cmd_train(args) -> None:
    cp, grid, dist, n_samples = _load_inputs(args)
    dataset = _dataset_for(cp, grid, dist, n_samples, args.seed)
    cfg, test_fraction = run_config.load_train(cp, args.seed)
    spec = run_config.load_circuit(cp, dataset.feature_dim)
    train_set, test_set = split_dataset(dataset, test_fraction, seed=args.seed)
    model = train(spec, train_set, cfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model.save(out / "model.json")
    _write_csv(
        out / "history.csv",
        ["epoch", "loss", "train_accuracy"],
        [(e, l, a) for e, l, a in model.history],
    )
    p1 = model.predict_p1_batch(test_set.features)
    metrics = confusion_metrics((p1 >= 0.5).astype(int), test_set.labels)
    doc = metrics.as_dict()
    doc["tr_sigma"] = class_separation(model, test_set)
    with open(out / "metrics.json", "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(
        f"trained {spec.architecture}({spec.n_qubits},{spec.n_layers}): "
        f"test accuracy {metrics.accuracy:.4f}"
    )


def cmd_eval(args) -> None:
    cp, grid, dist, n_samples = _load_inputs(args)
    dataset = _dataset_for(cp, grid, dist, n_samples, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = _model_for(cp, out)
    p1 = model.predict_p1_batch(dataset.features)
    metrics = confusion_metrics((p1 >= 0.5).astype(int), dataset.labels)
    doc = metrics.as_dict()
    doc["tr_sigma"] = class_separation(model, dataset)
    with open(out / "metrics.json", "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(f"accuracy {metrics.accuracy:.4f} on {len(dataset)} samples")


def cmd_scan_region(args) -> None:
    cp, grid, _dist, _n = _load_inputs(args)
    settings = run_config.load_region(cp)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = _model_for(cp, out)
    grid_spec = GridSpec2D(
        x_min=settings.x_min,
        x_max=settings.x_max,
        y_min=settings.y_min,
        y_max=settings.y_max,
        nx=settings.nx,
        ny=settings.ny,
    )
    oracle_model = grid if grid.kind == "SMIB" and model.spec.feature_dim == 2 else None
    region = scan_region(model, grid_spec, settings.thresholds, oracle_model)

    header = ["delta", "omega", "p1"]
    header += [f"label@{t}" for t in settings.thresholds]
    header += ["oracle_label"]
    rows = []
    for iy, y in enumerate(region.y_values):
        for ix, x in enumerate(region.x_values):
            row = [x, y, region.p1[iy, ix]]
            row += [int(region.labels[t][iy, ix]) for t in settings.thresholds]
            row += [int(region.oracle[iy, ix]) if region.oracle is not None else None]
            rows.append(row)
    _write_csv(out / "region.csv", header, rows)
    if region.agreement is not None:
        summary = ", ".join(f"{t}: {a:.4f}" for t, a in region.agreement.items())
        print(f"wrote region.csv; oracle agreement {summary}")
    else:
        print("wrote region.csv")


def cmd_compare_circuits(args) -> None:
    cp, grid, dist, n_samples = _load_inputs(args)
    dataset = _dataset_for(cp, grid, dist, n_samples, args.seed)
    cfg, test_fraction = run_config.load_train(cp, args.seed)
    specs = run_config.load_compare_specs(cp, dataset.feature_dim)
    rows = compare_circuits(dataset, specs, cfg, test_fraction)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "compare.csv",
        ["spec", "status", "accuracy", "f1", "tr_sigma"],
        [(r.label, r.status, r.accuracy, r.f1, r.tr_sigma) for r in rows],
    )
    for r in rows:
        acc = "-" if r.accuracy is None else f"{r.accuracy:.4f}"
        print(f"{r.label:>16}: {r.status} accuracy={acc}")


def cmd_noise_sweep(args) -> None:
    cp, grid, dist, n_samples = _load_inputs(args)
    dataset = _dataset_for(cp, grid, dist, n_samples, args.seed)
    settings = run_config.load_noise_sweep(cp)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = _model_for(cp, out)
    result = noise_sweep(model, dataset, settings)

    def t1_text(value: float) -> str:
        return "inf" if math.isinf(value) else repr(value)

    rows = []
    for s, setting in enumerate(result.settings):
        for i in range(len(dataset)):
            rows.append(
                (
                    s,
                    setting.gate_error,
                    t1_text(setting.t1),
                    i,
                    result.success[s, i],
                    int(result.p1[s, i] >= 0.5),
                    int(result.labels[i]),
                )
            )
    _write_csv(
        out / "sweep.csv",
        ["setting_id", "p_dep", "t1_s", "sample_id", "success_prob", "predicted_label", "true_label"],
        rows,
    )
    _write_csv(
        out / "sweep_summary.csv",
        ["setting_id", "p_dep", "t1_s", "accuracy", "mean_success"],
        [
            (s, st.gate_error, t1_text(st.t1), result.accuracy[s], float(result.success[s].mean()))
            for s, st in enumerate(result.settings)
        ],
    )
    for s, st in enumerate(result.settings):
        print(f"setting {s}: p={st.gate_error} t1={t1_text(st.t1)} accuracy={result.accuracy[s]:.4f}")


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

_COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "scan-region": cmd_scan_region,
    "compare-circuits": cmd_compare_circuits,
    "noise-sweep": cmd_noise_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qtsa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="run configuration file")
        p.add_argument("--seed", type=int, default=0, help="master random seed")
        p.add_argument("--out", default=".", help="output directory")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        command = _COMMANDS[args.command]
    except KeyError:  # unreachable with required=True, kept for safety
        return 1
    try:
        command(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"qtsa: configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"qtsa: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
