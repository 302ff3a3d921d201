"""Command-line entry point wiring the library into reproducible workflows.

Subcommands: generate, stats, train-ann, train-anfis, predict,
fit-regression.  Every run writes a manifest (flags, seeds, input digests,
outputs, duration) beside its outputs; re-running with identical flags and
files reproduces byte-identical numeric outputs.

Exit codes: 0 success, 1 runtime or domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import anfis, mlp, regression, stats, synth
from .data import (
    COLUMN_MODE_PRECISION,
    CSV_COLUMNS,
    Material,
    Split,
    _parse_row,
    build_features,
    ingest_csv,
    split_dataset,
    write_csv,
)
from .errors import PipeLifeError
from .metrics import classify_accuracy

SEED_ENV_VAR = "PIPELIFE_SEED"
EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV_VAR, "0"))


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out_dir: Path, command: str, args: dict, inputs, outputs, started: float):
    manifest = {
        "command": command,
        "arguments": args,
        "input_digests": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "duration_seconds": round(time.time() - started, 3),
    }
    path = out_dir / f"{command.replace('-', '_')}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def _load_config_defaults(path):
    """Plain-text KEY=VALUE file mirroring the command flags."""
    defaults = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise PipeLifeError(f"bad config line (expected KEY=VALUE): {line!r}")
        key, value = line.split("=", 1)
        defaults[key.strip().replace("-", "_")] = value.strip()
    return defaults


def _num(x) -> str:
    # shortest repr that round-trips the double exactly
    return repr(float(x))


def _write_rows_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    started = time.time()
    config = synth.GeneratorConfig(n=args.n, seed=args.seed)
    dataset = synth.generate(config)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(dataset, out)
    report = synth.moment_report(dataset)
    report_path = out.with_suffix(out.suffix + ".report.txt")
    report_path.write_text(report.render() + "\n", encoding="utf-8")
    manifest = _write_manifest(
        out.parent, "generate",
        {"n": args.n, "seed": args.seed, "out": str(out)},
        [], [out, report_path], started,
    )
    print(f"wrote {len(dataset)} records to {out}")
    print(f"moment report: {report_path}")
    print(f"manifest: {manifest}")
    return EXIT_OK


def cmd_stats(args) -> int:
    dataset, cleaning = ingest_csv(args.infile, args.reference_year)
    report_rows = []
    for name in CSV_COLUMNS:
        if name == "rul_years" and not dataset.has_rul():
            continue
        precision = COLUMN_MODE_PRECISION.get(name, 0)
        report_rows.append((name, stats.summarize(dataset.column(name), precision)))
    significance = stats.significance_report(dataset) if dataset.has_rul() else None
    if args.json:
        payload = {
            "cleaning": cleaning.to_dict(),
            "summary": {name: s.to_dict() for name, s in report_rows},
            "significance": json.loads(significance.to_json()) if significance else None,
        }
        print(json.dumps(payload, indent=2))
        return EXIT_OK
    print(cleaning.render())
    print()
    header = f"{'column':<26}{'min':>10}{'max':>12}{'mean':>12}{'std':>12}{'mode':>10}"
    print(header)
    print("-" * len(header))
    for name, s in report_rows:
        print(f"{name:<26}{s.min:>10.2f}{s.max:>12.2f}{s.mean:>12.2f}{s.std:>12.2f}{s.mode:>10.2f}")
    if significance is not None:
        print()
        print(significance.render())
    return EXIT_OK


def cmd_train_ann(args) -> int:
    started = time.time()
    dataset, _ = ingest_csv(args.infile, args.reference_year)
    if args.registry:
        payload = json.loads(Path(args.registry).read_text(encoding="utf-8"))
        registry = tuple(mlp.MlpConfig.from_dict(entry) for entry in payload)
    else:
        registry = mlp.default_registry(args.seed)
    result = mlp.run_experiment_suite(dataset, registry, split_seed=args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    metrics_path = out_dir / "ann_metrics.csv"
    _write_rows_csv(
        metrics_path,
        ("model", "phase", "mae", "rrse", "mape", "rae", "r2"),
        [(m, p, _num(a), _num(b), _num(c), _num(d), _num(e))
         for m, p, a, b, c, d, e in result.table()],
    )
    model_path = out_dir / "ann_best_model.json"
    model_path.write_text(result.best.model.to_json() + "\n", encoding="utf-8")

    labeled = split_dataset(dataset, mlp.DEFAULT_SPLIT_RATIOS, args.seed)
    actual = labeled.column("rul_years")
    predicted = result.best.model.predict_dataset(labeled)
    test_rows = [i for i, s in enumerate(labeled.split) if s == Split.TEST]
    slope, intercept, r2 = mlp.scatter_fit(predicted[test_rows], actual[test_rows])
    scatter_path = out_dir / "ann_scatter.csv"
    _write_rows_csv(
        scatter_path,
        ("actual_rul", "predicted_rul"),
        [(_num(actual[i]), _num(predicted[i])) for i in test_rows],
    )
    fit_path = out_dir / "ann_scatter_fit.json"
    fit_path.write_text(
        json.dumps({"slope": slope, "intercept": intercept, "r2": r2}, indent=2) + "\n",
        encoding="utf-8",
    )
    manifest = _write_manifest(
        out_dir, "train-ann",
        {"in": str(args.infile), "seed": args.seed, "registry": args.registry or "default",
         "out_dir": str(out_dir)},
        [args.infile], [metrics_path, model_path, scatter_path, fit_path], started,
    )
    best_test = result.best.phase(Split.TEST)
    print(f"trained {len(result.rows)} models; best: {result.best.name}")
    header = f"{'phase':<12}{'MAE':>10}{'RRSE':>10}{'MAPE':>10}{'RAE':>10}{'R2':>10}"
    print(header)
    print("-" * len(header))
    for label in (Split.TRAIN, Split.VALIDATION, Split.TEST):
        rep = result.best.phase(label)
        print(f"{label.value:<12}{rep.mae:>10.3f}{rep.rrse:>10.3f}"
              f"{rep.mape:>10.3f}{rep.rae:>10.3f}{rep.r2:>10.4f}")
    print(f"  test MAPE {best_test.mape:.3f} ({classify_accuracy(best_test.mape)}), "
          f"R2 {best_test.r2:.4f}, scatter y = {slope:.4f}x + {intercept:.4f}")
    print(f"outputs in {out_dir} (manifest: {manifest.name})")
    return EXIT_OK


def cmd_train_anfis(args) -> int:
    started = time.time()
    dataset, _ = ingest_csv(args.infile, args.reference_year)
    inputs = tuple(args.inputs.split(","))
    labeled = split_dataset(dataset, mlp.DEFAULT_SPLIT_RATIOS, args.seed)
    features = build_features(labeled, inputs + ("rul_years",))
    model = anfis.init_grid(inputs, args.mfs, features, rule_cap=args.rule_cap)
    trained, history = anfis.hybrid_train(
        model, features, epochs=args.epochs, learning_rate=args.learning_rate
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    model_path = out_dir / "anfis_model.json"
    model_path.write_text(trained.to_json() + "\n", encoding="utf-8")
    rmse_path = out_dir / "anfis_rmse.csv"
    _write_rows_csv(
        rmse_path,
        ("epoch", "train_rmse", "validation_rmse"),
        [(i, _num(tr), _num(vr))
         for i, (tr, vr) in enumerate(zip(history.train_rmse, history.val_rmse))],
    )
    ranking = anfis.sensitivity_ranking(trained, features)
    rank_path = out_dir / "anfis_sensitivity.csv"
    _write_rows_csv(
        rank_path, ("feature", "mean_abs_slope"),
        [(name, _num(slope)) for name, slope in ranking],
    )
    top_two = [name for name, _ in ranking[:2]]
    grid = anfis.contour_grid(trained, features, top_two[0], top_two[1])
    grid_path = out_dir / "anfis_contour.csv"
    _write_rows_csv(
        grid_path, (top_two[0], top_two[1], "predicted_rul"),
        [(_num(a), _num(b), _num(c)) for a, b, c in grid],
    )
    manifest = _write_manifest(
        out_dir, "train-anfis",
        {"in": str(args.infile), "inputs": args.inputs, "mfs": args.mfs,
         "epochs": args.epochs, "seed": args.seed, "out_dir": str(out_dir)},
        [args.infile], [model_path, rmse_path, rank_path, grid_path], started,
    )
    print(f"trained ANFIS with {trained.n_rules} rules on {inputs}")
    print("sensitivity ranking:")
    for name, slope in ranking:
        print(f"  {name:<26}{slope:.6f}")
    print(f"outputs in {out_dir} (manifest: {manifest.name})")
    return EXIT_OK


def cmd_predict(args) -> int:
    started = time.time()
    dataset, _ = ingest_csv(args.infile, args.reference_year)
    if args.builtin:
        model = regression.builtin(args.builtin)
        age = dataset.column("age_years")
        wtl = dataset.column("wall_thickness_loss_pct")
        predicted = np.array(
            [regression.predict_rul(model, a, w)[0] for a, w in zip(age, wtl)]
        )
    else:
        text = Path(args.model).read_text(encoding="utf-8")
        kind = json.loads(text).get("format", "")
        if kind == "pipelife-mlp-v1":
            loaded = mlp.MlpModel.from_json(text)
        elif kind == "pipelife-anfis-v1":
            loaded = anfis.AnfisModel.from_json(text)
        else:
            raise PipeLifeError(f"unrecognized model document: {kind!r}")
        predicted = loaded.predict_dataset(dataset)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    # rows are aligned by re-applying the ingestion row filter, which is
    # order-preserving: the k-th surviving raw row is the k-th record
    with open(args.infile, "r", newline="", encoding="utf-8") as src:
        reader = csv.DictReader(src)
        header = list(reader.fieldnames or [])
        raw_rows = list(reader)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header + ["predicted_rul"])
        kept = 0
        for row in raw_rows:
            record, _ = _parse_row(row, args.reference_year)
            if record is None:
                continue
            writer.writerow([row.get(c, "") for c in header] + [_num(predicted[kept])])
            kept += 1
    manifest = _write_manifest(
        out.parent, "predict",
        {"in": str(args.infile), "model": args.model or f"builtin:{args.builtin}",
         "out": str(out)},
        [args.infile], [out], started,
    )
    print(f"wrote {kept} predictions to {out} (manifest: {manifest.name})")
    return EXIT_OK


def cmd_fit_regression(args) -> int:
    started = time.time()
    dataset, _ = ingest_csv(args.infile, args.reference_year)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    age = dataset.column("age_years")
    wtl = dataset.column("wall_thickness_loss_pct")
    rul = dataset.column("rul_years")
    materials = np.array([r.material for r in dataset.records])
    selection = "greedy" if args.greedy else "full"
    class_map = {
        "CI": Material.CAST_IRON,
        "DI": Material.DUCTILE_IRON,
        "AC": Material.ASBESTOS,
        "Steel": Material.STEEL,
    }
    outputs = []
    lines = [f"{'material':<10}{'model':<72}{'R2':>8}"]
    lines.append("-" * len(lines[0]))
    for tag, mat in class_map.items():
        mask = materials == mat
        if not mask.any():
            print(f"no {tag} records; skipped", file=sys.stderr)
            continue
        try:
            model = regression.fit_polynomial(
                age[mask], wtl[mask], rul[mask],
                degree=args.degree, term_selection=selection, material=tag,
            )
        except PipeLifeError as exc:
            print(f"{tag}: {exc}", file=sys.stderr)
            continue
        path = out_dir / f"deterioration_{tag}.json"
        path.write_text(model.to_json() + "\n", encoding="utf-8")
        outputs.append(path)
        lines.append(f"{tag:<10}{model.formula():<72}{model.r2_fit:>8.3f}")
    table = "\n".join(lines) + "\n"
    table_path = out_dir / "deterioration_models.txt"
    table_path.write_text(table, encoding="utf-8")
    outputs.append(table_path)
    manifest = _write_manifest(
        out_dir, "fit-regression",
        {"in": str(args.infile), "degree": args.degree, "greedy": args.greedy,
         "out_dir": str(out_dir)},
        [args.infile], outputs, started,
    )
    print(table, end="")
    print(f"outputs in {out_dir} (manifest: {manifest.name})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser(defaults=None) -> argparse.ArgumentParser:
    """Construct the CLI parser; `defaults` pre-seeds flag values (config file).

    Subcommand parsers get their own namespaces, so defaults are pushed onto
    every subparser rather than just the root.
    """
    parser = argparse.ArgumentParser(
        prog="pipelife",
        description="Remaining-useful-life prediction toolkit for water pipes.",
    )
    parser.add_argument(
        "--config", help="plain-text KEY=VALUE file providing flag defaults"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers = []

    def add_parser(name, **kwargs):
        p = sub.add_parser(name, **kwargs)
        subparsers.append(p)
        return p

    p = add_parser("generate", help="write a calibrated synthetic dataset CSV")
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate, _required=(("out", "--out"),))

    p = add_parser("stats", help="summary table and significance report")
    p.add_argument("--in", dest="infile")
    p.add_argument("--json", action="store_true")
    p.add_argument("--reference-year", type=int, default=synth.DEFAULT_REFERENCE_YEAR)
    p.set_defaults(func=cmd_stats, _required=(("infile", "--in"),))

    p = add_parser("train-ann", help="run the neural-network experiment suite")
    p.add_argument("--in", dest="infile")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--registry", help="JSON file with a list of model configs")
    p.add_argument("--out-dir")
    p.add_argument("--reference-year", type=int, default=synth.DEFAULT_REFERENCE_YEAR)
    p.set_defaults(func=cmd_train_ann,
                   _required=(("infile", "--in"), ("out_dir", "--out-dir")))

    p = add_parser("train-anfis", help="train the neuro-fuzzy model")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument(
        "--inputs",
        default=",".join(anfis.DEFAULT_INPUTS),
        help="comma-separated feature columns",
    )
    p.add_argument("--mfs", type=int, default=anfis.DEFAULT_MFS)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--learning-rate", type=float, default=0.02)
    p.add_argument("--rule-cap", type=int, default=anfis.DEFAULT_RULE_CAP)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir")
    p.add_argument("--reference-year", type=int, default=synth.DEFAULT_REFERENCE_YEAR)
    p.set_defaults(func=cmd_train_anfis,
                   _required=(("infile", "--in"), ("out_dir", "--out-dir")))

    p = add_parser("predict", help="append predicted_rul to a dataset CSV")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--model", help="path to a saved model JSON")
    group.add_argument("--builtin", choices=regression.BUILTIN_MATERIALS)
    p.add_argument("--in", dest="infile")
    p.add_argument("--out")
    p.add_argument("--reference-year", type=int, default=synth.DEFAULT_REFERENCE_YEAR)
    p.set_defaults(func=cmd_predict,
                   _required=(("infile", "--in"), ("out", "--out")),
                   _one_of=(("model", "--model"), ("builtin", "--builtin")))

    p = add_parser("fit-regression", help="fit per-material deterioration models")
    p.add_argument("--in", dest="infile")
    p.add_argument("--degree", type=int, choices=(1, 2, 3), default=2)
    p.add_argument("--greedy", action="store_true")
    p.add_argument("--out-dir")
    p.add_argument("--reference-year", type=int, default=synth.DEFAULT_REFERENCE_YEAR)
    p.set_defaults(func=cmd_fit_regression,
                   _required=(("infile", "--in"), ("out_dir", "--out-dir")))

    if defaults:
        parser.set_defaults(**defaults)
        for p in subparsers:
            known = {a.dest for a in p._actions}
            p.set_defaults(**{k: v for k, v in defaults.items() if k in known})
    return parser


def _coerce(value: str):
    lowered = value.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def _extract_config_path(argv):
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if token.startswith("--config="):
            return token.split("=", 1)[1]
    return None


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    defaults = None
    config_path = _extract_config_path(argv)
    if config_path:
        try:
            raw_defaults = _load_config_defaults(config_path)
        except (PipeLifeError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        defaults = {}
        for key, value in raw_defaults.items():
            defaults["infile" if key == "in" else key] = _coerce(value)
    # config values land as parser defaults, so explicit flags win
    parser = build_parser(defaults)
    args = parser.parse_args(argv)
    for dest, flag in getattr(args, "_required", ()):
        if getattr(args, dest, None) in (None, ""):
            parser.error(f"the following arguments are required: {flag}")
    one_of = getattr(args, "_one_of", ())
    if one_of:
        supplied = [flag for dest, flag in one_of if getattr(args, dest, None)]
        if len(supplied) != 1:
            parser.error(
                "exactly one of " + " / ".join(flag for _, flag in one_of) + " is required"
            )
    if hasattr(args, "seed") and args.seed is None:
        args.seed = _default_seed()
    elif hasattr(args, "seed"):
        args.seed = int(args.seed)
    try:
        return args.func(args)
    except PipeLifeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
