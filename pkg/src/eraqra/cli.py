"""Command-line entry point: backtest, evaluate, and synth subcommands."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import pandas as pd

from . import __version__
from .backtest import ALL_METHODS, BacktestConfig, ForecastRecordSet, run_backtest
from .errors import EraqraError
from .synth import SynthSpec, write_dataset
from .timeseries import load_holidays, load_panel
from .transform import McConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ABORT = 2


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _read_config_file(path) -> dict:
    """Simple key-value config: one `key = value` per line, # comments."""
    out = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise EraqraError(f"config line {line_no}: expected key = value")
            key, value = (part.strip() for part in text.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _write_atomic_json(payload: dict, path) -> None:
    tmp = str(path) + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=2, default=str)
    os.replace(tmp, path)


def _parse_methods(text: str) -> tuple[str, ...]:
    alias = {m.lower(): m for m in ALL_METHODS}
    methods = []
    for token in text.split(","):
        token = token.strip().lower()
        if not token:
            continue
        if token == "all":
            return ALL_METHODS
        if token not in alias:
            raise EraqraError(f"unknown method {token!r}; choose from "
                              f"{', '.join(ALL_METHODS)} or 'all'")
        methods.append(alias[token])
    if not methods:
        raise EraqraError("empty method list")
    return tuple(methods)


def _add_backtest_args(sub):
    sub.add_argument("--config", help="key=value config file; flags override")
    sub.add_argument("--data", help="input hourly CSV")
    sub.add_argument("--holidays", help="optional holiday date list")
    sub.add_argument("--from", dest="from_date", help="first validation day")
    sub.add_argument("--to", dest="to_date", help="last validation day")
    sub.add_argument("--methods", default="all",
                     help="comma-separated method list or 'all'")
    sub.add_argument("--transform", choices=["asinh", "none"], default="asinh")
    sub.add_argument("--part1-days", type=int, default=365)
    sub.add_argument("--part2-days", type=int, default=365)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--n-scenarios", type=int, default=10000)
    sub.add_argument("--qra-solver", choices=["lp", "irls"], default="lp")
    sub.add_argument("--no-conversion-refine", action="store_true",
                     help="skip the slow refinement step of the "
                          "expectile-to-quantile conversion")
    sub.add_argument("--no-cache", action="store_true",
                     help="recompute calibration point forecasts each step")
    sub.add_argument("--jobs", type=int, default=1)
    sub.add_argument("--out-dir", default="out")


def _merge_config(args) -> argparse.Namespace:
    if not args.config:
        return args
    file_vals = _read_config_file(args.config)
    defaults = {
        "data": None, "holidays": None, "from_date": None, "to_date": None,
        "methods": "all", "transform": "asinh", "part1_days": 365,
        "part2_days": 365, "seed": 0, "n_scenarios": 10000,
        "qra_solver": "lp", "jobs": 1, "out_dir": "out",
    }
    rename = {"from": "from_date", "to": "to_date"}
    for key, value in file_vals.items():
        key = rename.get(key, key)
        if key not in defaults and key not in ("no_conversion_refine", "no_cache"):
            raise EraqraError(f"unknown config key {key!r}")
        # flags given on the command line win over the file
        if getattr(args, key, None) in (None, defaults.get(key)):
            current = defaults.get(key)
            if isinstance(current, int) and not isinstance(current, bool):
                value = int(value)
            elif key in ("no_conversion_refine", "no_cache"):
                value = value.lower() in ("1", "true", "yes")
            setattr(args, key, value)
    return args


def cmd_backtest(args) -> int:
    try:
        args = _merge_config(args)
    except (EraqraError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not args.data:
        print("error: --data is required", file=sys.stderr)
        return EXIT_USAGE
    t0 = time.time()
    try:
        methods = _parse_methods(args.methods)
        holidays = load_holidays(args.holidays) if args.holidays else None
        panel = load_panel(args.data, holidays=holidays)
        if not args.from_date or not args.to_date:
            print("error: --from and --to are required", file=sys.stderr)
            return EXIT_USAGE
        cfg = BacktestConfig(
            validation_start=args.from_date,
            validation_end=args.to_date,
            calibration_part1_days=args.part1_days,
            calibration_part2_days=args.part2_days,
            methods=methods,
            transform=args.transform,
            mc=McConfig(n_scenarios=args.n_scenarios, seed=args.seed),
            seed=args.seed,
            jobs=args.jobs,
            qra_solver=args.qra_solver,
            conversion_refine=not args.no_conversion_refine,
            use_cache=not args.no_cache,
        )
    except (EraqraError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    os.makedirs(args.out_dir, exist_ok=True)
    load_done = time.time()
    try:
        records, report = run_backtest(panel, cfg)
    except EraqraError as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    run_done = time.time()

    records.to_csv(os.path.join(args.out_dir, "forecasts.csv"))
    report.to_csv(os.path.join(args.out_dir, "report.csv"))
    report.to_json(os.path.join(args.out_dir, "report.json"))
    manifest = {
        "version": __version__,
        "seed": args.seed,
        "config": {
            "data": args.data, "holidays": args.holidays,
            "from": str(cfg.validation_start.date()),
            "to": str(cfg.validation_end.date()),
            "methods": list(methods), "transform": cfg.transform,
            "part1_days": cfg.calibration_part1_days,
            "part2_days": cfg.calibration_part2_days,
            "n_scenarios": cfg.mc.n_scenarios,
            "qra_solver": cfg.qra_solver,
            "conversion_refine": cfg.conversion_refine,
            "use_cache": cfg.use_cache, "jobs": cfg.jobs,
        },
        "input_digests": {
            "data": _sha256(args.data),
            **({"holidays": _sha256(args.holidays)} if args.holidays else {}),
        },
        "timings_s": {
            "load": round(load_done - t0, 3),
            "run": round(run_done - load_done, 3),
        },
        "cell_errors": [
            {"date": str(pd.Timestamp(d).date()), "hour": h,
             "method": m, "message": msg}
            for d, h, m, msg in records.failures
        ],
    }
    _write_atomic_json(manifest, os.path.join(args.out_dir, "manifest.json"))
    n_fail = len(records.failures)
    print(f"wrote {args.out_dir}/forecasts.csv, report.csv, report.json, "
          f"manifest.json ({n_fail} cell error(s))")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    try:
        records = ForecastRecordSet.from_csv(args.forecasts)
        report = records.evaluate(sig=args.sig)
    except (EraqraError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    os.makedirs(args.out_dir, exist_ok=True)
    report.to_csv(os.path.join(args.out_dir, "report.csv"))
    report.to_json(os.path.join(args.out_dir, "report.json"))
    print(f"wrote {args.out_dir}/report.csv, report.json")
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        spec = SynthSpec(days=args.days, noise_scale=args.noise,
                         seed=args.seed, start=args.start)
        write_dataset(spec, args.out, sidecar_path=args.truth)
    except (EraqraError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eraqra",
        description="Probabilistic day-ahead electricity price forecasting "
                    "by expectile/quantile regression averaging.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_back = sub.add_parser("backtest", help="run the rolling-window backtest")
    _add_backtest_args(p_back)
    p_back.set_defaults(func=cmd_backtest)

    p_eval = sub.add_parser("evaluate", help="re-score stored forecasts")
    p_eval.add_argument("--forecasts", required=True,
                        help="forecasts.csv from a previous run")
    p_eval.add_argument("--sig", type=float, default=0.05)
    p_eval.add_argument("--out-dir", default="out")
    p_eval.set_defaults(func=cmd_evaluate)

    p_synth = sub.add_parser("synth", help="generate a synthetic dataset")
    p_synth.add_argument("--days", type=int, required=True)
    p_synth.add_argument("--noise", type=float, default=0.0,
                         help="Gaussian noise scale, EUR/MWh")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--start", default="2017-01-01",
                         help="first output date (ISO)")
    p_synth.add_argument("--out", required=True, help="output CSV path")
    p_synth.add_argument("--truth", help="ground-truth sidecar path "
                                         "(default: <out>.truth.json)")
    p_synth.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
