"""Command-line interface.

Subcommands: simulate, fit, forecast, backtest, evaluate.  Exit codes:
0 success, 1 usage error, 2 data error, 3 fit failure.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from .data_io import ReturnPanel, WindowSpec, read_panel_csv, write_panel_csv
from .errors import DataError, FitFailureError, RegimeOgarchError
from .estimation import OptimizerConfig, lr_test
from .evaluation import LOSS_NAMES, dm_test, loss_series
from .garch import garch_fit, garch_forecast_from_fit
from .mrs_garch import mrs_fit, mrs_forecast
from .pipeline import (BacktestConfig, BacktestResult, component_sweep,
                       run_backtest)
from .portfolio import PERFORMANCE_HEADER
from .simulation import (PRNG_NAME, RegimeBlockSpec, SquareWaveSpec,
                         gen_regime_blocks, gen_square_wave, ten_dim_preset)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_FIT = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="regime-ogarch",
                     description="Covariance forecasting backtests with "
                                 "orthogonal GARCH and regime switching.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic panel")
    sim.add_argument("--preset", choices=("square-wave", "regime-blocks"),
                     required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--length", type=int, default=None)
    sim.add_argument("--period", type=int, default=100)
    sim.add_argument("--dims", type=int, default=10)
    sim.add_argument("-o", "--output", required=True)

    fit = sub.add_parser("fit", help="fit one model, emit JSON parameters")
    fit.add_argument("--model", choices=("garch", "mrsgarch"), required=True)
    fit.add_argument("--column", default=None,
                     help="asset column to fit (default: first)")
    fit.add_argument("--zero-means", action="store_true")
    fit.add_argument("--input-kind", choices=("returns", "prices"),
                     default="returns")
    fit.add_argument("-o", "--output", default=None)
    fit.add_argument("data")

    fc = sub.add_parser("forecast", help="fit and emit a variance forecast")
    fc.add_argument("--model", choices=("garch", "mrsgarch"), required=True)
    fc.add_argument("--column", default=None)
    fc.add_argument("--tau", type=int, default=1)
    fc.add_argument("--input-kind", choices=("returns", "prices"),
                    default="returns")
    fc.add_argument("-o", "--output", default=None)
    fc.add_argument("data")

    bt = sub.add_parser("backtest", help="rolling-window GMVP backtest")
    bt.add_argument("--model", choices=("ewma", "ogarch", "mrsogarch"),
                    required=True)
    bt.add_argument("--components", type=int, default=None,
                    help="retained components (default: all assets)")
    bt.add_argument("--horizon", type=int, default=1)
    bt.add_argument("--window", type=int, required=True,
                    help="in-sample window length")
    bt.add_argument("--step", type=int, default=None,
                    help="origin spacing (default: horizon)")
    bt.add_argument("--refit-every", type=int, default=10)
    bt.add_argument("--ewma-lambda", type=float, default=0.06)
    bt.add_argument("--full-sample-normalization", action="store_true")
    bt.add_argument("--truncate-to-zero", action="store_true")
    bt.add_argument("--zero-means", action="store_true")
    bt.add_argument("--paper-literal-horizon", action="store_true")
    bt.add_argument("--expanding", action="store_true")
    bt.add_argument("--crisis", action="append", default=[],
                    metavar="FROM,TO", help="crisis date range (repeatable)")
    bt.add_argument("--max-evals", type=int, default=4000)
    bt.add_argument("--input-kind", choices=("returns", "prices"),
                    default="returns")
    bt.add_argument("--sweep-components", default=None,
                    metavar="K1,K2,...",
                    help="run the component sweep instead of a single "
                         "backtest (needs the simulation truth sidecar)")
    bt.add_argument("--truth", default=None,
                    help="truth sidecar JSON from `simulate`")
    bt.add_argument("-o", "--output", required=True)
    bt.add_argument("data")

    ev = sub.add_parser("evaluate",
                        help="loss, DM and LR reports from result bundles")
    ev.add_argument("--dm", nargs=2, metavar=("BUNDLE_A", "BUNDLE_B"),
                    default=None)
    ev.add_argument("--lr", nargs=2, metavar=("BUNDLE_FULL", "BUNDLE_NESTED"),
                    default=None)
    ev.add_argument("--horizon", type=int, default=None,
                    help="override the holding-period horizon for DM lags")
    ev.add_argument("-o", "--output", default=None)
    return parser


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_simulate(args) -> int:
    os.makedirs(args.output, exist_ok=True)
    csv_path = os.path.join(args.output, "panel.csv")
    truth_path = os.path.join(args.output, "truth.json")
    if args.preset == "square-wave":
        spec = SquareWaveSpec(period=args.period, seed=args.seed,
                              length=args.length or 1000)
        panel, vols = gen_square_wave(spec)
        truth = {
            "preset": "square-wave", "prng": PRNG_NAME, "seed": spec.seed,
            "period": spec.period, "length": spec.length,
            "correlation": spec.correlation,
            "vol_low": list(spec.vol_low), "vol_high": list(spec.vol_high),
            "true_vol": [list(map(float, row)) for row in vols],
        }
    else:
        spec = ten_dim_preset(seed=args.seed, dims=args.dims,
                              length=args.length or 5000)
        panel, covs = gen_regime_blocks(spec)
        truth = {
            "preset": "regime-blocks", "prng": PRNG_NAME, "seed": spec.seed,
            "dims": spec.dims, "length": spec.length,
            "block_bounds": list(spec.block_bounds),
            "labels": list(spec.labels),
            "covariances": [[list(map(float, row)) for row in c]
                            for c in covs],
        }
    write_panel_csv(panel, csv_path)
    _write_json(truth_path, truth)
    print(f"wrote {csv_path} and {truth_path}")
    return EXIT_OK


def _pick_series(panel: ReturnPanel, column: str | None) -> np.ndarray:
    if column is None:
        return np.ascontiguousarray(panel.returns[:, 0])
    if column not in panel.asset_names:
        raise DataError(f"column {column!r} not in the panel")
    return np.ascontiguousarray(panel.returns[:, panel.asset_names.index(column)])


def _cmd_fit(args) -> int:
    panel = read_panel_csv(args.data, kind=args.input_kind)
    y = _pick_series(panel, args.column)
    if args.model == "garch":
        payload = garch_fit(y).to_dict()
    else:
        payload = mrs_fit(y, zero_means=args.zero_means).to_dict()
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _cmd_forecast(args) -> int:
    if args.tau < 1:
        raise _UsageError("--tau must be at least 1")
    panel = read_panel_csv(args.data, kind=args.input_kind)
    y = _pick_series(panel, args.column)
    if args.model == "garch":
        fit = garch_fit(y)
        variances = garch_forecast_from_fit(fit, y, args.tau)
        params = fit.to_dict()
    else:
        fit = mrs_fit(y)
        variances = mrs_forecast(fit, args.tau)
        params = fit.to_dict()
    payload = {"model": args.model, "horizon": args.tau,
               "variances": [float(v) for v in variances], "params": params}
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _parse_crisis(ranges) -> tuple:
    out = []
    for spec in ranges:
        parts = spec.split(",")
        if len(parts) != 2:
            raise _UsageError(f"--crisis expects FROM,TO, got {spec!r}")
        out.append((parts[0].strip(), parts[1].strip()))
    return tuple(out)


def _cmd_backtest(args) -> int:
    panel = read_panel_csv(args.data, kind=args.input_kind)
    k = args.components if args.components is not None else panel.n_assets
    step = args.step if args.step is not None else args.horizon
    config = BacktestConfig(
        model=args.model, n_components=k,
        window=WindowSpec(args.window, args.horizon, step),
        ewma_lambda=args.ewma_lambda,
        full_sample_normalization=args.full_sample_normalization,
        refit_every=args.refit_every,
        truncate_to_zero=args.truncate_to_zero,
        zero_means=args.zero_means,
        paper_literal_horizon=args.paper_literal_horizon,
        expanding=args.expanding,
        crisis_ranges=_parse_crisis(args.crisis),
        optimizer=OptimizerConfig(max_evals=args.max_evals),
    )
    if args.sweep_components:
        if not args.truth:
            raise DataError("--sweep-components needs --truth sidecar JSON")
        truth = load_truth_sidecar(args.truth)
        k_values = [int(v) for v in args.sweep_components.split(",")]
        rows = component_sweep(panel, config, k_values, truth)
        os.makedirs(args.output, exist_ok=True)
        _write_json(os.path.join(args.output, "sweep.json"), rows)
        header = ["k"] + [key for key in rows[0] if key != "k"]
        print("  ".join(f"{h:>10}" for h in header))
        for row in rows:
            print("  ".join(f"{row[h]:>10.4f}" if h != "k" else f"{row['k']:>10d}"
                            for h in header))
        return EXIT_OK
    result = run_backtest(panel, config)
    write_bundle(result, args.output)
    print(PERFORMANCE_HEADER)
    for label, report in result.performance().items():
        print(report.to_text_row(label))
    print(f"bundle written to {args.output}")
    return EXIT_OK


def load_truth_sidecar(path) -> RegimeBlockSpec:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    if d.get("preset") != "regime-blocks":
        raise DataError("truth sidecar is not a regime-blocks preset")
    return RegimeBlockSpec(d["dims"], d["length"], tuple(d["block_bounds"]),
                           tuple(np.asarray(c) for c in d["covariances"]),
                           seed=d.get("seed", 0),
                           labels=tuple(d.get("labels", ())))


def write_bundle(result: BacktestResult, outdir) -> None:
    """Result bundle layout: config.json, weights.csv, forecasts/ (one JSON
    per origin), report.json."""
    os.makedirs(outdir, exist_ok=True)
    fdir = os.path.join(outdir, "forecasts")
    os.makedirs(fdir, exist_ok=True)
    _write_json(os.path.join(outdir, "config.json"), result.config.to_dict())

    with open(os.path.join(outdir, "weights.csv"), "w", encoding="utf-8") as fh:
        fh.write("date," + ",".join(result.asset_names) + "\n")
        for rec in result.records:
            fh.write(rec.date + ","
                     + ",".join(repr(float(w)) for w in rec.weights) + "\n")

    for rec in result.records:
        if rec.forecast is None:
            continue
        payload = {"origin": rec.origin, "date": rec.date,
                   "matrices": [[list(map(float, row)) for row in m]
                                for m in rec.forecast.matrices]}
        _write_json(os.path.join(fdir, f"origin_{rec.origin:06d}.json"),
                    payload)

    per_origin = []
    for rec in result.records:
        per_origin.append({
            "origin": rec.origin, "date": rec.date,
            "realized_return": rec.realized_return,
            "eq_proxy": rec.eq_proxy,
            "eq_forecast_var": rec.eq_forecast_var,
            "volatile_prob": (None if rec.volatile_prob is None else
                              [None if math.isnan(v) else float(v)
                               for v in rec.volatile_prob]),
            "refit": rec.refit,
            "warning": rec.warning,
        })
    trail = []
    for fr in result.fit_trail:
        trail.append({
            "origin": fr.origin,
            "eigenvalues": [float(v) for v in fr.eigenvalues],
            "loglikes": [None if v is None else float(v) for v in fr.loglikes],
            "garch_loglikes": [None if v is None else float(v)
                               for v in fr.garch_loglikes],
            "params": [None if p is None else p.to_dict() for p in fr.params],
        })
    perf = {label: rep.to_dict() for label, rep in result.performance().items()}
    try:
        losses = result.losses().to_dict()
    except RegimeOgarchError:
        losses = None
    _write_json(os.path.join(outdir, "report.json"), {
        "per_origin": per_origin, "performance": perf, "loss": losses,
        "fit_trail": trail, "horizon": result.config.horizon,
    })


def _load_report(bundle) -> dict:
    path = os.path.join(bundle, "report.json")
    if not os.path.exists(path):
        raise DataError(f"{bundle}: not a result bundle (missing report.json)")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _aligned_series(rep_a: dict, rep_b: dict) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows_a = {r["date"]: r for r in rep_a["per_origin"]
              if r["eq_forecast_var"] is not None}
    xs, ha, hb = [], [], []
    for r in rep_b["per_origin"]:
        if r["eq_forecast_var"] is None:
            continue
        other = rows_a.get(r["date"])
        if other is None:
            continue
        xs.append(r["eq_proxy"])
        ha.append(other["eq_forecast_var"])
        hb.append(r["eq_forecast_var"])
    if len(xs) < 10:
        raise DataError("bundles share fewer than 10 forecast dates")
    return np.array(xs), np.array(ha), np.array(hb)


def _cmd_evaluate(args) -> int:
    if args.dm is None and args.lr is None:
        raise _UsageError("evaluate needs --dm and/or --lr")
    payload = {}
    if args.dm is not None:
        rep_a = _load_report(args.dm[0])
        rep_b = _load_report(args.dm[1])
        tau = args.horizon or rep_a.get("horizon", 1)
        x, ha, hb = _aligned_series(rep_a, rep_b)
        series_a = loss_series(x, ha)
        series_b = loss_series(x, hb)
        dm_rows = {}
        print(f"Diebold-Mariano, horizon {tau} "
              f"({args.dm[0]} vs {args.dm[1]}; positive favors the second)")
        for name in LOSS_NAMES:
            res = dm_test(series_a[name], series_b[name], tau)
            dm_rows[name] = res.to_dict()
            print(f"  {name.upper():<7} stat {res.statistic:>9.4f}   "
                  f"p {res.p_value:.4g}")
        payload["dm"] = dm_rows
    if args.lr is not None:
        rep_full = _load_report(args.lr[0])
        rep_nested = _load_report(args.lr[1])
        lr_rows = []
        print("Likelihood-ratio tests per component and refit origin "
              "(df 5, 6, 7; the regime model nests the single-regime one)")
        for fr_full, fr_nested in zip(rep_full["fit_trail"],
                                      rep_nested["fit_trail"]):
            if fr_full["origin"] != fr_nested["origin"]:
                continue
            for j, (ll_f, ll_n) in enumerate(zip(fr_full["loglikes"],
                                                 fr_nested["loglikes"])):
                if ll_f is None or ll_n is None:
                    continue
                row = {"origin": fr_full["origin"], "component": j + 1,
                       "loglike_full": ll_f, "loglike_nested": ll_n}
                for df in (5, 6, 7):
                    res = lr_test(ll_n, ll_f, df)
                    row[f"p_df{df}"] = res.p_value
                    row["statistic"] = res.statistic
                lr_rows.append(row)
        for row in lr_rows[:12]:
            print(f"  origin {row['origin']:>6} comp {row['component']} "
                  f"stat {row['statistic']:>9.3f} "
                  f"p(df=5) {row['p_df5']:.3g} p(df=6) {row['p_df6']:.3g} "
                  f"p(df=7) {row['p_df7']:.3g}")
        if len(lr_rows) > 12:
            print(f"  ... {len(lr_rows) - 12} more rows in the JSON output")
        payload["lr"] = lr_rows
    if args.output:
        _write_json(args.output, payload)
    return EXIT_OK


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "fit":
            return _cmd_fit(args)
        if args.command == "forecast":
            return _cmd_forecast(args)
        if args.command == "backtest":
            return _cmd_backtest(args)
        if args.command == "evaluate":
            return _cmd_evaluate(args)
        raise _UsageError(f"unknown command {args.command!r}")
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FitFailureError as exc:
        print(f"fit failure: {exc}", file=sys.stderr)
        return EXIT_FIT
    except RegimeOgarchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
