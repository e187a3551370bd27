"""Batch command-line front end.

Every subcommand reads files, writes files, and exits: 0 on success, 1 on a
domain error (typed message on stderr), 2 on a usage error. A manifest.json
lands next to the outputs recording the command, resolved parameters, input
digests, and the output file list, so identical invocations can be audited
for byte-identical results.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, estimators, figures, hidden_orders, imbalance, impact, simulator
from .errors import DomainError
from .liquidity import ar_coefficients
from .orderflow import TransactionSeries, derive_returns, parse_transactions, write_transactions
from .reference import STOCKS


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def _out_dir(args) -> Path:
    if args.out is not None:
        out = Path(args.out)
    elif getattr(args, "input", None) is not None:
        src = Path(args.input)
        out = src if src.is_dir() else src.parent
    else:
        out = Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out


_SKIP_PARAMS = {"handler", "command", "input", "out", "config"}


def _manifest(out: Path, args, inputs: dict, outputs: list, seed: int | None = None) -> None:
    params = {
        k: v for k, v in sorted(vars(args).items()) if k not in _SKIP_PARAMS and k != "seed"
    }
    payload = {
        "command": args.command,
        "version": __version__,
        "seed": seed if seed is not None else getattr(args, "seed", None),
        "parameters": params,
        "inputs": {str(k): v for k, v in inputs.items()},
        "outputs": sorted(outputs),
    }
    _write_json(out / "manifest.json", payload)


def _load_series(path):
    series = parse_transactions(path)
    return series, derive_returns(series)


def _derived_exponents(series: TransactionSeries):
    return estimators.derive_exponents(estimators.hurst_periodogram(series.signs))


# ---------------------------------------------------------------- handlers


def _cmd_acf(args) -> int:
    out = _out_dir(args)
    series, returns = _load_series(args.input)
    if args.column == "sign":
        x = series.signs.astype(np.float64)
    elif args.column == "return":
        x = returns.r
    else:
        x = np.abs(returns.r)
    est = estimators.acf(x, args.max_lag)
    outputs = ["acf.json"]
    _write_json(out / "acf.json", {"lags": est.lags, "values": est.values})
    fit = None
    lag_max = min(1000, args.max_lag)
    if lag_max > 10:
        try:
            fit = estimators.fit_power_law_decay(est, 10, lag_max)
        except DomainError as exc:
            print(f"note: decay fit skipped: {exc}", file=sys.stderr)
    if fit is not None:
        _write_json(
            out / "fit.json",
            {
                "exponent": fit.exponent,
                "amplitude": fit.amplitude,
                "lag_min": fit.lag_min,
                "lag_max": fit.lag_max,
            },
        )
        outputs.append("fit.json")
    if not args.no_plot:
        band = estimators.white_noise_band(x.size)
        figures.fig_acf(est.lags, {args.column: est.values}, band, out / "acf.png")
        outputs.append("acf.png")
    _manifest(out, args, {args.input: _sha256(Path(args.input))}, outputs)
    return 0


def _cmd_tail(args) -> int:
    out = _out_dir(args)
    series, returns = _load_series(args.input)
    if args.column == "volume":
        samples = series.volumes
    elif args.column == "abs-return":
        samples = np.abs(returns.r)
    else:
        samples = hidden_orders.size_samples(hidden_orders.reconstruct(series, args.window))
    fit = estimators.hill_tail(samples, fraction=args.fraction)
    outputs = ["tail.json"]
    _write_json(out / "tail.json", {"xi": fit.xi, "x_min": fit.x_min, "n": fit.n})
    if not args.no_plot:
        figures.fig_tail(samples[samples > 0], fit, out / "tail.png")
        outputs.append("tail.png")
    _manifest(out, args, {args.input: _sha256(Path(args.input))}, outputs)
    return 0


def _cmd_hurst(args) -> int:
    out = _out_dir(args)
    series, _ = _load_series(args.input)
    h = estimators.hurst_periodogram(series.signs)
    ex = estimators.derive_exponents(h)
    outputs = ["hurst.json"]
    _write_json(out / "hurst.json", {"h": ex.h, "gamma": ex.gamma, "alpha": ex.alpha, "phi": ex.phi})
    if not args.no_plot:
        figures.fig_hurst(series.signs, h, out / "hurst.png")
        outputs.append("hurst.png")
    _manifest(out, args, {args.input: _sha256(Path(args.input))}, outputs)
    return 0


def _cmd_params(args) -> int:
    out = _out_dir(args)
    table = {}
    for name, p in STOCKS.items():
        ex = estimators.derive_exponents(p.h)
        table[name] = {
            "transactions": p.transactions,
            "h": p.h,
            "f1": p.f1,
            "f2": p.f2,
            "alpha": p.alpha,
            "phi": p.phi,
            "gamma_derived": ex.gamma,
            "alpha_derived": ex.alpha,
            "phi_derived": ex.phi,
        }
    _write_json(out / "params.json", table)
    _manifest(out, args, {}, ["params.json"])
    return 0


def _cmd_impact_fn(args) -> int:
    out = _out_dir(args)
    series, returns = _load_series(args.input)
    fit = impact.fit_impact_function(series, returns)
    bins = [
        {
            "v": fit.bin_centers[i],
            "mean": fit.bin_means[i],
            "count": fit.bin_counts[i],
            "used": bool(fit.used[i]),
        }
        for i in range(fit.bin_centers.size)
    ]
    nonzero = None
    try:
        nz = impact.fit_impact_nonzero(series, returns)
        nonzero = {"f1": nz.fn.f1, "f2": nz.fn.f2, "n_observations": nz.n_observations}
    except DomainError as exc:
        print(f"note: nonzero-impact fit skipped: {exc}", file=sys.stderr)
    outputs = ["impact_fn.json"]
    _write_json(
        out / "impact_fn.json",
        {
            "f1": fit.fn.f1,
            "f2": fit.fn.f2,
            "n_observations": fit.n_observations,
            "bins": bins,
            "nonzero": nonzero,
        },
    )
    if not args.no_plot:
        figures.fig_impact_fn(fit, out / "impact_fn.png")
        outputs.append("impact_fn.png")
    _manifest(out, args, {args.input: _sha256(Path(args.input))}, outputs)
    return 0


def _cmd_hidden_orders(args) -> int:
    out = _out_dir(args)
    series, returns = _load_series(args.input)
    orders = hidden_orders.reconstruct(series, args.window)
    hidden_orders.write_orders_csv(orders, out / "orders.csv")
    hidden_orders.write_piece_map_csv(orders, out / "piece_map.csv")
    outputs = ["orders.csv", "piece_map.csv"]
    if not args.no_plot:
        figures.fig_sizes(hidden_orders.size_samples(orders), out / "sizes.png")
        outputs.append("sizes.png")
    if args.mode != "none":
        ex = _derived_exponents(series)
        fn = impact.fit_impact_function(series, returns).fn
        curve = impact.empirical_hidden_order_curve(series, returns, orders, args.mode, ex, fn)
        payload = {
            "mode": curve.mode,
            "bins": [
                {
                    "N": curve.sizes[i],
                    "mean": curve.mean_scaled_return[i],
                    "stderr": curve.stderr[i],
                    "count": curve.counts[i],
                }
                for i in range(curve.sizes.size)
            ],
            "theory": curve.theory,
        }
        _write_json(out / "curve.json", payload)
        outputs.append("curve.json")
        if not args.no_plot:
            figures.fig_order_curve(curve, out / "curve.png")
            outputs.append("curve.png")
    _manifest(out, args, {args.input: _sha256(Path(args.input))}, outputs)
    return 0


def _conditioned_table(series, returns, args):
    if args.mode == "none":
        return imbalance.conditional_table(
            series, returns, "actual-sign", k_max=args.max_lag, jobs=args.jobs
        )
    if args.mode == "E1":
        ex = _derived_exponents(series)
        coeffs = ar_coefficients(ex.phi, k_max=1000)
        return imbalance.conditional_table(
            series, returns, "predictorE1", k_max=args.max_lag, coeffs=coeffs, jobs=args.jobs
        )
    ex = _derived_exponents(series)
    orders = hidden_orders.reconstruct(series, args.window)
    return imbalance.conditional_table(
        series,
        returns,
        "predictorE2",
        k_max=args.max_lag,
        orders=orders,
        alpha=ex.alpha,
        jobs=args.jobs,
    )


def _cmd_imbalance(args) -> int:
    out = _out_dir(args)
    series, returns = _load_series(args.input)
    table = _conditioned_table(series, returns, args)
    imbalance.write_table_csv(table, out / "imbalance.csv")
    ratios = imbalance.imbalance_ratios(table)
    outputs = ["imbalance.csv", "ratios.json"]
    _write_json(
        out / "ratios.json",
        {
            "lags": ratios.lags,
            "transaction": ratios.transaction,
            "transaction_se": ratios.transaction_se,
            "return": ratios.ret,
            "return_se": ratios.ret_se,
            "liquidity": ratios.liquidity,
        },
    )
    if not args.no_plot:
        figures.fig_imbalance(ratios, out / "imbalance.png")
        outputs.append("imbalance.png")
    _manifest(out, args, {args.input: _sha256(Path(args.input))}, outputs)
    return 0


def _cmd_cum_impact(args) -> int:
    out = _out_dir(args)
    series, returns = _load_series(args.input)
    table = _conditioned_table(series, returns, args)
    curve = imbalance.cumulative_impacts(table, imbalance.mean_initial_impact(returns), args.max_lag)
    imbalance.write_curve_csv(curve, out / "cum_impact.csv")
    outputs = ["cum_impact.csv"]
    if not args.no_plot:
        figures.fig_cum_impact(curve, out / "cum_impact.png")
        outputs.append("cum_impact.png")
    _manifest(out, args, {args.input: _sha256(Path(args.input))}, outputs)
    return 0


def _cmd_response(args) -> int:
    if args.mode != "E2":
        print("error: response requires --mode E2", file=sys.stderr)
        return 2
    out = _out_dir(args)
    series, returns = _load_series(args.input)
    orders = hidden_orders.reconstruct(series, args.window)
    ex = _derived_exponents(series)
    rc = imbalance.response_curves(series, returns, orders, ex.alpha, args.k)
    imbalance.write_response_csv(rc, out / "response.csv")
    outputs = ["response.csv"]
    if not args.no_plot:
        figures.fig_response(rc, out / "response.png")
        outputs.append("response.png")
    _manifest(out, args, {args.input: _sha256(Path(args.input))}, outputs)
    return 0


def _cmd_decay(args) -> int:
    out = _out_dir(args)
    series, returns = _load_series(args.input)
    orders = hidden_orders.reconstruct(series, args.window)
    profile = imbalance.decay_profile(series, returns, orders, n_min=args.n_min, post_k=args.max_lag)
    imbalance.write_decay_csv(profile, out / "decay.csv")
    phi_resp = None
    try:
        phi_resp = imbalance.phi_conditioned_response(series, returns, orders, args.k)
    except DomainError as exc:
        print(f"note: completed-order response skipped: {exc}", file=sys.stderr)
    outputs = ["decay.csv", "decay.json"]
    _write_json(
        out / "decay.json",
        {
            "order_count": profile.order_count,
            "mean_duration": profile.mean_duration,
            "n_min": profile.n_min,
            "post_drift": {
                "value": profile.post_drift,
                "stderr": profile.post_drift_se,
                "n_orders": profile.post_drift_orders,
            },
            "phi_response": None
            if phi_resp is None
            else {"value": phi_resp.value, "stderr": phi_resp.stderr, "n_pairs": phi_resp.n_pairs},
        },
    )
    if not args.no_plot:
        figures.fig_decay(profile, out / "decay.png")
        outputs.append("decay.png")
    _manifest(out, args, {args.input: _sha256(Path(args.input))}, outputs)
    return 0


def _cmd_simulate(args) -> int:
    out = Path(args.out) if args.out is not None else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    config = simulator.load_sim_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    result = simulator.simulate(config)
    write_transactions(result.series, out / "transactions.csv")
    hidden_orders.write_orders_csv(result.orders, out / "orders.csv")
    hidden_orders.write_piece_map_csv(result.orders, out / "piece_map.csv")
    lines = [f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}" for k, v in simulator.config_as_dict(config).items()]
    (out / "config_resolved.cfg").write_text("\n".join(lines) + "\n")
    outputs = ["transactions.csv", "orders.csv", "piece_map.csv", "config_resolved.cfg"]
    _manifest(out, args, {args.config: _sha256(Path(args.config))}, outputs, seed=config.seed)
    return 0


def _orders_from_run_dir(run: Path, series) -> hidden_orders.HiddenOrderSet:
    """Rebuild ground-truth orders from a simulate run's CSV pair."""
    meta = {row["order_id"]: row for row in hidden_orders.read_orders_csv(run / "orders.csv")}
    pieces: dict[int, list[int]] = {}
    with open(run / "piece_map.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            pieces.setdefault(int(row["order_id"]), []).append(int(row["i"]))
    ids = sorted(pieces)
    return hidden_orders.build_order_set(
        [sorted(pieces[j]) for j in ids],
        [int(meta[j]["sign"]) for j in ids],
        [float(meta[j]["v_mean"]) for j in ids],
        len(series),
        thetas=[float(meta[j]["theta"]) for j in ids],
    )


def _cmd_stylized_facts(args) -> int:
    src = Path(args.input)
    run_dir = src if src.is_dir() else None
    tx_path = src / "transactions.csv" if run_dir else src
    series, returns = _load_series(tx_path)
    inputs = {tx_path: _sha256(tx_path)}
    if run_dir and (run_dir / "orders.csv").exists() and (run_dir / "piece_map.csv").exists():
        orders = _orders_from_run_dir(run_dir, series)
        inputs[run_dir / "orders.csv"] = _sha256(run_dir / "orders.csv")
        inputs[run_dir / "piece_map.csv"] = _sha256(run_dir / "piece_map.csv")
    else:
        orders = hidden_orders.reconstruct(series, args.window)
    out = Path(args.out) if args.out is not None else (run_dir or src.parent)
    out.mkdir(parents=True, exist_ok=True)
    report = simulator.stylized_facts_report(series, returns, orders)
    _write_json(out / "report.json", report.as_dict())
    outputs = ["report.json"]
    if not args.no_plot:
        r = returns.r
        est = estimators.acf(r, 200)
        band = estimators.white_noise_band(r.size)
        abs_est = estimators.acf(np.abs(r), 1000)
        dfit = estimators.fit_power_law_decay(abs_est, 10, 1000)
        figures.fig_stylized(est.lags, est.values, band, abs_est.lags, abs_est.values, dfit, out / "stylized.png")
        outputs.append("stylized.png")
    _manifest(out, args, inputs, outputs)
    return 0


# ------------------------------------------------------------------ parser


def _add_common(sub, *, figure: bool = True) -> None:
    sub.add_argument("--out", metavar="PATH", default=None, help="output directory (default: alongside the input)")
    if figure:
        sub.add_argument("--no-plot", action="store_true", help="skip the PNG figure (default: False)")


def _add_input(sub) -> None:
    sub.add_argument("--in", dest="input", metavar="PATH", required=True, help="transaction CSV")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="impactflow",
        description="Order-flow statistics, hidden-order reconstruction, impact laws, and a synthetic market.",
    )
    parser.add_argument("--version", action="version", version=f"impactflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("acf", help="autocorrelation of signs or returns, with a decay fit")
    _add_input(p)
    p.add_argument("--column", choices=["sign", "return", "abs-return"], default="sign", help="series to correlate (default: sign)")
    p.add_argument("--max-lag", type=_positive_int, default=1000, help="largest lag (default: 1000)")
    _add_common(p)
    p.set_defaults(handler=_cmd_acf)

    p = sub.add_parser("tail", help="Hill tail exponent of volumes, returns, or order sizes")
    _add_input(p)
    p.add_argument("--column", choices=["volume", "abs-return", "size"], default="volume", help="sample to fit (default: volume)")
    p.add_argument("--fraction", type=float, default=0.0075, help="tail fraction above the threshold (default: 0.0075)")
    p.add_argument("--window", type=_positive_int, default=100, help="reconstruction window for --column size (default: 100)")
    _add_common(p)
    p.set_defaults(handler=_cmd_tail)

    p = sub.add_parser("hurst", help="periodogram Hurst exponent of the sign series")
    _add_input(p)
    _add_common(p)
    p.set_defaults(handler=_cmd_hurst)

    p = sub.add_parser("params", help="reference stock parameters with derived exponents")
    _add_common(p, figure=False)
    p.set_defaults(handler=_cmd_params)

    p = sub.add_parser("impact-fn", help="fit the one-transaction impact function f(v)")
    _add_input(p)
    _add_common(p)
    p.set_defaults(handler=_cmd_impact_fn)

    p = sub.add_parser("hidden-orders", help="reconstruct hidden orders; optionally the scaled impact curve")
    _add_input(p)
    p.add_argument("--window", type=_positive_int, default=100, help="max gap joining same-broker same-sign pieces (default: 100)")
    p.add_argument("--mode", choices=["E1", "E2", "none"], default="none", help="impact law for the curve, none for just the reconstruction (default: none)")
    _add_common(p)
    p.set_defaults(handler=_cmd_hidden_orders)

    p = sub.add_parser("imbalance", help="conditional sign/return table and imbalance ratios")
    _add_input(p)
    p.add_argument("--max-lag", type=_positive_int, default=100, help="largest lag (default: 100)")
    p.add_argument("--mode", choices=["E1", "E2", "none"], default="none", help="conditioner: a predictor or the realized sign (default: none)")
    p.add_argument("--window", type=_positive_int, default=100, help="reconstruction window for --mode E2 (default: 100)")
    p.add_argument("--jobs", type=_positive_int, default=1, help="threads across lags (default: 1)")
    _add_common(p)
    p.set_defaults(handler=_cmd_imbalance)

    p = sub.add_parser("cum-impact", help="cumulative response curves I, I_N, I_L")
    _add_input(p)
    p.add_argument("--max-lag", type=_positive_int, default=100, help="largest horizon (default: 100)")
    p.add_argument("--mode", choices=["E1", "E2", "none"], default="none", help="conditioner: a predictor or the realized sign (default: none)")
    p.add_argument("--window", type=_positive_int, default=100, help="reconstruction window for --mode E2 (default: 100)")
    p.add_argument("--jobs", type=_positive_int, default=1, help="threads across lags (default: 1)")
    _add_common(p)
    p.set_defaults(handler=_cmd_cum_impact)

    p = sub.add_parser("response", help="buyer/seller mean returns binned by the E2 sign predictor")
    _add_input(p)
    p.add_argument("--k", type=_positive_int, default=100, help="prediction horizon (default: 100)")
    p.add_argument("--mode", choices=["E1", "E2", "none"], default="E2", help="must be E2 (default: E2)")
    p.add_argument("--window", type=_positive_int, default=100, help="reconstruction window (default: 100)")
    _add_common(p)
    p.set_defaults(handler=_cmd_response)

    p = sub.add_parser("decay", help="hidden-order impact around completion, and the completed-order response")
    _add_input(p)
    p.add_argument("--n-min", type=_positive_int, default=20, help="smallest order size counted as large (default: 20)")
    p.add_argument("--max-lag", type=_positive_int, default=500, help="post-completion horizon (default: 500)")
    p.add_argument("--k", type=_positive_int, default=100, help="lag for the completed-order response (default: 100)")
    p.add_argument("--window", type=_positive_int, default=100, help="reconstruction window (default: 100)")
    _add_common(p)
    p.set_defaults(handler=_cmd_decay)

    p = sub.add_parser("simulate", help="run the synthetic market from a config file")
    p.add_argument("--config", metavar="PATH", required=True, help="flat key = value config file")
    p.add_argument("--seed", type=_nonneg_int, default=None, help="override the config seed (default: None)")
    p.add_argument("--out", metavar="PATH", default=None, help="output directory (default: .)")
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("stylized-facts", help="headline checks on a finished run")
    p.add_argument("--in", dest="input", metavar="PATH", required=True, help="simulate output directory, or a transaction CSV")
    p.add_argument("--window", type=_positive_int, default=100, help="reconstruction window when ground truth is absent (default: 100)")
    _add_common(p)
    p.set_defaults(handler=_cmd_stylized_facts)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 2
    try:
        return args.handler(args)
    except DomainError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
