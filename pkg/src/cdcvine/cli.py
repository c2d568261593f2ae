"""Command-line surface: generate | fit | simulate | backtest | sweep | diagnostics.

Exit codes: 0 ok, 1 numerical failure, 2 input error. Failures emit a
machine-readable error JSON on stderr. All outputs are schema-versioned
and embed the resolved run configuration and seed.
"""

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import backtest as bt
from . import bicop, cdcv, clustering, generator, indexing
from .config import SCHEMA_VERSION, load_config_file, resolve_config
from .errors import InputError, NumericalError
from .panel import load_panel, save_panel

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_INPUT = 2


def _dump_json(doc, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_csv(path, header, rows):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(x)) if isinstance(x, float) else x
                             for x in row])


def _load_caps(path):
    if path is None:
        return None
    caps = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().lower() == "asset":
                continue
            caps[row[0].strip()] = float(row[1])
    return caps


def _load_labels(path, assets):
    if path is None:
        return None
    by_asset = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().lower() == "asset":
                continue
            by_asset[row[0].strip()] = row[1].strip()
    missing = [a for a in assets if a not in by_asset]
    if missing:
        raise InputError(f"labels file misses assets: {missing}")
    return [by_asset[a] for a in assets]


def _common_fit_inputs(cfg):
    if cfg.data is None:
        raise InputError("--data is required")
    panel = load_panel(cfg.data)
    caps = _load_caps(cfg.market_caps)
    labels = _load_labels(cfg.labels, panel.assets)
    return panel, caps, labels


def _fit_window(panel, cfg, caps, labels, window_start):
    window = panel.window(window_start, cfg.window)
    return cdcv.fit_cdcv(window.returns, panel.assets, seed=cfg.seed,
                         window_start=window_start, fixed_labels=labels,
                         market_caps=caps, **cfg.fit_kwargs())


def cmd_generate(cfg, args):
    panel = generator.factor_panel(
        n_assets=args.n_assets, n_sectors=args.n_sectors,
        n_periods=args.periods, seed=cfg.seed,
        market_vol=args.market_vol, sector_vol=args.sector_vol,
        idio_vol=args.idio_vol, market_beta=args.market_beta,
        sector_beta=args.sector_beta, shock_df=args.shock_df)
    out = os.path.join(cfg.out_dir, args.out)
    os.makedirs(cfg.out_dir, exist_ok=True)
    save_panel(panel, out)
    meta = {
        "schema_version": SCHEMA_VERSION,
        "kind": "generated_panel",
        "config": cfg.to_dict(),
        "generator": {
            "n_assets": args.n_assets, "n_sectors": args.n_sectors,
            "periods": args.periods, "market_vol": args.market_vol,
            "sector_vol": args.sector_vol, "idio_vol": args.idio_vol,
            "market_beta": args.market_beta, "sector_beta": args.sector_beta,
            "shock_df": args.shock_df,
            "sector_labels": list(generator.factor_labels(args.n_assets,
                                                          args.n_sectors)),
        },
        "panel_csv": args.out,
    }
    _dump_json(meta, out + ".meta.json")
    return EXIT_OK


def cmd_fit(cfg, args):
    panel, caps, labels = _common_fit_inputs(cfg)
    model = _fit_window(panel, cfg, caps, labels, cfg.window_start)
    doc = cdcv.model_to_dict(model)
    doc["config"] = cfg.to_dict()
    _dump_json(doc, os.path.join(cfg.out_dir, args.model_out))
    diags = cdcv.conditioning_diagnostics(
        model, panel.window(cfg.window_start, cfg.window).returns)
    _dump_json({
        "schema_version": SCHEMA_VERSION,
        "kind": "conditioning_diagnostics",
        "config": cfg.to_dict(),
        "stages": [d.to_dict() for d in diags],
        "parameter_count": cdcv.parameter_count(model),
        "reached_stop": model.partition.reached_stop,
    }, os.path.join(cfg.out_dir, args.diagnostics_out))
    return EXIT_OK


def cmd_simulate(cfg, args):
    with open(args.model, encoding="utf-8") as fh:
        model = cdcv.model_from_dict(json.load(fh))
    sims = cdcv.simulate_cdcv(model, args.n, cfg.seed)
    out = os.path.join(cfg.out_dir, args.out)
    _write_csv(out, ("sample",) + tuple(model.asset_ids),
               [[i] + [float(x) for x in row] for i, row in enumerate(sims)])
    return EXIT_OK


def cmd_backtest(cfg, args):
    panel, caps, labels = _common_fit_inputs(cfg)
    fit_kwargs = cfg.fit_kwargs()
    fit_kwargs.update(fixed_labels=labels, market_caps=caps)
    reports = bt.rolling_backtest(
        panel, window_length=cfg.window, alphas=cfg.alphas, mode=cfg.mode,
        n_sims=cfg.n_sims, seed=cfg.seed, n_jobs=cfg.n_jobs,
        fit_kwargs=fit_kwargs)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "var_backtest",
        "config": cfg.to_dict(),
        "reports": [r.to_dict() for r in reports],
    }
    _dump_json(doc, os.path.join(cfg.out_dir, args.report_out))
    table = bt.format_report_table(reports)
    table_path = os.path.join(cfg.out_dir, args.table_out)
    with open(table_path, "w", encoding="utf-8") as fh:
        fh.write(table + "\n")
    for t, msg in reports[0].skipped:
        print(f"warning: step {t} skipped: {msg}", file=sys.stderr)
    print(table)
    return EXIT_OK


_SWEEP_STATE = {}


def _sweep_init(returns, assets, cfg_dict, caps, labels):
    _SWEEP_STATE.update(returns=returns, assets=assets, cfg=cfg_dict,
                        caps=caps, labels=labels)


def _sweep_task(task):
    param, value, start = task
    cfg = resolve_config(_SWEEP_STATE["cfg"], {param: value})
    window_returns = _SWEEP_STATE["returns"][start:start + cfg.window]
    try:
        model = cdcv.fit_cdcv(window_returns, _SWEEP_STATE["assets"],
                              seed=cfg.seed, window_start=start,
                              fixed_labels=_SWEEP_STATE["labels"],
                              market_caps=_SWEEP_STATE["caps"],
                              **cfg.fit_kwargs())
        diags = cdcv.conditioning_diagnostics(model, window_returns)
        summary = diags[2].summary
    except (InputError, NumericalError, np.linalg.LinAlgError) as exc:
        return value, start, None, f"{type(exc).__name__}: {exc}"
    return value, start, summary, None


def cmd_sweep(cfg, args):
    if args.param not in ("b", "upsilon"):
        raise InputError("sweep axis must be b or upsilon")
    try:
        values = [int(v) if args.param == "b" else float(v)
                  for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"bad sweep values {args.values!r}: {exc}") from exc
    if not values:
        raise InputError("no sweep values given")
    panel, caps, labels = _common_fit_inputs(cfg)
    t_max = panel.n_periods - cfg.window
    if t_max < 0:
        raise InputError("panel shorter than one window")
    starts = sorted(set(np.linspace(0, t_max, num=min(args.windows, t_max + 1),
                                    dtype=int).tolist()))
    tasks = [(args.param, v, s) for v in values for s in starts]

    n_jobs = cfg.n_jobs or min(os.cpu_count() or 1, len(tasks))
    init_args = (panel.returns, panel.assets, cfg.to_dict(), caps, labels)
    if n_jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs, initializer=_sweep_init,
                                 initargs=init_args) as pool:
            results = list(pool.map(_sweep_task, tasks))
    else:
        _sweep_init(*init_args)
        results = [_sweep_task(t) for t in tasks]

    keys = sorted(cdcv.summarize_rhos(np.asarray([0.0, 0.1])).keys())
    rows = []
    failures = []
    for value in values:
        summaries = []
        for v, s, summary, err in results:
            if v != value:
                continue
            if err is not None:
                failures.append((value, s, err))
                continue
            summaries.append(summary)
        if not summaries:
            raise NumericalError(f"every window failed for {args.param}={value}")
        averaged = {k: float(np.mean([s[k] for s in summaries])) for k in keys}
        rows.append([value, len(summaries)] + [averaged[k] for k in keys])
    for value, s, err in failures:
        print(f"warning: {args.param}={value} window {s} skipped: {err}",
              file=sys.stderr)

    out = os.path.join(cfg.out_dir, args.out)
    _write_csv(out, [args.param, "n_windows"] + keys, rows)
    _dump_json({
        "schema_version": SCHEMA_VERSION,
        "kind": "sweep",
        "config": cfg.to_dict(),
        "param": args.param,
        "values": values,
        "window_starts": [int(s) for s in starts],
        "summary_csv": args.out,
    }, out + ".meta.json")
    return EXIT_OK


def cmd_diagnostics(cfg, args):
    with open(args.model, encoding="utf-8") as fh:
        model = cdcv.model_from_dict(json.load(fh))
    if cfg.data is None:
        raise InputError("--data is required")
    panel = load_panel(cfg.data)
    window_len = model.u_market.shape[0]
    window = panel.window(model.window_start, window_len)
    diags = cdcv.conditioning_diagnostics(model, window.returns)
    _dump_json({
        "schema_version": SCHEMA_VERSION,
        "kind": "conditioning_diagnostics",
        "config": cfg.to_dict(),
        "stages": [d.to_dict() for d in diags],
        "parameter_count": cdcv.parameter_count(model),
        "reached_stop": model.partition.reached_stop,
    }, os.path.join(cfg.out_dir, args.out))
    return EXIT_OK


def _add_config_flags(p):
    p.add_argument("--config", help="JSON config file (flags override it)")
    p.add_argument("--data")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--window", type=int)
    p.add_argument("--window-start", dest="window_start", type=int)
    p.add_argument("--metric", choices=clustering.METRICS)
    p.add_argument("--linkage", choices=clustering.CRITERIA)
    p.add_argument("--a", type=int)
    p.add_argument("--b", type=int)
    p.add_argument("--index-rule", dest="index_rule", choices=indexing.RULES)
    p.add_argument("--upsilon", type=float)
    p.add_argument("--market-source", dest="market_source",
                   choices=indexing.MARKET_SOURCES)
    p.add_argument("--seed", type=int)
    p.add_argument("--families", help="comma list from "
                   + ",".join(bicop.PARAMETRIC_FAMILIES))
    p.add_argument("--alphas", help="comma list, e.g. 95,99")
    p.add_argument("--n-sims", dest="n_sims", type=int)
    p.add_argument("--mode", choices=bt.MODES)
    p.add_argument("--n-jobs", dest="n_jobs", type=int)
    p.add_argument("--severity", type=float)
    p.add_argument("--market-caps", dest="market_caps")
    p.add_argument("--labels")


def _overrides_from_args(args):
    keys = ("data", "out_dir", "window", "window_start", "metric", "linkage",
            "a", "b", "index_rule", "upsilon", "market_source", "seed",
            "n_sims", "mode", "n_jobs", "severity", "market_caps", "labels")
    ov = {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}
    if getattr(args, "families", None):
        ov["families"] = [f.strip() for f in args.families.split(",") if f.strip()]
    if getattr(args, "alphas", None):
        ov["alphas"] = [float(x) for x in args.alphas.split(",") if x.strip()]
    return ov


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cdcvine",
        description="Cluster-derived canonical vine copula modelling")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic factor panel CSV")
    _add_config_flags(p)
    p.add_argument("--out", default="panel.csv")
    p.add_argument("--n-assets", dest="n_assets", type=int, default=12)
    p.add_argument("--n-sectors", dest="n_sectors", type=int, default=3)
    p.add_argument("--periods", type=int, default=1000)
    p.add_argument("--market-vol", dest="market_vol", type=float, default=0.010)
    p.add_argument("--sector-vol", dest="sector_vol", type=float, default=0.010)
    p.add_argument("--idio-vol", dest="idio_vol", type=float, default=0.006)
    p.add_argument("--market-beta", dest="market_beta", type=float, default=1.0)
    p.add_argument("--sector-beta", dest="sector_beta", type=float, default=1.0)
    p.add_argument("--shock-df", dest="shock_df", type=float, default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="fit one CDCV model on a learning window")
    _add_config_flags(p)
    p.add_argument("--model-out", dest="model_out", default="model.json")
    p.add_argument("--diagnostics-out", dest="diagnostics_out",
                   default="diagnostics.json")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="simulate returns from a model JSON")
    _add_config_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--out", default="simulations.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("backtest", help="rolling VaR backtest with Kupiec test")
    _add_config_flags(p)
    p.add_argument("--report-out", dest="report_out", default="report.json")
    p.add_argument("--table-out", dest="table_out", default="report.txt")
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("sweep", help="sweep b or upsilon, averaging diagnostics")
    _add_config_flags(p)
    p.add_argument("--param", required=True, choices=("b", "upsilon"))
    p.add_argument("--values", required=True)
    p.add_argument("--windows", type=int, default=50)
    p.add_argument("--out", default="sweep.csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("diagnostics", help="conditioning diagnostics for a model")
    _add_config_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out", default="diagnostics.json")
    p.set_defaults(func=cmd_diagnostics)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_doc = load_config_file(args.config) if args.config else None
        cfg = resolve_config(file_doc, _overrides_from_args(args))
        return args.func(cfg, args)
    except InputError as exc:
        _emit_error(exc, "input_error")
        return EXIT_INPUT
    except (NumericalError, np.linalg.LinAlgError) as exc:
        _emit_error(exc, "numerical_error")
        return EXIT_NUMERICAL


def _emit_error(exc, kind):
    doc = {"schema_version": SCHEMA_VERSION,
           "error": {"type": kind, "class": type(exc).__name__,
                     "message": str(exc)}}
    print(json.dumps(doc, sort_keys=True), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
