"""Command-line interface.

Subcommands: ``select``, ``forecast``, ``simulate``, ``theory`` and
``metrics``. Exit status is 0 on success, 1 on a usage error and 2 on a
data or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import metrics as M
from . import theory
from .errors import BmtError
from .io import RunConfig, Schema, dumps, load_table, provenance, write_metric_tables
from .selector import SelectionConfig
from .simulation import METHODS, DgpConfig, config_to_dict, expand_grid, run_grid
from .workflow import DesignOptions, build_design, forecast_evaluate, select_report

log = logging.getLogger("bmtselect")

TABLE_METRICS = ("mcc", "f1", "tdr", "fdr", "tpr", "fpr", "model_size", "rmse", "rmsfe")
SELECTOR_KEYS = (
    "p", "c", "delta", "delta_star", "max_stages", "shrink_n_per_stage", "robust_se", "add_constant",
)
DESIGN_KEYS = ("add_trend", "lag_target", "lags_of_candidates", "standardize", "add_first_pc")
DGP_KEYS = (
    "T", "n", "k", "alpha", "r2_target", "rho", "vif", "pi", "beta", "burn_in", "holdout", "seed",
)


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _csv_list(text: str) -> list:
    return [s.strip() for s in text.split(",") if s.strip()]


def _int_list(text: str) -> list:
    try:
        return [int(s) for s in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list:
    try:
        return [float(s) for s in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _selector_flags(p):
    g = p.add_argument_group("selection")
    g.add_argument("--p", type=float)
    g.add_argument("--c", type=float)
    g.add_argument("--delta", type=float)
    g.add_argument("--delta-star", dest="delta_star", type=float)
    g.add_argument("--max-stages", dest="max_stages", type=int)
    g.add_argument("--no-shrink", dest="shrink_n_per_stage", action="store_const", const=False)
    g.add_argument("--robust", dest="robust_se", action="store_const", const=True)
    g.add_argument("--no-constant", dest="add_constant", action="store_const", const=False)
    g.add_argument("--methods", type=_csv_list)
    g.add_argument("--config", help="JSON file of parameters; flags override it")
    g.add_argument("--seed", type=int)


def _data_flags(p):
    p.add_argument("--data", help="input CSV with a header row")
    p.add_argument("--target")
    p.add_argument("--controls", type=_csv_list)
    p.add_argument("--candidates", type=_csv_list)
    p.add_argument("--add-trend", dest="add_trend", action="store_const", const=True)
    p.add_argument("--lag-target", dest="lag_target", type=int)
    p.add_argument("--lags-of-candidates", dest="lags_of_candidates", type=int)
    p.add_argument("--standardize", action="store_const", const=True)
    p.add_argument("--add-first-pc", dest="add_first_pc", action="store_const", const=True)
    p.add_argument("--out", help="output file (default: stdout)")


def build_parser() -> Parser:
    parser = Parser(prog="bmtselect", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=Parser)
    sub.required = True

    p = sub.add_parser("select", help="run selection methods on a CSV dataset")
    _data_flags(p)
    _selector_flags(p)

    p = sub.add_parser("forecast", help="pseudo out-of-sample forecast evaluation")
    _data_flags(p)
    _selector_flags(p)
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    p.add_argument("--train-length", dest="train_length", type=int)
    p.add_argument("--horizons", type=_int_list)

    p = sub.add_parser("simulate", help="Monte Carlo grid of the factor design")
    p.add_argument("--grid", required=True, help="JSON grid file; list values are axes")
    p.add_argument("--reps", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output directory for metric tables and report.json")
    _selector_flags(p)

    p = sub.add_parser("theory", help="population-level condition checks")
    th = p.add_subparsers(dest="check", parser_class=Parser)
    th.required = True
    q = th.add_parser("wedge")
    q.add_argument("--alpha", type=float, required=True)
    q = th.add_parser("thresholds")
    q.add_argument("--betas", type=_float_list, required=True)
    q = th.add_parser("noncentrality")
    q.add_argument("--beta", type=float, required=True)
    q.add_argument("--sigma11", type=float, default=1.0)
    q.add_argument("--sigma-u2", dest="sigma_u2", type=float, default=1.0)
    q.add_argument("--rho", type=float, required=True)
    q.add_argument("--T", type=int, required=True)
    q = th.add_parser("irrepresentable", help="k orthogonal signals, one proxy correlated rho with each")
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--rho", type=float, required=True)
    q = th.add_parser("dominance", help="one-factor equicorrelation design")
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--lambda-s", dest="lambda_s", type=float, required=True)
    q.add_argument("--lambda-p", dest="lambda_p", type=float, required=True)
    q.add_argument("--betas", type=_float_list)
    q.add_argument("--var-signal", dest="var_signal", type=float, default=1.0)
    q.add_argument("--var-proxy", dest="var_proxy", type=float, default=1.0)

    p = sub.add_parser("metrics", help="classification scores from 1-based index sets")
    p.add_argument("--selected", type=_int_list, required=True)
    p.add_argument("--true", dest="true_set", type=_int_list, required=True)
    p.add_argument("--n", type=int, required=True)
    return parser


def _merge(args, command: str, keys) -> RunConfig:
    params = {}
    if getattr(args, "config", None):
        params.update(RunConfig.from_file(args.config, command).params)
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            params[k] = v
    if params.get("seed") is None and os.environ.get("BMTSELECT_SEED"):
        params["seed"] = int(os.environ["BMTSELECT_SEED"])
    return RunConfig(command, params)


def _selector(params) -> SelectionConfig:
    return SelectionConfig(**{k: params[k] for k in SELECTOR_KEYS if k in params})


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dataset_command(args, command: str) -> int:
    keys = (
        "data", "target", "controls", "candidates", "methods", *SELECTOR_KEYS, *DESIGN_KEYS,
        "seed", "train_fraction", "train_length", "horizons",
    )
    run = _merge(args, command, keys)
    prm = run.params
    if not prm.get("data") or not prm.get("target"):
        raise UsageError(f"{command}: --data and --target are required (flag or config)")
    methods = prm.get("methods") or ["BMT"]
    schema = Schema(
        prm["target"], tuple(prm.get("controls") or ()),
        tuple(prm["candidates"]) if prm.get("candidates") else None,
    )
    ds, report = load_table(prm["data"], schema)
    if report.rows_dropped:
        print(f"dropped {report.rows_dropped} of {report.rows_read} rows with missing values",
              file=sys.stderr)
    opts = DesignOptions(**{k: prm[k] for k in DESIGN_KEYS if k in prm})
    design = build_design(ds, opts)
    config = _selector(prm)
    seed = prm.get("seed")
    if command == "select":
        bundle = select_report(design.dataset, methods, config, run, seed)
    else:
        bundle = forecast_evaluate(
            design.dataset, methods, prm.get("horizons") or [1], config,
            train_fraction=prm.get("train_fraction", 0.8),
            train_length=prm.get("train_length"), run=run, seed=seed,
        )
    _emit(bundle.to_json(), args.out)
    return 0


def _grid_from_params(prm: dict) -> list:
    base, axes = {}, {}
    for k in DGP_KEYS:
        if k not in prm:
            continue
        v = prm[k]
        if k == "beta":
            if v and isinstance(v[0], list):
                axes[k] = [tuple(b) for b in v]
            else:
                base[k] = tuple(v) if v is not None else None
        elif isinstance(v, list):
            axes[k] = v
        else:
            base[k] = v
    return expand_grid(base, axes)


def _simulate(args) -> int:
    run = RunConfig.from_file(args.grid, "simulate")
    prm = dict(run.params)
    for k in ("reps", "workers", "seed", "methods", *SELECTOR_KEYS):
        v = getattr(args, k, None)
        if v is not None:
            prm[k] = v
    run = RunConfig("simulate", prm)
    grid = _grid_from_params(prm)
    reps = int(prm.get("reps", 100))
    workers = int(prm.get("workers", 1))
    methods = tuple(prm.get("methods") or ("BMT", "OCMT", "LassoBIC", "AdaptiveLasso"))
    result = run_grid(grid, reps, _selector(prm), workers, methods)
    rows = [(d.index, d.config, d.reports) for d in result.designs]
    # worker count does not affect results, so it is left out of the provenance hash
    hashed = RunConfig("simulate", {k: v for k, v in prm.items() if k != "workers"})
    bundle = {
        "provenance": provenance(hashed, prm.get("seed")),
        "methods": list(methods),
        "reps": reps,
        "designs": [
            {"index": d.index, "config": config_to_dict(d.config),
             "reports": {m: r.as_dict() for m, r in d.reports.items()}}
            for d in result.designs
        ],
    }
    if args.out:
        write_metric_tables(args.out, rows, TABLE_METRICS, methods)
        (Path(args.out) / "report.json").write_text(dumps(bundle), encoding="utf-8")
    else:
        print("design," + ",".join(f"{m}_mcc" for m in methods))
        for d in result.designs:
            print(f"{d.index}," + ",".join(f"{d.reports[m].mcc:.6f}" for m in methods))
    return 0


def _theory(args) -> int:
    if args.check == "wedge":
        w = theory.wedge_interval(args.alpha)
        print(f"wedge interval: ({w.lower:.4f}, {w.upper:.4f}) nonempty={w.nonempty}")
    elif args.check == "thresholds":
        t = theory.theorem7_thresholds(args.betas)
        print("thresholds: " + ", ".join(f"{v:.4f}" for v in t))
        print(f"consistency region: rho < {t.min():.4f}")
    elif args.check == "noncentrality":
        r = theory.stage1_noncentrality(args.beta, args.sigma11, args.sigma_u2, args.rho, args.T)
        print(f"lambda_signal: {r.lambda_signal:.6f}")
        print(f"lambda_proxy: {r.lambda_proxy:.6f}")
        print(f"gap: {r.gap:.6f} (closed form {r.gap_closed_form:.6f})")
    elif args.check == "irrepresentable":
        k = args.k
        Sigma = np.eye(k + 1)
        Sigma[k, :k] = Sigma[:k, k] = args.rho
        r = theory.irrepresentable_check(Sigma, range(k), np.ones(k))
        print(f"value: {r.value:.6f} holds={r.holds}")
    else:
        spec = theory.one_factor_spec(
            args.k, args.lambda_s, args.lambda_p, args.betas,
            var_signal=args.var_signal, var_proxy=args.var_proxy,
        )
        r = theory.dominance_condition(spec)
        print(f"lhs: {r.lhs:.6f}")
        print(f"rhs: {r.rhs:.6f}")
        print(f"holds: {r.holds}")
    return 0


def _metrics(args) -> int:
    sel = [i - 1 for i in args.selected]
    tru = [i - 1 for i in args.true_set]
    c = M.confusion(sel, tru, args.n)
    print(f"TP={c.tp} FP={c.fp} TN={c.tn} FN={c.fn}")
    for name in ("mcc", "f1", "tdr", "fdr", "tpr", "fpr"):
        print(f"{name.upper()}: {getattr(M, name)(c):.4f}")
    return 0


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        if args.command in ("select", "forecast"):
            return _dataset_command(args, args.command)
        if args.command == "simulate":
            return _simulate(args)
        if args.command == "theory":
            return _theory(args)
        return _metrics(args)
    except UsageError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (BmtError, OSError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
