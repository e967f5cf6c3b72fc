"""Command-line front end.

    modalreg fit        --input data.csv --response y --x "1,0.5"
    modalreg ci         --input data.csv --response y --x "1,0.5" --method subsample
    modalreg simulate   --design case2 --n 500 --experiment rmse
    modalreg chernoff   --p 0.975
    modalreg conformal  --input data.csv --response y

Results go to stdout (or --output) as JSON; a one-line summary goes to
stderr. Exit status is 0 on success, 1 on a computation error (reported as
JSON naming the module and parameter) and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import chernoff, inference, simlab
from .config import ModeConfig
from .dataset import load_csv
from .errors import ModalRegError
from .mode import estimate_mode
from .bandwidth import select_bandwidth
from .qr import solve_path


def _points(text: str) -> np.ndarray:
    """Design points: comma-separated coordinates, points separated by ';'."""
    try:
        rows = [[float(v) for v in p.split(",")] for p in text.split(";") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse design points {text!r}")
    if not rows or len({len(r) for r in rows}) != 1:
        raise argparse.ArgumentTypeError("design points must share one length")
    return np.array(rows)


def _bandwidth(text: str):
    if text == "auto":
        return None
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("bandwidth must be 'auto' or a number")


def _common(p):
    p.add_argument("--epsilon", type=float, default=0.1, help="trim level (default 0.1)")
    p.add_argument("--tau-min", type=float, default=0.05)
    p.add_argument("--tau-max", type=float, default=0.95)
    p.add_argument("--n-grid", type=int, default=100)
    p.add_argument("--bandwidth", type=_bandwidth, default=None, help="'auto' (default) or a value")
    p.add_argument("--bandwidth-alpha", type=float, default=0.05,
                   help="level inside the bandwidth rule (default 0.05)")
    p.add_argument("--objective", choices=["centered", "fivepoint"], default="centered")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--output", help="write JSON here instead of stdout")


def _data_args(p, required=True):
    p.add_argument("--input", required=required, help="CSV file with a header row")
    p.add_argument("--response", default="y", help="response column (default y)")
    p.add_argument("--no-intercept", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modalreg", description="Conditional mode regression")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="mode estimate at design points")
    _data_args(p)
    p.add_argument("--x", type=_points, required=True, help='e.g. "1,0.5" or "1,0.25;1,0.75"')
    _common(p)

    p = sub.add_parser("ci", help="confidence intervals for the mode")
    _data_args(p)
    p.add_argument("--x", type=_points, required=True)
    p.add_argument("--method", choices=["analytic", "subsample", "simultaneous"], default="analytic")
    p.add_argument("--alpha", type=float, default=0.05, help="1 - confidence level")
    p.add_argument("--v-method", choices=["kernel", "delta3", "fivepoint"], default="kernel")
    p.add_argument("--h-j", type=float, default=None, help="Powell bandwidth in response units")
    p.add_argument("--ell-frac", type=float, default=0.2)
    p.add_argument("--B", type=int, default=250)
    p.add_argument("--shared-h", type=float, default=None,
                   help="common bandwidth for simultaneous intervals")
    _common(p)

    p = sub.add_parser("simulate", help="Monte Carlo experiments")
    p.add_argument("--design", choices=["case1", "case2"], default="case2")
    p.add_argument("--n", type=int, nargs="+", default=[500])
    p.add_argument("--experiment", choices=["rmse", "coverage"], default="rmse")
    p.add_argument("--method", choices=["proposed", "lmr", "analytic", "subsample"], default=None)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--eval-points", type=int, default=1000)
    p.add_argument("--x", type=_points, default=None)
    p.add_argument("--levels", type=float, nargs="+", default=[0.95])
    p.add_argument("--ell-frac", type=float, default=0.2)
    p.add_argument("--B", type=int, default=250)
    p.add_argument("--csv", help="also write the summary table as CSV")
    _common(p)

    p = sub.add_parser("chernoff", help="quantiles of Chernoff's distribution")
    p.add_argument("--p", type=float, nargs="+", default=[0.975])
    p.add_argument("--n-draws", type=int, default=chernoff.DEFAULT_DRAWS)
    p.add_argument("--T", type=float, default=chernoff.DEFAULT_T)
    p.add_argument("--delta", type=float, default=chernoff.DEFAULT_DELTA)
    p.add_argument("--no-cache", action="store_true")
    p.add_argument("--table", help="also write the full quantile table as CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--output")

    p = sub.add_parser("conformal", help="split-conformal prediction bands")
    _data_args(p, required=False)
    p.add_argument("--design", choices=["case1", "case2"], default=None,
                   help="use simulated data instead of --input")
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--method", choices=["proposed", "lmr"], default="proposed")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--reps", type=int, default=250)
    p.add_argument("--split", type=float, nargs=2, default=[0.95, 0.8], metavar=("OUTER", "INNER"))
    p.add_argument("--csv")
    _common(p)
    return parser


def _config(a) -> ModeConfig:
    return ModeConfig(epsilon=a.epsilon, tau_min=a.tau_min, tau_max=a.tau_max, n_grid=a.n_grid,
                      bandwidth=a.bandwidth, alpha=a.bandwidth_alpha, objective=a.objective)


def _echo(a) -> dict:
    out = {}
    for k, v in sorted(vars(a).items()):
        if k == "output":
            continue
        out[k] = v.tolist() if isinstance(v, np.ndarray) else v
    return out


def _load(a):
    return load_csv(a.input, a.response, add_intercept=not a.no_intercept)


def cmd_fit(a):
    data, cfg = _load(a), _config(a)
    proc = solve_path(data, cfg.grid(), keep_fits=False)
    results = []
    for x in a.x:
        plan = None if cfg.bandwidth is not None else select_bandwidth(data, x, cfg, proc=proc)
        est = estimate_mode(data, x, cfg, proc=proc, plan=plan)
        d = est.to_dict()
        d["bandwidth_plan"] = plan.to_dict() if plan else None
        results.append(d)
    summary = "; ".join(f"x=({','.join(f'{v:g}' for v in r['x'])}) mode={r['mode']:.6g} "
                        f"tau_hat={r['tau_hat']:.4g}" for r in results)
    return {"results": results}, summary


def cmd_ci(a):
    data, cfg = _load(a), _config(a)
    ell = int(round(a.ell_frac * data.n))
    if a.method == "simultaneous":
        res = inference.simultaneous_ci(data, a.x, ell, a.B, a.alpha, a.seed, cfg, a.shared_h,
                                        a.threads)
    elif a.method == "subsample":
        res = [inference.subsample_interval(data, x, ell, a.B, a.alpha, cfg, a.seed, a.threads)
               for x in a.x]
    else:
        proc = solve_path(data, cfg.grid(), keep_fits=False)
        table = chernoff.default_table()
        res = [inference.analytic_ci(data, x, cfg, a.alpha, a.v_method, table, proc, a.h_j)
               for x in a.x]
    results = [r.to_dict() for r in res]
    summary = "; ".join(f"{r.method} {r.level:g}: [{r.lower:.6g}, {r.upper:.6g}]" for r in res)
    return {"results": results}, summary


def cmd_simulate(a):
    cfg = _config(a)
    method = a.method or ("proposed" if a.experiment == "rmse" else "analytic")
    reports = []
    for n in a.n:
        spec = simlab.DgpSpec(a.design, n)
        if a.experiment == "rmse":
            if method not in ("proposed", "lmr"):
                raise _Usage("rmse experiments take --method proposed or lmr")
            rep = simlab.rmse_experiment(spec, method, a.reps, a.eval_points, a.seed, cfg,
                                         points=a.x, threads=a.threads)
        else:
            if method not in ("analytic", "subsample"):
                raise _Usage("coverage experiments take --method analytic or subsample")
            if a.x is None:
                raise _Usage("coverage experiments need --x")
            rep = simlab.coverage_experiment(spec, a.x, method, a.levels, a.reps, a.seed, cfg,
                                             a.ell_frac, a.B, threads=a.threads)
        reports.append(rep)
    rows = [row for r in reports for row in r.summary]
    if a.csv:
        simlab.ExperimentReport(a.experiment, {}, summary=rows).to_csv(a.csv)
    out = {"reports": [r.to_dict() for r in reports], "table": rows}
    if a.experiment == "rmse":
        summary = "; ".join(f"n={r['n']} median RMSE={r['median_rmse']:.4g}" for r in rows)
    else:
        summary = "; ".join(f"n={r['n']} x=({r['x']}) level={r['level']:g} coverage={r['coverage']:.3f}"
                            for r in rows)
    return out, summary


def cmd_chernoff(a):
    table = chernoff.build_table(a.n_draws, a.T, a.delta, a.seed, a.threads, use_cache=not a.no_cache)
    if a.table:
        table.to_csv(a.table)
    q = {repr(p): chernoff.chernoff_quantile(table, p) for p in a.p}
    summary = "; ".join(f"q({p})={v:.6f}" for p, v in q.items())
    return {"quantiles": q, "table_key": table.key}, summary


def cmd_conformal(a):
    cfg = _config(a)
    if a.design is not None:
        data = simlab.sample_dgp(simlab.DgpSpec(a.design, a.n, seed=a.seed)).data
    elif a.input:
        data = _load(a)
    else:
        raise _Usage("conformal needs --input or --design")
    rep = simlab.conformal_experiment(data, tuple(a.split), a.alpha, a.reps, a.seed, a.method, cfg,
                                      threads=a.threads)
    if a.csv:
        rep.to_csv(a.csv)
    row = rep.summary[0]
    return rep.to_dict(), (f"coverage={row['coverage']:.4f} avg length={row['avg_length']:.4g} "
                           f"median length={row['median_length']:.4g}")


class _Usage(Exception):
    pass


COMMANDS = {"fit": cmd_fit, "ci": cmd_ci, "simulate": cmd_simulate, "chernoff": cmd_chernoff,
            "conformal": cmd_conformal}


def _dumps(obj) -> str:
    return json.dumps(simlab._jsonable(obj), indent=2, sort_keys=True, allow_nan=False)


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    if getattr(a, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        payload, summary = COMMANDS[a.command](a)
    except _Usage as exc:
        parser.error(str(exc))
    except (ModalRegError, OSError) as exc:
        if isinstance(exc, ModalRegError):
            err = exc.to_dict()
        else:
            err = {"error": type(exc).__name__, "module": "dataset", "parameter": "input",
                   "message": str(exc)}
        print(_dumps(err), file=sys.stderr)
        return 1
    payload = {"command": a.command, "config": _echo(a), **payload}
    text = _dumps(payload) + "\n"
    if a.output:
        with open(a.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"{a.command}: {summary}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
