"""Simulation designs with closed-form modal functions, and Monte Carlo harnesses.

Designs
-------
case1   Y = 1 + X2 - 3 X3 + X4 + X2 nu, X2, X3 ~ U(0, 1), X4 ~ N(0, 1),
        nu ~ Gamma(shape 3, scale 0.5) (mode 1), so m(x) = 1 + 2 x2 - 3 x3 + x4.
case2   Y = U^3/3 - X2 (U - 1)^2 with U, X2 ~ U(0, 1); the conditional quantile
        function tau^3/3 - x2 (tau - 1)^2 has its flattest point at tau = x2,
        so m(x) = -2 x2^3/3 + 2 x2^2 - x2.
intercept_only
        Y drawn from a user sampler; the true mode is supplied by the user.

Every replicate r draws its randomness from ``SeedSequence(seed, spawn_key=(r, k))``
with a fixed stream number k per purpose,
so serial and threaded runs give identical reports.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from . import chernoff
from .config import ModeConfig
from .dataset import Dataset
from .errors import DomainError, ExperimentError, ModalRegError
from .inference import analytic_ci, subsample_ci, subsample_modes, SubsampleDistribution
from .lmr import lmr_em_fit
from .mode import estimate_modes
from .qr import solve_path

KINDS = ("case1", "case2", "intercept_only")
MAX_FAILED_FRACTION = 0.1


@dataclass(frozen=True)
class DgpSpec:
    kind: str
    n: int
    seed: int = 0
    sampler: Callable | None = None
    true_mode: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown design {self.kind!r}", parameter="kind", module="simlab")
        if self.n < 10:
            raise DomainError("n must be at least 10", parameter="n", module="simlab")
        if self.kind == "intercept_only" and (self.sampler is None or self.true_mode is None):
            raise DomainError("intercept_only needs a sampler and its true mode",
                              parameter="sampler", module="simlab")

    @property
    def d(self) -> int:
        return {"case1": 4, "case2": 2, "intercept_only": 1}[self.kind]

    def sample_points(self, rng: np.random.Generator, m: int) -> np.ndarray:
        """Design points drawn from the regressor distribution, intercept first."""
        if self.kind == "case1":
            x2, x3 = rng.uniform(size=m), rng.uniform(size=m)
            x4 = rng.standard_normal(m)
            return np.column_stack([np.ones(m), x2, x3, x4])
        if self.kind == "case2":
            return np.column_stack([np.ones(m), rng.uniform(size=m)])
        return np.ones((m, 1))

    def truth(self, points) -> np.ndarray:
        P = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "case1":
            return case1_mode(P)
        if self.kind == "case2":
            return case2_mode(P[:, 1])
        return np.full(P.shape[0], float(self.true_mode))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n": self.n, "seed": self.seed, "true_mode": self.true_mode}


def case1_mode(points) -> np.ndarray:
    P = np.atleast_2d(np.asarray(points, dtype=float))
    return 1.0 + 2.0 * P[:, 1] - 3.0 * P[:, 2] + P[:, 3]


def case2_mode(x2) -> np.ndarray:
    x2 = np.asarray(x2, dtype=float)
    return -2.0 * x2**3 / 3.0 + 2.0 * x2**2 - x2


def case2_quantile(tau, x2):
    return tau**3 / 3.0 - x2 * (tau - 1.0) ** 2


@dataclass(frozen=True)
class SimulatedData:
    data: Dataset
    spec: DgpSpec

    def truth(self, points) -> np.ndarray:
        return self.spec.truth(points)


def sample_dgp(spec: DgpSpec) -> SimulatedData:
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    X = spec.sample_points(rng, n)
    if spec.kind == "case1":
        nu = rng.gamma(3.0, 0.5, size=n)
        y = 1.0 + X[:, 1] - 3.0 * X[:, 2] + X[:, 3] + X[:, 1] * nu
        names = ["x2", "x3", "x4"]
    elif spec.kind == "case2":
        u = rng.uniform(size=n)
        y = u**3 / 3.0 - X[:, 1] * (u - 1.0) ** 2
        names = ["x2"]
    else:
        y = np.asarray(spec.sampler(rng, n), dtype=float)
        names = []
    data = Dataset.from_arrays(y, X[:, 1:], add_intercept=True, column_names=names)
    return SimulatedData(data, spec)


def rep_seed(seed: int, r: int, stream: int = 0) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(r, stream)).generate_state(1)[0])


@dataclass
class ExperimentReport:
    """Per-replicate records, summary table rows and the configuration used."""

    kind: str
    config: dict
    per_rep: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    n_failed: int = 0
    failures: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path=None) -> str:
        text = json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        if self.summary:
            cols = list(self.summary[0])
            w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
            w.writeheader()
            for row in self.summary:
                w.writerow({k: _fmt(row[k]) for k in cols})
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def _fmt(v):
    return f"{v:.6g}" if isinstance(v, float) else v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _run_reps(fn, reps: int, threads: int):
    """Run fn(r) for every replicate; failures are collected, not raised."""
    def safe(r):
        try:
            return fn(r), None
        except (ModalRegError, np.linalg.LinAlgError) as exc:
            return None, f"rep {r}: {type(exc).__name__}: {exc}"

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            out = list(ex.map(safe, range(reps)))
    else:
        out = [safe(r) for r in range(reps)]
    results = [(r, res) for r, (res, _) in enumerate(out) if res is not None]
    failures = [msg for _, msg in out if msg is not None]
    if len(failures) > MAX_FAILED_FRACTION * reps:
        raise ExperimentError(
            f"{len(failures)} of {reps} replicates failed; first: {failures[0]}", parameter="reps",
        )
    return results, failures


def _check_reps(reps):
    if reps < 1:
        raise DomainError("reps must be >= 1", parameter="reps", module="simlab")


# RMSE ------------------------------------------------------------------------

def rmse_experiment(spec: DgpSpec, method: str = "proposed", reps: int = 100,
                    eval_points: int = 1000, seed: int = 0, config: ModeConfig | None = None,
                    points=None, h_lmr: float | None = None, threads: int = 1) -> ExperimentReport:
    """RMSE of the fitted modal function over a fresh regressor sample, per replicate.

    ``points`` optionally lists fixed design points whose absolute errors are
    recorded as well.
    """
    _check_reps(reps)
    if method not in ("proposed", "lmr"):
        raise DomainError(f"unknown method {method!r}", parameter="method", module="simlab")
    config = config or ModeConfig()
    fixed = None if points is None else np.atleast_2d(np.asarray(points, dtype=float))

    def one(r):
        sim = sample_dgp(replace(spec, seed=rep_seed(seed, r)))
        xs = spec.sample_points(np.random.default_rng(rep_seed(seed, r, 1)), eval_points)
        allpts = xs if fixed is None else np.vstack([xs, fixed])
        if method == "proposed":
            est = estimate_modes(sim.data, allpts, config)["mode"]
        else:
            est = lmr_em_fit(sim.data, h_lmr).predict(allpts)
        err = est - spec.truth(allpts)
        rec = {"rep": r, "rmse": float(np.sqrt(np.mean(err[:eval_points] ** 2)))}
        if fixed is not None:
            rec["abs_error"] = np.abs(err[eval_points:]).tolist()
        return rec

    results, failures = _run_reps(one, reps, threads)
    per_rep = [res for _, res in results]
    rm = np.array([p["rmse"] for p in per_rep])
    row = {"design": spec.kind, "n": spec.n, "method": method, "reps": reps,
           "n_failed": len(failures), "mean_rmse": float(rm.mean()),
           "median_rmse": float(np.median(rm)), "sd_rmse": float(rm.std(ddof=1)) if rm.size > 1 else 0.0}
    if fixed is not None:
        ae = np.array([p["abs_error"] for p in per_rep])
        row["median_abs_error"] = np.median(ae, axis=0).tolist()
    cfg = {"spec": spec.to_dict(), "method": method, "reps": reps, "eval_points": eval_points,
           "seed": seed, "mode_config": config.to_dict(), "points": None if fixed is None else fixed.tolist(),
           "h_lmr": h_lmr}
    return ExperimentReport("rmse", cfg, per_rep, [row], len(failures), failures)


# interval coverage -------------------------------------------------------------

def coverage_experiment(spec: DgpSpec, points, method: str = "analytic", levels=(0.95,),
                        reps: int = 100, seed: int = 0, config: ModeConfig | None = None,
                        ell_frac: float = 0.2, B: int = 250, v_method: str = "kernel",
                        table: chernoff.ChernoffTable | None = None,
                        threads: int = 1) -> ExperimentReport:
    """Coverage and length of pointwise intervals against the true modal function."""
    _check_reps(reps)
    if method not in ("analytic", "subsample"):
        raise DomainError(f"unknown method {method!r}", parameter="method", module="simlab")
    config = config or ModeConfig()
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    truth = spec.truth(pts)
    levels = tuple(float(a) for a in levels)
    if method == "analytic":
        table = table or chernoff.default_table()
    ell = int(round(ell_frac * spec.n))

    def one(r):
        sim = sample_dgp(replace(spec, seed=rep_seed(seed, r)))
        data = sim.data
        proc = solve_path(data, config.grid(), keep_fits=False)
        rows = []
        if method == "analytic":
            for j, x in enumerate(pts):
                for lev in levels:
                    ci = analytic_ci(data, x, config, 1.0 - lev, v_method, table, proc=proc)
                    rows.append((j, lev, ci.lower, ci.upper))
        else:
            est = estimate_modes(data, pts, config, proc=proc)
            modes, hs, failed = subsample_modes(data, pts, ell, B, config, rep_seed(seed, r, 2))
            for j in range(pts.shape[0]):
                vals = (ell * hs[:, j] ** 2) ** (1.0 / 3.0) * (modes[:, j] - est["mode"][j])
                dist = SubsampleDistribution(vals, ell, B, 0, failed, hs[:, j])
                for lev in levels:
                    ci = subsample_ci(dist, est["mode"][j], est["bandwidth"][j], data.n, 1.0 - lev)
                    rows.append((j, lev, ci.lower, ci.upper))
        return [{"rep": r, "point": j, "level": lev, "lower": lo, "upper": hi,
                 "covers": bool(lo <= truth[j] <= hi)} for j, lev, lo, hi in rows]

    results, failures = _run_reps(one, reps, threads)
    per_rep = [rec for _, res in results for rec in res]
    summary = []
    for j, x in enumerate(pts):
        for lev in levels:
            recs = [p for p in per_rep if p["point"] == j and p["level"] == lev]
            lengths = np.array([p["upper"] - p["lower"] for p in recs])
            row = {"x": " ".join(f"{v:g}" for v in x), "n": spec.n}
            if method == "subsample":
                row["ell"] = ell
            row.update({"level": lev, "avg_length": float(lengths.mean()),
                        "median_length": float(np.median(lengths)),
                        "coverage": float(np.mean([p["covers"] for p in recs])),
                        "reps_used": len(recs)})
            summary.append(row)
    cfg = {"spec": spec.to_dict(), "points": pts.tolist(), "method": method, "levels": list(levels),
           "reps": reps, "seed": seed, "mode_config": config.to_dict(), "v_method": v_method,
           "ell": ell if method == "subsample" else None, "B": B if method == "subsample" else None,
           "chernoff_table": table.key if table is not None else None}
    return ExperimentReport("coverage", cfg, per_rep, summary, len(failures), failures)


# split conformal ---------------------------------------------------------------

def conformal_residual_quantiles(residuals, alpha: float) -> tuple[float, float]:
    """Order-statistic quantiles r_(k_lo), r_(k_hi) of calibration residuals.

    k_lo = floor((m + 1) alpha/2) and k_hi = ceil((m + 1)(1 - alpha/2)), clamped
    to 1..m. With exchangeable data each tail then misses with probability at
    most alpha/2.
    """
    r = np.sort(np.asarray(residuals, dtype=float))
    m = r.size
    k_lo = min(max(int(math.floor((m + 1) * alpha / 2.0)), 1), m)
    k_hi = min(max(int(math.ceil((m + 1) * (1.0 - alpha / 2.0))), 1), m)
    return float(r[k_lo - 1]), float(r[k_hi - 1])


def split_sizes(n: int, split_ratios=(0.95, 0.8)) -> tuple[int, int, int]:
    """Sizes of the fitting, calibration and test parts."""
    outer, inner = split_ratios
    if not (0 < outer < 1 and 0 < inner < 1):
        raise DomainError("split ratios must lie in (0, 1)", parameter="split_ratios", module="simlab")
    n12 = int(round(outer * n))
    n1 = int(round(inner * n12))
    return n1, n12 - n1, n - n12


def conformal_experiment(data: Dataset, split_ratios=(0.95, 0.8), alpha: float = 0.05,
                         reps: int = 250, seed: int = 0, method: str = "proposed",
                         config: ModeConfig | None = None, h_lmr: float | None = None,
                         threads: int = 1) -> ExperimentReport:
    """Split-conformal bands around the fitted modal function.

    Each replicate permutes the rows, fits on the first part, takes residual
    quantiles on the second and records coverage and band length on the third.
    """
    _check_reps(reps)
    if not (0.0 < alpha < 1.0):
        raise DomainError("alpha must lie in (0, 1)", parameter="alpha", module="simlab")
    if method not in ("proposed", "lmr"):
        raise DomainError(f"unknown method {method!r}", parameter="method", module="simlab")
    config = config or ModeConfig()
    n1, n2, n3 = split_sizes(data.n, split_ratios)
    if n1 < data.d + 1 or n2 < 1 or n3 < 1:
        raise DomainError(f"split sizes {n1}/{n2}/{n3} infeasible for n={data.n}, d={data.d}",
                          parameter="split_ratios", module="simlab")

    def one(r):
        perm = np.random.default_rng(rep_seed(seed, r)).permutation(data.n)
        i1, i2, i3 = perm[:n1], perm[n1:n1 + n2], perm[n1 + n2:]
        fit = data.subset(np.sort(i1))
        pts = data.X[np.concatenate([i2, i3])]
        if method == "proposed":
            pred = estimate_modes(fit, pts, config)["mode"]
        else:
            pred = lmr_em_fit(fit, h_lmr).predict(pts)
        lo, hi = conformal_residual_quantiles(data.y[i2] - pred[:n2], alpha)
        resid3 = data.y[i3] - pred[n2:]
        return {"rep": r, "coverage": float(np.mean((resid3 >= lo) & (resid3 <= hi))),
                "length": hi - lo, "xi_lower": lo, "xi_upper": hi}

    results, failures = _run_reps(one, reps, threads)
    per_rep = [res for _, res in results]
    cov = np.array([p["coverage"] for p in per_rep])
    length = np.array([p["length"] for p in per_rep])
    row = {"method": method, "n": data.n, "alpha": alpha, "avg_length": float(length.mean()),
           "median_length": float(np.median(length)), "coverage": float(cov.mean()),
           "reps_used": len(per_rep)}
    cfg = {"n": data.n, "split_ratios": list(split_ratios), "split_sizes": [n1, n2, n3],
           "alpha": alpha, "reps": reps, "seed": seed, "method": method,
           "mode_config": config.to_dict(), "h_lmr": h_lmr}
    return ExperimentReport("conformal", cfg, per_rep, [row], len(failures), failures)
