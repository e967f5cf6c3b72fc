"""Acceptance criteria, each run at its stated size and tolerance.

Every test appends one PASS/FAIL line to the session summary (and prints it,
visible with ``-s``) before asserting.
"""

import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from modalreg import chernoff
from modalreg.dataset import Dataset
from modalreg.qr import solve_qr
from modalreg.simlab import (DgpSpec, conformal_experiment, coverage_experiment, rmse_experiment,
                             sample_dgp)

from conftest import ACCEPTANCE_LINES
from oracles import brute_force_qr, random_instance

pytestmark = pytest.mark.slow

# tail constants of Chernoff's density (Groeneboom 1989), with a1 the first zero of Ai
AIRY_A1 = -2.338107410459767
AIRY_PRIME_A1 = 0.7012108227206906
LAMBDA = 4 ** (1 / 3) / AIRY_PRIME_A1
KAPPA = 2 ** (1 / 3) * abs(AIRY_A1)


def record(k, passed, detail):
    line = f"criterion {k}: {'PASS' if passed else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def test_criterion_1_chernoff_quantile(tmp_path, monkeypatch):
    monkeypatch.setenv("MODALREG_CACHE_DIR", str(tmp_path))
    t0 = time.perf_counter()
    table = chernoff.build_table(n_draws=200_000, T=2.5, delta=1e-3, seed=0)
    elapsed = time.perf_counter() - t0
    q = chernoff.chernoff_quantile(table, 0.975)
    ok = 0.988 <= q <= 1.008 and elapsed < 120
    assert record(1, ok, f"q(0.975)={q:.4f} in [0.988, 1.008], runtime {elapsed:.1f}s < 120s")


def test_criterion_2_qr_oracle():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst_rel, foc_fail = 0.0, 0
    for _ in range(200):
        n, d = int(rng.integers(3, 11)), int(rng.integers(1, 3))
        X, y = random_instance(rng, n, d)
        tau = float(rng.uniform(0.05, 0.95))
        data = Dataset(y, X, intercept=True)
        fit = solve_qr(data, tau)
        best, _ = brute_force_qr(X, y, tau)
        worst_rel = max(worst_rel, abs(fit.objective - best) / max(abs(best), 1e-300))
        foc_fail += fit.foc_norm(data) > fit.foc_bound(data) + 1e-9
    elapsed = time.perf_counter() - t0
    ok = worst_rel <= 1e-8 and foc_fail == 0 and elapsed < 60
    assert record(2, ok, f"max relative objective gap {worst_rel:.2e} <= 1e-8, "
                         f"FOC violations {foc_fail}, runtime {elapsed:.1f}s < 60s")


def test_criterion_3_consistency():
    t0 = time.perf_counter()
    med_rmse, med_abs = {}, {}
    for n in (500, 1000, 2000):
        rep = rmse_experiment(DgpSpec("case2", n), "proposed", reps=100, eval_points=500, seed=0,
                              points=[[1.0, 0.5]])
        med_rmse[n] = rep.summary[0]["median_rmse"]
        med_abs[n] = rep.summary[0]["median_abs_error"][0]
    elapsed = time.perf_counter() - t0
    ok = (med_abs[2000] < med_abs[500] and med_rmse[500] > med_rmse[1000] > med_rmse[2000]
          and elapsed < 1200)
    assert record(3, ok, "median |m_hat - m| at x2=0.5: "
                         + ", ".join(f"n={n}: {v:.4f}" for n, v in med_abs.items())
                         + "; median RMSE: " + ", ".join(f"n={n}: {v:.4f}" for n, v in med_rmse.items())
                         + f"; runtime {elapsed:.0f}s")


def test_criterion_4_analytic_coverage(default_table):
    rep = coverage_experiment(DgpSpec("case2", 2000), [[1.0, 0.25]], "analytic", levels=(0.95,),
                              reps=200, seed=0, v_method="kernel", table=default_table)
    row = rep.summary[0]
    cov, med = row["coverage"], row["median_length"]
    ok = 0.88 <= cov <= 0.99 and 0.09 <= med <= 0.18
    assert record(4, ok, f"coverage {cov:.3f} in [0.88, 0.99], median length {med:.4f} in "
                         f"[0.09, 0.18], failed reps {rep.n_failed}")


def test_criterion_5_subsample_coverage():
    rep = coverage_experiment(DgpSpec("case2", 2000), [[1.0, 0.25]], "subsample", levels=(0.95,),
                              reps=100, seed=0, ell_frac=0.2, B=250)
    row = rep.summary[0]
    cov, med = row["coverage"], row["median_length"]
    ok = cov >= 0.90 and 0.116 / 1.5 <= med <= 0.116 * 1.5
    assert record(5, ok, f"coverage {cov:.3f} >= 0.90, median length {med:.4f} in "
                         f"[{0.116 / 1.5:.4f}, {0.116 * 1.5:.4f}]")


def test_criterion_6_conformal():
    data = sample_dgp(DgpSpec("case2", 5000, seed=0)).data
    rep = conformal_experiment(data, (0.95, 0.8), alpha=0.05, reps=100, seed=0)
    cov = rep.summary[0]["coverage"]
    ok = abs(cov - 0.95) <= 0.02
    assert record(6, ok, f"mean coverage {cov:.4f} in [0.93, 0.97]")


def test_criterion_7_gumbel():
    small = chernoff.gumbel_convergence_check(2000, 50, LAMBDA, KAPPA, seed=0)
    large = chernoff.gumbel_convergence_check(2000, 1000, LAMBDA, KAPPA, seed=1)
    ok = large.ks_distance < small.ks_distance
    assert record(7, ok, f"KS distance L=50: {small.ks_distance:.4f} > L=1000: "
                         f"{large.ks_distance:.4f} (lambda={LAMBDA:.4f}, kappa={KAPPA:.4f})")


def test_criterion_8_property_suites():
    root = Path(__file__).resolve().parent
    env = dict(os.environ)
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-m", "property_suite",
                           "-p", "no:cacheprovider", str(root)],
                          capture_output=True, text=True, cwd=root.parent, env=env)
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    ok = proc.returncode == 0
    assert record(8, ok, f"property suite (equivariance, tie rule, edge quotient, cubic v, "
                         f"seed determinism): {tail}"), proc.stdout[-3000:]
