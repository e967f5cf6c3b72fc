"""Confidence intervals for the conditional mode.

Three constructions are provided:

* analytic: m_hat +/- s_hat (sigma_hat / v_hat)^(2/3) (n h^2)^(-1/3) q_{1-alpha/2},
  with q a Chernoff quantile and the nuisance constants estimated by plug-in;
* subsampling: quantiles of (l h_l^2)^(1/3) (m_hat_l - m_hat_n) over random
  size-l subsets, rescaled to the full-sample rate;
* simultaneous over finitely many design points, by subsampling the maximum
  of the rescaled absolute deviations.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from . import chernoff
from .bandwidth import rate_adjusted, select_bandwidths
from .config import ModeConfig
from .dataset import Dataset, as_point
from .errors import DomainError, InferenceError, RangeError, SingularMatrixError, SolverError
from .mode import estimate_mode, modes_from_process, step_multiple
from .qr import QuantileProcess, solve_path

SINGULAR_RTOL = 1e-12
MAX_FAILED_FRACTION = 0.2


class DegenerateEstimateWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PowellJ:
    matrix: np.ndarray
    n_within: int
    bandwidth: float
    warning: str | None = None


@dataclass(frozen=True)
class NuisanceEstimates:
    sigma2: float
    v: float
    v_method: str
    sparsity: float
    Sigma_hat: np.ndarray
    J_hat: np.ndarray
    h_J: float
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "sigma2": self.sigma2, "v": self.v, "v_method": self.v_method,
            "sparsity": self.sparsity, "Sigma_hat": self.Sigma_hat.tolist(),
            "J_hat": self.J_hat.tolist(), "h_J": self.h_J, "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class IntervalResult:
    lower: float
    upper: float
    level: float
    method: str
    center: float
    rate_factor: float
    metadata: dict = field(default_factory=dict)

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_dict(self) -> dict:
        return {
            "lower": self.lower, "upper": self.upper, "level": self.level,
            "method": self.method, "center": self.center,
            "rate_factor": self.rate_factor, "metadata": self.metadata,
        }


@dataclass(frozen=True)
class SubsampleDistribution:
    values: np.ndarray
    ell: int
    B: int
    seed: int
    n_failed: int = 0
    bandwidths: np.ndarray | None = None


# nuisance parameters ---------------------------------------------------------

def sigma_hat_matrix(data: Dataset) -> np.ndarray:
    """Sample second-moment matrix n^-1 sum X_i X_i'."""
    X = data.X
    S = X.T @ X / data.n
    return (S + S.T) / 2.0


def powell_J(data: Dataset, beta, h_J: float) -> PowellJ:
    """Powell's uniform-kernel estimate (2nh)^-1 sum 1{|r_i| <= h} X_i X_i'."""
    if not h_J > 0:
        raise DomainError("h_J must be positive", parameter="h_J", module="inference")
    r = data.y - data.X @ np.asarray(beta, dtype=float)
    inside = np.abs(r) <= h_J
    Xi = data.X[inside]
    J = Xi.T @ Xi / (2.0 * data.n * h_J)
    msg = None
    if not inside.any():
        msg = f"no residuals within h_J={h_J:.4g}; J_hat is zero"
    return PowellJ((J + J.T) / 2.0, int(inside.sum()), float(h_J), msg)


def sigma2_hat(x, J_hat: np.ndarray, Sigma_hat: np.ndarray) -> float:
    """(1/2) x' J^-1 Sigma J^-1 x."""
    x = as_point(x)
    s = np.linalg.svd(J_hat, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= SINGULAR_RTOL * s[0]:
        raise SingularMatrixError(
            f"J_hat is numerically singular (smallest singular value {s[-1]:.3g})",
            parameter="h_J",
        )
    a = np.linalg.solve(J_hat, x)
    return float(0.5 * a @ Sigma_hat @ a)


def _stencil(proc, tau_hat, h, reach):
    steps = np.diff(proc.taus)
    if not np.allclose(steps, steps[0], rtol=1e-8, atol=1e-12):
        raise DomainError("difference estimators of v need an equally spaced grid",
                          parameter="taus", module="inference")
    step = float(steps[0])
    k = int(step_multiple(h, step))
    i = int(np.argmin(np.abs(proc.taus - tau_hat)))
    if i - reach * k < 0 or i + reach * k > proc.taus.size - 1:
        raise RangeError(
            f"tau_hat +/- {reach}h leaves the grid [{proc.tau_min}, {proc.tau_max}]; "
            "use the kernel estimator (v_method='kernel') instead",
            parameter="h",
        )
    return i, k, k * step


def v_hat_delta3(proc: QuantileProcess, x, tau_hat: float, h: float) -> float:
    """(1/2) Delta_h^3 Q_x(tau_hat), Delta_h g(t) = (g(t + h) - g(t - h)) / (2h)."""
    i, k, he = _stencil(proc, tau_hat, h, 3)
    g = proc.quantile_curve(as_point(x))[i - 3 * k: i + 3 * k + 1]
    for _ in range(3):
        g = (g[2 * k:] - g[:-2 * k]) / (2.0 * he)
    return float(0.5 * g[0])


def v_hat_fivepoint(proc: QuantileProcess, x, tau_hat: float, h: float) -> float:
    """Half the five-point third derivative of Q_x at tau_hat."""
    i, k, he = _stencil(proc, tau_hat, h, 2)
    Q = proc.quantile_curve(as_point(x))
    third = (Q[i + 2 * k] - Q[i - 2 * k] - 2.0 * (Q[i + k] - Q[i - k])) / (2.0 * he**3)
    return float(0.5 * third)


def default_kernel_bandwidths(data: Dataset, continuous) -> tuple[float, np.ndarray]:
    """b_Y = n^(-1/9) sd(Y) and b_X = n^(-1/5) sd(X_j) for continuous columns."""
    n = data.n
    bY = n ** (-1.0 / 9.0) * float(np.std(data.y, ddof=1))
    bX = n ** (-1.0 / 5.0) * np.std(data.X[:, continuous], axis=0, ddof=1)
    return bY, np.atleast_1d(bX)


def continuous_columns(data: Dataset) -> np.ndarray:
    """Non-constant columns; constant ones (the intercept) are matched exactly."""
    X = data.X
    return np.flatnonzero(np.any(X != X[0], axis=0))


def v_hat_kernel(data: Dataset, x, mode: float, sparsity: float, b_Y: float | None = None,
                 b_X=None, continuous=None) -> float:
    """-f''(mode | x) s^4 / 2 with f'' from a kernel ratio estimator.

    Gaussian kernel in y, product Epanechnikov kernel in the continuous
    regressors, exact matching on the remaining (discrete) ones.
    """
    x = as_point(x)
    cont = continuous_columns(data) if continuous is None else np.asarray(continuous, dtype=int)
    disc = np.setdiff1d(np.arange(data.d), cont)
    bY0, bX0 = default_kernel_bandwidths(data, cont)
    bY = bY0 if b_Y is None else float(b_Y)
    bX = bX0 if b_X is None else np.broadcast_to(np.asarray(b_X, dtype=float), (cont.size,))
    if not bY > 0 or np.any(~(bX > 0)):
        raise DomainError("kernel bandwidths must be positive", parameter="b_X", module="inference")
    u = (x[cont] - data.X[:, cont]) / bX
    wX = np.prod(np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0), axis=1)
    if disc.size:
        wX = wX * np.all(data.X[:, disc] == x[disc], axis=1)
    denom = wX.sum()
    if denom <= 0:
        raise InferenceError(
            "no observations near x in the regressor kernel; increase b_X", parameter="b_X"
        )
    uy = (mode - data.y) / bY
    k2 = (uy * uy - 1.0) * norm.pdf(uy)
    f2 = float(np.sum(k2 * wX) / (bY**3 * denom))
    v = -f2 * sparsity**4 / 2.0
    if abs(f2) < 1e-8:
        warnings.warn(f"second-derivative estimate is ~0 (f''={f2:.3g}); v is degenerate",
                      DegenerateEstimateWarning, stacklevel=2)
    return v


def estimate_nuisance(data: Dataset, x, proc: QuantileProcess, estimate, v_method: str = "kernel",
                      h_J: float | None = None, kernel_opts: dict | None = None) -> NuisanceEstimates:
    """Plug-in sigma^2 and v at one design point.

    ``h_J`` is a half-width in response units. By default it is s_hat * h,
    the response-scale image of the tau-window of half-width h around
    tau_hat, so the interval is equivariant under rescaling of y.
    """
    x = as_point(x)
    h = estimate.bandwidth
    hJ = estimate.sparsity_at_min * h if h_J is None else float(h_J)
    j = int(np.argmin(np.abs(proc.taus - estimate.tau_hat)))
    Sigma = sigma_hat_matrix(data)
    pj = powell_J(data, proc.betas[j], hJ)
    notes = [pj.warning] if pj.warning else []
    sigma2 = sigma2_hat(x, pj.matrix, Sigma)
    if v_method == "kernel":
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", DegenerateEstimateWarning)
            v = v_hat_kernel(data, x, estimate.mode, estimate.sparsity_at_min, **(kernel_opts or {}))
        notes += [str(w.message) for w in caught]
    elif v_method == "delta3":
        v = v_hat_delta3(proc, x, estimate.tau_hat, h)
    elif v_method == "fivepoint":
        v = v_hat_fivepoint(proc, x, estimate.tau_hat, h)
    else:
        raise DomainError(f"unknown v_method {v_method!r}", parameter="v_method", module="inference")
    return NuisanceEstimates(sigma2, float(v), v_method, estimate.sparsity_at_min, Sigma,
                             pj.matrix, hJ, tuple(notes))


# analytic interval -------------------------------------------------------------

def rate_factor(n: int, h: float) -> float:
    return (n * h * h) ** (-1.0 / 3.0)


def analytic_ci(data: Dataset, x, config: ModeConfig | None = None, alpha: float = 0.05,
                v_method: str = "kernel", table: chernoff.ChernoffTable | None = None,
                proc: QuantileProcess | None = None, h_J: float | None = None,
                kernel_opts: dict | None = None) -> IntervalResult:
    """Plug-in interval symmetric about the mode estimate."""
    if not (0.0 < alpha < 1.0):
        raise DomainError("alpha must lie in (0, 1)", parameter="alpha", module="inference")
    config = config or ModeConfig()
    x = as_point(x)
    if proc is None:
        proc = solve_path(data, config.grid(), keep_fits=False)
    est = estimate_mode(data, x, config, proc=proc)
    nuis = estimate_nuisance(data, x, proc, est, v_method, h_J, kernel_opts)
    if not nuis.v > 0:
        raise InferenceError(
            f"estimated v = {nuis.v:.4g} is not positive; use the subsampling interval",
            parameter="v_method",
        )
    table = table or chernoff.default_table()
    q = chernoff.chernoff_quantile(table, 1.0 - alpha / 2.0)
    rf = rate_factor(data.n, est.bandwidth)
    half = est.sparsity_at_min * (math.sqrt(nuis.sigma2) / nuis.v) ** (2.0 / 3.0) * rf * q
    meta = {"estimate": est.to_dict(), "nuisance": nuis.to_dict(), "chernoff_q": q,
            "chernoff_table": table.key}
    return IntervalResult(est.mode - half, est.mode + half, 1.0 - alpha, "analytic",
                          est.mode, rf, meta)


# subsampling -----------------------------------------------------------------

def empirical_quantile(values, p: float) -> float:
    """inf{t : F_B(t) >= p} for the empirical distribution of ``values``."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise InferenceError("empty subsample distribution", parameter="values")
    k = max(int(math.ceil(p * v.size - 1e-9)), 1)
    return float(v[min(k, v.size) - 1])


def _subset_indices(n, ell, seed, b):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
    return np.sort(rng.choice(n, size=ell, replace=False))


def subsample_modes(data: Dataset, points, ell: int, B: int, config: ModeConfig | None = None,
                    seed: int = 0, pilot: float | None = None, h_ell=None, threads: int = 1):
    """Re-estimate modes at ``points`` on B random size-``ell`` subsets.

    Subset ``b`` is drawn by the generator ``SeedSequence(seed, spawn_key=(b,))``
    so results do not depend on ``threads``. Bandwidths follow the selection
    rule on each subset with the full-sample ``pilot``, unless ``h_ell`` fixes
    them. Returns (modes (B', m), bandwidths (B', m), n_failed).
    """
    config = config or ModeConfig()
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = data.n
    if not (data.d + 1 <= ell < n):
        raise DomainError(f"need d + 1 <= ell < n, got ell={ell}, n={n}", parameter="ell",
                          module="inference")
    if B < 1:
        raise DomainError("B must be >= 1", parameter="B", module="inference")
    grid = config.grid()
    if pilot is None:
        pilot = rate_adjusted(0.5, n, config.alpha)
    if config.bandwidth is not None and h_ell is None:
        h_ell = config.bandwidth

    def one(b):
        sub = data.subset(_subset_indices(n, ell, seed, b))
        try:
            proc = solve_path(sub, grid, keep_fits=False)
        except SolverError:
            return None
        if h_ell is None:
            h, _, _ = select_bandwidths(proc, points, ell, config, pilot=pilot)
        else:
            h = np.broadcast_to(np.asarray(h_ell, dtype=float), (points.shape[0],)).copy()
        _, mode, _, _ = modes_from_process(proc, points, h, config.epsilon, config.objective)
        return mode, h

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(one, range(B)))
    else:
        results = [one(b) for b in range(B)]
    ok = [r for r in results if r is not None]
    failed = B - len(ok)
    if failed > MAX_FAILED_FRACTION * B:
        raise InferenceError(f"{failed} of {B} subsets could not be estimated", parameter="ell")
    modes = np.array([r[0] for r in ok]).reshape(len(ok), -1)
    hs = np.array([r[1] for r in ok]).reshape(len(ok), -1)
    return modes, hs, failed


def subsample_distribution(data: Dataset, x, ell: int, B: int = 250,
                           config: ModeConfig | None = None, seed: int = 0,
                           m_hat_n: float | None = None, h_ell=None,
                           threads: int = 1) -> SubsampleDistribution:
    """Draws of (l h_l^2)^(1/3) (m_hat_l(x) - m_hat_n(x))."""
    config = config or ModeConfig()
    x = as_point(x)
    if m_hat_n is None:
        m_hat_n = estimate_mode(data, x, config).mode
    modes, hs, failed = subsample_modes(data, x[None, :], ell, B, config, seed,
                                        h_ell=h_ell, threads=threads)
    vals = (ell * hs[:, 0] ** 2) ** (1.0 / 3.0) * (modes[:, 0] - m_hat_n)
    return SubsampleDistribution(vals, int(ell), int(B), int(seed), failed, hs[:, 0])


def subsample_ci(dist: SubsampleDistribution, m_hat_n: float, h_n: float, n: int,
                 alpha: float = 0.05) -> IntervalResult:
    """[m - q(1 - alpha/2) r, m - q(alpha/2) r] with r = (n h_n^2)^(-1/3)."""
    rf = rate_factor(n, h_n)
    q_hi = empirical_quantile(dist.values, 1.0 - alpha / 2.0)
    q_lo = empirical_quantile(dist.values, alpha / 2.0)
    meta = {"ell": dist.ell, "B": dist.B, "seed": dist.seed, "n_failed": dist.n_failed,
            "q_lower": q_lo, "q_upper": q_hi, "bandwidth": h_n}
    return IntervalResult(m_hat_n - q_hi * rf, m_hat_n - q_lo * rf, 1.0 - alpha, "subsample",
                          m_hat_n, rf, meta)


def subsample_interval(data: Dataset, x, ell: int, B: int = 250, alpha: float = 0.05,
                       config: ModeConfig | None = None, seed: int = 0,
                       threads: int = 1) -> IntervalResult:
    config = config or ModeConfig()
    est = estimate_mode(data, x, config)
    dist = subsample_distribution(data, x, ell, B, config, seed, m_hat_n=est.mode, threads=threads)
    res = subsample_ci(dist, est.mode, est.bandwidth, data.n, alpha)
    res.metadata["estimate"] = est.to_dict()
    return res


def simultaneous_ci(data: Dataset, points, ell: int, B: int = 250, alpha: float = 0.05,
                    seed: int = 0, config: ModeConfig | None = None,
                    shared_h: float | None = None, threads: int = 1) -> list[IntervalResult]:
    """Intervals holding jointly over finitely many design points.

    The critical value nu is the empirical (1 - alpha)-quantile over subsets of
    max_j (l h_lj^2)^(1/3) |m_hat_l(x_j) - m_hat_n(x_j)|; point j gets
    m_hat_n(x_j) +/- nu (n h_j^2)^(-1/3). With ``shared_h`` one bandwidth is
    used everywhere and all half-widths coincide.
    """
    config = config or ModeConfig()
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] == 0:
        raise DomainError("no design points", parameter="points", module="inference")
    proc = solve_path(data, config.grid(), keep_fits=False)
    if shared_h is None:
        h_n, _, _ = select_bandwidths(proc, points, data.n, config)
    else:
        h_n = np.full(points.shape[0], float(shared_h))
    _, m_n, _, _ = modes_from_process(proc, points, h_n, config.epsilon, config.objective)
    modes, hs, failed = subsample_modes(data, points, ell, B, config, seed, h_ell=shared_h,
                                        threads=threads)
    stat = np.max((ell * hs**2) ** (1.0 / 3.0) * np.abs(modes - m_n), axis=1)
    nu = empirical_quantile(stat, 1.0 - alpha)
    out = []
    for j in range(points.shape[0]):
        rf = rate_factor(data.n, h_n[j])
        meta = {"ell": ell, "B": B, "seed": seed, "n_failed": failed, "nu": nu,
                "bandwidth": float(h_n[j]), "x": points[j].tolist()}
        out.append(IntervalResult(m_n[j] - nu * rf, m_n[j] + nu * rf, 1.0 - alpha,
                                  "simultaneous", float(m_n[j]), rf, meta))
    return out
