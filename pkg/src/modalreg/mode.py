"""Sparsity-function estimation and grid minimisation for the conditional mode.

The sparsity s_x(tau) = dQ_x/dtau is estimated by difference quotients of the
fitted quantile curve tau -> x'beta(tau); its minimiser tau_hat gives the mode
estimate x'beta(tau_hat). All evaluations happen on the grid of the quantile
process: tau +/- h is snapped to the nearest grid point and the denominator is
the distance actually spanned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ModeConfig
from .dataset import Dataset, as_point
from .errors import BandwidthError, CoverageError, DomainError
from .qr import QuantileProcess, solve_path

_GRID_TOL = 1e-10


@dataclass(frozen=True)
class SparsityCurve:
    taus: np.ndarray
    values: np.ndarray
    bandwidth: float
    epsilon: float
    tau_min: float
    tau_max: float


@dataclass(frozen=True)
class ModeEstimate:
    tau_hat: float
    mode: float
    sparsity_at_min: float
    bandwidth: float
    design_point: np.ndarray

    def to_dict(self) -> dict:
        return {
            "tau_hat": self.tau_hat,
            "mode": self.mode,
            "sparsity": self.sparsity_at_min,
            "bandwidth": self.bandwidth,
            "x": [float(v) for v in self.design_point],
        }


def _snap(taus: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Nearest grid index for each target; exact ties go to the lower point."""
    j = np.clip(np.searchsorted(taus, targets), 1, taus.size - 1)
    lower_closer = (targets - taus[j - 1]) <= (taus[j] - targets)
    return np.where(lower_closer, j - 1, j)


def evaluation_indices(taus: np.ndarray, epsilon: float) -> np.ndarray:
    """Grid indices of the levels in [epsilon, 1 - epsilon]."""
    if not (0.0 < epsilon < 0.5):
        raise DomainError("epsilon must lie in (0, 1/2)", parameter="epsilon",
            module="mode_estimator")
    if taus[0] > epsilon + _GRID_TOL or taus[-1] < 1.0 - epsilon - _GRID_TOL:
        raise CoverageError(
            f"grid [{taus[0]}, {taus[-1]}] does not cover [{epsilon}, {1 - epsilon}]",
            parameter="epsilon",
        )
    idx = np.flatnonzero((taus >= epsilon - _GRID_TOL) & (taus <= 1.0 - epsilon + _GRID_TOL))
    if idx.size == 0:
        raise CoverageError("no grid points inside [epsilon, 1 - epsilon]", parameter="epsilon")
    return idx


def _check_bandwidth(taus, h):
    h = np.atleast_1d(np.asarray(h, dtype=float))
    half = (taus[-1] - taus[0]) / 2.0
    if np.any(~(h > 0)):
        raise BandwidthError("bandwidth must be positive", parameter="bandwidth")
    if np.any(h >= half):
        raise BandwidthError(
            f"bandwidth {h.max():.4g} is not below half the grid range {half:.4g}",
            parameter="bandwidth",
        )
    return h


def _uniform_step(taus):
    steps = np.diff(taus)
    if not np.allclose(steps, steps[0], rtol=1e-8, atol=1e-12):
        raise DomainError("higher-order stencils need an equally spaced grid", parameter="taus",
            module="mode_estimator")
    return float(steps[0])


def step_multiple(h, step):
    """Bandwidth in whole grid steps (nearest, halves rounded down)."""
    k = np.ceil(np.asarray(h, dtype=float) / step - 0.5 - 1e-9).astype(int)
    return np.maximum(k, 1)


def centered_quotients(Q: np.ndarray, taus: np.ndarray, h, idx: np.ndarray) -> np.ndarray:
    """Edge-adjusted difference quotients of rows of ``Q`` at grid indices ``idx``.

    ``Q`` has shape (m, G) and ``h`` is a scalar or one bandwidth per row.
    Offsets are min(h, tau_max - tau) upwards and min(h, tau - tau_min)
    downwards, each snapped to the grid.
    """
    Q = np.atleast_2d(Q)
    m = Q.shape[0]
    h = np.broadcast_to(_check_bandwidth(taus, h), (m,))[:, None]
    t = taus[idx][None, :]
    up = _snap(taus, (t + np.minimum(h, taus[-1] - t)).ravel()).reshape(m, -1)
    dn = _snap(taus, (t - np.minimum(h, t - taus[0])).ravel()).reshape(m, -1)
    span = taus[up] - taus[dn]
    if np.any(span <= 0):
        raise BandwidthError("bandwidth is below half a grid step", parameter="bandwidth")
    rows = np.arange(m)[:, None]
    return (Q[rows, up] - Q[rows, dn]) / span


def fivepoint_quotients(Q: np.ndarray, taus: np.ndarray, h, idx: np.ndarray) -> np.ndarray:
    """Fourth-order rule [2/3 (Q(t+h) - Q(t-h)) - 1/12 (Q(t+2h) - Q(t-2h))] / h.

    Where t +/- 2h leaves the grid the edge-adjusted centered quotient is used
    instead, so accuracy drops to first order at those levels.
    """
    Q = np.atleast_2d(Q)
    m, G = Q.shape
    step = _uniform_step(taus)
    hv = np.broadcast_to(_check_bandwidth(taus, h), (m,))
    k = step_multiple(hv, step)[:, None]
    i = idx[None, :]
    rows = np.arange(m)[:, None]
    fits = (i - 2 * k >= 0) & (i + 2 * k <= G - 1)
    ip1, im1 = np.clip(i + k, 0, G - 1), np.clip(i - k, 0, G - 1)
    ip2, im2 = np.clip(i + 2 * k, 0, G - 1), np.clip(i - 2 * k, 0, G - 1)
    he = k * step
    five = (
        2.0 / 3.0 * (Q[rows, ip1] - Q[rows, im1]) - (Q[rows, ip2] - Q[rows, im2]) / 12.0
    ) / he
    if np.all(fits):
        return five
    return np.where(fits, five, centered_quotients(Q, taus, hv, idx))


def _curve_values(Q, taus, h, idx, objective):
    if objective == "centered":
        return centered_quotients(Q, taus, h, idx)
    if objective == "fivepoint":
        return fivepoint_quotients(Q, taus, h, idx)
    raise DomainError(f"unknown objective {objective!r}", parameter="objective",
        module="mode_estimator")


def sparsity_curve(proc: QuantileProcess, x, h: float, epsilon: float = 0.1,
                   objective: str = "centered") -> SparsityCurve:
    x = as_point(x)
    idx = evaluation_indices(proc.taus, epsilon)
    vals = _curve_values(proc.quantile_curve(x)[None, :], proc.taus, h, idx, objective)[0]
    return SparsityCurve(proc.taus[idx], vals, float(h), epsilon, proc.tau_min, proc.tau_max)


def sparsity_curve_alt(proc: QuantileProcess, x, h: float, epsilon: float = 0.1) -> SparsityCurve:
    return sparsity_curve(proc, x, h, epsilon, objective="fivepoint")


def minimize_sparsity(curve: SparsityCurve) -> tuple[float, float]:
    """Grid argmin of the curve, ties to the smallest tau."""
    j = int(np.argmin(curve.values))
    return float(curve.taus[j]), float(curve.values[j])


def modes_from_process(proc: QuantileProcess, points: np.ndarray, h, epsilon: float,
                       objective: str = "centered"):
    """Vectorised pipeline for many design points sharing one quantile process.

    Returns (tau_hat, mode, sparsity_at_min, grid_index), each of length m.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    idx = evaluation_indices(proc.taus, epsilon)
    Q = proc.quantile_curve(points)
    S = _curve_values(Q, proc.taus, h, idx, objective)
    j = np.argmin(S, axis=1)
    rows = np.arange(points.shape[0])
    gi = idx[j]
    return proc.taus[gi], Q[rows, gi], S[rows, j], gi


def estimate_mode(data: Dataset, x, config: ModeConfig | None = None,
                  proc: QuantileProcess | None = None, plan=None) -> ModeEstimate:
    """Mode estimate at one design point.

    A precomputed quantile process (on ``config.grid()``) and bandwidth plan may
    be passed in to avoid recomputation.
    """
    from .bandwidth import select_bandwidth

    config = config or ModeConfig()
    x = as_point(x)
    if x.shape[0] != data.d:
        raise DomainError(f"design point has length {x.shape[0]}, data has d={data.d}", parameter="x",
            module="mode_estimator")
    if proc is None:
        proc = solve_path(data, config.grid(), keep_fits=False)
    if config.bandwidth is not None:
        h = config.bandwidth
    else:
        plan = plan or select_bandwidth(data, x, config, proc=proc)
        h = plan.final
    curve = sparsity_curve(proc, x, h, config.epsilon, config.objective)
    tau_hat, s_min = minimize_sparsity(curve)
    j = int(np.flatnonzero(proc.taus == tau_hat)[0])
    return ModeEstimate(
        tau_hat=tau_hat, mode=float(x @ proc.betas[j]), sparsity_at_min=s_min,
        bandwidth=float(h), design_point=x,
    )


def estimate_modes(data: Dataset, points, config: ModeConfig | None = None,
                   proc: QuantileProcess | None = None, pilot: float | None = None):
    """Mode estimates at many design points with per-point bandwidths.

    Returns a dict of arrays: tau_hat, mode, sparsity, bandwidth, tau_prelim.
    """
    from .bandwidth import select_bandwidths

    config = config or ModeConfig()
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if proc is None:
        proc = solve_path(data, config.grid(), keep_fits=False)
    if config.bandwidth is not None:
        h = np.full(points.shape[0], float(config.bandwidth))
        prelim = np.full(points.shape[0], np.nan)
    else:
        h, prelim, _ = select_bandwidths(proc, points, data.n, config, pilot=pilot)
    tau_hat, mode, s, _ = modes_from_process(proc, points, h, config.epsilon, config.objective)
    return {"tau_hat": tau_hat, "mode": mode, "sparsity": s, "bandwidth": h, "tau_prelim": prelim}
