"""Bandwidth choice for the sparsity difference quotient.

Koenker and Machado's tau-dependent bandwidth has the n^(-1/3) rate; it is
inflated by n^(1/6) to the n^(-1/6) rate the mode estimator needs, and
evaluated at a preliminary mode level found with a pilot bandwidth.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import norm

from .config import ModeConfig
from .dataset import Dataset, as_point
from .errors import DomainError
from .mode import modes_from_process
from .qr import QuantileProcess, solve_path


@dataclass(frozen=True)
class BandwidthPlan:
    pilot: float
    final: float
    tau_prelim: float
    alpha: float = 0.05
    diagnostics: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["diagnostics"] = list(self.diagnostics)
        return d


def km_bandwidth(tau, n: int, alpha: float = 0.05):
    """Koenker-Machado bandwidth h(tau) for sample size ``n``.

    Vectorised over ``tau``.
    """
    tau = np.asarray(tau, dtype=float)
    if np.any((tau <= 0) | (tau >= 1)):
        raise DomainError("tau must lie in (0, 1)", parameter="tau", module="bandwidth")
    if n < 2:
        raise DomainError("n must be at least 2", parameter="n", module="bandwidth")
    if not (0.0 < alpha < 1.0):
        raise DomainError("alpha must lie in (0, 1)", parameter="alpha", module="bandwidth")
    z = norm.ppf(1.0 - alpha / 2.0)
    q = norm.ppf(tau)
    h = n ** (-1.0 / 3.0) * z ** (2.0 / 3.0) * (1.5 * norm.pdf(q) / (2.0 * q**2 + 1.0)) ** (1.0 / 3.0)
    return float(h) if h.ndim == 0 else h


def rate_adjusted(tau, n: int, alpha: float = 0.05):
    """n^(1/6) * h_KM(tau), the n^(-1/6)-rate bandwidth."""
    return n ** (1.0 / 6.0) * km_bandwidth(tau, n, alpha)


def bandwidth_cap(config: ModeConfig) -> float:
    return (config.tau_max - config.tau_min) / 2.0 - config.grid_step


def select_bandwidths(proc: QuantileProcess, points, n: int, config: ModeConfig,
                      pilot: float | None = None):
    """Per-point final bandwidths; returns (final, tau_prelim, pilot_used).

    ``pilot`` overrides the pilot bandwidth (subsamples reuse the full-sample
    pilot); the final rule is always evaluated at sample size ``n``.
    """
    cap = bandwidth_cap(config)
    if pilot is None:
        pilot = rate_adjusted(0.5, n, config.alpha)
    pilot = min(float(pilot), cap)
    prelim, _, _, _ = modes_from_process(proc, points, pilot, config.epsilon, config.objective)
    final = np.minimum(rate_adjusted(prelim, n, config.alpha), cap)
    return final, prelim, pilot


def select_bandwidth(data: Dataset, x, config: ModeConfig | None = None,
                     proc: QuantileProcess | None = None, pilot: float | None = None) -> BandwidthPlan:
    """Pilot and final bandwidth at one design point.

    Both are capped at half the grid range minus one grid step; hitting the
    cap is reported in ``diagnostics``.
    """
    config = config or ModeConfig()
    x = as_point(x)
    if proc is None:
        proc = solve_path(data, config.grid(), keep_fits=False)
    cap = bandwidth_cap(config)
    raw_pilot = rate_adjusted(0.5, data.n, config.alpha) if pilot is None else float(pilot)
    final, prelim, used = select_bandwidths(proc, x[None, :], data.n, config, pilot=raw_pilot)
    diags = []
    if raw_pilot > cap:
        diags.append(f"pilot bandwidth {raw_pilot:.4g} capped at {cap:.4g}")
    raw_final = rate_adjusted(float(prelim[0]), data.n, config.alpha)
    if raw_final > cap:
        diags.append(f"final bandwidth {raw_final:.4g} capped at {cap:.4g}")
    return BandwidthPlan(
        pilot=float(used), final=float(final[0]), tau_prelim=float(prelim[0]),
        alpha=config.alpha, diagnostics=tuple(diags),
    )
