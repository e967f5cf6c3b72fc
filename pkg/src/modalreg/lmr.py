"""Linear modal regression baseline: maximise sum_i phi_h(y_i - x_i'g) by EM.

Each iteration reweights observations by their Gaussian kernel value at the
current residual and refits by weighted least squares. The kernel sum never
decreases, but only a local maximum is guaranteed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import DomainError, ModalRegError


class LmrError(ModalRegError, RuntimeError):
    module = "simlab"


@dataclass(frozen=True)
class LmrFit:
    gamma: np.ndarray
    objective: np.ndarray
    n_iter: int
    converged: bool
    bandwidth: float

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.gamma


def kernel_objective(data: Dataset, gamma, h: float) -> float:
    r = (data.y - data.X @ gamma) / h
    return float(np.mean(np.exp(-0.5 * r * r)) / (h * np.sqrt(2.0 * np.pi)))


def least_squares(data: Dataset) -> np.ndarray:
    return np.linalg.lstsq(data.X, data.y, rcond=None)[0]


def default_lmr_bandwidth(data: Dataset) -> float:
    """Silverman-type rule on least-squares residuals (stand-in bandwidth)."""
    r = data.y - data.X @ least_squares(data)
    iqr = np.subtract(*np.percentile(r, [75, 25]))
    scale = min(np.std(r, ddof=1), iqr / 1.34) if iqr > 0 else np.std(r, ddof=1)
    return float(0.9 * scale * data.n ** (-0.2))


def lmr_em_fit(data: Dataset, h: float | None = None, init=None, max_iter: int = 500,
               tol: float = 1e-8) -> LmrFit:
    h = default_lmr_bandwidth(data) if h is None else float(h)
    if not h > 0:
        raise DomainError("bandwidth must be positive", parameter="h_lmr", module="simlab")
    X, y = data.X, data.y
    gamma = least_squares(data) if init is None else np.array(init, dtype=float)
    trace = [kernel_objective(data, gamma, h)]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        r = (y - X @ gamma) / h
        logw = -0.5 * r * r
        w = np.exp(logw - logw.max())
        if not np.all(np.isfinite(w)):
            raise LmrError("non-finite EM weights", parameter="init")
        w /= w.sum()
        sw = np.sqrt(w)
        new = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)[0]
        step = np.linalg.norm(new - gamma)
        gamma = new
        trace.append(kernel_objective(data, gamma, h))
        if step < tol:
            converged = True
            break
    return LmrFit(gamma, np.array(trace), it, converged, h)
