"""Exact linear quantile regression by a vertex-exchange simplex.

The check-loss problem

    min_b  sum_i rho_tau(y_i - x_i'b),   rho_tau(u) = (tau - 1{u <= 0}) u

is the linear program ``min tau 1'u + (1 - tau) 1'v  s.t.  u - v = y - Xb,
u, v >= 0``. Its vertices are the fits interpolating ``d`` observations (the
basis ``h``), so the primal simplex can be run directly on basis sets: at a
vertex, the 2d edges release one basis observation upwards or downwards; the
steepest descending edge is followed to the minimum of the (convex, piecewise
linear) loss along it, which is where the entering observation is
interpolated. This is the Barrodale-Roberts step, i.e. a primal simplex pivot
that skips the intermediate degenerate vertices along an edge.

Along a tau grid each solve is warm-started from the previous basis, so the
whole quantile process costs a handful of pivots per grid point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
import scipy.linalg

from .dataset import Dataset, as_point, numerical_rank
from .errors import ConvergenceError, DomainError, SolverError

TIE_ATOL = 1e-9

_OK, _MAXITER, _SINGULAR = 0, 1, 2


@numba.njit(cache=True, nogil=True)
def _rho(u, tau):
    return u * (tau - 1.0) if u <= 0.0 else u * tau


@numba.njit(cache=True, nogil=True)
def _simplex(X, y, tau, basis, tie, max_iter):
    """Run pivots from ``basis`` (modified in place) until optimal.

    Returns (beta, iterations, status).
    """
    n, d = X.shape
    in_basis = np.zeros(n, dtype=np.bool_)
    for k in range(d):
        in_basis[basis[k]] = True
    beta = np.zeros(d)
    degenerate_last = False
    Dplus = np.empty(d)
    Dminus = np.empty(d)
    tcand = np.empty(n)
    icand = np.empty(n, dtype=np.int64)
    wcand = np.empty(n)
    for it in range(max_iter + 1):
        Xh = np.empty((d, d))
        yh = np.empty(d)
        for k in range(d):
            Xh[k, :] = X[basis[k], :]
            yh[k] = y[basis[k]]
        if abs(np.linalg.det(Xh)) < 1e-300:
            return beta, it, _SINGULAR
        Xh_inv = np.linalg.inv(Xh)
        beta = Xh_inv @ yh
        r = y - X @ beta
        Z = X @ Xh_inv
        # exact directional derivatives along the 2d edges; for edge
        # (k, s) fitted values move by s * Z[:, k] per unit step
        for k in range(d):
            Dplus[k] = 1.0 - tau
            Dminus[k] = tau
        for i in range(n):
            if in_basis[i]:
                continue
            ri = r[i]
            for k in range(d):
                z = Z[i, k]
                if ri > tie[i]:
                    Dplus[k] -= tau * z
                    Dminus[k] += tau * z
                elif ri < -tie[i]:
                    Dplus[k] -= (tau - 1.0) * z
                    Dminus[k] += (tau - 1.0) * z
                else:
                    Dplus[k] += _rho(-z, tau)
                    Dminus[k] += _rho(z, tau)
        # entering edge: steepest descent, Bland's rule after a degenerate pivot
        best = -1e-12
        kk = -1
        ss = 0.0
        for k in range(d):
            for s in (1.0, -1.0):
                D = Dplus[k] if s > 0 else Dminus[k]
                if degenerate_last:
                    if D < -1e-12:
                        best = D
                        kk = k
                        ss = s
                        break
                elif D < best:
                    best = D
                    kk = k
                    ss = s
            if degenerate_last and kk >= 0:
                break
        if kk < 0:
            return beta, it, _OK
        if it == max_iter:
            return beta, it, _MAXITER
        # line search along the edge: kinks where residuals cross zero
        m = 0
        for i in range(n):
            if in_basis[i]:
                continue
            w = ss * Z[i, kk]
            ri = r[i]
            if abs(ri) <= tie[i] or w == 0.0:
                continue
            t = ri / w
            if t > 0.0:
                tcand[m] = t
                icand[m] = i
                wcand[m] = abs(w)
                m += 1
        order = np.argsort(tcand[:m])
        slope = best
        enter = -1
        tstar = 0.0
        for j in range(m):
            q = order[j]
            slope += wcand[q]
            if slope >= -1e-12:
                enter = icand[q]
                tstar = tcand[q]
                break
        if enter < 0:
            return beta, it, _SINGULAR
        degenerate_last = tstar <= 1e-12
        in_basis[basis[kk]] = False
        basis[kk] = enter
        in_basis[enter] = True
    return beta, max_iter, _MAXITER


@numba.njit(cache=True, nogil=True)
def _path(X, y, taus, basis, tie, max_iter):
    ntau = taus.shape[0]
    d = X.shape[1]
    betas = np.empty((ntau, d))
    bases = np.empty((ntau, d), dtype=np.int64)
    iters = np.empty(ntau, dtype=np.int64)
    for j in range(ntau):
        beta, it, status = _simplex(X, y, taus[j], basis, tie, max_iter)
        betas[j] = beta
        bases[j] = basis
        iters[j] = it
        if status != _OK:
            return betas, bases, iters, j, status
    return betas, bases, iters, ntau, _OK


def check_loss(r, tau: float) -> float:
    r = np.asarray(r, dtype=float)
    return float(np.sum(r * (tau - (r <= 0))))


@dataclass(frozen=True)
class QrFit:
    tau: float
    beta: np.ndarray
    objective: float
    active_set: tuple[int, ...]
    basis: tuple[int, ...] = ()
    iterations: int = 0

    def foc_norm(self, data: Dataset) -> float:
        """Norm of sum_i (tau - 1{y_i <= x_i'beta}) x_i; zero residuals count as <=."""
        r = data.y - data.X @ self.beta
        tie = TIE_ATOL * (1.0 + np.abs(data.y))
        below = (r <= tie).astype(float)
        return float(np.linalg.norm(data.X.T @ (self.tau - below)))

    def foc_bound(self, data: Dataset) -> float:
        return len(self.active_set) * float(np.max(np.linalg.norm(data.X, axis=1)))


@dataclass(frozen=True)
class QuantileProcess:
    """Quantile regression slopes on a strictly increasing tau grid."""

    taus: np.ndarray
    betas: np.ndarray
    fits: tuple[QrFit, ...] = ()

    def __post_init__(self):
        taus = np.array(self.taus, dtype=float).reshape(-1)
        betas = np.array(self.betas, dtype=float)
        if betas.ndim == 1:
            betas = betas.reshape(-1, 1)
        if betas.shape[0] != taus.shape[0]:
            raise SolverError("betas and taus lengths differ", parameter="betas")
        if taus.size == 0 or np.any(np.diff(taus) <= 0):
            raise DomainError("tau grid must be nonempty and strictly increasing", parameter="taus", module="qr_solver")
        taus.setflags(write=False)
        betas.setflags(write=False)
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "betas", betas)

    @property
    def d(self) -> int:
        return self.betas.shape[1]

    @property
    def tau_min(self) -> float:
        return float(self.taus[0])

    @property
    def tau_max(self) -> float:
        return float(self.taus[-1])

    def quantile_curve(self, x) -> np.ndarray:
        """x'beta(tau) on the grid; ``x`` may be (d,) or (m, d) giving (m, ngrid)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise DomainError(f"design point has length {x.shape[-1]}, process has d={self.d}",
                              parameter="x", module="qr_solver")
        return x @ self.betas.T

    def to_csv(self, path) -> None:
        header = "tau," + ",".join(f"beta_{j + 1}" for j in range(self.d))
        np.savetxt(
            path, np.column_stack([self.taus, self.betas]), delimiter=",",
            header=header, comments="", fmt="%.17g",
        )

    @classmethod
    def from_csv(cls, path) -> "QuantileProcess":
        a = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(a[:, 0], a[:, 1:])


def _check_tau(tau):
    if not (0.0 < tau < 1.0):
        raise DomainError(f"tau must lie in (0, 1), got {tau}", parameter="tau", module="qr_solver")


def initial_basis(X: np.ndarray) -> np.ndarray:
    """d linearly independent rows, chosen by column-pivoted QR of X'."""
    n, d = X.shape
    if numerical_rank(X) < d:
        raise SolverError(f"design matrix is rank deficient (d={d})", parameter="X")
    _, _, piv = scipy.linalg.qr(X.T, mode="economic", pivoting=True)
    return np.sort(piv[:d]).astype(np.int64)


def _max_iter(n, d):
    return 50 * (n + d) + 100


def _make_fit(data, tau, beta, basis, iters):
    r = data.y - data.X @ beta
    tie = TIE_ATOL * (1.0 + np.abs(data.y))
    active = tuple(int(i) for i in np.flatnonzero(np.abs(r) <= tie))
    beta = np.array(beta)
    beta.setflags(write=False)
    return QrFit(
        tau=float(tau), beta=beta, objective=check_loss(r, tau), active_set=active,
        basis=tuple(int(i) for i in basis), iterations=int(iters),
    )


def solve_qr(data: Dataset, tau: float, basis=None, max_iter: int | None = None) -> QrFit:
    """Minimise the check loss at a single quantile level."""
    _check_tau(tau)
    proc = solve_path(data, [tau], basis=basis, max_iter=max_iter)
    return proc.fits[0]


def solve_path(data: Dataset, taus, basis=None, max_iter: int | None = None,
               keep_fits: bool = True) -> QuantileProcess:
    """Quantile regression on every grid point, warm-starting each solve.

    ``keep_fits=False`` skips building per-tau metadata (used in resampling
    loops where only the slopes are needed).
    """
    taus = np.asarray(taus, dtype=float).reshape(-1)
    if taus.size == 0 or np.any(np.diff(taus) <= 0):
        raise DomainError("tau grid must be nonempty and strictly increasing", parameter="taus",
                          module="qr_solver")
    for t in (taus[0], taus[-1]):
        _check_tau(t)
    X, y = data.X, data.y
    n, d = X.shape
    b0 = initial_basis(X) if basis is None else np.array(basis, dtype=np.int64)
    tie = TIE_ATOL * (1.0 + np.abs(y))
    cap = _max_iter(n, d) if max_iter is None else int(max_iter)
    betas, bases, iters, done, status = _path(
        np.ascontiguousarray(X), np.ascontiguousarray(y), taus, b0.copy(), tie, cap
    )
    if status != _OK:
        tau = float(taus[done])
        if status == _SINGULAR:
            raise SolverError(f"singular basis encountered at tau={tau}", parameter="X")
        incumbent = _make_fit(data, tau, betas[done], bases[done], iters[done])
        raise ConvergenceError(
            f"iteration cap {cap} exceeded at tau={tau}", incumbent=incumbent, parameter="max_iter"
        )
    fits = ()
    if keep_fits:
        fits = tuple(_make_fit(data, t, betas[j], bases[j], iters[j]) for j, t in enumerate(taus))
    return QuantileProcess(taus, betas, fits)


def nearest_grid_index(taus: np.ndarray, tau: float) -> int:
    """Index of the grid point nearest ``tau``; exact ties go to the lower point."""
    j = int(np.searchsorted(taus, tau))
    if j == 0:
        return 0
    if j >= taus.size:
        return taus.size - 1
    lo, hi = tau - taus[j - 1], taus[j] - tau
    return j - 1 if lo <= hi else j


def predict_quantile(proc: QuantileProcess, x, tau: float) -> float:
    """x'beta(tau*) with tau* the nearest grid point to ``tau``."""
    tol = 1e-12
    if not (proc.tau_min - tol <= tau <= proc.tau_max + tol):
        raise DomainError(
            f"tau={tau} outside grid range [{proc.tau_min}, {proc.tau_max}]", parameter="tau",
            module="qr_solver",
        )
    x = as_point(x)
    return float(x @ proc.betas[nearest_grid_index(proc.taus, tau)])


def default_grid(tau_min: float = 0.05, tau_max: float = 0.95, n_grid: int = 100) -> np.ndarray:
    return np.linspace(tau_min, tau_max, n_grid)
