"""Chernoff's distribution by Monte Carlo, and Gumbel norming for its maxima.

Z = argmax_t {B(t) - t^2} for a two-sided standard Brownian motion B. Each
draw simulates B on the lattice {-T, ..., -delta, 0, delta, ..., T} from two
independent Gaussian random walks and takes the lattice argmax.

Draws are produced in fixed-size chunks, chunk ``c`` using the generator
seeded by ``SeedSequence(seed, spawn_key=(c,))``; the output therefore does
not depend on how many threads work through the chunks. Within a chunk the
walk increments are generated in blocks of ``BLOCK`` lattice steps, so a run
with larger T extends exactly the same paths (common random numbers).
"""

from __future__ import annotations

import functools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import DomainError

CHUNK = 500
BLOCK = 500
DEFAULT_DRAWS = 200_000
DEFAULT_T = 2.5
DEFAULT_DELTA = 1e-3
TABLE_PROBS = np.arange(1, 2000) / 2000.0


def _chunk_draws(count: int, T: float, delta: float, seed: int, c: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(c,)))
    m = int(round(T / delta))
    t = np.arange(1, m + 1) * delta
    walk = np.empty((2 * count, m))
    for s in range(0, m, BLOCK):
        e = min(s + BLOCK, m)
        walk[:, s:e] = rng.standard_normal((2 * count, e - s))
    walk *= np.sqrt(delta)
    np.cumsum(walk, axis=1, out=walk)
    walk -= t * t
    idx = np.argmax(walk, axis=1)
    val = walk[np.arange(2 * count), idx]
    pos_i, neg_i = idx[:count], idx[count:]
    pos_v, neg_v = val[:count], val[count:]
    # candidates: t = 0 (value 0), best positive lattice point, best negative one;
    # ties go to the smaller |t|
    z = np.zeros(count)
    take_pos = (pos_v > 0.0) & ((pos_v > neg_v) | ((pos_v == neg_v) & (pos_i <= neg_i)))
    take_neg = (neg_v > 0.0) & ~take_pos
    z[take_pos] = (pos_i[take_pos] + 1) * delta
    z[take_neg] = -(neg_i[take_neg] + 1) * delta
    return z


def simulate_chernoff(n_draws: int, T: float = DEFAULT_T, delta: float = DEFAULT_DELTA,
                      seed: int = 0, threads: int = 1) -> np.ndarray:
    """Draw ``n_draws`` approximate Chernoff variables."""
    if n_draws < 1:
        raise DomainError("n_draws must be >= 1", parameter="n_draws", module="chernoff")
    if not (T > 0 and 0 < delta < T):
        raise DomainError("need T > 0 and 0 < delta < T", parameter="delta", module="chernoff")
    nchunks = -(-n_draws // CHUNK)
    sizes = [min(CHUNK, n_draws - c * CHUNK) for c in range(nchunks)]

    def work(c):
        return _chunk_draws(sizes[c], T, delta, seed, c)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(work, range(nchunks)))
    else:
        parts = [work(c) for c in range(nchunks)]
    return np.concatenate(parts)


@dataclass(frozen=True)
class ChernoffTable:
    probs: np.ndarray
    quantiles: np.ndarray
    n_draws: int
    grid_half_width: float
    grid_step: float
    seed: int

    @property
    def key(self) -> str:
        return (f"n_draws={self.n_draws},T={self.grid_half_width!r},"
                f"delta={self.grid_step!r},seed={self.seed}")

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# {self.key}\n")
            fh.write("prob,quantile\n")
            for p, q in zip(self.probs, self.quantiles):
                fh.write(f"{float(p)!r},{float(q)!r}\n")

    @classmethod
    def from_csv(cls, path) -> "ChernoffTable":
        with open(path, encoding="utf-8") as fh:
            meta = fh.readline().lstrip("#").strip()
        kv = dict(item.split("=") for item in meta.split(","))
        a = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
        return cls(a[:, 0], a[:, 1], int(kv["n_draws"]), float(kv["T"]), float(kv["delta"]),
                   int(kv["seed"]))


def table_from_sample(sample, n_draws, T, delta, seed, probs=TABLE_PROBS) -> ChernoffTable:
    q = np.quantile(sample, probs)
    return ChernoffTable(np.asarray(probs, dtype=float), q, int(n_draws), float(T), float(delta), int(seed))


def cache_dir() -> Path:
    env = os.environ.get("MODALREG_CACHE_DIR")
    return Path(env) if env else Path.home() / ".cache" / "modalreg"


def build_table(n_draws: int = DEFAULT_DRAWS, T: float = DEFAULT_T, delta: float = DEFAULT_DELTA,
                seed: int = 0, threads: int = 1, use_cache: bool = True) -> ChernoffTable:
    """Quantile table of Z, read from or written to the on-disk cache."""
    path = cache_dir() / f"chernoff_n{n_draws}_T{T!r}_d{delta!r}_s{seed}.csv"
    if use_cache and path.exists():
        table = ChernoffTable.from_csv(path)
        if (table.n_draws, table.grid_half_width, table.grid_step, table.seed) == (n_draws, T, delta, seed):
            return table
    sample = simulate_chernoff(n_draws, T, delta, seed, threads)
    table = table_from_sample(sample, n_draws, T, delta, seed)
    if use_cache:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(f".{os.getpid()}.tmp")
        table.to_csv(tmp)
        os.replace(tmp, path)
    return table


@functools.lru_cache(maxsize=1)
def default_table() -> ChernoffTable:
    """Table at the default simulation settings (seed 0), cached on disk."""
    return build_table()


def chernoff_quantile(table: ChernoffTable, p: float) -> float:
    """Linear interpolation in the quantile table."""
    if not (table.probs[0] <= p <= table.probs[-1]):
        raise DomainError(
            f"p={p} outside table range [{table.probs[0]}, {table.probs[-1]}]",
            parameter="p", module="chernoff",
        )
    return float(np.interp(p, table.probs, table.quantiles))


@dataclass(frozen=True)
class GumbelConstants:
    a_L: float
    b_L_prime: float
    L: int
    lam: float
    kappa: float


def gumbel_constants(L: int, lam: float, kappa: float) -> GumbelConstants:
    """Norming constants under which a_L (max_j |Z_j| - b'_L) is nearly Gumbel.

    ``lam`` and ``kappa`` are the tail constants in
    f_Z(z) ~ 2 lam |z| exp(-2|z|^3/3 - kappa |z|); they have no default.
    """
    if L < 2:
        raise DomainError("L must be at least 2", parameter="L", module="chernoff")
    if not (lam > 0 and kappa > 0):
        raise DomainError("lam and kappa must be positive", parameter="lam", module="chernoff")
    logL = np.log(L)
    c = (1.5 * logL) ** (1.0 / 3.0)
    a = 3.0 * (2.0 / 3.0) ** (1.0 / 3.0) * logL ** (2.0 / 3.0)
    bracket = kappa * c + np.log(logL) / 3.0 + np.log(1.5) / 3.0 - np.log(2.0 * lam)
    return GumbelConstants(float(a), float(c - bracket / a), int(L), float(lam), float(kappa))


def gumbel_cdf(z):
    return np.exp(-np.exp(-np.asarray(z, dtype=float)))


@dataclass(frozen=True)
class GumbelCheck:
    ks_distance: float
    L: int
    n_reps: int
    constants: GumbelConstants
    normalized: np.ndarray


def gumbel_convergence_check(n_reps: int, L: int, lam: float, kappa: float, seed: int = 0,
                             T: float = DEFAULT_T, delta: float = 2.5e-3,
                             threads: int = 1) -> GumbelCheck:
    """KS distance between a_L(|Z|_(L) - b'_L) and the standard Gumbel law.

    Each of ``n_reps`` replicates is the maximum of ``L`` independent |Z| draws.
    """
    const = gumbel_constants(L, lam, kappa)
    z = np.abs(simulate_chernoff(n_reps * L, T, delta, seed, threads)).reshape(n_reps, L)
    w = const.a_L * (z.max(axis=1) - const.b_L_prime)
    ks = stats.kstest(w, gumbel_cdf).statistic
    return GumbelCheck(float(ks), int(L), int(n_reps), const, w)
