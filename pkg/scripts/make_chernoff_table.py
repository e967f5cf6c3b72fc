"""Simulate Chernoff's distribution and write its quantile table (also fills the cache).

    python scripts/make_chernoff_table.py --out results/chernoff.csv
"""

import argparse
from pathlib import Path

from modalreg import chernoff


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n-draws", type=int, default=chernoff.DEFAULT_DRAWS)
    p.add_argument("--T", type=float, default=chernoff.DEFAULT_T)
    p.add_argument("--delta", type=float, default=chernoff.DEFAULT_DELTA)
    p.add_argument("--full", action="store_true", help="1e6 draws")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default="results/chernoff.csv")
    a = p.parse_args()
    n = 1_000_000 if a.full else a.n_draws
    table = chernoff.build_table(n, a.T, a.delta, a.seed, a.threads)
    out = Path(a.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(out)
    for q in (0.5, 0.9, 0.95, 0.975, 0.995):
        print(f"q({q}) = {chernoff.chernoff_quantile(table, q):.4f}")


if __name__ == "__main__":
    main()
