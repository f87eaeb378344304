"""Bridge-solver timing against network size, plus the closed-form Gibbs plan for reference.

(k, k, k) sizes step |V| = 1 + 3k by nine. Output columns:
|V|, mean_seconds, std_seconds, gibbs_mean_seconds.

    python scripts/bench_bridge.py --k-max 100 --k-step 3 --out bench.csv
"""
import argparse
import csv
import sys
import time

import numpy as np

from resilnet.experiments import BenchSpec, run_bench
from resilnet.network import generate_random_network
from resilnet.planner import solve_gibbs


def gibbs_mean(kf, kw, ks, reps, seed, alpha):
    net = generate_random_network(kf, kw, ks, seed)
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        solve_gibbs(net, None, alpha)
        times.append(time.perf_counter() - t0)
    return float(np.mean(times))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k-min", type=int, default=3)
    ap.add_argument("--k-max", type=int, default=30)
    ap.add_argument("--k-step", type=int, default=3)
    ap.add_argument("--reps", type=int, default=10)
    ap.add_argument("--alpha", type=float, default=0.9)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    spec = BenchSpec.cubes(args.k_min, args.k_max, args.k_step, reps=args.reps,
                           seed=args.seed, alpha=args.alpha)
    rows = run_bench(spec)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["|V|", "mean_seconds", "std_seconds", "gibbs_mean_seconds"])
    for size, row in zip(spec.sizes, rows):
        writer.writerow([row.n_nodes, f"{row.mean_seconds:.6g}", f"{row.std_seconds:.6g}",
                         f"{gibbs_mean(*size, spec.reps, spec.seed, spec.alpha):.6g}"])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
