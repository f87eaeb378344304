"""Print the properties the bundled demo network was tuned for and fail if any is lost.

The layout was picked by a local search over factory and DB positions (outlets
fixed on the right edge), then rounded to one decimal. Targets:
  * one corridor (f1 -> w4) is cheapest for every outlet,
  * at alpha = 0.3 each outlet puts >= 90% of its mass on that corridor,
  * at alpha = 7.0 production is split within 0.05 of evenly,
  * the alpha = 0.3 and alpha = 7.0 resilience curves cross inside (0, 10],
  * the threshold-8 crossing comes first for alpha = 0.3 and never for alpha = 7.0.
"""
import sys

import numpy as np

from resilnet.cli import demo_network
from resilnet.experiments import SweepSpec, run_sweep
from resilnet.network import path_costs


def main() -> int:
    net = demo_network()
    costs = path_costs(net)
    results = {r.alpha: r for r in run_sweep(net, SweepSpec())}
    checks = []

    corridors = {np.unravel_index(np.argmin(costs[:, :, s]), costs.shape[:2]) for s in range(costs.shape[2])}
    names = sorted(f"{net.factories[f]}->{net.warehouses[w]}" for f, w in corridors)
    checks.append(("single cheapest corridor", len(corridors) == 1, ", ".join(names)))

    low = results[0.3].plan.probs
    share = min(low[best + (s,)] / low[:, :, s].sum() for s, best in
                enumerate(np.unravel_index(np.argmin(costs[:, :, s]), costs.shape[:2])
                          for s in range(costs.shape[2])))
    checks.append(("alpha=0.3 concentration", share >= 0.9, f"min share {share:.3f}"))

    marg = results[7.0].plan.factory_marginals()
    checks.append(("alpha=7.0 even production", np.max(np.abs(marg - 1 / 3)) <= 0.05, np.round(marg, 3)))

    diff = results[0.3].curve.values - results[7.0].curve.values
    cross = SweepSpec().grid[np.argmax(diff > 0)] if np.any(diff > 0) else None
    checks.append(("curves cross", diff[0] < 0 and cross is not None, f"eps ~ {cross}"))

    hits = {a: r.curve.crossing for a, r in results.items()}
    checks.append(("threshold ordering", hits[0.3] is not None and hits[7.0] is None
                   and (hits[0.9] is None or hits[0.9] > hits[0.3]), hits))

    for a, r in results.items():
        print(f"alpha={a:<4} entropy={r.entropy:.4f} nominal={r.nominal_cost:.4f} "
              f"L*(7)={r.curve.values[70]:.4f} crossing={r.curve.crossing}")
    ok = True
    for name, passed, detail in checks:
        ok &= bool(passed)
        print(f"{'ok ' if passed else 'BAD'} {name}: {detail}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
