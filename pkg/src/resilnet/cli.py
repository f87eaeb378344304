"""Command-line front end.

    resilnet generate 3 4 5 --seed 42 --out net.json
    resilnet plan demo --alpha 0.3 --solver bridge --out p03.json
    resilnet evaluate demo p03.json p70.json --eps 0:10:0.5
    resilnet edge-risk demo p03.json --eps 7
    resilnet sweep demo --alphas 0.3,0.9,7.0 --out-dir results/
    resilnet verify demo --alpha 0.9 --eps 7
    resilnet bench --k-min 3 --k-max 30 --reps 10

Exit codes: 0 success, 1 verification failure, 2 input error, 3 numerical
non-convergence.  ``demo`` in place of a network file loads the bundled
3x4x5 demo network.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import oracles
from .errors import InputError, NumericalError, TooLarge
from .experiments import BenchSpec, SweepSpec, eps_range, run_bench, run_sweep
from .network import (
    Network,
    dumps_network,
    load_network,
    random_network_document,
    validate_network,
)
from .planner import (
    FEASIBILITY_TOL,
    Plan,
    build_rb_prior,
    dumps_plan,
    kl_decomposition,
    kl_to_prior,
    load_plan,
    plan_entropy,
    plan_objective,
    plan_violation,
    solve_bridge,
    solve_gibbs,
    total_variation,
)
from .resilience import (
    DEFAULT_THRESHOLD,
    CostModel,
    edge_occupancy,
    edge_ranking,
    nominal_cost,
    resilience_curve,
    single_edge_costs,
    worst_case_cost,
)

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


def demo_network() -> Network:
    text = resources.files("resilnet").joinpath("data/demo_network.json").read_text()
    return validate_network(json.loads(text))


def _network(spec: str) -> Network:
    return demo_network() if spec == "demo" else load_network(spec)


def parse_grid(text: str) -> np.ndarray:
    """``a,b,c`` lists or inclusive ``start:stop:step`` ranges."""
    text = text.strip()
    try:
        if ":" in text:
            grid = eps_range(*(float(t) for t in text.split(":")))
        else:
            grid = np.array([float(t) for t in text.split(",") if t.strip()])
    except (ValueError, TypeError) as exc:
        raise InputError(f"cannot parse grid {text!r}") from exc
    if grid.size == 0 or np.any(grid < 0) or np.any(np.diff(grid) < 0):
        raise InputError(f"grid must be nonempty, nonnegative and sorted: {text!r}")
    return grid


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse list {text!r}") from exc


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _info(args, line: str) -> None:
    # keep stdout clean for data when no --out is given
    print(line, file=sys.stdout if getattr(args, "out", None) else sys.stderr)


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _scale(args) -> float:
    return 3.0 if args.total_cost_scale else 1.0


def _checked_plan(net: Network, path: str) -> Plan:
    plan = load_plan(net, path)
    if plan_violation(plan, net.demand) > FEASIBILITY_TOL:
        raise InputError(f"plan {path} is not feasible for this network")
    return plan


def _crossing_text(value: float | None) -> str:
    return "none" if value is None else repr(value)


# -- subcommands ----------------------------------------------------------------

def cmd_plan(args) -> int:
    net = _network(args.network)
    if args.solver == "bridge":
        sol = solve_bridge(net, None, args.alpha, tol=args.tol, max_iter=args.max_iter)
        plan, iters, err = sol.plan, sol.iterations, sol.final_marginal_error
    else:
        plan, iters, err = solve_gibbs(net, None, args.alpha), None, None
    _emit(dumps_plan(net, plan, iterations=iters, marginal_error=err), args.out)
    occ = edge_occupancy(plan)
    cm = CostModel.from_network(net)
    _info(args, f"entropy\t{plan_entropy(plan)!r}")
    _info(args, f"objective\t{plan_objective(net, plan, args.alpha)!r}")
    _info(args, f"nominal_cost\t{_scale(args) * nominal_cost(cm, occ)!r}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    net = _network(args.network)
    cm = CostModel.from_network(net)
    grid = parse_grid(args.eps)
    curves = []
    for k, path in enumerate(args.plans):
        plan = _checked_plan(net, path)
        label = f"alpha_{plan.alpha:g}"
        if any(c.label == label for c in curves):
            label = f"{label}_{k}"
        curves.append(resilience_curve(cm, edge_occupancy(plan), grid, args.threshold,
                                       label, _scale(args)))
    if len(curves) == 1:
        header = ["epsilon", "l_star"]
    else:
        header = ["epsilon"] + [f"l_star_{c.label}" for c in curves]
    rows = [[repr(float(e))] + [repr(float(c.values[i])) for c in curves] for i, e in enumerate(grid)]
    _emit(_csv(header, rows), args.out)
    for c in curves:
        _info(args, f"crossing[{c.label}]\t{_crossing_text(c.crossing)}")
    return EXIT_OK


def cmd_edge_risk(args) -> int:
    net = _network(args.network)
    cm = CostModel.from_network(net)
    plan = _checked_plan(net, args.plan)
    occ = edge_occupancy(plan)
    scale = _scale(args)
    labels = net.edge_labels()
    if args.edge:
        k = net.edge_index(net.edge_from_label(args.edge))
        grid = parse_grid(args.eps_grid)
        header = ["epsilon", "l_star", f"l_star_edge_{labels[k]}"]
        rows = [[repr(float(e)), repr(scale * worst_case_cost(cm, e, occ)),
                 repr(scale * float(single_edge_costs(cm, e, occ)[k]))] for e in grid]
        _emit(_csv(header, rows), args.out)
        return EXIT_OK
    costs = single_edge_costs(cm, args.eps, occ)
    order = edge_ranking(cm, args.eps, occ)
    rows = [[labels[k], repr(float(occ.phi[k])), repr(float(cm.variance[k])),
             repr(scale * float(costs[k])), rank] for rank, k in enumerate(order, start=1)]
    _emit(_csv(["edge", "phi", "sigma2", "l_edge_star", "rank"], rows), args.out)
    _info(args, f"riskiest_edge\t{labels[int(order[0])]}")
    return EXIT_OK


def cmd_generate(args) -> int:
    doc = random_network_document(args.kf, args.kw, args.ks, args.seed, args.box,
                                  args.production_cost, args.sigma2_ratio)
    _emit(dumps_network(validate_network(doc)), args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.sizes:
        try:
            sizes = [tuple(int(t) for t in s.split("x")) for s in args.sizes.split(",")]
        except ValueError as exc:
            raise InputError(f"cannot parse sizes {args.sizes!r}") from exc
        spec = BenchSpec(tuple(sizes), args.reps, args.seed, args.alpha)
    else:
        spec = BenchSpec.cubes(args.k_min, args.k_max, args.k_step, reps=args.reps,
                               seed=args.seed, alpha=args.alpha)
    rows = run_bench(spec)
    _emit(_csv(["|V|", "mean_seconds", "std_seconds"],
               [[r.n_nodes, repr(r.mean_seconds), repr(r.std_seconds)] for r in rows]), args.out)
    return EXIT_OK


def run_checks(net: Network, alpha: float, eps: float, plan: Plan | None = None):
    """End-to-end cross-checks; yields ``(name, passed, detail)``."""
    cm = CostModel.from_network(net)
    gibbs = solve_gibbs(net, None, alpha)
    bridge = solve_bridge(net, None, alpha).plan
    tv = total_variation(gibbs, bridge)
    yield "gibbs_vs_bridge", tv <= 1e-8, f"tv={tv:.3e}"

    plan = gibbs if plan is None else plan
    viol = plan_violation(plan, net.demand)
    yield "plan_feasibility", viol <= FEASIBILITY_TOL, f"violation={viol:.3e}"

    occ = edge_occupancy(plan)
    layer_err = float(np.max(np.abs(occ.layer_sums() - 1.0 / 3.0)))
    total_err = abs(float(occ.phi.sum()) - 1.0)
    bounds = bool(np.all(occ.phi >= 0) and np.all(occ.phi <= 1.0 / 3.0 + 1e-15))
    yield ("occupancy_simplex", total_err <= 1e-12 and layer_err <= 1e-12 and bounds,
           f"sum_err={total_err:.3e} layer_err={layer_err:.3e}")

    closed = worst_case_cost(cm, eps, occ)
    if eps > 0:
        dual = oracles.dual_worst_case(cm, occ, eps).value
    else:
        dual = nominal_cost(cm, occ)
    rel = abs(dual - closed) / max(1.0, abs(closed))
    yield "dual_vs_closed_form", rel <= 1e-6, f"closed={closed!r} dual={dual!r} rel={rel:.3e}"

    prior = build_rb_prior(net, alpha)
    try:
        gap = abs(kl_to_prior(plan, prior) - kl_decomposition(net, plan, prior))
    except (ArithmeticError, ValueError):
        gap = float("inf")
    yield "kl_decomposition", gap <= 1e-8, f"gap={gap:.3e}"

    try:
        brute = oracles.brute_force_plan(net, None, alpha, grid_step=1e-3)
    except TooLarge:
        yield "brute_force_optimality", True, "skipped (instance too large)"
    else:
        gap = plan_objective(net, gibbs, alpha) - plan_objective(net, brute, alpha)
        yield "brute_force_optimality", gap <= 1e-12, f"gibbs-brute={gap:.3e}"


def cmd_verify(args) -> int:
    net = _network(args.network)
    plan = load_plan(net, args.plan) if args.plan else None
    ok = True
    for name, passed, detail in run_checks(net, args.alpha, args.eps, plan):
        ok &= bool(passed)
        print(f"{'PASS' if passed else 'FAIL'}\t{name}\t{detail}")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_sweep(args) -> int:
    net = _network(args.network)
    spec = SweepSpec(tuple(_floats(args.alphas)), tuple(parse_grid(args.eps)),
                     args.threshold, _scale(args))
    results = run_sweep(net, spec)
    summary_csv = _csv(["alpha", "entropy", "objective", "expected_path_cost", "nominal_cost",
                        "crossing_eps"],
                       [[repr(r.alpha), repr(r.entropy), repr(r.objective),
                         repr(r.expected_path_cost), repr(r.nominal_cost),
                         _crossing_text(r.curve.crossing)] for r in results])
    curve_csv = _csv(["epsilon"] + [f"l_star_{r.curve.label}" for r in results],
                     [[repr(float(e))] + [repr(float(r.curve.values[i])) for r in results]
                      for i, e in enumerate(spec.grid)])
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for r in results:
            (out / f"plan_alpha_{r.alpha:g}.json").write_text(dumps_plan(net, r.plan))
        (out / "summary.csv").write_text(summary_csv)
        (out / "curves.csv").write_text(curve_csv)
    else:
        sys.stdout.write(summary_csv)
        sys.stdout.write("\n")
        sys.stdout.write(curve_csv)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="resilnet", description=__doc__.split("\n")[0])

    def add_globals(p, suppress: bool):
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        p.add_argument("--seed", type=int, default=d(0), help="random seed (default 0)")
        p.add_argument("--total-cost-scale", action="store_true", default=d(False),
                       help="report costs multiplied by 3 (expected total path cost)")
        p.add_argument("--threshold", type=float, default=d(DEFAULT_THRESHOLD),
                       help="cost level treated as business-impossible (default 8.0)")

    add_globals(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    add_globals(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", parents=[common], help="solve the entropy-regularized plan")
    p.add_argument("network")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--solver", choices=("gibbs", "bridge"), default="bridge")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("evaluate", parents=[common], help="worst-case cost curve(s) over eps")
    p.add_argument("network")
    p.add_argument("plans", nargs="+")
    p.add_argument("--eps", default="0:10:0.1", help="a,b,c or start:stop:step (default 0:10:0.1)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("edge-risk", parents=[common], help="single-edge disruption ranking")
    p.add_argument("network")
    p.add_argument("plan")
    p.add_argument("--eps", type=float, default=7.0)
    p.add_argument("--edge", help="edge label such as f1->w4; switches to an eps sweep")
    p.add_argument("--eps-grid", default="0:10:0.1")
    p.add_argument("--out")
    p.set_defaults(func=cmd_edge_risk)

    p = sub.add_parser("generate", parents=[common], help="random geometric network document")
    p.add_argument("kf", type=int)
    p.add_argument("kw", type=int)
    p.add_argument("ks", type=int)
    p.add_argument("--box", type=float, default=10.0)
    p.add_argument("--production-cost", type=float, default=1.0)
    p.add_argument("--sigma2-ratio", type=float, default=0.01)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bench", parents=[common], help="bridge solver timing by network size")
    p.add_argument("--sizes", help="explicit sizes, e.g. 3x3x3,6x6x6")
    p.add_argument("--k-min", type=int, default=3)
    p.add_argument("--k-max", type=int, default=30)
    p.add_argument("--k-step", type=int, default=3)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--alpha", type=float, default=0.9)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", parents=[common], help="run oracle cross-checks")
    p.add_argument("network")
    p.add_argument("--plan")
    p.add_argument("--alpha", type=float, default=0.9)
    p.add_argument("--eps", type=float, default=7.0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", parents=[common], help="alpha x eps experiment")
    p.add_argument("network")
    p.add_argument("--alphas", default="0.3,0.9,7.0")
    p.add_argument("--eps", default="0:10:0.1")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
