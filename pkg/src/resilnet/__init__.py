"""Entropy-regularized logistics plans and their worst-case cost under KL-bounded cost uncertainty."""
from .network import (
    Edge,
    Layer,
    Network,
    NodeId,
    Path,
    PathIndex,
    enumerate_paths,
    generate_random_network,
    load_network,
    path_cost,
    path_costs,
    validate_network,
)
from .experiments import BenchSpec, SweepSpec, run_bench, run_sweep
from .planner import (
    BridgeSolution,
    Plan,
    RBPrior,
    build_rb_prior,
    kl_to_prior,
    perron_eigenpair,
    plan_entropy,
    plan_objective,
    rb_path_measure,
    solve_bridge,
    solve_gibbs,
)
from .resilience import (
    CostModel,
    EdgeOccupancy,
    ResilienceCurve,
    edge_occupancy,
    nominal_cost,
    resilience_curve,
    riskiest_edge,
    single_edge_worst,
    worst_case_cost,
    worst_case_means,
)

__version__ = "0.1.0"

__all__ = [
    "BenchSpec",
    "BridgeSolution",
    "CostModel",
    "Edge",
    "EdgeOccupancy",
    "Layer",
    "Network",
    "NodeId",
    "Path",
    "PathIndex",
    "Plan",
    "RBPrior",
    "ResilienceCurve",
    "SweepSpec",
    "build_rb_prior",
    "edge_occupancy",
    "enumerate_paths",
    "generate_random_network",
    "kl_to_prior",
    "load_network",
    "nominal_cost",
    "path_cost",
    "path_costs",
    "perron_eigenpair",
    "plan_entropy",
    "plan_objective",
    "rb_path_measure",
    "resilience_curve",
    "riskiest_edge",
    "run_bench",
    "run_sweep",
    "single_edge_worst",
    "solve_bridge",
    "solve_gibbs",
    "validate_network",
    "worst_case_cost",
    "worst_case_means",
]
