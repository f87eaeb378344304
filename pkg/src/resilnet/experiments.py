"""Experiment configs and runners shared by the CLI and ``scripts/``."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .network import Network, generate_random_network
from .planner import Plan, expected_path_cost, plan_entropy, plan_objective, solve_bridge, solve_gibbs
from .resilience import DEFAULT_THRESHOLD, CostModel, ResilienceCurve, edge_occupancy, nominal_cost, resilience_curve


def eps_range(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive grid; rounded so that 0:10:0.1 hits 7.0 exactly."""
    if step <= 0 or stop < start or start < 0:
        raise InputError(f"bad grid {start}:{stop}:{step}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(n), 12)


@dataclass(frozen=True)
class SweepSpec:
    alphas: tuple[float, ...] = (0.3, 0.9, 7.0)
    eps: tuple[float, ...] = tuple(eps_range(0.0, 10.0, 0.1))
    threshold: float = DEFAULT_THRESHOLD
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "eps", tuple(float(e) for e in self.eps))
        if not self.alphas or min(self.alphas) <= 0:
            raise InputError("alphas must be a nonempty list of positive numbers")
        if not self.eps or self.eps[0] < 0 or any(b < a for a, b in zip(self.eps, self.eps[1:])):
            raise InputError("eps grid must be nonempty, nonnegative and sorted")

    @classmethod
    def from_range(cls, alphas, start: float, stop: float, step: float, **kw) -> "SweepSpec":
        return cls(tuple(alphas), tuple(eps_range(start, stop, step)), **kw)

    @property
    def grid(self) -> np.ndarray:
        return np.asarray(self.eps)


@dataclass(frozen=True, eq=False)
class SweepResult:
    alpha: float
    plan: Plan
    entropy: float
    objective: float
    expected_path_cost: float
    nominal_cost: float
    curve: ResilienceCurve


def run_sweep(net: Network, spec: SweepSpec) -> list[SweepResult]:
    cm = CostModel.from_network(net)
    out = []
    for alpha in spec.alphas:
        plan = solve_gibbs(net, None, alpha)
        occ = edge_occupancy(plan)
        curve = resilience_curve(cm, occ, spec.grid, spec.threshold, f"alpha_{alpha:g}", spec.scale)
        out.append(SweepResult(alpha, plan, plan_entropy(plan), plan_objective(net, plan, alpha),
                               expected_path_cost(net, plan), spec.scale * nominal_cost(cm, occ), curve))
    return out


@dataclass(frozen=True)
class BenchSpec:
    sizes: tuple[tuple[int, int, int], ...]
    reps: int = 10
    seed: int = 0
    alpha: float = 0.9

    def __post_init__(self):
        sizes = tuple(tuple(int(k) for k in s) for s in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if not sizes or any(len(s) != 3 or min(s) < 1 for s in sizes):
            raise InputError("sizes must be nonempty (kf, kw, ks) triples with counts >= 1")
        if self.reps < 1:
            raise InputError("reps must be at least 1")

    @classmethod
    def cubes(cls, k_min: int = 3, k_max: int = 30, k_step: int = 3, **kw) -> "BenchSpec":
        # (k, k, k) grows |V| = 1 + 3k by nine per step of 3
        return cls(tuple((k, k, k) for k in range(k_min, k_max + 1, k_step)), **kw)


@dataclass(frozen=True)
class BenchRow:
    n_nodes: int
    mean_seconds: float
    std_seconds: float


def run_bench(spec: BenchSpec) -> list[BenchRow]:
    rows = []
    for kf, kw, ks in spec.sizes:
        net = generate_random_network(kf, kw, ks, spec.seed)
        times = []
        for _ in range(spec.reps):
            t0 = time.perf_counter()
            solve_bridge(net, None, spec.alpha)
            times.append(time.perf_counter() - t0)
        rows.append(BenchRow(net.n_nodes, float(np.mean(times)), float(np.std(times))))
    return rows
