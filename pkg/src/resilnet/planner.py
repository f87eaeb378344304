"""Entropy-regularized plan design.

The plan minimizes ``sum_x C_x P_x - alpha * H(P)`` subject to the total mass
being one and the outlet marginals matching the demand.  Two routes are
provided: the closed-form Gibbs solution and iterative scaling against the
path kernel ``exp(-C / alpha)`` (the Schroedinger-bridge route).  The
Ruelle-Bowen reference measure is available for diagnostics.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import (
    InputError,
    NonAdjacentStep,
    NonPositiveAlpha,
    NotConverged,
    ZeroMatrix,
    ZeroPriorMass,
)
from .network import Layer, Network, NodeId, path_costs

FEASIBILITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Plan:
    """Distribution over paths, stored as an ``(F, W, S)`` array."""

    probs: np.ndarray
    alpha: float
    solver: str = "gibbs"

    def __post_init__(self) -> None:
        arr = np.array(self.probs, dtype=float)
        if arr.ndim != 3:
            raise InputError("plan probabilities must have shape (F, W, S)")
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.probs.shape  # type: ignore[return-value]

    def outlet_marginals(self) -> np.ndarray:
        return self.probs.sum(axis=(0, 1))

    def factory_marginals(self) -> np.ndarray:
        return self.probs.sum(axis=(1, 2))


@dataclass(frozen=True, eq=False)
class BridgeSolution:
    plan: Plan
    iterations: int
    final_marginal_error: float


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha > 0:
        raise NonPositiveAlpha(f"alpha must be positive, got {alpha}")
    return alpha


def _demand(net: Network, zeta) -> np.ndarray:
    zeta = net.demand if zeta is None else np.asarray(zeta, dtype=float)
    if zeta.shape != (net.shape[2],):
        raise InputError(f"demand has shape {zeta.shape}, expected ({net.shape[2]},)")
    return zeta


def plan_violation(plan: Plan, zeta) -> float:
    """Largest violation of nonnegativity, total mass and outlet marginals."""
    p = plan.probs
    zeta = np.asarray(zeta, dtype=float)
    if p.shape[2] != zeta.shape[0] or not np.all(np.isfinite(p)):
        return float("inf")
    return float(max(
        max(0.0, -p.min()),
        abs(p.sum() - 1.0),
        np.max(np.abs(plan.outlet_marginals() - zeta)),
    ))


def is_feasible(plan: Plan, zeta, tol: float = FEASIBILITY_TOL) -> bool:
    return plan_violation(plan, zeta) <= tol


def solve_gibbs(net: Network, zeta=None, alpha: float = 1.0) -> Plan:
    """Closed form ``P_x = zeta_s exp(-C_x/alpha) / sum_{x' in X_s} exp(-C_x'/alpha)``."""
    alpha = _check_alpha(alpha)
    zeta = _demand(net, zeta)
    logits = -path_costs(net) / alpha
    log_norm = logsumexp(logits, axis=(0, 1))
    probs = zeta[None, None, :] * np.exp(logits - log_norm[None, None, :])
    return Plan(probs, alpha, "gibbs")


def solve_bridge(net: Network, zeta=None, alpha: float = 1.0, tol: float = 1e-10,
                 max_iter: int = 10000) -> BridgeSolution:
    """Iterative proportional scaling of the path kernel ``exp(-C/alpha)``.

    Runs in the log domain with a scaling potential at the source (the virtual
    node, a point mass) and one per outlet.  Each iteration updates the outlet
    potentials, then the source potential, and stops once the largest outlet
    marginal violation is at most ``tol``.
    """
    alpha = _check_alpha(alpha)
    if not tol > 0:
        raise InputError("tol must be positive")
    zeta = _demand(net, zeta)
    log_k = -path_costs(net) / alpha
    with np.errstate(divide="ignore"):
        log_zeta = np.log(zeta)
    log_a = 0.0
    log_b = np.zeros(net.shape[2])
    err = float("inf")
    for it in range(1, max_iter + 1):
        # outlet potentials: match the terminal marginal
        log_b = log_zeta - log_a - logsumexp(log_k, axis=(0, 1))
        # source potential: total mass one
        log_a = -logsumexp(log_k + log_b[None, None, :])
        probs = np.exp(log_a + log_k + log_b[None, None, :])
        err = float(np.max(np.abs(probs.sum(axis=(0, 1)) - zeta)))
        if err <= tol:
            return BridgeSolution(Plan(probs, alpha, "bridge"), it, err)
    raise NotConverged(f"bridge scaling did not reach tol={tol} in {max_iter} iterations "
                       f"(error {err:.3e})")


def plan_entropy(plan: Plan) -> float:
    p = plan.probs[plan.probs > 0]
    return float(-np.sum(p * np.log(p)))


def expected_path_cost(net: Network, plan: Plan) -> float:
    return float(np.sum(path_costs(net) * plan.probs))


def plan_objective(net: Network, plan: Plan, alpha: float) -> float:
    return expected_path_cost(net, plan) - alpha * plan_entropy(plan)


def total_variation(p: Plan, q: Plan) -> float:
    return 0.5 * float(np.abs(p.probs - q.probs).sum())


# -- Ruelle-Bowen prior ------------------------------------------------------------

def perron_eigenpair(B, tol: float = 1e-13, max_iter: int = 100000):
    """Perron eigenvalue with right and left eigenvectors of a nonnegative matrix.

    Power iteration on ``B + c I`` with ``c`` half the largest row sum; the
    shift has the same eigenvectors and removes the +/- lambda oscillation
    of bipartite (periodic) matrices.  Vectors are scaled so that
    ``sum(u * v) == 1`` with ``|u| == |v|`` in the 2-norm.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise InputError("perron_eigenpair needs a square matrix")
    if np.any(B < 0) or not np.all(np.isfinite(B)):
        raise InputError("matrix must be finite and nonnegative")
    if not np.any(B > 0):
        raise ZeroMatrix("matrix has no positive entry")
    shift = 0.5 * B.sum(axis=1).max()
    shifted = B + shift * np.eye(B.shape[0])

    def iterate(M):
        x = np.full(M.shape[0], 1.0 / np.sqrt(M.shape[0]))
        for _ in range(max_iter):
            y = M @ x
            y /= np.linalg.norm(y)
            if np.max(np.abs(y - x)) <= tol:
                return y
            x = y
        raise NotConverged(f"power iteration did not converge in {max_iter} iterations")

    v = iterate(shifted)
    u = iterate(shifted.T)
    lam = float(v @ (B @ v)) / float(v @ v)
    scale = float(u @ v)
    if not scale > 0:
        raise NotConverged("left and right Perron vectors are orthogonal")
    u = u / np.sqrt(scale)
    v = v / np.sqrt(scale)
    return lam, u, v


@dataclass(frozen=True, eq=False)
class RBPrior:
    """Ruelle-Bowen walk measure on the symmetrized network graph.

    Nodes are ordered ``[i, factories..., DBs..., outlets...]``.
    ``log_weights`` holds ``-cost/alpha`` on edges and ``-inf`` elsewhere;
    ``B`` is its exponential.
    """

    lam: float
    u: np.ndarray
    v: np.ndarray
    alpha: float
    B: np.ndarray
    log_weights: np.ndarray
    shape: tuple[int, int, int]

    def node_position(self, node: NodeId) -> int:
        kf, kw, _ = self.shape
        offset = {Layer.VIRTUAL: 0, Layer.FACTORY: 1, Layer.DB: 1 + kf, Layer.OUTLET: 1 + kf + kw}
        return offset[node.layer] + node.index

    @property
    def adjacency(self) -> np.ndarray:
        return np.isfinite(self.log_weights)


def symmetrized_log_weights(net: Network, alpha: float) -> np.ndarray:
    alpha = _check_alpha(alpha)
    kf, kw, ks = net.shape
    n = net.n_nodes
    lw = np.full((n, n), -np.inf)
    f0, w0, s0 = 1, 1 + kf, 1 + kf + kw
    lw[0, f0:w0] = -net.production / alpha
    lw[f0:w0, w0:s0] = -net.fw / alpha
    lw[w0:s0, s0:] = -net.ws / alpha
    return np.maximum(lw, lw.T)


def build_rb_prior(net: Network, alpha: float) -> RBPrior:
    alpha = _check_alpha(alpha)
    lw = symmetrized_log_weights(net, alpha)
    B = np.exp(lw)
    lam, u, v = perron_eigenpair(B)
    return RBPrior(lam, u, v, alpha, B, lw, net.shape)


def _walk_positions(prior: RBPrior, walk: Sequence) -> list[int]:
    return [prior.node_position(x) if isinstance(x, NodeId) else int(x) for x in walk]


def log_rb_path_measure(prior: RBPrior, walk: Sequence) -> float:
    idx = _walk_positions(prior, walk)
    if len(idx) < 2:
        raise InputError("a walk needs at least two nodes")
    steps = [prior.log_weights[a, b] for a, b in zip(idx, idx[1:])]
    if not all(np.isfinite(steps)):
        raise NonAdjacentStep(f"walk {list(walk)} uses a pair that is not an edge")
    with np.errstate(divide="ignore"):
        ends = np.log(prior.u[idx[0]]) + np.log(prior.v[idx[-1]])
    return float(ends - (len(idx) - 1) * np.log(prior.lam) + sum(steps))


def rb_path_measure(prior: RBPrior, walk: Sequence) -> float:
    """``u[x0] v[xT] lambda^-T exp(-sum of step costs / alpha)`` for a walk."""
    return float(np.exp(log_rb_path_measure(prior, walk)))


def rb_total_mass(prior: RBPrior, T: int = 3) -> float:
    """Sum of the walk measure over every length-``T`` walk, by enumeration."""
    n = prior.B.shape[0]
    adj = prior.adjacency
    total = 0.0
    frontier = [((a,), 1.0) for a in range(n)]
    for _ in range(T):
        frontier = [(w + (b,), m * prior.B[w[-1], b]) for w, m in frontier
                    for b in np.flatnonzero(adj[w[-1]])]
    for w, m in frontier:
        total += prior.u[w[0]] * prior.v[w[-1]] * m
    return float(total / prior.lam ** T)


def admissible_log_measure(prior: RBPrior) -> np.ndarray:
    """Log walk measure of every admissible walk ``(i, f, w, s)`` as ``(F, W, S)``."""
    kf, kw, ks = prior.shape
    lw = prior.log_weights
    f0, w0, s0 = 1, 1 + kf, 1 + kf + kw
    steps = lw[0, f0:w0][:, None, None] + lw[f0:w0, w0:s0][:, :, None] + lw[w0:s0, s0:][None, :, :]
    with np.errstate(divide="ignore"):
        ends = np.log(prior.u[0]) + np.log(prior.v[s0:])
    return ends[None, None, :] - 3 * np.log(prior.lam) + steps


def kl_to_prior(plan: Plan, prior: RBPrior) -> float:
    """KL divergence of a plan (as walks ``i, f, w, s``) from the prior, in nats."""
    if plan.shape != prior.shape:
        raise InputError("plan and prior describe different networks")
    log_m = admissible_log_measure(prior)
    p = plan.probs
    support = p > 0
    if np.any(~np.isfinite(log_m[support])):
        raise ZeroPriorMass("plan puts mass on walks with zero prior measure")
    return float(np.sum(p[support] * (np.log(p[support]) - log_m[support])))


def kl_decomposition(net: Network, plan: Plan, prior: RBPrior, T: int = 3) -> float:
    """KL written as a P-dependent term plus plan-independent constants.

    ``(E[C] - alpha H) / alpha - log u_i - sum_s zeta_s log v_s + T log lambda``.
    The outlet weights are read from the plan's own marginals.
    """
    kf, kw, _ = net.shape
    s0 = 1 + kf + kw
    zeta = plan.outlet_marginals()
    used = zeta > 0
    return float(plan_objective(net, plan, prior.alpha) / prior.alpha
                 - np.log(prior.u[0])
                 - np.sum(zeta[used] * np.log(prior.v[s0:][used]))
                 + T * np.log(prior.lam))


# -- plan documents ----------------------------------------------------------------

def plan_to_document(net: Network, plan: Plan, iterations: int | None = None,
                     marginal_error: float | None = None) -> dict[str, Any]:
    rows = []
    for f, w, s in itertools.product(*(range(k) for k in net.shape)):
        rows.append({"f": net.factories[f], "w": net.warehouses[w], "s": net.outlets[s],
                     "p": float(plan.probs[f, w, s])})
    if marginal_error is None:
        marginal_error = float(np.max(np.abs(plan.outlet_marginals() - net.demand)))
    return {
        "alpha": plan.alpha,
        "solver": plan.solver,
        "iterations": iterations,
        "marginal_error": marginal_error,
        "paths": rows,
    }


def dumps_plan(net: Network, plan: Plan, **kw) -> str:
    return json.dumps(plan_to_document(net, plan, **kw), indent=2) + "\n"


def plan_from_document(net: Network, doc: Mapping[str, Any]) -> Plan:
    """Parse a plan document against ``net``; feasibility is not checked here."""
    probs = np.zeros(net.shape)
    seen = np.zeros(net.shape, dtype=bool)
    fi = {n: k for k, n in enumerate(net.factories)}
    wi = {n: k for k, n in enumerate(net.warehouses)}
    si = {n: k for k, n in enumerate(net.outlets)}
    try:
        for row in doc["paths"]:
            at = fi[row["f"]], wi[row["w"]], si[row["s"]]
            probs[at] = float(row["p"])
            seen[at] = True
        alpha = float(doc["alpha"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"plan document does not match the network: {exc!r}") from exc
    if not seen.all():
        raise InputError("plan document does not list every path of the network")
    return Plan(probs, alpha, str(doc.get("solver", "unknown")))


def load_plan(net: Network, path) -> Plan:
    with open(path) as fh:
        return plan_from_document(net, json.load(fh))
