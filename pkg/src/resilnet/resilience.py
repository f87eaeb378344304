"""Worst-case expected cost over a KL ball of Gaussian edge costs.

Edge costs are independent normals ``N(mean_e, var_e)``.  For a plan with
edge occupation ``phi`` the largest expected cost over all cost laws within
total KL divergence ``eps`` (nats) of the nominal law is

    L*(eps) = sum_e phi_e mean_e + sqrt(2 eps sum_e phi_e^2 var_e)

and it is attained by Gaussians with the same variances and shifted means.
All per-edge quantities are flat arrays in the network's canonical edge order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainMismatch, NegativeEpsilon, UnknownEdge, ZeroVarianceMass
from .network import Edge, Network
from .planner import Plan

DEFAULT_THRESHOLD = 8.0


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CostModel:
    mean: np.ndarray
    variance: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean", _frozen(self.mean))
        object.__setattr__(self, "variance", _frozen(self.variance))
        if self.mean.shape != self.variance.shape or self.mean.ndim != 1:
            raise DomainMismatch("mean and variance must be flat arrays of equal length")
        if np.any(self.variance < 0):
            raise DomainMismatch("variances must be nonnegative")

    @classmethod
    def from_network(cls, net: Network) -> CostModel:
        return cls(net.edge_costs(), net.edge_variances())

    def __len__(self) -> int:
        return self.mean.shape[0]

    def only_edge(self, k: int) -> CostModel:
        """Same means, with every variance but edge ``k`` set to zero."""
        var = np.zeros_like(self.variance)
        var[k] = self.variance[k]
        return CostModel(self.mean, var)


@dataclass(frozen=True, eq=False)
class EdgeOccupancy:
    phi: np.ndarray
    shape: tuple[int, int, int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "phi", _frozen(self.phi))

    def layer_sums(self) -> np.ndarray:
        kf, kw, _ = self.shape
        return np.array([self.phi[:kf].sum(), self.phi[kf:kf + kf * kw].sum(),
                         self.phi[kf + kf * kw:].sum()])


@dataclass(frozen=True)
class ResilienceCurve:
    epsilons: np.ndarray
    values: np.ndarray
    label: str = ""
    threshold: float = DEFAULT_THRESHOLD
    crossing: float | None = None


def edge_occupancy(plan: Plan) -> EdgeOccupancy:
    """``phi_e = (1/3) * sum of plan mass on paths through e``."""
    p = plan.probs
    phi = np.concatenate([p.sum(axis=(1, 2)), p.sum(axis=2).ravel(), p.sum(axis=0).ravel()]) / 3.0
    return EdgeOccupancy(phi, plan.shape)


def _check(cm: CostModel, occ: EdgeOccupancy) -> None:
    if len(cm) != occ.phi.shape[0]:
        raise DomainMismatch(f"cost model has {len(cm)} edges, occupancy has {occ.phi.shape[0]}")


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if eps < 0 or math.isnan(eps):
        raise NegativeEpsilon(f"eps must be nonnegative, got {eps}")
    return eps


def nominal_cost(cm: CostModel, occ: EdgeOccupancy) -> float:
    _check(cm, occ)
    return float(np.dot(occ.phi, cm.mean))


def fluctuation_mass(cm: CostModel, occ: EdgeOccupancy) -> float:
    """``sum_e phi_e^2 var_e``."""
    _check(cm, occ)
    return float(np.dot(occ.phi ** 2, cm.variance))


def worst_case_cost(cm: CostModel, eps: float, occ: EdgeOccupancy) -> float:
    eps = _check_eps(eps)
    return nominal_cost(cm, occ) + math.sqrt(2.0 * eps * fluctuation_mass(cm, occ))


def worst_case_means(cm: CostModel, eps: float, occ: EdgeOccupancy) -> np.ndarray:
    """Means of the maximizing Gaussians: ``mean + var * phi * sqrt(2 eps / S)``."""
    eps = _check_eps(eps)
    if eps == 0:
        raise NegativeEpsilon("worst-case means need eps > 0")
    mass = fluctuation_mass(cm, occ)
    if mass <= 0:
        raise ZeroVarianceMass("sum of phi^2 var is zero; no edge can be shifted")
    return cm.mean + cm.variance * occ.phi * math.sqrt(2.0 * eps / mass)


def single_edge_costs(cm: CostModel, eps: float, occ: EdgeOccupancy) -> np.ndarray:
    """``L_e*`` for every edge: nominal plus ``phi_e sigma_e sqrt(2 eps)``."""
    eps = _check_eps(eps)
    return nominal_cost(cm, occ) + occ.phi * np.sqrt(cm.variance) * math.sqrt(2.0 * eps)


def _edge_position(net_or_k, edge) -> int:
    if isinstance(edge, (int, np.integer)):
        return int(edge)
    if net_or_k is None:
        raise UnknownEdge("pass the network to address edges by Edge value")
    return net_or_k.edge_index(edge)


def single_edge_worst(cm: CostModel, eps: float, occ: EdgeOccupancy, edge: Edge | int,
                      net: Network | None = None) -> float:
    k = _edge_position(net, edge)
    if not 0 <= k < len(cm):
        raise UnknownEdge(f"edge index {k} out of range")
    return float(single_edge_costs(cm, eps, occ)[k])


def riskiest_edge(cm: CostModel, eps: float, occ: EdgeOccupancy) -> int:
    """Canonical index of the edge with the largest ``L_e*``.

    Ranked on ``phi_e * sigma_e`` directly so that adding the nominal cost
    cannot merge near-ties; exact ties go to the first edge in canonical order.
    """
    eps = _check_eps(eps)
    _check(cm, occ)
    return int(np.argmax(occ.phi * np.sqrt(cm.variance)))


def edge_ranking(cm: CostModel, eps: float, occ: EdgeOccupancy) -> np.ndarray:
    """Edge indices by decreasing ``L_e*``; ties keep canonical order."""
    _check_eps(eps)
    _check(cm, occ)
    return np.argsort(-(occ.phi * np.sqrt(cm.variance)), kind="stable")


def first_crossing(eps_grid, values, threshold: float) -> float | None:
    hits = np.flatnonzero(np.asarray(values) >= threshold)
    return float(np.asarray(eps_grid)[hits[0]]) if hits.size else None


def resilience_curve(cm: CostModel, occ: EdgeOccupancy, eps_grid, threshold: float = DEFAULT_THRESHOLD,
                     label: str = "", scale: float = 1.0) -> ResilienceCurve:
    """``L*`` on a sorted grid of eps values, with the first threshold crossing.

    ``scale`` multiplies the reported costs before the threshold comparison.
    """
    eps = np.asarray(eps_grid, dtype=float)
    if eps.ndim != 1 or eps.size == 0:
        raise NegativeEpsilon("eps grid must be a nonempty 1-d sequence")
    if np.any(eps < 0):
        raise NegativeEpsilon("eps grid must be nonnegative")
    if np.any(np.diff(eps) < 0):
        raise NegativeEpsilon("eps grid must be sorted")
    values = scale * (nominal_cost(cm, occ) + np.sqrt(2.0 * eps * fluctuation_mass(cm, occ)))
    return ResilienceCurve(eps, values, label, threshold, first_crossing(eps, values, threshold))
