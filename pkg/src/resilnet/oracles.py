"""Independent numerical ground truth for the closed forms.

* the Lagrangian dual of the worst-case cost problem, evaluated with
  adaptive Simpson quadrature of every moment-generating integral and
  minimized over the multiplier by golden-section search;
* a brute-force grid solver for tiny plan-design instances;
* Monte Carlo sampling of KL-feasible Gaussian mean shifts.

None of these use the Gaussian moment-generating function or the Gibbs
form of the optimal plan.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import InputError, NotConverged, QuadratureFailure, TooLarge
from .network import Network, path_costs
from .planner import Plan, _check_alpha, _demand
from .resilience import CostModel, EdgeOccupancy, _check, _check_eps, nominal_cost

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0
SQRT_2PI = math.sqrt(2.0 * math.pi)
HALF_WIDTH = 12.0  # integration window in standard deviations
EPS = float(np.finfo(float).eps)


def adaptive_simpson(f: Callable[[np.ndarray, np.ndarray], np.ndarray], a, b,
                     tol: float = 1e-12, n_init: int = 48, max_depth: int = 60) -> np.ndarray:
    """Batched adaptive Simpson quadrature.

    Integrates ``f(z, owner)`` over ``[a[j], b[j]]`` for every ``j`` at once,
    where ``owner`` tells ``f`` which integral each abscissa belongs to.
    Each interval starts as ``n_init`` equal panels so narrow peaks are not
    skipped; panels are bisected until the Simpson error estimate of each is
    within its share of the absolute tolerance ``tol``.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    m = a.shape[0]
    result = np.zeros(m)
    if m == 0:
        return result
    owner = np.repeat(np.arange(m), n_init)
    t = np.linspace(0.0, 1.0, n_init + 1)
    lo = (a[:, None] + (b - a)[:, None] * t[None, :-1]).ravel()
    hi = (a[:, None] + (b - a)[:, None] * t[None, 1:]).ravel()
    mid = 0.5 * (lo + hi)
    flo, fmid, fhi = f(lo, owner), f(mid, owner), f(hi, owner)
    whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
    ptol = np.full(lo.shape, tol / n_init)

    for _ in range(max_depth):
        left_mid = 0.5 * (lo + mid)
        right_mid = 0.5 * (mid + hi)
        fl = f(left_mid, owner)
        fr = f(right_mid, owner)
        left = (mid - lo) / 6.0 * (flo + 4.0 * fl + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * fr + fhi)
        delta = left + right - whole
        # panels at machine resolution cannot be refined further
        done = (np.abs(delta) <= 15.0 * ptol) | (hi - lo <= 64.0 * EPS * np.maximum(1.0, np.abs(mid)))
        np.add.at(result, owner[done], (left + right + delta / 15.0)[done])
        keep = ~done
        if not keep.any():
            return result
        lo, mid, hi = lo[keep], mid[keep], hi[keep]
        flo, fmid, fhi = flo[keep], fmid[keep], fhi[keep]
        fl, fr, left, right = fl[keep], fr[keep], left[keep], right[keep]
        owner, ptol = owner[keep], ptol[keep] / 2.0
        lo, mid, hi = (np.concatenate([lo, mid]), np.concatenate([left_mid[keep], right_mid[keep]]),
                       np.concatenate([mid, hi]))
        flo, fmid, fhi = np.concatenate([flo, fmid]), np.concatenate([fl, fr]), np.concatenate([fmid, fhi])
        whole = np.concatenate([left, right])
        owner = np.concatenate([owner, owner])
        ptol = np.concatenate([ptol, ptol])
    raise QuadratureFailure(f"adaptive Simpson did not converge within depth {max_depth}")


def _tilted_integrals(k: np.ndarray, with_mean: bool = False):
    """``log int_{-12}^{12} N(z; 0, 1) exp(k z) dz`` for each entry of ``k``.

    With ``with_mean`` also returns the tilted mean ``int z N e^{kz} / int N e^{kz}``.
    The exponent is shifted by its maximum on the window before integrating.
    """
    k = np.asarray(k, dtype=float)
    n = k.shape[0]
    zmax = np.clip(k, -HALF_WIDTH, HALF_WIDTH)
    shift = k * zmax - 0.5 * zmax ** 2
    kk = np.concatenate([k, k]) if with_mean else k
    ss = np.concatenate([shift, shift]) if with_mean else shift

    def integrand(z, owner):
        vals = np.exp(kk[owner] * z - 0.5 * z * z - ss[owner]) / SQRT_2PI
        return np.where(owner >= n, z * vals, vals)

    m = kk.shape[0]
    vals = adaptive_simpson(integrand, np.full(m, -HALF_WIDTH), np.full(m, HALF_WIDTH))
    mass = vals[:n]
    if np.any(mass <= 0) or not np.all(np.isfinite(vals)):
        raise QuadratureFailure("nonpositive or non-finite moment integral")
    log_j = shift + np.log(mass)
    if with_mean:
        return log_j, vals[n:] / mass
    return log_j


def _fluctuation_dual(cm: CostModel, occ: EdgeOccupancy, eps: float, tau: float) -> float:
    """Dual objective minus the constant ``sum phi * mean``.

    Substituting ``A = mean + sigma z`` turns each integral
    ``int p(A) exp(phi A / tau) dA`` over ``mean +/- 12 sigma`` into
    ``exp(phi mean / tau) * int N(z) exp(k z) dz`` with ``k = phi sigma / tau``.
    Zero-variance edges are point masses and contribute only the constant.
    """
    k = _tilt_rates(cm, occ, tau)
    return tau * eps + tau * float(np.sum(_tilted_integrals(k)))


def _tilt_rates(cm: CostModel, occ: EdgeOccupancy, tau: float) -> np.ndarray:
    sigma = np.sqrt(cm.variance)
    random = sigma > 0
    return occ.phi[random] * sigma[random] / tau


def dual_derivative(cm: CostModel, occ: EdgeOccupancy, eps: float, tau: float) -> float:
    """d/dtau of the dual objective: ``eps + sum_e (log J_e - k_e * tilted mean_e)``."""
    _check(cm, occ)
    eps = _check_eps(eps)
    if not tau > 0:
        raise InputError("tau must be positive")
    k = _tilt_rates(cm, occ, tau)
    log_j, zbar = _tilted_integrals(k, with_mean=True)
    return eps + float(np.sum(log_j - k * zbar))


def dual_objective(cm: CostModel, occ: EdgeOccupancy, eps: float, tau: float) -> float:
    """``tau eps + tau sum_e log int p(A_e) exp(phi_e A_e / tau) dA_e`` by quadrature."""
    _check(cm, occ)
    eps = _check_eps(eps)
    if not tau > 0:
        raise InputError("tau must be positive")
    return nominal_cost(cm, occ) + _fluctuation_dual(cm, occ, eps, tau)


def golden_section(f: Callable[[float], float], a: float, b: float, rtol: float = 1e-6,
                   max_iter: int = 500) -> tuple[float, float, int]:
    """Shrink ``[a, b]`` around the minimum of a unimodal ``f``.

    Stops once the bracket is narrower than ``rtol`` times its midpoint and
    returns ``(a, b, iterations)``.
    """
    c = a + INV_PHI2 * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for it in range(1, max_iter + 1):
        if fc < fd:
            b, d, fd = d, c, fc
            c = a + INV_PHI2 * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        if b - a <= rtol * 0.5 * (a + b):
            return a, b, it
    raise NotConverged(f"golden-section search did not converge in {max_iter} iterations")


@dataclass(frozen=True)
class DualEvaluation:
    tau_star: float
    value: float
    iterations: int
    interior: bool = True


def dual_worst_case(cm: CostModel, occ: EdgeOccupancy, eps: float, tau_lo: float = 1e-8,
                    bracket_rtol: float = 1e-4) -> DualEvaluation:
    """Minimize the dual over ``tau`` in ``[tau_lo, tau_hi]``.

    ``tau_hi`` starts at 1 and is doubled until the objective increases.
    Golden-section search brackets the minimizer to ``bracket_rtol``; inside
    that bracket the zero of the quadrature derivative is then located by
    Brent's method, since objective values alone cannot resolve a flat
    minimum below ~sqrt(machine eps).
    """
    _check(cm, occ)
    eps = _check_eps(eps)
    if eps == 0:
        raise InputError("the dual oracle needs eps > 0")
    base = nominal_cost(cm, occ)

    def h(tau: float) -> float:
        return _fluctuation_dual(cm, occ, eps, tau)

    def dh(tau: float) -> float:
        return dual_derivative(cm, occ, eps, tau)

    if not np.any(_tilt_rates(cm, occ, 1.0) > 0):
        # nothing can fluctuate: the dual is tau * eps + const, minimal at tau_lo
        return DualEvaluation(tau_lo, base + h(tau_lo), 0, interior=False)

    tau_hi = 1.0
    prev = h(tau_hi)
    for _ in range(200):
        nxt = h(2.0 * tau_hi)
        tau_hi *= 2.0
        if nxt > prev:
            break
        prev = nxt
    else:
        raise NotConverged("could not bracket the dual minimizer")
    a, b, iters = golden_section(h, tau_lo, tau_hi, rtol=bracket_rtol)
    for _ in range(60):
        if dh(a) < 0 < dh(b):
            break
        a, b = max(tau_lo, a / 1.5), min(tau_hi, b * 1.5)
    else:
        raise NotConverged("derivative does not change sign around the golden-section bracket")
    tau, info = brentq(dh, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, full_output=True)
    if not info.converged:
        raise NotConverged("Brent polish on the dual derivative failed")
    return DualEvaluation(tau, base + h(tau), iters + info.function_calls)


# -- brute-force plan design ---------------------------------------------------

MAX_GRID_POINTS = 20_000_000


def brute_force_plan(net: Network, zeta=None, alpha: float = 1.0, grid_step: float = 1e-3) -> Plan:
    """Grid search for the regularized-cost minimizer on the feasible polytope.

    Each outlet ``s`` with positive demand spreads ``zeta_s`` over its
    ``|F||W|`` paths; all but the last share are grid coordinates.  At most
    three free coordinates are supported.
    """
    alpha = _check_alpha(alpha)
    zeta = _demand(net, zeta)
    if not grid_step > 0:
        raise InputError("grid_step must be positive")
    kf, kw, ks = net.shape
    group = kf * kw
    active = [s for s in range(ks) if zeta[s] > 0]
    free = len(active) * (group - 1)
    if free > 3:
        raise TooLarge(f"feasible polytope has {free} free dimensions; at most 3 supported")
    n = int(round(1.0 / grid_step))
    if (n + 1) ** free > MAX_GRID_POINTS:
        raise TooLarge(f"grid would have {(n + 1) ** free} points")

    ticks = np.arange(n + 1) / n
    if free:
        coords = np.stack([g.ravel() for g in np.meshgrid(*([ticks] * free), indexing="ij")], axis=1)
    else:
        coords = np.zeros((1, 0))
    cost = path_costs(net).reshape(group, ks)
    probs = np.zeros((coords.shape[0], group, ks))
    ok = np.ones(coords.shape[0], dtype=bool)
    col = 0
    for s in active:
        shares = coords[:, col:col + group - 1]
        col += group - 1
        last = 1.0 - shares.sum(axis=1)
        ok &= last >= -1e-12
        probs[:, :group - 1, s] = zeta[s] * shares
        probs[:, group - 1, s] = zeta[s] * np.clip(last, 0.0, None)
    probs = probs[ok]
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(probs > 0, probs * np.log(probs), 0.0)
    objective = np.einsum("nij,ij->n", probs, cost) + alpha * plogp.sum(axis=(1, 2))
    best = probs[int(np.argmin(objective))]
    return Plan(best.reshape(kf, kw, ks), alpha, "brute_force")


# -- Monte Carlo over KL-feasible mean shifts ---------------------------------------

def gaussian_shift_kl(delta, variance) -> float:
    """Summed KL of ``N(mean + delta, var)`` from ``N(mean, var)``; infinite for
    a shifted zero-variance edge."""
    delta = np.asarray(delta, dtype=float)
    variance = np.asarray(variance, dtype=float)
    if np.any((variance == 0) & (delta != 0)):
        return float("inf")
    pos = variance > 0
    return float(np.sum(delta[pos] ** 2 / (2.0 * variance[pos])))


def tilt_expected_cost(cm: CostModel, occ: EdgeOccupancy, delta) -> float:
    _check(cm, occ)
    return float(np.dot(occ.phi, cm.mean + np.asarray(delta, dtype=float)))


def sample_feasible_shifts(cm: CostModel, eps: float, n: int, seed) -> np.ndarray:
    """``n`` mean shifts uniform in the KL ball ``sum delta^2 / (2 var) <= eps``."""
    eps = _check_eps(eps)
    if n < 1:
        raise InputError("n must be at least 1")
    rng = np.random.default_rng(seed)
    sigma = np.sqrt(cm.variance)
    live = np.flatnonzero(sigma > 0)
    deltas = np.zeros((n, len(cm)))
    if live.size == 0 or eps == 0:
        return deltas
    w = rng.standard_normal((n, live.size))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    radius = math.sqrt(2.0 * eps) * rng.uniform(size=(n, 1)) ** (1.0 / live.size)
    deltas[:, live] = sigma[live] * w * radius
    return deltas


def mc_feasible_tilt_check(cm: CostModel, occ: EdgeOccupancy, eps: float, n: int = 10000,
                           seed=0) -> float:
    """Largest expected cost over ``n`` sampled KL-feasible mean shifts."""
    _check(cm, occ)
    deltas = sample_feasible_shifts(cm, eps, n, seed)
    return float(np.max((cm.mean[None, :] + deltas) @ occ.phi))
