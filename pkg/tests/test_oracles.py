import math

import numpy as np
import pytest

from resilnet.errors import TooLarge
from resilnet.network import generate_random_network
from resilnet.oracles import (
    adaptive_simpson,
    brute_force_plan,
    dual_derivative,
    dual_objective,
    dual_worst_case,
    gaussian_shift_kl,
    golden_section,
    mc_feasible_tilt_check,
    sample_feasible_shifts,
    tilt_expected_cost,
)
from resilnet.planner import solve_gibbs
from resilnet.resilience import (
    CostModel,
    edge_occupancy,
    fluctuation_mass,
    nominal_cost,
    single_edge_worst,
    worst_case_cost,
    worst_case_means,
)

from helpers import make_network, point_mass_plan, single_path_network


@pytest.fixture
def unit():
    net = single_path_network()
    return CostModel.from_network(net), edge_occupancy(point_mass_plan((1, 1, 1), (0, 0, 0)))


def random_instance(seed, ratio=0.05, alpha=0.9):
    net = generate_random_network(3, 4, 5, seed, sigma2_ratio=ratio)
    return CostModel.from_network(net), edge_occupancy(solve_gibbs(net, None, alpha))


def analytic_dual(cm, occ, eps, tau):
    # Gaussian integral done by hand: tau eps + sum(phi mean + phi^2 var / (2 tau))
    return tau * eps + float(np.sum(occ.phi * cm.mean + occ.phi ** 2 * cm.variance / (2 * tau)))


def test_adaptive_simpson_known_integrals():
    def f(z, owner):
        return np.where(owner == 0, np.sin(z), z ** 4)

    vals = adaptive_simpson(f, [0.0, -1.0], [math.pi, 2.0])
    assert vals[0] == pytest.approx(2.0, abs=1e-12)
    assert vals[1] == pytest.approx((32 + 1) / 5, abs=1e-12)


def test_golden_section_parabola():
    a, b, it = golden_section(lambda x: (x - 1.7) ** 2, 0.0, 5.0, rtol=1e-8)
    assert a <= 1.7 <= b and b - a <= 1e-7 and it > 0


@pytest.mark.parametrize("seed", range(3))
def test_dual_objective_matches_analytic(seed):
    cm, occ = random_instance(seed)
    k_max = float(np.max(occ.phi * np.sqrt(cm.variance)))
    for eps in (0.1, 1.0, 7.0):
        for tau in (0.02, 0.1, 1.0, 5.0):
            if k_max / tau > 6:
                continue  # tilt too close to the 12 sigma window
            assert dual_objective(cm, occ, eps, tau) == pytest.approx(
                analytic_dual(cm, occ, eps, tau), abs=1e-8)


def test_dual_objective_window_truncation():
    # a tilt past the window loses mass, so the quadrature value falls below the closed form
    cm, occ = random_instance(0)
    k_max = float(np.max(occ.phi * np.sqrt(cm.variance)))
    tau = k_max / 14
    assert dual_objective(cm, occ, 1.0, tau) < analytic_dual(cm, occ, 1.0, tau) - 1e-6


def test_dual_objective_zero_variance(unit):
    cm, occ = unit
    flat = CostModel(cm.mean, np.zeros(3))
    for tau in (1e-3, 0.5, 3.0):
        assert dual_objective(flat, occ, 2.0, tau) == pytest.approx(2.0 * tau + 1.0, abs=1e-14)


def test_dual_objective_convex_in_tau():
    cm, occ = random_instance(1)
    taus = np.geomspace(0.005, 5, 25)
    vals = np.array([dual_objective(cm, occ, 1.0, t) for t in taus])
    for i in range(len(taus) - 2):
        lo, hi = taus[i], taus[i + 2]
        mid = dual_objective(cm, occ, 1.0, 0.5 * (lo + hi))
        assert mid <= 0.5 * (vals[i] + vals[i + 2]) + 1e-12


def test_dual_derivative_finite_difference():
    cm, occ = random_instance(2)
    for tau in (0.02, 0.2, 2.0):
        h = 1e-5 * tau
        fd = (dual_objective(cm, occ, 1.0, tau + h) - dual_objective(cm, occ, 1.0, tau - h)) / (2 * h)
        assert dual_derivative(cm, occ, 1.0, tau) == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_dual_worst_case_unit(unit):
    cm, occ = unit
    res = dual_worst_case(cm, occ, 1.0)
    assert res.value == pytest.approx(1.816497, abs=1e-6)
    assert res.value == pytest.approx(worst_case_cost(cm, 1.0, occ), rel=1e-9)
    assert res.tau_star == pytest.approx(math.sqrt(1 / 6), rel=1e-6)
    assert abs(dual_derivative(cm, occ, 1.0, res.tau_star)) <= 1e-8


def test_dual_worst_case_tiny_eps(unit):
    cm, occ = unit
    res = dual_worst_case(cm, occ, 1e-12)
    assert res.value == pytest.approx(nominal_cost(cm, occ), abs=1e-5)


def test_dual_worst_case_without_fluctuation(unit):
    cm, occ = unit
    res = dual_worst_case(CostModel(cm.mean, np.zeros(3)), occ, 3.0)
    assert not res.interior and res.value == pytest.approx(1.0, abs=1e-7)


@pytest.mark.parametrize("seed", range(3))
def test_dual_worst_case_random(seed):
    cm, occ = random_instance(seed, ratio=0.2, alpha=[0.3, 0.9, 7.0][seed])
    for eps in (0.1, 7.0):
        res = dual_worst_case(cm, occ, eps)
        closed = worst_case_cost(cm, eps, occ)
        assert res.value == pytest.approx(closed, rel=1e-6)
        assert res.tau_star == pytest.approx(math.sqrt(fluctuation_mass(cm, occ) / (2 * eps)), rel=1e-6)


def test_single_edge_dual_unit(unit):
    cm, occ = unit
    res = dual_worst_case(cm.only_edge(1), occ, 2.0)
    assert res.value == pytest.approx(5 / 3, rel=1e-9)
    assert res.value == pytest.approx(single_edge_worst(cm, 2.0, occ, 1), rel=1e-9)


def test_brute_force_two_paths():
    net = make_network([1.0, 2.0], [[0.0], [0.0]], [[0.0]], demand=[1.0])
    plan = brute_force_plan(net, None, 1.0, grid_step=1e-4)
    assert plan.probs[0, 0, 0] == pytest.approx(0.7311, abs=1e-3)
    assert plan.probs[0, 0, 0] == pytest.approx(solve_gibbs(net, None, 1.0).probs[0, 0, 0], abs=1e-4)


def test_brute_force_trivial_and_symmetric():
    one = make_network([1.0], [[1.0]], [[1.0]], demand=[1.0])
    for alpha in (0.1, 5.0):
        assert brute_force_plan(one, None, alpha).probs[0, 0, 0] == 1.0
    sym = make_network([1.0], [[2.0, 2.0]], [[1.0], [1.0]], demand=[1.0])
    plan = brute_force_plan(sym, None, 0.4, grid_step=1e-3)
    np.testing.assert_allclose(plan.probs.ravel(), [0.5, 0.5], atol=1e-12)


def test_brute_force_too_large(net345):
    with pytest.raises(TooLarge):
        brute_force_plan(net345, None, 1.0)


def test_brute_force_vs_gibbs_objective():
    net = make_network([0.0, 0.4], [[0.2], [0.0]], [[1.0, 0.3]], demand=[0.6, 0.4])
    from resilnet.planner import plan_objective
    brute = brute_force_plan(net, None, 0.5, grid_step=1e-3)
    gibbs = solve_gibbs(net, None, 0.5)
    gap = plan_objective(net, brute, 0.5) - plan_objective(net, gibbs, 0.5)
    assert 0 <= gap < 1e-5


def test_mc_upper_bound_unit(unit):
    cm, occ = unit
    best = mc_feasible_tilt_check(cm, occ, 1.0, n=10000, seed=3)
    assert best <= 1.816497 + 1e-9
    assert best <= worst_case_cost(cm, 1.0, occ) + 1e-9
    shift = worst_case_means(cm, 1.0, occ) - cm.mean
    assert gaussian_shift_kl(shift, cm.variance) == pytest.approx(1.0, rel=1e-12)
    assert tilt_expected_cost(cm, occ, shift) == pytest.approx(worst_case_cost(cm, 1.0, occ), abs=1e-9)


def test_mc_samples_are_feasible(rng):
    cm, occ = random_instance(4)
    deltas = sample_feasible_shifts(cm, 0.5, 500, seed=9)
    kls = [gaussian_shift_kl(d, cm.variance) for d in deltas]
    assert max(kls) <= 0.5 * (1 + 1e-12)


def test_mc_eps_zero_is_nominal(unit):
    cm, occ = unit
    assert mc_feasible_tilt_check(cm, occ, 0.0, n=100, seed=1) == nominal_cost(cm, occ)


def test_shift_kl_of_zero_variance_edge():
    assert gaussian_shift_kl([0.1], [0.0]) == math.inf
    assert gaussian_shift_kl([0.0], [0.0]) == 0.0
