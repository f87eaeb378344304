import csv
import io
import json
import math

import numpy as np
import pytest

from resilnet.cli import demo_network, main, parse_grid
from resilnet.errors import InputError
from resilnet.network import load_network, path_costs
from resilnet.planner import load_plan, total_variation
from resilnet.resilience import CostModel, edge_occupancy, riskiest_edge


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture(scope="module")
def demo_plans(tmp_path_factory):
    root = tmp_path_factory.mktemp("plans")
    paths = {}
    for alpha in (0.3, 0.9, 7.0):
        paths[alpha] = root / f"p{alpha}.json"
        assert main(["plan", "demo", "--alpha", str(alpha), "--out", str(paths[alpha])]) == 0
    return paths


def test_parse_grid():
    np.testing.assert_allclose(parse_grid("0:1:0.25"), [0, 0.25, 0.5, 0.75, 1.0])
    assert parse_grid("0:10:0.1").size == 101
    assert parse_grid("0,7").tolist() == [0.0, 7.0]
    for bad in ("", "1,0", "-1,2", "0:1:0", "a:b:c"):
        with pytest.raises(InputError):
            parse_grid(bad)


def test_generate_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "generate", 3, 4, 5, "--seed", 42, "--out", a)[0] == 0
    assert run(capsys, "--seed", 42, "generate", 3, 4, 5, "--out", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    net = load_network(a)
    np.testing.assert_allclose(net.demand, 0.2)
    assert np.all(net.edge_costs() > 0) and net.n_edges == 35


def test_plan_prints_summary(tmp_path, capsys):
    out = tmp_path / "p.json"
    code, stdout, _ = run(capsys, "plan", "demo", "--alpha", 0.9, "--out", out)
    assert code == 0
    keys = [line.split("\t")[0] for line in stdout.splitlines()]
    assert keys == ["entropy", "objective", "nominal_cost"]
    doc = json.loads(out.read_text())
    assert doc["solver"] == "bridge" and len(doc["paths"]) == 60


def test_plan_to_stdout_keeps_stdout_json(capsys):
    code, stdout, stderr = run(capsys, "plan", "demo", "--alpha", 0.9, "--solver", "gibbs")
    assert code == 0 and json.loads(stdout)["solver"] == "gibbs"
    assert "entropy" in stderr


def test_gibbs_and_bridge_agree(tmp_path, capsys):
    net = demo_network()
    for alpha in (0.3, 7.0):
        g, b = tmp_path / "g.json", tmp_path / "b.json"
        run(capsys, "plan", "demo", "--alpha", alpha, "--solver", "gibbs", "--out", g)
        run(capsys, "plan", "demo", "--alpha", alpha, "--solver", "bridge", "--out", b)
        assert total_variation(load_plan(net, g), load_plan(net, b)) <= 1e-8


def test_low_alpha_concentrates_on_cheapest_path(demo_plans):
    net = demo_network()
    plan = load_plan(net, demo_plans[0.3])
    costs = path_costs(net)
    for s in range(5):
        cheapest = np.unravel_index(np.argmin(costs[:, :, s]), costs.shape[:2])
        share = plan.probs[cheapest + (s,)] / plan.probs[:, :, s].sum()
        assert share >= 0.9


def test_high_alpha_spreads_production(demo_plans):
    plan = load_plan(demo_network(), demo_plans[7.0])
    np.testing.assert_allclose(plan.factory_marginals(), 1 / 3, atol=0.05)


def test_evaluate_single_and_multi(demo_plans, tmp_path, capsys):
    code, out, err = run(capsys, "evaluate", "demo", demo_plans[0.3], "--eps", "0,7")
    assert code == 0
    rows = read_csv(out)
    assert [r["epsilon"] for r in rows] == ["0.0", "7.0"]
    assert float(rows[1]["l_star"]) > float(rows[0]["l_star"])
    assert "crossing[alpha_0.3]\t7.0" in err

    dest = tmp_path / "curves.csv"
    code, out, _ = run(capsys, "evaluate", "demo", demo_plans[0.3], demo_plans[7.0], "--out", dest)
    assert code == 0
    rows = read_csv(dest.read_text())
    assert list(rows[0]) == ["epsilon", "l_star_alpha_0.3", "l_star_alpha_7"]
    assert len(rows) == 101
    assert "crossing[alpha_7]\tnone" in out


def test_evaluate_threshold_and_scale(demo_plans, capsys):
    _, plain, _ = run(capsys, "evaluate", "demo", demo_plans[0.9], "--eps", "0,1")
    _, scaled, err = run(capsys, "--total-cost-scale", "evaluate", "demo", demo_plans[0.9],
                         "--eps", "0,1", "--threshold", 1.0)
    for a, b in zip(read_csv(plain), read_csv(scaled)):
        assert float(b["l_star"]) == pytest.approx(3 * float(a["l_star"]), rel=1e-15)
    assert "crossing[alpha_0.9]\t0.0" in err


def test_edge_risk_ranking(demo_plans, capsys):
    code, out, err = run(capsys, "edge-risk", "demo", demo_plans[0.3], "--eps", 7)
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 35 and [int(r["rank"]) for r in rows] == list(range(1, 36))
    net = demo_network()
    occ = edge_occupancy(load_plan(net, demo_plans[0.3]))
    top = net.edge_labels()[riskiest_edge(CostModel.from_network(net), 7.0, occ)]
    assert rows[0]["edge"] == top
    assert f"riskiest_edge\t{top}" in err
    values = [float(r["l_edge_star"]) for r in rows]
    assert values == sorted(values, reverse=True)


def test_edge_risk_sweep_sqrt_slope(demo_plans, capsys):
    code, out, _ = run(capsys, "edge-risk", "demo", demo_plans[0.3], "--edge", "f1->w4",
                       "--eps-grid", "0:4:1")
    assert code == 0
    rows = read_csv(out)
    assert list(rows[0]) == ["epsilon", "l_star", "l_star_edge_f1->w4"]
    net = demo_network()
    occ = edge_occupancy(load_plan(net, demo_plans[0.3]))
    k = net.edge_index(net.edge_from_label("f1->w4"))
    slope = occ.phi[k] * math.sqrt(net.edge_variances()[k]) * math.sqrt(2)
    base = float(rows[0]["l_star_edge_f1->w4"])
    for r in rows[1:]:
        rise = float(r["l_star_edge_f1->w4"]) - base
        assert rise == pytest.approx(slope * math.sqrt(float(r["epsilon"])), rel=1e-12)


def test_high_alpha_single_edge_fluctuation_smaller(demo_plans, capsys):
    rises = {}
    for alpha in (0.3, 7.0):
        _, out, _ = run(capsys, "edge-risk", "demo", demo_plans[alpha], "--edge", "f1->w4",
                        "--eps-grid", "0,7")
        rows = read_csv(out)
        rises[alpha] = float(rows[1]["l_star_edge_f1->w4"]) - float(rows[0]["l_star_edge_f1->w4"])
    assert rises[7.0] < rises[0.3]


def test_edge_risk_unknown_edge(demo_plans, capsys):
    code, _, err = run(capsys, "edge-risk", "demo", demo_plans[0.3], "--edge", "f1->s1")
    assert code == 2 and "error" in err


def test_verify_demo_passes(capsys):
    code, out, _ = run(capsys, "verify", "demo", "--alpha", 0.9, "--eps", 7)
    assert code == 0
    names = [line.split("\t")[1] for line in out.splitlines()]
    assert {"gibbs_vs_bridge", "dual_vs_closed_form", "kl_decomposition",
            "occupancy_simplex", "plan_feasibility"} <= set(names)
    assert all(line.startswith("PASS") for line in out.splitlines())


def test_verify_eps_zero(capsys):
    code, out, _ = run(capsys, "verify", "demo", "--eps", 0)
    assert code == 0 and "PASS\tdual_vs_closed_form" in out


def test_verify_tiny_network_uses_brute_force(tmp_path, capsys):
    net = tmp_path / "tiny.json"
    run(capsys, "generate", 1, 2, 1, "--seed", 3, "--out", net)
    code, out, _ = run(capsys, "verify", net, "--alpha", 0.5, "--eps", 1)
    assert code == 0
    assert "skipped" not in [l for l in out.splitlines() if "brute_force" in l][0]


def test_verify_corrupted_plan_fails(demo_plans, tmp_path, capsys):
    doc = json.loads(demo_plans[0.9].read_text())
    doc["paths"][0]["p"] += 0.05
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "verify", "demo", "--plan", bad)
    assert code == 1
    assert "FAIL\tplan_feasibility" in out


def test_evaluate_rejects_mismatched_plan(tmp_path, capsys):
    net = tmp_path / "n.json"
    plan = tmp_path / "p.json"
    run(capsys, "generate", 2, 2, 2, "--out", net)
    run(capsys, "plan", net, "--alpha", 1, "--out", plan)
    code, _, err = run(capsys, "evaluate", "demo", plan)
    assert code == 2 and "error" in err


def test_input_errors_exit_two(tmp_path, capsys):
    assert run(capsys, "plan", tmp_path / "missing.json", "--alpha", 1)[0] == 2
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert run(capsys, "plan", broken, "--alpha", 1)[0] == 2
    assert run(capsys, "plan", "demo", "--alpha", -1)[0] == 2
    assert run(capsys, "bench", "--sizes", "3x3", "--reps", 1)[0] == 2


def test_bridge_non_convergence_exits_three(capsys):
    code, _, err = run(capsys, "plan", "demo", "--alpha", 0.9, "--max-iter", 0)
    assert code == 3 and "numerical" in err


def test_bench_csv(capsys):
    code, out, _ = run(capsys, "bench", "--sizes", "3x3x3,6x6x6", "--reps", 2)
    assert code == 0
    rows = read_csv(out)
    assert list(rows[0]) == ["|V|", "mean_seconds", "std_seconds"]
    assert [int(r["|V|"]) for r in rows] == [10, 19]
    assert all(float(r["mean_seconds"]) > 0 for r in rows)


def test_bench_default_sizes_step_by_nine(capsys):
    code, out, _ = run(capsys, "bench", "--k-max", 9, "--reps", 1)
    assert [int(r["|V|"]) for r in read_csv(out)] == [10, 19, 28]


def test_sweep_writes_reports(tmp_path, capsys):
    out_dir = tmp_path / "sweep"
    code, _, _ = run(capsys, "sweep", "demo", "--eps", "0:10:0.5", "--out-dir", out_dir)
    assert code == 0
    summary = read_csv((out_dir / "summary.csv").read_text())
    assert [r["alpha"] for r in summary] == ["0.3", "0.9", "7.0"]
    entropy = [float(r["entropy"]) for r in summary]
    assert entropy == sorted(entropy)
    assert summary[0]["crossing_eps"] != "none" and summary[2]["crossing_eps"] == "none"
    curves = read_csv((out_dir / "curves.csv").read_text())
    assert len(curves) == 21
    assert (out_dir / "plan_alpha_7.json").exists()


def test_sweep_stdout_is_deterministic(capsys):
    first = run(capsys, "sweep", "demo", "--eps", "0,7")[1]
    second = run(capsys, "sweep", "demo", "--eps", "0,7")[1]
    assert first == second
