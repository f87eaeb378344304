import numpy as np

from resilnet.network import Network
from resilnet.planner import Plan


def make_network(production, fw, ws, production_var=None, fw_var=None, ws_var=None, demand=None):
    production = np.asarray(production, dtype=float)
    fw = np.asarray(fw, dtype=float)
    ws = np.asarray(ws, dtype=float)
    kf, kw, ks = production.shape[0], fw.shape[1], ws.shape[1]
    return Network(
        factories=tuple(f"f{k + 1}" for k in range(kf)),
        warehouses=tuple(f"w{k + 1}" for k in range(kw)),
        outlets=tuple(f"s{k + 1}" for k in range(ks)),
        production=production, fw=fw, ws=ws,
        production_var=np.zeros(kf) if production_var is None else production_var,
        fw_var=np.zeros((kf, kw)) if fw_var is None else fw_var,
        ws_var=np.zeros((kw, ks)) if ws_var is None else ws_var,
        demand=np.full(ks, 1.0 / ks) if demand is None else demand,
    )


def single_path_network(costs=(1.0, 1.0, 1.0), variances=(1.0, 1.0, 1.0)):
    a, b, c = costs
    va, vb, vc = variances
    return make_network([a], [[b]], [[c]], [va], [[vb]], [[vc]], [1.0])


def random_plan(shape, rng, zeta=None):
    """Feasible plan with Dirichlet-distributed conditionals per outlet."""
    kf, kw, ks = shape
    zeta = np.full(ks, 1.0 / ks) if zeta is None else np.asarray(zeta)
    cond = rng.dirichlet(np.ones(kf * kw), size=ks).T.reshape(kf, kw, ks)
    return Plan(cond * zeta[None, None, :], 1.0, "random")


def point_mass_plan(shape, at):
    p = np.zeros(shape)
    p[at] = 1.0
    return Plan(p, 1.0, "point")
