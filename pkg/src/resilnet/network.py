"""Three-layer logistics network: nodes, edges, costs, demand and paths.

Nodes live in four layers: the virtual production node ``i``, factories,
distribution bases (DBs, called warehouses in documents) and sales outlets.
Edges only connect consecutive layers, so every path is a triple
``(f, w, s)`` with the virtual node as implicit prefix.

Edge arrays are kept per layer (``production`` has shape ``(F,)``, ``fw`` has
shape ``(F, W)`` and ``ws`` has shape ``(W, S)``).  The canonical flat edge
order used everywhere else is production edges, then factory->DB edges in
row-major order, then DB->outlet edges in row-major order.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, NamedTuple

import numpy as np

from .errors import (
    DemandNotNormalized,
    EmptyLayer,
    InputError,
    MissingEdgeCost,
    NegativeVariance,
    UnknownEdge,
)

VIRTUAL_LABEL = "i"
DEFAULT_SIGMA2_RATIO = 0.01  # sigma_e^2 = ratio * cost_e^2, i.e. sigma = 0.1 * cost
DEMAND_TOL = 1e-12


class Layer(enum.IntEnum):
    VIRTUAL = 0
    FACTORY = 1
    DB = 2
    OUTLET = 3


class NodeId(NamedTuple):
    layer: Layer
    index: int


class Edge(NamedTuple):
    source: NodeId
    target: NodeId

    @property
    def layer(self) -> int:
        """0 for production edges, 1 for factory->DB, 2 for DB->outlet."""
        return int(self.source.layer)


class Path(NamedTuple):
    factory: int
    db: int
    outlet: int


VIRTUAL = NodeId(Layer.VIRTUAL, 0)

_ADMISSIBLE = {
    (Layer.VIRTUAL, Layer.FACTORY),
    (Layer.FACTORY, Layer.DB),
    (Layer.DB, Layer.OUTLET),
}


def _frozen(a: Any) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Network:
    """Immutable layered network with nominal costs and cost variances."""

    factories: tuple[str, ...]
    warehouses: tuple[str, ...]
    outlets: tuple[str, ...]
    production: np.ndarray
    fw: np.ndarray
    ws: np.ndarray
    production_var: np.ndarray
    fw_var: np.ndarray
    ws_var: np.ndarray
    demand: np.ndarray
    positions: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    sigma2_ratio: float = DEFAULT_SIGMA2_RATIO

    def __post_init__(self) -> None:
        for name in ("production", "fw", "ws", "production_var", "fw_var", "ws_var", "demand"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        kf, kw, ks = self.shape
        expected = {
            "production": (kf,), "production_var": (kf,),
            "fw": (kf, kw), "fw_var": (kf, kw),
            "ws": (kw, ks), "ws_var": (kw, ks),
            "demand": (ks,),
        }
        for name, shp in expected.items():
            if getattr(self, name).shape != shp:
                raise InputError(f"{name} has shape {getattr(self, name).shape}, expected {shp}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return len(self.factories), len(self.warehouses), len(self.outlets)

    @property
    def n_nodes(self) -> int:
        return 1 + sum(self.shape)

    @property
    def n_edges(self) -> int:
        kf, kw, ks = self.shape
        return kf + kf * kw + kw * ks

    @property
    def n_paths(self) -> int:
        kf, kw, ks = self.shape
        return kf * kw * ks

    # -- edges in canonical order ------------------------------------------
    def edges(self) -> list[Edge]:
        kf, kw, ks = self.shape
        out = [Edge(VIRTUAL, NodeId(Layer.FACTORY, f)) for f in range(kf)]
        out += [Edge(NodeId(Layer.FACTORY, f), NodeId(Layer.DB, w))
                for f in range(kf) for w in range(kw)]
        out += [Edge(NodeId(Layer.DB, w), NodeId(Layer.OUTLET, s))
                for w in range(kw) for s in range(ks)]
        return out

    def edge_costs(self) -> np.ndarray:
        return np.concatenate([self.production, self.fw.ravel(), self.ws.ravel()])

    def edge_variances(self) -> np.ndarray:
        return np.concatenate([self.production_var, self.fw_var.ravel(), self.ws_var.ravel()])

    def edge_index(self, edge: Edge) -> int:
        kf, kw, ks = self.shape
        src, dst = edge
        if (src.layer, dst.layer) not in _ADMISSIBLE:
            raise UnknownEdge(f"not an edge of the layered graph: {edge}")
        sizes = {Layer.VIRTUAL: 1, Layer.FACTORY: kf, Layer.DB: kw, Layer.OUTLET: ks}
        if not (0 <= src.index < sizes[src.layer] and 0 <= dst.index < sizes[dst.layer]):
            raise UnknownEdge(f"edge endpoint out of range: {edge}")
        if src.layer == Layer.VIRTUAL:
            return dst.index
        if src.layer == Layer.FACTORY:
            return kf + src.index * kw + dst.index
        return kf + kf * kw + src.index * ks + dst.index

    def edge_at(self, k: int) -> Edge:
        kf, kw, ks = self.shape
        if not 0 <= k < self.n_edges:
            raise UnknownEdge(f"edge index {k} out of range")
        if k < kf:
            return Edge(VIRTUAL, NodeId(Layer.FACTORY, k))
        k -= kf
        if k < kf * kw:
            return Edge(NodeId(Layer.FACTORY, k // kw), NodeId(Layer.DB, k % kw))
        k -= kf * kw
        return Edge(NodeId(Layer.DB, k // ks), NodeId(Layer.OUTLET, k % ks))

    # -- labels --------------------------------------------------------------
    def node_label(self, node: NodeId) -> str:
        if node.layer == Layer.VIRTUAL:
            return VIRTUAL_LABEL
        names = {Layer.FACTORY: self.factories, Layer.DB: self.warehouses,
                 Layer.OUTLET: self.outlets}[node.layer]
        return names[node.index]

    def node_from_label(self, label: str) -> NodeId:
        if label == VIRTUAL_LABEL:
            return VIRTUAL
        for layer, names in ((Layer.FACTORY, self.factories), (Layer.DB, self.warehouses),
                             (Layer.OUTLET, self.outlets)):
            if label in names:
                return NodeId(layer, names.index(label))
        raise UnknownEdge(f"unknown node id {label!r}")

    def edge_label(self, edge: Edge) -> str:
        return f"{self.node_label(edge.source)}->{self.node_label(edge.target)}"

    def edge_from_label(self, label: str) -> Edge:
        parts = label.split("->")
        if len(parts) != 2:
            raise UnknownEdge(f"edge label must look like 'a->b', got {label!r}")
        edge = Edge(self.node_from_label(parts[0].strip()), self.node_from_label(parts[1].strip()))
        self.edge_index(edge)
        return edge

    def edge_labels(self) -> list[str]:
        return [self.edge_label(e) for e in self.edges()]


def path_cost(net: Network, x: Path) -> float:
    f, w, s = x
    return float(net.production[f] + net.fw[f, w] + net.ws[w, s])


def path_costs(net: Network) -> np.ndarray:
    """All path costs as an ``(F, W, S)`` array."""
    return net.production[:, None, None] + net.fw[:, :, None] + net.ws[None, :, :]


@dataclass(frozen=True, eq=False)
class PathIndex:
    """Row-major enumeration of F x W x S with outlet and edge reverse maps."""

    shape: tuple[int, int, int]
    paths: tuple[Path, ...]
    by_outlet: Mapping[int, np.ndarray]
    by_edge: Mapping[Edge, np.ndarray]

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self) -> Iterator[Path]:
        return iter(self.paths)


def enumerate_paths(net: Network) -> PathIndex:
    kf, kw, ks = net.shape
    paths = tuple(Path(f, w, s) for f in range(kf) for w in range(kw) for s in range(ks))
    by_outlet: dict[int, list[int]] = {s: [] for s in range(ks)}
    by_edge: dict[Edge, list[int]] = {e: [] for e in net.edges()}
    for k, (f, w, s) in enumerate(paths):
        by_outlet[s].append(k)
        fn, wn, sn = NodeId(Layer.FACTORY, f), NodeId(Layer.DB, w), NodeId(Layer.OUTLET, s)
        by_edge[Edge(VIRTUAL, fn)].append(k)
        by_edge[Edge(fn, wn)].append(k)
        by_edge[Edge(wn, sn)].append(k)
    return PathIndex(
        shape=net.shape,
        paths=paths,
        by_outlet={s: np.array(v, dtype=int) for s, v in by_outlet.items()},
        by_edge={e: np.array(v, dtype=int) for e, v in by_edge.items()},
    )


# -- documents -----------------------------------------------------------------

def _node_entries(doc: Mapping[str, Any], key: str) -> list[Mapping[str, Any]]:
    entries = doc.get(key)
    if not entries:
        raise EmptyLayer(f"layer {key!r} is empty or missing")
    out = []
    for item in entries:
        if isinstance(item, str):
            item = {"id": item}
        if "id" not in item:
            raise InputError(f"{key} entry without an id: {item!r}")
        out.append(item)
    return out


def _validate_demand(doc: Mapping[str, Any], outlets: tuple[str, ...]) -> np.ndarray:
    raw = doc.get("demand")
    if raw is None:
        return np.full(len(outlets), 1.0 / len(outlets))
    if not isinstance(raw, Mapping):
        raise InputError("demand must map outlet id -> weight")
    unknown = set(raw) - set(outlets)
    if unknown:
        raise InputError(f"demand refers to unknown outlets: {sorted(unknown)}")
    zeta = np.array([float(raw.get(s, 0.0)) for s in outlets])
    if not np.all(np.isfinite(zeta)) or np.any(zeta < 0):
        raise DemandNotNormalized("demand weights must be finite and nonnegative")
    total = math.fsum(zeta)
    if abs(total - 1.0) > DEMAND_TOL:
        raise DemandNotNormalized(f"demand sums to {total!r}, expected 1")
    return zeta / total


def validate_network(doc: Mapping[str, Any]) -> Network:
    """Build a :class:`Network` from a parsed network document.

    Transport costs come from explicit ``edges`` entries when present and
    otherwise from the Euclidean distance between endpoint positions.
    Production costs come from ``production_cost`` (scalar, list in factory
    order, or map factory id -> cost) unless overridden by an ``i->f`` edge.
    Variances default to ``default_sigma2_ratio * cost**2``.
    """
    layers = {key: _node_entries(doc, key) for key in ("factories", "warehouses", "outlets")}
    ids = {key: tuple(str(item["id"]) for item in items) for key, items in layers.items()}
    all_ids = [VIRTUAL_LABEL, *ids["factories"], *ids["warehouses"], *ids["outlets"]]
    if len(set(all_ids)) != len(all_ids):
        raise InputError("node ids must be unique and must not use the virtual id 'i'")
    factories, warehouses, outlets = ids["factories"], ids["warehouses"], ids["outlets"]
    kf, kw, ks = len(factories), len(warehouses), len(outlets)

    positions: dict[str, tuple[float, float]] = {}
    for items in layers.values():
        for item in items:
            if item.get("position") is not None:
                pos = tuple(float(c) for c in item["position"])
                if len(pos) != 2:
                    raise InputError(f"position of {item['id']!r} must be [x, y]")
                positions[str(item["id"])] = pos  # type: ignore[assignment]

    ratio = float(doc.get("default_sigma2_ratio", DEFAULT_SIGMA2_RATIO))
    if ratio < 0 or not math.isfinite(ratio):
        raise NegativeVariance("default_sigma2_ratio must be a nonnegative number")

    nan = float("nan")
    prod = np.full(kf, nan)
    fw = np.full((kf, kw), nan)
    ws = np.full((kw, ks), nan)
    prod_var = np.full(kf, nan)
    fw_var = np.full((kf, kw), nan)
    ws_var = np.full((kw, ks), nan)

    pc = doc.get("production_cost")
    if isinstance(pc, Mapping):
        for fid, c in pc.items():
            if fid not in factories:
                raise InputError(f"production_cost refers to unknown factory {fid!r}")
            prod[factories.index(fid)] = float(c)
    elif isinstance(pc, (list, tuple)):
        if len(pc) != kf:
            raise InputError("production_cost list must have one entry per factory")
        prod[:] = [float(c) for c in pc]
    elif pc is not None:
        prod[:] = float(pc)

    for f, fid in enumerate(factories):
        for w, wid in enumerate(warehouses):
            if fid in positions and wid in positions:
                fw[f, w] = math.dist(positions[fid], positions[wid])
    for w, wid in enumerate(warehouses):
        for s, sid in enumerate(outlets):
            if wid in positions and sid in positions:
                ws[w, s] = math.dist(positions[wid], positions[sid])

    lookup = {}
    for f, fid in enumerate(factories):
        lookup[(VIRTUAL_LABEL, fid)] = (prod, prod_var, (f,))
        for w, wid in enumerate(warehouses):
            lookup[(fid, wid)] = (fw, fw_var, (f, w))
    for w, wid in enumerate(warehouses):
        for s, sid in enumerate(outlets):
            lookup[(wid, sid)] = (ws, ws_var, (w, s))

    for entry in doc.get("edges") or ():
        key = (str(entry.get("from")), str(entry.get("to")))
        if key not in lookup:
            raise UnknownEdge(f"edge {key[0]}->{key[1]} is not admissible")
        if entry.get("cost") is None:
            raise MissingEdgeCost(f"edge {key[0]}->{key[1]} has no cost")
        cost_arr, var_arr, at = lookup[key]
        cost_arr[at] = float(entry["cost"])
        if entry.get("sigma2") is not None:
            var_arr[at] = float(entry["sigma2"])

    for name, arr in (("production", prod), ("factory->DB", fw), ("DB->outlet", ws)):
        if np.any(~np.isfinite(arr)):
            raise MissingEdgeCost(f"{int(np.sum(~np.isfinite(arr)))} {name} edge(s) have no cost")
    for cost_arr, var_arr in ((prod, prod_var), (fw, fw_var), (ws, ws_var)):
        unset = np.isnan(var_arr)
        var_arr[unset] = ratio * cost_arr[unset] ** 2
        if np.any(var_arr < 0) or not np.all(np.isfinite(var_arr)):
            raise NegativeVariance("edge variances must be finite and nonnegative")

    return Network(
        factories=factories, warehouses=warehouses, outlets=outlets,
        production=prod, fw=fw, ws=ws,
        production_var=prod_var, fw_var=fw_var, ws_var=ws_var,
        demand=_validate_demand(doc, outlets),
        positions=positions, sigma2_ratio=ratio,
    )


def network_to_document(net: Network) -> dict[str, Any]:
    """Inverse of :func:`validate_network`; only non-derivable edges are listed."""
    def node_list(names):
        return [{"id": n, "position": list(net.positions[n])} if n in net.positions else {"id": n}
                for n in names]

    doc: dict[str, Any] = {
        "factories": node_list(net.factories),
        "warehouses": node_list(net.warehouses),
        "outlets": node_list(net.outlets),
    }
    prod = [float(c) for c in net.production]
    doc["production_cost"] = prod[0] if len(set(prod)) == 1 else prod
    doc["default_sigma2_ratio"] = net.sigma2_ratio

    edges = []
    derived_prod = prod[0] if len(set(prod)) == 1 else None
    for k, e in enumerate(net.edges()):
        cost = float(net.edge_costs()[k])
        var = float(net.edge_variances()[k])
        a, b = net.node_label(e.source), net.node_label(e.target)
        if e.layer == 0:
            derived = derived_prod if derived_prod is not None else cost
        elif a in net.positions and b in net.positions:
            derived = math.dist(net.positions[a], net.positions[b])
        else:
            derived = None
        entry: dict[str, Any] = {"from": a, "to": b, "cost": cost}
        cost_ok = derived is not None and derived == cost
        var_ok = var == net.sigma2_ratio * cost ** 2
        if not var_ok:
            entry["sigma2"] = var
        if not (cost_ok and var_ok):
            edges.append(entry)
    if edges:
        doc["edges"] = edges
    doc["demand"] = {s: float(z) for s, z in zip(net.outlets, net.demand)}
    return doc


def dumps_network(net: Network) -> str:
    return json.dumps(network_to_document(net), indent=2) + "\n"


def load_network(path) -> Network:
    with open(path) as fh:
        return validate_network(json.load(fh))


def random_network_document(kf: int, kw: int, ks: int, seed: int, box: float = 10.0,
                            production_cost: float = 1.0,
                            sigma2_ratio: float = DEFAULT_SIGMA2_RATIO) -> dict[str, Any]:
    if min(kf, kw, ks) < 1:
        raise EmptyLayer("every layer needs at least one node")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, box, size=(kf + kw + ks, 2))
    names = ([f"f{k + 1}" for k in range(kf)] + [f"w{k + 1}" for k in range(kw)]
             + [f"s{k + 1}" for k in range(ks)])
    nodes = [{"id": n, "position": [float(x), float(y)]} for n, (x, y) in zip(names, pts)]
    return {
        "factories": nodes[:kf],
        "warehouses": nodes[kf:kf + kw],
        "outlets": nodes[kf + kw:],
        "production_cost": float(production_cost),
        "default_sigma2_ratio": float(sigma2_ratio),
        "demand": {n["id"]: 1.0 / ks for n in nodes[kf + kw:]},
    }


def generate_random_network(kf: int, kw: int, ks: int, seed: int, box: float = 10.0,
                            production_cost: float = 1.0,
                            sigma2_ratio: float = DEFAULT_SIGMA2_RATIO) -> Network:
    """Random geometric network: positions uniform in ``[0, box]^2``.

    Transport costs are Euclidean distances, production costs are equal across
    factories and demand is uniform.  Deterministic for a fixed ``seed``.
    """
    return validate_network(random_network_document(kf, kw, ks, seed, box,
                                                    production_cost, sigma2_ratio))
