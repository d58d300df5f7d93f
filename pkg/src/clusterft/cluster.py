"""Cluster-state patterns: graphs, adaptive measurement, byproduct frames.

State convention for this module: qubit i of a StateVector is
``graph.nodes[i]``.  Measuring or deleting a node removes it from both the
graph and the state, so live states only hold unmeasured nodes.

A level's byproduct is tracked as (-1)^sign X^x Z^z.  The two Pauli bits
follow the usual teleportation update; the extra sign bit makes the
per-branch output phase-exact.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import gates
from . import simulator as sim


class ClusterError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    id: int
    level: int
    layer: int
    angle: float | None = 0.0  # None marks the unmeasured output node
    adaptive: bool = True
    t: int | None = None

    @property
    def is_output(self) -> bool:
        return self.angle is None


@dataclass(frozen=True)
class ClusterGraph:
    nodes: tuple
    edges: tuple

    def __post_init__(self):
        nodes = tuple(self.nodes)
        edges = tuple(tuple(sorted(e)) for e in self.edges)
        ids = [n.id for n in nodes]
        if len(set(ids)) != len(ids):
            raise ClusterError("duplicate node id")
        idset = set(ids)
        for a, b in edges:
            if a == b:
                raise ClusterError(f"self-loop on node {a}")
            if a not in idset or b not in idset:
                raise ClusterError(f"edge ({a}, {b}) references a missing node")
        if len(set(edges)) != len(edges):
            raise ClusterError("duplicate edge")
        outputs_per_level: dict = {}
        for n in nodes:
            if n.is_output:
                if n.t is not None:
                    raise ClusterError(f"output node {n.id} has a time label")
                outputs_per_level[n.level] = outputs_per_level.get(n.level, 0) + 1
            elif n.t is None:
                raise ClusterError(f"measured node {n.id} has no time label")
        if any(c > 1 for c in outputs_per_level.values()):
            raise ClusterError("more than one output node on a level")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)

    def node(self, node_id: int) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise ClusterError(f"unknown node {node_id}")

    def index(self, node_id: int) -> int:
        for i, n in enumerate(self.nodes):
            if n.id == node_id:
                return i
        raise ClusterError(f"unknown node {node_id}")

    def neighbors(self, node_id: int) -> list:
        return [b if a == node_id else a for a, b in self.edges if node_id in (a, b)]

    def without(self, node_id: int) -> "ClusterGraph":
        self.node(node_id)
        return ClusterGraph(
            tuple(n for n in self.nodes if n.id != node_id),
            tuple(e for e in self.edges if node_id not in e),
        )

    def subgraph(self, node_ids) -> "ClusterGraph":
        keep = set(node_ids)
        return ClusterGraph(
            tuple(n for n in self.nodes if n.id in keep),
            tuple(e for e in self.edges if e[0] in keep and e[1] in keep),
        )

    @property
    def levels(self) -> list:
        return sorted({n.level for n in self.nodes})

    @property
    def layers(self) -> list:
        return sorted({n.layer for n in self.nodes})

    def is_bridge(self, edge) -> bool:
        a, b = edge
        return self.node(a).level != self.node(b).level

    @property
    def bridges(self) -> list:
        return [e for e in self.edges if self.is_bridge(e)]

    def outputs(self) -> dict:
        """level -> output node id."""
        return {n.level: n.id for n in self.nodes if n.is_output}

    def to_json(self) -> str:
        nodes = []
        for n in self.nodes:
            d = {"id": n.id, "level": n.level, "layer": n.layer}
            if n.is_output:
                d["output"] = True
            else:
                d.update(angle=n.angle, adaptive=n.adaptive, t=n.t)
            nodes.append(d)
        return json.dumps({"nodes": nodes, "edges": [list(e) for e in self.edges]})

    @classmethod
    def from_json(cls, text: str) -> "ClusterGraph":
        doc = json.loads(text)
        nodes = []
        for d in doc["nodes"]:
            if d.get("output"):
                nodes.append(Node(d["id"], d["level"], d["layer"], None, False, None))
            else:
                nodes.append(
                    Node(d["id"], d["level"], d["layer"], float(d["angle"]), bool(d.get("adaptive", True)), d["t"])
                )
        return cls(tuple(nodes), tuple(tuple(e) for e in doc["edges"]))


@dataclass(frozen=True)
class PauliFrame:
    """Per-level byproduct bits plus one global sign bit."""

    x: tuple
    z: tuple
    sign: int = 0

    @classmethod
    def zeros(cls, n_levels: int) -> "PauliFrame":
        return cls((0,) * n_levels, (0,) * n_levels, 0)

    def _check(self, level: int):
        if not 0 <= level < len(self.x):
            raise ClusterError(f"unknown level {level}")


def frame_update(frame: PauliFrame, level: int, m: int) -> PauliFrame:
    """Byproduct after teleporting level ``level`` with outcome m:
    x' = z + m, z' = x (mod 2).  The sign picks up x·z from reordering."""
    frame._check(level)
    x, z = list(frame.x), list(frame.z)
    sign = frame.sign ^ (x[level] & z[level])
    x[level], z[level] = (z[level] + m) % 2, x[level]
    return PauliFrame(tuple(x), tuple(z), sign)


def bridge_update(frame: PauliFrame, a: int, b: int) -> PauliFrame:
    """Push the byproducts of levels a, b through a CZ between them:
    CZ (X^xa Z^za ⊗ X^xb Z^zb) = (-1)^(xa xb) (X^xa Z^(za+xb) ⊗ X^xb Z^(zb+xa)) CZ."""
    frame._check(a)
    frame._check(b)
    x, z = frame.x, list(frame.z)
    z[a] ^= x[b]
    z[b] ^= x[a]
    return PauliFrame(x, tuple(z), frame.sign ^ (x[a] & x[b]))


def measurement_basis(node: Node, frame: PauliFrame) -> np.ndarray:
    """H Z_{s α} with s = (-1)^x on the node's level (s = +1 if not adaptive)."""
    if node.is_output:
        raise ClusterError(f"node {node.id} is an output node")
    s = -1 if (node.adaptive and frame.x[node.level]) else 1
    return gates.hz(s * node.angle)


def prepare(graph: ClusterGraph) -> sim.StateVector:
    n = len(graph.nodes)
    if n > sim.MAX_QUBITS:
        raise ClusterError(f"{n} nodes exceed the simulator limit")
    state = sim.StateVector.plus(n)
    for a, b in graph.edges:
        state = sim.apply(state, gates.CZ, [graph.index(a), graph.index(b)])
    return state


def final_correction(frame: PauliFrame, levels=None) -> np.ndarray:
    """σ = (-1)^sign ⊗_levels X^x Z^z in kron order over ``levels``."""
    levels = range(len(frame.x)) if levels is None else levels
    mats = [gates.pauli_xz(frame.x[l], frame.z[l]) for l in levels]
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return -out if frame.sign else out


@dataclass(frozen=True)
class MeasureOutcome:
    m: int
    posterior: sim.StateVector
    frame: PauliFrame
    graph: ClusterGraph
    prob: float


def _pending_bridges(graph: ClusterGraph, node: Node):
    for nb in graph.neighbors(node.id):
        other = graph.node(nb)
        if other.level != node.level:
            yield other.level


def measure_node(state, graph: ClusterGraph, node_id: int, frame: PauliFrame, forced=None, seed=None) -> MeasureOutcome:
    """Measure a node in its adaptive basis and remove it.

    A bridge edge still present in the live graph has not been accounted
    for yet, so its CZ is pushed through the frame before the teleport
    update.  Removing the node removes the edge, so each bridge counts once.
    """
    node = graph.node(node_id)
    if node.is_output:
        raise ClusterError(f"node {node_id} is an output node")
    earlier = [n.id for n in graph.nodes if not n.is_output and n.t < node.t]
    if earlier:
        raise ClusterError(f"node {node_id} measured before nodes {earlier}")
    for other_level in _pending_bridges(graph, node):
        frame = bridge_update(frame, node.level, other_level)
    q = graph.index(node_id)
    m, post, prob = sim.measure(state, q, measurement_basis(node, frame), forced=forced, seed=seed)
    post = sim.discard(post, q, m)
    return MeasureOutcome(m, post, frame_update(frame, node.level, m), graph.without(node_id), prob)


def z_delete(state, graph: ClusterGraph, node_id: int, forced=None, seed=None):
    """Computational-basis measurement, then Z^m on every neighbour.
    Returns (m, posterior, graph without the node)."""
    q = graph.index(node_id)
    m, post, _ = sim.measure(state, q, None, forced=forced, seed=seed)
    if m:
        for nb in graph.neighbors(node_id):
            post = sim.apply(post, gates.Z, [graph.index(nb)])
    return m, sim.discard(post, q, m), graph.without(node_id)


@dataclass(frozen=True)
class PatternResult:
    outputs: np.ndarray  # state of the output nodes in kron order over output_levels
    output_levels: tuple
    frame: PauliFrame
    outcomes: dict
    prob: float

    def corrected(self) -> np.ndarray:
        return final_correction(self.frame, self.output_levels).conj().T @ self.outputs


def measurement_order(graph: ClusterGraph) -> list:
    measured = [n for n in graph.nodes if not n.is_output]
    return [n.id for n in sorted(measured, key=lambda n: (n.t, n.id))]


def run_pattern(graph: ClusterGraph, forced: dict | None = None, seed=None, n_levels=None) -> PatternResult:
    """Prepare the whole graph and measure every non-output node in time order.

    ``forced`` maps node id to outcome; unforced nodes are sampled.
    """
    forced = forced or {}
    rng = np.random.default_rng(seed)
    n_levels = n_levels if n_levels is not None else (max(graph.levels) + 1 if graph.nodes else 0)
    state = prepare(graph)
    frame = PauliFrame.zeros(n_levels)
    outcomes, prob = {}, 1.0
    live = graph
    for nid in measurement_order(graph):
        r = measure_node(state, live, nid, frame, forced=forced.get(nid), seed=rng)
        state, live, frame = r.posterior, r.graph, r.frame
        outcomes[nid] = r.m
        prob *= r.prob
    return _collect(state, live, frame, outcomes, prob)


def _collect(state, live: ClusterGraph, frame: PauliFrame, outcomes, prob) -> PatternResult:
    outs = live.outputs()
    levels = tuple(sorted(outs))
    order = [live.index(outs[l]) for l in levels]
    if len(order) != len(live.nodes):
        raise ClusterError("unmeasured non-output nodes remain")
    return PatternResult(sim.amplitudes_kron(state, order), levels, frame, outcomes, prob)


__all__ = [
    "Node",
    "ClusterGraph",
    "PauliFrame",
    "ClusterError",
    "frame_update",
    "bridge_update",
    "measurement_basis",
    "prepare",
    "measure_node",
    "z_delete",
    "final_correction",
    "run_pattern",
    "PatternResult",
    "measurement_order",
]
