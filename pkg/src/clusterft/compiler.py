"""Circuit canonicalisation, circuit-to-cluster compilation and schedules.

Time slots are 0-indexed; the cluster node realising a gate at slot s sits
in layer s + 1 (layers are 1-indexed).  Every qubit starts in |+>; a
``PrepPlus`` marks a qubit that becomes live at that slot.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import gates
from . import simulator as sim
from .cluster import ClusterGraph, Node, PatternResult, PauliFrame, measure_node
from .cluster import _collect

# name -> (arity, parameter count)
GATE_SIGNATURES = {
    "PrepPlus": (1, 0),
    "I": (1, 0),
    "H": (1, 0),
    "Z": (1, 1),  # Z_theta
    "XZ": (1, 2),  # X_alpha Z_beta
    "CZ": (2, 0),
    "HZ": (1, 1),
    "HH_CZ": (2, 0),
}
CANONICAL = {"PrepPlus", "HZ", "HH_CZ"}


class CompileError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    t: int
    name: str
    qubits: tuple
    params: tuple = ()

    def matrix(self) -> np.ndarray:
        p = self.params
        match self.name:
            case "I" | "PrepPlus":
                return gates.I2
            case "H":
                return gates.H
            case "Z":
                return gates.rz(p[0])
            case "XZ":
                return gates.rx(p[0]) @ gates.rz(p[1])
            case "CZ":
                return gates.CZ
            case "HZ":
                return gates.hz(p[0])
            case "HH_CZ":
                return gates.HH_CZ
        raise CompileError(f"unsupported gate {self.name}")


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    steps: tuple

    def __post_init__(self):
        steps = tuple(sorted(self.steps, key=lambda g: (g.t, g.qubits)))
        used: dict = {}
        born: dict = {}
        for g in steps:
            if g.name not in GATE_SIGNATURES:
                raise CompileError(f"unsupported gate {g.name}")
            arity, n_params = GATE_SIGNATURES[g.name]
            if len(g.qubits) != arity or len(g.params) != n_params:
                raise CompileError(f"{g.name} needs {arity} qubits and {n_params} params, got {g}")
            if g.t < 0:
                raise CompileError("negative time slot")
            for q in g.qubits:
                if not 0 <= q < self.n_qubits:
                    raise CompileError(f"qubit {q} out of range")
                if (g.t, q) in used:
                    raise CompileError(f"qubit {q} used twice in slot {g.t}")
                used[(g.t, q)] = g
            if len(set(g.qubits)) != len(g.qubits):
                raise CompileError(f"repeated qubit in {g}")
            if g.name == "PrepPlus":
                q = g.qubits[0]
                if q in born:
                    raise CompileError(f"qubit {q} prepared twice")
                if any(t < g.t for (t, qq) in used if qq == q):
                    raise CompileError(f"qubit {q} used before its preparation")
                born[q] = g.t
        for (t, q), g in used.items():
            if q in born and t < born[q]:
                raise CompileError(f"qubit {q} used before its preparation")
        object.__setattr__(self, "steps", steps)

    @property
    def depth(self) -> int:
        return max((g.t for g in self.steps), default=-1) + 1

    def births(self) -> dict:
        return {g.qubits[0]: g.t for g in self.steps if g.name == "PrepPlus"}

    def is_canonical(self) -> bool:
        return all(g.name in CANONICAL for g in self.steps)

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n_qubits,
                "steps": [
                    {"t": g.t, "gate": g.name, "qubits": list(g.qubits), "params": list(g.params)}
                    for g in self.steps
                ],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        doc = json.loads(text)
        try:
            steps = tuple(
                Gate(int(s["t"]), s["gate"], tuple(s["qubits"]), tuple(float(p) for p in s.get("params", ())))
                for s in doc["steps"]
            )
            return cls(int(doc["n"]), steps)
        except (KeyError, TypeError) as exc:
            raise CompileError(f"malformed circuit document: {exc}") from exc


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Little-endian unitary of the whole circuit (PrepPlus acts as identity)."""
    u = np.eye(2**c.n_qubits, dtype=complex)
    for g in c.steps:
        if g.name != "PrepPlus":
            u = sim.embed(g.matrix(), list(g.qubits), c.n_qubits) @ u
    return u


def circuit_state(c: Circuit) -> sim.StateVector:
    """Output state from |+>^n.  Late-prepared qubits are untouched until
    their PrepPlus, so starting them in |+> is exact."""
    state = sim.StateVector.plus(c.n_qubits)
    for g in c.steps:
        if g.name != "PrepPlus":
            state = sim.apply(state, g.matrix(), list(g.qubits))
    return state


def euler_xz(u: np.ndarray) -> tuple:
    """Angles (a, b, c) with u = phase · Z_a X_b Z_c."""
    v = u / np.sqrt(np.linalg.det(u))
    cb, sb = abs(v[0, 0]), abs(v[1, 0])
    # arctan2 stays accurate near b = 0 where arccos(cb) does not
    b = 2 * np.arctan2(sb, cb)
    a_plus_c = -2 * np.angle(v[0, 0]) if cb > 1e-12 else 0.0
    a_minus_c = 2 * (np.angle(v[1, 0]) + np.pi / 2) if sb > 1e-12 else 0.0
    return (a_plus_c + a_minus_c) / 2, b, (a_plus_c - a_minus_c) / 2


def _single_to_xz(u: np.ndarray) -> list:
    """Time-ordered X_a Z_b parameter pairs realising u up to phase."""
    a, b, c = euler_xz(u)
    return [(b, c), (0.0, a)]


def _stage_one(g: Gate) -> dict:
    """Per-qubit time-ordered list of stage-one gates for one input gate."""
    match g.name:
        case "I":
            return {g.qubits[0]: [("I", ())]}
        case "XZ":
            return {g.qubits[0]: [("XZ", g.params)]}
        case "Z":
            return {g.qubits[0]: [("XZ", (0.0, g.params[0]))]}
        case "H" | "HZ":
            return {g.qubits[0]: [("XZ", p) for p in _single_to_xz(g.matrix())]}
        case "CZ":
            return {"pair": [("CZ", ())]}
        case "HH_CZ":
            pre = [("CZ", ())]
            post = [("XZ", p) for p in _single_to_xz(gates.H)]
            return {"pair": pre, "post": post}
    raise CompileError(f"unsupported gate {g.name}")


def canonicalize(c: Circuit) -> Circuit:
    """Rewrite into {PrepPlus, HZ, HH_CZ}, preserving the unitary up to phase.

    Stage one maps every gate to {I, X_a Z_b, CZ}; stage two doubles each
    slot: I -> HZ_0 HZ_0, X_a Z_b -> HZ_b then HZ_a (the operator is
    HZ_a HZ_b), CZ -> HH_CZ then HZ_0 on both qubits (the operator is
    (H⊗H)(H⊗H)CZ).  Live idle qubits are padded with I so every level has a
    node in every layer.  An already canonical circuit is returned as is.
    """
    if c.is_canonical():
        return c
    births = c.births()
    by_slot: dict = {}
    for g in c.steps:
        by_slot.setdefault(g.t, []).append(g)

    stage_one = []  # (slot, name, qubits, params)
    s1 = 0
    prep_at: dict = {}
    for t in range(c.depth):
        lanes: dict = {}
        pairs = []
        for g in by_slot.get(t, []):
            if g.name == "PrepPlus":
                continue
            parts = _stage_one(g)
            if "pair" in parts:
                q1, q2 = g.qubits
                lanes[q1] = [None] * len(parts["pair"]) + parts.get("post", [])
                lanes[q2] = [None] * len(parts["pair"]) + parts.get("post", [])
                pairs.append((g.qubits, parts["pair"]))
            else:
                lanes.update(parts)
        width = max([len(v) for v in lanes.values()] + [1])
        for (q1, q2), seq in pairs:
            for k, (name, params) in enumerate(seq):
                stage_one.append((s1 + k, name, (q1, q2), params))
        for q in range(c.n_qubits):
            if q in births and births[q] >= t:
                if births[q] == t:
                    prep_at[q] = s1 + width - 1
                continue
            seq = lanes.get(q, [])
            seq = seq + [("I", ())] * (width - len(seq))
            for k, item in enumerate(seq):
                if item is not None:
                    stage_one.append((s1 + k, item[0], (q,), item[1]))
        s1 += width

    steps = []
    for q, s in prep_at.items():
        steps.append(Gate(2 * s + 1, "PrepPlus", (q,)))
    for s, name, qubits, params in stage_one:
        a, b = 2 * s, 2 * s + 1
        if name == "I":
            steps += [Gate(a, "HZ", qubits, (0.0,)), Gate(b, "HZ", qubits, (0.0,))]
        elif name == "XZ":
            alpha, beta = params
            steps += [Gate(a, "HZ", qubits, (beta,)), Gate(b, "HZ", qubits, (alpha,))]
        elif name == "CZ":
            steps.append(Gate(a, "HH_CZ", qubits))
            steps += [Gate(b, "HZ", (q,), (0.0,)) for q in qubits]
    return Circuit(c.n_qubits, tuple(steps))


def to_cluster(c: Circuit) -> ClusterGraph:
    """One level per qubit; one node per HZ; two angle-0 nodes and a bridge
    edge per HH_CZ; an output node after each level's last gate."""
    if not c.is_canonical():
        raise CompileError("to_cluster needs a canonical circuit")
    births = c.births()
    per_level: dict = {q: [] for q in range(c.n_qubits)}
    for g in c.steps:
        if g.name == "HZ":
            per_level[g.qubits[0]].append((g.t, g.params[0], None))
        elif g.name == "HH_CZ":
            q1, q2 = g.qubits
            per_level[q1].append((g.t, 0.0, q2))
            per_level[q2].append((g.t, 0.0, q1))
    nodes, edges = [], []
    slot_node: dict = {}
    next_id = 0
    for q in range(c.n_qubits):
        items = sorted(per_level[q])
        slots = [s for s, _, _ in items]
        if slots and slots != list(range(slots[0], slots[-1] + 1)):
            raise CompileError(f"level {q} has idle slots between gates {slots}")
        if slots and q in births and slots[0] != births[q] + 1:
            raise CompileError(f"level {q} idles after its preparation")
        prev = None
        for k, (s, angle, _) in enumerate(items):
            nodes.append(Node(next_id, q, s + 1, float(angle), k > 0, s + 1))
            slot_node[(q, s)] = next_id
            if prev is not None:
                edges.append((prev, next_id))
            prev = next_id
            next_id += 1
        out_layer = slots[-1] + 2 if slots else births.get(q, -1) + 2
        nodes.append(Node(next_id, q, out_layer, None, False, None))
        if prev is not None:
            edges.append((prev, next_id))
        next_id += 1
    for g in c.steps:
        if g.name == "HH_CZ":
            edges.append((slot_node[(g.qubits[0], g.t)], slot_node[(g.qubits[1], g.t)]))
    return ClusterGraph(tuple(nodes), tuple(edges))


# ---------------------------------------------------------------- schedules


@dataclass(frozen=True)
class PrepareLayer:
    layers: tuple
    nodes: tuple
    edges: tuple


@dataclass(frozen=True)
class MeasureLayer:
    layers: tuple
    nodes: tuple


@dataclass(frozen=True)
class Schedule:
    kind: str
    phases: tuple

    def to_json(self) -> str:
        out = []
        for p in self.phases:
            if isinstance(p, PrepareLayer):
                out.append({"phase": "prepare", "layers": list(p.layers), "nodes": list(p.nodes), "edges": [list(e) for e in p.edges]})
            else:
                out.append({"phase": "measure", "layers": list(p.layers), "nodes": list(p.nodes)})
        return json.dumps({"kind": self.kind, "phases": out})


def _layer_parts(g: ClusterGraph):
    if any(n.layer is None or n.layer < 1 for n in g.nodes):
        raise CompileError("graph is not layered (layers must be >= 1)")
    layer_of = {n.id: n.layer for n in g.nodes}
    edges_at: dict = {}
    for e in g.edges:
        edges_at.setdefault(max(layer_of[e[0]], layer_of[e[1]]), []).append(e)
    return layer_of, edges_at


def _prep(g, layers, edges_at) -> PrepareLayer:
    nodes = tuple(n.id for n in g.nodes if n.layer in layers)
    edges = tuple(e for l in layers for e in edges_at.get(l, []))
    return PrepareLayer(tuple(layers), nodes, edges)


def _meas(g, layers):
    nodes = tuple(
        n.id for n in sorted(g.nodes, key=lambda n: (n.t or 0, n.id)) if n.layer in layers and not n.is_output
    )
    return MeasureLayer(tuple(layers), nodes) if nodes else None


def _build(g: ClusterGraph, kind: str, chunks) -> Schedule:
    """chunks: list of (prepare layers, measure layers) in execution order."""
    _, edges_at = _layer_parts(g)
    phases = []
    for prep_layers, meas_layers in chunks:
        if prep_layers:
            phases.append(_prep(g, prep_layers, edges_at))
        if meas_layers:
            m = _meas(g, meas_layers)
            if m is not None:
                phases.append(m)
    return Schedule(kind, tuple(phases))


def schedule_one_buffered(g: ClusterGraph) -> Schedule:
    """Prep(1, 2), Meas(1), Prep(3), Meas(2), ... keeping one layer of buffer."""
    _layer_parts(g)
    last = max(g.layers, default=0)
    if last == 0:
        return Schedule("one_buffered", ())
    chunks = [(list(range(1, min(2, last) + 1)), [1] if last >= 2 else [])]
    for j in range(3, last + 1):
        chunks.append(([j], [j - 1]))
    if last >= 2:
        chunks.append(([], [last]))
    else:
        chunks.append(([], [1]))
    return _build(g, "one_buffered", chunks)


def schedule_two_at_a_time(g: ClusterGraph, kind: str = "two_at_a_time") -> Schedule:
    """Prep(1-4), Meas(1, 2), Prep(5, 6), Meas(3, 4), ..."""
    _layer_parts(g)
    last = max(g.layers, default=0)
    if last == 0:
        return Schedule(kind, ())
    first = list(range(1, min(4, last) + 1))
    chunks = [(first, [1, 2])]
    j = 5
    measured_upto = 2
    while j <= last:
        chunks.append(([l for l in (j, j + 1) if l <= last], [measured_upto + 1, measured_upto + 2]))
        measured_upto += 2
        j += 2
    while measured_upto < last:
        chunks.append(([], [measured_upto + 1, measured_upto + 2]))
        measured_upto += 2
    return _build(g, kind, chunks)


def validate_dangling_restriction(g: ClusterGraph) -> list:
    """Bridges must join nodes in odd layers; returns the offending edges."""
    out = []
    for a, b in g.bridges:
        la, lb = g.node(a).layer, g.node(b).layer
        if la != lb or la % 2 == 0:
            out.append((a, b))
    return out


def schedule_dangling(g: ClusterGraph) -> Schedule:
    """Two-at-a-time order for a cluster grown from dangling-node pieces."""
    bad = validate_dangling_restriction(g)
    if bad:
        raise CompileError(f"bridges outside odd layers: {bad}")
    return schedule_two_at_a_time(g, kind="dangling")


SCHEDULES = {
    "one_buffered": schedule_one_buffered,
    "two_at_a_time": schedule_two_at_a_time,
    "dangling": schedule_dangling,
}


def pad_for_dangling(c: Circuit) -> Circuit:
    """Shift bridges onto odd layers by inserting three HZ_{pi/2} on every
    live qubit before an offending HH_CZ slot.  (H Z_{pi/2})^3 = -i I, so the
    unitary is preserved up to a global phase; an odd-length pad is needed
    because even-length pads cannot change layer parity."""
    if not c.is_canonical():
        raise CompileError("pad_for_dangling needs a canonical circuit")
    steps = list(c.steps)
    while True:
        bad = sorted({g.t for g in steps if g.name == "HH_CZ" and (g.t + 1) % 2 == 0})
        if not bad:
            return Circuit(c.n_qubits, tuple(steps))
        s = bad[0]
        # qubits with steps on both sides of the cut need the pad to stay contiguous
        before = {q for g in steps if g.t < s for q in g.qubits}
        after = {q for g in steps if g.t >= s for q in g.qubits}
        steps = [Gate(g.t + 3, g.name, g.qubits, g.params) if g.t >= s else g for g in steps]
        for q in sorted(before & after):
            steps += [Gate(s + k, "HZ", (q,), (np.pi / 2,)) for k in range(3)]


def validate_schedule(g: ClusterGraph, sched: Schedule) -> list:
    """Problems with a schedule: missing/duplicate work or measuring a node
    before one of its edges is applied."""
    problems = []
    prepared, measured, applied = set(), set(), set()
    for p in sched.phases:
        if isinstance(p, PrepareLayer):
            for nid in p.nodes:
                if nid in prepared:
                    problems.append(f"node {nid} prepared twice")
                prepared.add(nid)
            for e in p.edges:
                if e in applied:
                    problems.append(f"edge {e} applied twice")
                if e[0] not in prepared or e[1] not in prepared:
                    problems.append(f"edge {e} applied before its endpoints exist")
                applied.add(e)
        else:
            for nid in p.nodes:
                if nid in measured:
                    problems.append(f"node {nid} measured twice")
                for e in g.edges:
                    if nid in e and e not in applied:
                        problems.append(f"node {nid} measured before edge {e}")
                measured.add(nid)
    want = {n.id for n in g.nodes if not n.is_output}
    if measured != want:
        problems.append(f"measured set differs: missing {sorted(want - measured)}")
    if applied != set(g.edges):
        problems.append("not every edge applied")
    return problems


# ---------------------------------------------------------------- execution


def schedule_actions(sched: Schedule) -> list:
    """Flatten a schedule into ('prep', id), ('edge', a, b), ('measure', id)."""
    acts = []
    for p in sched.phases:
        if isinstance(p, PrepareLayer):
            acts += [("prep", nid) for nid in p.nodes]
            acts += [("edge", a, b) for a, b in p.edges]
        else:
            acts += [("measure", nid) for nid in p.nodes]
    return acts


@dataclass
class _Live:
    state: sim.StateVector
    graph: ClusterGraph
    frame: PauliFrame


def _apply_action(live: _Live, full: ClusterGraph, act, forced=None, seed=None):
    if act[0] == "prep":
        node = full.node(act[1])
        state = sim.tensor(live.state, gates.PLUS)
        graph = ClusterGraph(live.graph.nodes + (node,), live.graph.edges)
        return _Live(state, graph, live.frame), None, 1.0
    if act[0] == "edge":
        _, a, b = act
        state = sim.apply(live.state, gates.CZ, [live.graph.index(a), live.graph.index(b)])
        graph = ClusterGraph(live.graph.nodes, live.graph.edges + ((a, b),))
        return _Live(state, graph, live.frame), None, 1.0
    r = measure_node(live.state, live.graph, act[1], live.frame, forced=forced, seed=seed)
    return _Live(r.posterior, r.graph, r.frame), r.m, r.prob


def _empty_live(n_levels: int) -> _Live:
    return _Live(sim.StateVector(np.ones(1, dtype=complex)), ClusterGraph((), ()), PauliFrame.zeros(n_levels))


def execute(g: ClusterGraph, sched: Schedule, forced: dict | None = None, seed=None, n_levels=None) -> PatternResult:
    """Run a schedule noiselessly; ``forced`` maps node id to outcome."""
    forced = forced or {}
    rng = np.random.default_rng(seed)
    n_levels = n_levels if n_levels is not None else max(g.levels, default=-1) + 1
    live = _empty_live(n_levels)
    outcomes, prob = {}, 1.0
    for act in schedule_actions(sched):
        live, m, p = _apply_action(live, g, act, forced.get(act[1]) if act[0] == "measure" else None, rng)
        if m is not None:
            outcomes[act[1]] = m
            prob *= p
    return _collect(live.state, live.graph, live.frame, outcomes, prob)


def enumerate_branches(g: ClusterGraph, sched: Schedule, n_levels=None, min_prob: float = 1e-12):
    """Yield a PatternResult for every measurement-outcome pattern, sharing
    simulation work between branches with a common prefix."""
    n_levels = n_levels if n_levels is not None else max(g.levels, default=-1) + 1
    acts = schedule_actions(sched)

    def walk(i, live, outcomes, prob):
        while i < len(acts) and acts[i][0] != "measure":
            live, _, _ = _apply_action(live, g, acts[i])
            i += 1
        if i == len(acts):
            yield _collect(live.state, live.graph, live.frame, dict(outcomes), prob)
            return
        for m in (0, 1):
            try:
                nxt, _, p = _apply_action(live, g, acts[i], forced=m)
            except sim.SimulationError:
                continue
            if p * prob < min_prob:
                continue
            outcomes[acts[i][1]] = m
            yield from walk(i + 1, nxt, outcomes, prob * p)
            del outcomes[acts[i][1]]

    yield from walk(0, _empty_live(n_levels), {}, 1.0)


def random_canonical_circuit(
    n_qubits: int, max_nodes: int, seed, p_bridge: float = 0.3, odd_layer_bridges: bool = True
) -> Circuit:
    """Rectangular random canonical circuit with at most ``max_nodes``
    measured cluster nodes (one per HZ, two per HH_CZ).  With
    ``odd_layer_bridges`` HH_CZ only appears at even slots, so the compiled
    cluster also satisfies the dangling-node restriction."""
    rng = np.random.default_rng(seed)
    steps, used, t = [], 0, 0
    while True:
        qubits = list(range(n_qubits))
        slot = []
        bridge_ok = not odd_layer_bridges or t % 2 == 0
        if n_qubits >= 2 and bridge_ok and rng.random() < p_bridge:
            a, b = sorted(rng.choice(n_qubits, 2, replace=False).tolist())
            slot.append(Gate(t, "HH_CZ", (a, b)))
            qubits = [q for q in qubits if q not in (a, b)]
        slot += [Gate(t, "HZ", (q,), (float(rng.uniform(-np.pi, np.pi)),)) for q in qubits]
        if used + n_qubits > max_nodes:
            break
        steps += slot
        used += n_qubits
        t += 1
    return Circuit(n_qubits, tuple(steps))
