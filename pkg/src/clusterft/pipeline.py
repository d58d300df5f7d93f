"""End-to-end runs: circuit -> canonical -> cluster -> scheduled noisy
execution -> corrected output distribution, compared with the circuit."""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import blocks, gates
from . import simulator as sim
from .cluster import ClusterGraph, PauliFrame, bridge_update, frame_update, measurement_basis
from .compiler import (
    SCHEDULES,
    Circuit,
    MeasureLayer,
    PrepareLayer,
    canonicalize,
    circuit_state,
    pad_for_dangling,
    to_cluster,
)
from .linalg import InvalidInput
from .noise import EnvRegistry, NoiseModel, NoisyOp, locality_audit, perturb


@dataclass(frozen=True)
class RunConfig:
    schedule: str = "one_buffered"
    shots: int = 0  # 0 = exact enumeration of measurement branches
    seeds: tuple = (0,)
    frame_flip_prob: float = 0.0
    p_f: float = 0.0
    k: int = 2

    def __post_init__(self):
        if self.schedule not in SCHEDULES:
            raise InvalidInput(f"schedule must be one of {sorted(SCHEDULES)}")
        if self.shots < 0:
            raise InvalidInput("shots must be >= 0")
        if not 0.0 <= self.frame_flip_prob <= 1.0:
            raise InvalidInput("frame_flip_prob must lie in [0, 1]")
        if self.frame_flip_prob > 0 and self.shots == 0:
            raise InvalidInput("frame flips are sampled, so they need shots > 0")
        if not 0.0 <= self.p_f <= 1.0 or self.k < 2:
            raise InvalidInput("need p_f in [0, 1] and k >= 2")
        if not self.seeds:
            raise InvalidInput("at least one seed is needed")


@dataclass
class RunReport:
    config: dict
    distances: list
    median: float
    quantiles: dict
    locality_ok: bool
    locality_violations: int
    noisy_counts: dict
    defect_rate: float
    timing_s: float = field(default=0.0)

    def to_json(self, include_timing: bool = False) -> str:
        d = asdict(self)
        if not include_timing:
            d.pop("timing_s")
        return json.dumps(d, sort_keys=True, indent=2)


# ---------------------------------------------------------------- noisy executor


class _Run:
    """Mutable execution state for one branch; copied at branch points."""

    def __init__(self, state, labels, live, frame, prob):
        self.state = state
        self.labels = labels
        self.live = live
        self.frame = frame
        self.prob = prob

    def copy(self) -> "_Run":
        return _Run(self.state, list(self.labels), self.live, self.frame, self.prob)

    def idx(self, label) -> int:
        return self.labels.index(label)

    def apply(self, op):
        self.state = sim.apply(self.state, op.matrix, [self.idx(l) for l in op.support])

    def drop(self, label, value: int):
        q = self.idx(label)
        self.state = sim.discard(self.state, q, value)
        self.labels.pop(q)


class _Source:
    """Noisy ops keyed by schedule position, so every branch sees the same
    realisation and each matrix is built once.  ``log`` holds every
    realised noisy op for the locality audit."""

    def __init__(self, model: NoiseModel, envs: EnvRegistry, seed: int):
        self.model = model
        self.envs = envs
        self.seed = seed
        self.cache: dict = {}
        self.log: list = []

    def keyed(self, key, kind, ideal, targets, levels) -> NoisyOp:
        if key not in self.cache:
            levels = tuple(sorted(set(levels)))
            if self.model.active:
                rng = np.random.default_rng([self.seed, *key])
                matrix = perturb(ideal, levels, self.model, self.envs, rng, generator_index=len(self.log))
                rec = NoisyOp(kind, levels, tuple(targets), self.envs.of(levels), matrix)
                self.log.append(rec)
            else:
                rec = NoisyOp(kind, levels, tuple(targets), (), np.asarray(ideal, dtype=complex))
            self.cache[key] = rec
        return self.cache[key]


def _node_label(nid):
    return ("n", nid)


def _actions(sched) -> list:
    """Schedule flattened with per-phase memory steps:
    ('prep', id), ('edge', a, b), ('mem', ids), ('measure', id)."""
    acts = []
    prepared, measured = [], set()
    for p in sched.phases:
        if isinstance(p, PrepareLayer):
            acts += [("prep", nid) for nid in p.nodes]
            acts += [("edge", a, b) for a, b in p.edges]
            prepared += list(p.nodes)
        elif isinstance(p, MeasureLayer):
            idle = tuple(n for n in prepared if n not in measured and n not in p.nodes)
            if idle:
                acts.append(("mem", idle))
            acts += [("measure", nid) for nid in p.nodes]
            measured |= set(p.nodes)
    return acts


def _flip(frame: PauliFrame, level: int, rng) -> PauliFrame:
    x, z = list(frame.x), list(frame.z)
    if rng.random() < 0.5:
        x[level] ^= 1
    else:
        z[level] ^= 1
    return PauliFrame(tuple(x), tuple(z), frame.sign)


def _step(run: _Run, g: ClusterGraph, act, pos: int, src: _Source, forced=None, rng=None, flip_q=0.0):
    """Apply one action.  Returns (run, outcome or None)."""
    kind = act[0]
    if kind == "prep":
        node = g.node(act[1])
        run.state = sim.tensor(run.state, gates.PLUS)
        run.labels.append(_node_label(node.id))
        run.live = ClusterGraph(run.live.nodes + (node,), run.live.edges)
        run.apply(src.keyed((pos, 0), "prep", gates.I2, (_node_label(node.id),), (node.level,)))
        return run, None
    if kind == "edge":
        _, a, b = act
        la, lb = g.node(a).level, g.node(b).level
        run.apply(src.keyed((pos, 0), "cz", gates.CZ, (_node_label(a), _node_label(b)), (la, lb)))
        run.live = ClusterGraph(run.live.nodes, run.live.edges + ((a, b),))
        return run, None
    if kind == "mem":
        for j, nid in enumerate(act[1]):
            run.apply(src.keyed((pos, j), "mem", gates.I2, (_node_label(nid),), (g.node(nid).level,)))
        return run, None
    nid = act[1]
    node = g.node(nid)
    frame = run.frame
    for nb in run.live.neighbors(nid):
        other = run.live.node(nb)
        if other.level != node.level:
            frame = bridge_update(frame, node.level, other.level)
    run.apply(src.keyed((pos, 0), "meas", gates.I2, (_node_label(nid),), (node.level,)))
    q = run.idx(_node_label(nid))
    m, post, p = sim.measure(run.state, q, measurement_basis(node, frame), forced=forced, seed=rng)
    run.state = post
    run.drop(_node_label(nid), m)
    run.prob *= p
    frame = frame_update(frame, node.level, m)
    if flip_q > 0 and rng is not None and rng.random() < flip_q:
        frame = _flip(frame, node.level, rng)
    run.frame = frame
    run.live = run.live.without(nid)
    return run, m


def _readout(run: _Run, g: ClusterGraph, src: _Source, pos: int, n_levels: int) -> np.ndarray:
    """Corrected output probabilities indexed in kron order over levels."""
    outs = run.live.outputs()
    levels = sorted(outs)
    if levels != list(range(n_levels)):
        raise InvalidInput("every level needs exactly one output node")
    for j, l in enumerate(levels):
        run.apply(src.keyed((pos, j), "readout", gates.I2, (_node_label(outs[l]),), (l,)))
    raw = sim.probabilities(run.state, [run.idx(_node_label(outs[l])) for l in levels]).reshape((2,) * n_levels)
    # a byproduct X^x flips the computational-basis outcome; Z^z does not
    flips = tuple(np.arange(2) ^ run.frame.x[l] for l in levels)
    return raw[np.ix_(*flips)].reshape(-1)


def _start(model: NoiseModel, envs: EnvRegistry, n_levels: int) -> _Run:
    state = sim.StateVector(np.ones(1, dtype=complex))
    labels = []
    if model.active:
        for l in range(n_levels):
            for lab in envs.envs[l]:
                state = sim.tensor(state, gates.KET0)
                labels.append(lab)
    return _Run(state, labels, ClusterGraph((), ()), PauliFrame.zeros(n_levels), 1.0)


def noisy_distribution(g: ClusterGraph, sched, model: NoiseModel, seed: int = 0, shots: int = 0, frame_flip_prob: float = 0.0):
    """Corrected output distribution of a scheduled noisy execution.

    Returns (probabilities over levels in kron order, noise source).  With
    shots = 0 every measurement branch is enumerated and weighted exactly;
    otherwise ``shots`` trajectories are sampled, including their readout.
    """
    n_levels = max(g.levels) + 1
    envs = EnvRegistry.for_levels(range(n_levels), model.env_qubits_per_level)
    src = _Source(model, envs, seed)
    acts = _actions(sched)
    end = len(acts)
    total = np.zeros(2**n_levels)

    if shots == 0:

        def walk(i, run):
            while i < end and acts[i][0] != "measure":
                run, _ = _step(run, g, acts[i], i, src)
                i += 1
            if i == end:
                total[:] += run.prob * _readout(run, g, src, end, n_levels)
                return
            for m in (0, 1):
                try:
                    nxt, _ = _step(run.copy(), g, acts[i], i, src, forced=m)
                except sim.SimulationError:
                    continue
                if nxt.prob < 1e-14:
                    continue
                walk(i + 1, nxt)

        walk(0, _start(model, envs, n_levels))
        return total / total.sum(), src

    rng = np.random.default_rng([seed, 1])
    for _ in range(shots):
        run = _start(model, envs, n_levels)
        for i, act in enumerate(acts):
            run, _ = _step(run, g, act, i, src, rng=rng, flip_q=frame_flip_prob)
        probs = _readout(run, g, src, end, n_levels)
        total[rng.choice(probs.size, p=probs / probs.sum())] += 1
    return total / shots, src


def _as_distribution(probs: np.ndarray, n: int) -> sim.Distribution:
    return sim.Distribution({format(i, f"0{n}b"): float(p) for i, p in enumerate(probs) if p > 0})


def compile_for(circuit: Circuit, schedule: str):
    """(canonical circuit, cluster graph, schedule) for a schedule kind."""
    c = canonicalize(circuit)
    if schedule == "dangling":
        c = pad_for_dangling(c)
    g = to_cluster(c)
    return c, g, SCHEDULES[schedule](g)


def defect_rate(g: ClusterGraph, schedule: str, p_f: float, k: int) -> float:
    """Probability that some two-layer adjoin fails.  Every piece after the
    first two layers is adjoined on each level it touches, and a piece
    succeeds only if every one of its levels does."""
    if schedule != "dangling" or p_f == 0:
        return 0.0
    q = p_f ** (k - 1)
    ok = 1.0
    last = max(g.layers)
    for start in range(3, last + 1, 2):
        levels = {n.level for n in g.nodes if n.layer in (start, start + 1)}
        ok *= (1.0 - q) ** len(levels)
    return 1.0 - ok


def run_end_to_end(circuit: Circuit, model: NoiseModel, config: RunConfig = RunConfig()) -> RunReport:
    t0 = time.perf_counter()
    c, g, sched = compile_for(circuit, config.schedule)
    n = c.n_qubits
    if n + model.env_qubits_per_level * n * model.active > sim.MAX_QUBITS:
        raise InvalidInput("run exceeds the simulator limit")
    ideal = sim.distribution(circuit_state(c), list(range(n)))
    qubit_level = {_node_label(nd.id): nd.level for nd in g.nodes}
    distances, audit_ok, violations = [], True, 0
    for seed in config.seeds:
        probs, src = noisy_distribution(g, sched, model, seed, config.shots, config.frame_flip_prob)
        distances.append(sim.kolmogorov(ideal, _as_distribution(probs, n)))
        audit = locality_audit(src.log, src.envs, qubit_level)
        audit_ok &= audit.ok
        violations += len(audit.violations)
    d = np.asarray(distances)
    cfg = {
        "circuit": json.loads(circuit.to_json()),
        "schedule": config.schedule,
        "shots": config.shots,
        "seeds": list(config.seeds),
        "frame_flip_prob": config.frame_flip_prob,
        "p_f": config.p_f,
        "k": config.k,
        "eta": model.eta,
        "noise_mode": model.mode,
        "env_qubits": model.env_qubits_per_level,
    }
    return RunReport(
        config=cfg,
        distances=[float(x) for x in d],
        median=float(np.median(d)),
        quantiles={"q10": float(np.quantile(d, 0.1)), "q50": float(np.quantile(d, 0.5)), "q90": float(np.quantile(d, 0.9))},
        locality_ok=bool(audit_ok),
        locality_violations=violations,
        noisy_counts={"c": blocks.qb(0.0).noisy_count, "c_prime": blocks.qc().noisy_count},
        defect_rate=defect_rate(g, config.schedule, config.p_f, config.k),
        timing_s=time.perf_counter() - t0,
    )
