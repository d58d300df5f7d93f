import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st

from clusterft import gates
from clusterft import simulator as sim
from clusterft.compiler import (
    SCHEDULES,
    Circuit,
    CompileError,
    Gate,
    Schedule,
    canonicalize,
    circuit_state,
    circuit_unitary,
    enumerate_branches,
    euler_xz,
    execute,
    pad_for_dangling,
    random_canonical_circuit,
    to_cluster,
    validate_dangling_restriction,
    validate_schedule,
)


def equal_up_to_phase(a, b, tol=1e-10):
    k = np.vdot(a.ravel(), b.ravel())
    if abs(k) < 1e-12:
        return False
    return np.linalg.norm(a * (k / abs(k)) - b) < tol


def check_all_branches(c, schedule):
    c = pad_for_dangling(c) if schedule == "dangling" else c
    g = to_cluster(c)
    sched = SCHEDULES[schedule](g)
    assert validate_schedule(g, sched) == []
    total, worst = 0.0, 0.0
    for r in enumerate_branches(g, sched):
        want = sim.amplitudes_kron(circuit_state(c), r.output_levels)
        worst = max(worst, np.linalg.norm(r.corrected() - want))
        total += r.prob
    return total, worst


@given(st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi))
@example(2.1761195434452247, 0.0, 2.765625)
def test_euler_xz_roundtrip(a, b, c):
    u = gates.rz(a) @ gates.rx(b) @ gates.rz(c)
    x, y, z = euler_xz(u)
    assert equal_up_to_phase(gates.rz(x) @ gates.rx(y) @ gates.rz(z), u)


def test_canonicalize_preserves_unitary():
    c = Circuit(
        2,
        (
            Gate(0, "H", (0,)),
            Gate(0, "XZ", (1,), (0.3, -1.1)),
            Gate(1, "CZ", (0, 1)),
            Gate(2, "Z", (1,), (0.7,)),
            Gate(3, "HZ", (0,), (0.2,)),
        ),
    )
    cc = canonicalize(c)
    assert cc.is_canonical()
    assert equal_up_to_phase(circuit_unitary(cc), circuit_unitary(c))
    assert canonicalize(cc) is cc


def test_cz_compiles_to_bridge_plus_hadamards():
    cc = canonicalize(Circuit(2, (Gate(0, "CZ", (0, 1)),)))
    names = sorted((g.t, g.name) for g in cc.steps)
    assert names == [(0, "HH_CZ"), (1, "HZ"), (1, "HZ")]
    assert np.allclose(circuit_unitary(cc), gates.CZ)


def test_late_preparation_is_respected():
    c = Circuit(2, (Gate(0, "H", (0,)), Gate(0, "PrepPlus", (1,)), Gate(1, "CZ", (0, 1))))
    cc = canonicalize(c)
    births = cc.births()
    assert 1 in births
    assert all(g.t > births[1] for g in cc.steps if 1 in g.qubits and g.name != "PrepPlus")
    for name in SCHEDULES:
        total, worst = check_all_branches(cc, name)
        assert abs(total - 1) < 1e-9 and worst < 1e-9


def test_to_cluster_shape():
    cc = canonicalize(Circuit(2, (Gate(0, "CZ", (0, 1)),)))
    g = to_cluster(cc)
    assert len([n for n in g.nodes if n.is_output]) == 2
    assert len(g.bridges) == 1
    assert len(g.nodes) == 6


@pytest.mark.parametrize("bad", [
    lambda: Circuit(1, (Gate(0, "FOO", (0,)),)),
    lambda: Circuit(1, (Gate(0, "HZ", (1,), (0.1,)),)),
    lambda: Circuit(1, (Gate(0, "HZ", (0,), (0.1,)), Gate(0, "H", (0,)))),
    lambda: Circuit(2, (Gate(0, "CZ", (0, 0)),)),
    lambda: Circuit(1, (Gate(0, "HZ", (0,), ()),)),
    lambda: Circuit(1, (Gate(0, "H", (0,)), Gate(1, "PrepPlus", (0,)))),
    lambda: Circuit.from_json('{"n": 1}'),
])
def test_invalid_circuits(bad):
    with pytest.raises(CompileError):
        bad()


def test_to_cluster_needs_canonical():
    with pytest.raises(CompileError):
        to_cluster(Circuit(1, (Gate(0, "H", (0,)),)))


def test_circuit_json_roundtrip():
    c = random_canonical_circuit(2, 8, 3)
    assert Circuit.from_json(c.to_json()) == c


def test_padding_fixes_dangling_restriction():
    # bridge at slot 1 lands on even layer 2
    c = Circuit(
        2,
        (
            Gate(0, "HZ", (0,), (0.4,)),
            Gate(0, "HZ", (1,), (-0.9,)),
            Gate(1, "HH_CZ", (0, 1)),
            Gate(2, "HZ", (0,), (1.2,)),
            Gate(2, "HZ", (1,), (0.3,)),
        ),
    )
    assert validate_dangling_restriction(to_cluster(c))
    with pytest.raises(CompileError):
        SCHEDULES["dangling"](to_cluster(c))
    padded = pad_for_dangling(c)
    assert validate_dangling_restriction(to_cluster(padded)) == []
    assert equal_up_to_phase(circuit_unitary(padded), circuit_unitary(c))
    total, worst = check_all_branches(padded, "dangling")
    assert abs(total - 1) < 1e-9 and worst < 1e-9


@pytest.mark.parametrize("schedule", sorted(SCHEDULES))
@given(seed=st.integers(0, 10_000), n=st.integers(1, 3))
@settings(max_examples=15, deadline=None)
def test_every_branch_matches_circuit(schedule, seed, n):
    c = random_canonical_circuit(n, 8, seed)
    total, worst = check_all_branches(c, schedule)
    assert abs(total - 1) < 1e-9
    assert worst < 1e-9


def test_schedules_agree_branch_by_branch():
    c = random_canonical_circuit(2, 8, 5, p_bridge=1.0)
    g = to_cluster(c)
    runs = {
        name: {tuple(sorted(r.outcomes.items())): r for r in enumerate_branches(g, SCHEDULES[name](g))}
        for name in ("one_buffered", "two_at_a_time", "dangling")
    }
    base = runs["one_buffered"]
    for other in runs.values():
        assert other.keys() == base.keys()
        for key, r in other.items():
            assert np.allclose(r.outputs, base[key].outputs, atol=1e-10)
            assert abs(r.prob - base[key].prob) < 1e-10


def test_execute_sampled_and_forced():
    c = random_canonical_circuit(2, 6, 2)
    g = to_cluster(c)
    sched = SCHEDULES["one_buffered"](g)
    r = execute(g, sched, seed=7)
    want = sim.amplitudes_kron(circuit_state(c), r.output_levels)
    assert np.allclose(r.corrected(), want, atol=1e-10)
    forced = {nid: 1 for nid in r.outcomes}
    r1 = execute(g, sched, forced=forced)
    assert r1.outcomes == forced


def test_validate_schedule_flags_problems():
    g = to_cluster(random_canonical_circuit(2, 6, 4))
    sched = SCHEDULES["one_buffered"](g)
    assert validate_schedule(g, sched) == []
    truncated = Schedule(sched.kind, sched.phases[:-1])
    assert any("missing" in p for p in validate_schedule(g, truncated))
    swapped = Schedule(sched.kind, sched.phases[1:2] + sched.phases[:1] + sched.phases[2:])
    assert validate_schedule(g, swapped)
