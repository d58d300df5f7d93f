import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clusterft import simulator as sim
from clusterft.compiler import SCHEDULES, Circuit, Gate, circuit_state, random_canonical_circuit
from clusterft.linalg import InvalidInput
from clusterft.noise import NoiseModel
from clusterft.pipeline import (
    RunConfig,
    _as_distribution,
    compile_for,
    defect_rate,
    noisy_distribution,
    run_end_to_end,
)

ONE_QUBIT = Circuit(1, (Gate(0, "HZ", (0,), (0.7,)), Gate(1, "HZ", (0,), (0.4,)), Gate(2, "HZ", (0,), (-1.2,))))
# canonical, bridge on layer 1, six measured nodes
TWO_QUBIT = Circuit(
    2,
    (
        Gate(0, "HH_CZ", (0, 1)),
        Gate(1, "HZ", (0,), (0.9,)),
        Gate(1, "HZ", (1,), (-0.4,)),
        Gate(2, "HZ", (0,), (0.3,)),
        Gate(2, "HZ", (1,), (1.7,)),
    ),
)


@pytest.mark.parametrize("schedule", sorted(SCHEDULES))
@given(seed=st.integers(0, 1000))
@settings(max_examples=5, deadline=None)
def test_noiseless_runs_reproduce_circuit(schedule, seed):
    circuit = random_canonical_circuit(2, 8, seed)
    report = run_end_to_end(circuit, NoiseModel(0.0), RunConfig(schedule=schedule))
    assert report.median < 1e-12
    assert report.locality_ok


@pytest.mark.parametrize("schedule", sorted(SCHEDULES))
def test_noisy_distance_within_union_bound(schedule):
    eta = 0.02
    c, g, sched = compile_for(TWO_QUBIT, schedule)
    ideal = sim.distribution(circuit_state(c), [0, 1])
    for seed in range(3):
        probs, src = noisy_distribution(g, sched, NoiseModel(eta), seed)
        d = sim.kolmogorov(ideal, _as_distribution(probs, 2))
        assert 0 < d <= len(src.log) * eta
        assert probs.sum() == pytest.approx(1.0)


def test_median_grows_with_eta():
    medians = [
        run_end_to_end(ONE_QUBIT, NoiseModel(eta), RunConfig(seeds=tuple(range(30)))).median
        for eta in (0.0025, 0.005, 0.01, 0.02)
    ]
    assert medians == sorted(medians)


def test_locality_is_audited():
    report = run_end_to_end(TWO_QUBIT, NoiseModel(0.05, 2), RunConfig(schedule="two_at_a_time", seeds=(0, 1)))
    assert report.locality_ok and report.locality_violations == 0


def test_report_is_reproducible():
    cfg = RunConfig(seeds=(3, 4))
    a = run_end_to_end(TWO_QUBIT, NoiseModel(0.03), cfg).to_json()
    b = run_end_to_end(TWO_QUBIT, NoiseModel(0.03), cfg).to_json()
    assert a == b
    doc = json.loads(a)
    assert "timing_s" not in doc
    assert doc["noisy_counts"] == {"c": 4, "c_prime": 3}
    assert doc["distances"][0] != doc["distances"][1]


def test_sampled_run_close_to_ideal():
    report = run_end_to_end(ONE_QUBIT, NoiseModel(0.0), RunConfig(shots=1000, seeds=(1,)))
    assert report.median < 4 / np.sqrt(1000)


def test_frame_flips_hurt():
    clean = run_end_to_end(ONE_QUBIT, NoiseModel(0.0), RunConfig(shots=1000, seeds=(0,)))
    flipped = run_end_to_end(ONE_QUBIT, NoiseModel(0.0), RunConfig(shots=1000, seeds=(0,), frame_flip_prob=0.2))
    assert flipped.median > clean.median + 0.05


def test_defect_rate():
    c, g, _ = compile_for(TWO_QUBIT, "dangling")
    assert defect_rate(g, "one_buffered", 0.5, 3) == 0.0
    assert defect_rate(g, "dangling", 0.0, 3) == 0.0
    q = 0.5**2
    pieces = [
        len({n.level for n in g.nodes if n.layer in (s, s + 1)}) for s in range(3, max(g.layers) + 1, 2)
    ]
    assert defect_rate(g, "dangling", 0.5, 3) == pytest.approx(1 - np.prod([(1 - q) ** n for n in pieces]))
    report = run_end_to_end(TWO_QUBIT, NoiseModel(0.0), RunConfig(schedule="dangling", p_f=0.5, k=3))
    assert report.defect_rate == pytest.approx(defect_rate(g, "dangling", 0.5, 3))


@pytest.mark.parametrize("kwargs", [
    dict(schedule="nope"), dict(shots=-1), dict(frame_flip_prob=0.1), dict(p_f=1.5), dict(k=1), dict(seeds=()),
])
def test_config_validation(kwargs):
    with pytest.raises(InvalidInput):
        RunConfig(**kwargs)
