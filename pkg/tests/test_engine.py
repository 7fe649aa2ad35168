import math

import numpy as np
import pytest
from scipy.stats import chi2_contingency

from dfsqec.codes import build_dfs
from dfsqec.engine import (
    Circuit,
    CircuitError,
    EngineCapabilityError,
    FaultLocation,
    FrameSimulator,
    StateVectorSimulator,
    enumerate_fault_locations,
    run_with_fault,
    sample,
)
from dfsqec.noise import NoiseConfig, ZoneAssignment
from dfsqec.protocol.hooks import round_fault_effects
from dfsqec.protocol.prep import init_circuit
from dfsqec.protocol.se import N_QUBITS, synthesize_se_circuits


def test_hadamard_measurement_is_fair():
    c = Circuit(1)
    c.add_register("m", 1)
    c.prep(0)
    c.h(0)
    c.measure(0, "m", 0)
    n = 10_000
    for engine in ("clifford", "statevector"):
        mean = sample(c, engine, shots=n, seed=3).registers["m"].mean()
        assert abs(mean - 0.5) < 5 * math.sqrt(0.25 / n)


def test_encoded_zero_has_trivial_syndromes():
    se = synthesize_se_circuits()
    sim = FrameSimulator(N_QUBITS, 200, rng=1)
    sim.run(init_circuit("0", n_qubits=N_QUBITS))
    u = sim.run(se.unflagged)["u"]
    assert (u[:, :5] == 1).all()     # raw DFS bits read 1 on a codeword
    assert (u[:, 5:] == 0).all()


def test_fault_location_counts():
    c = Circuit(2)
    c.cnot(0, 1)
    assert len(enumerate_fault_locations(c)) == 15
    m = Circuit(1)
    m.add_register("m", 1)
    m.measure(0, "m", 0)
    faults = enumerate_fault_locations(m)
    assert len(faults) == 1 and faults[0].flip


def test_z_on_target_spreads_through_cnot():
    c = Circuit(2)
    c.prep(0)
    c.prep(1)
    c.cnot(0, 1)
    rec = run_with_fault(c, FaultLocation(1, (1,), "Z"))
    assert str(rec.frame) == "Z0Z1"


def test_identity_fault_is_not_a_location():
    with pytest.raises(ValueError):
        FaultLocation(0, (0, 1), "II")


def test_ancilla_z_between_couplings_raises_a_flag():
    se = synthesize_se_circuits()
    circ = se.flagged_1
    couplings = [i for i, ins in enumerate(circ.instructions) if len(ins.qubits) == 2 and 10 in ins.qubits
                 and ins.qubits[0] < 10]
    middle = set(couplings[1:4])
    effects = [e for e in round_fault_effects(se, 0)
               if e.location.index in middle and dict(zip(e.location.qubits, e.location.letters)).get(10) == "Z"
               and set(e.location.letters) <= {"I", "Z"}]
    assert effects
    assert all(e.flags for e in effects)


def _noisy_circuit() -> Circuit:
    c = Circuit(3)
    c.add_register("m", 3)
    for q in range(3):
        c.prep(q)
    c.h(0)
    c.cnot(0, 1)
    c.cnot(1, 2)
    c.s(2)
    c.h(2)
    for q in range(3):
        c.measure(q, "m", q)
    return c


def test_engines_agree_under_pauli_noise():
    noise = NoiseConfig(p1=0.02, p2=0.05, p_meas=0.02, p_spam_extra=0.01)
    c = _noisy_circuit()
    n = 10_000
    tables = []
    for engine in ("clifford", "statevector"):
        bits = sample(c, engine, noise, shots=n, seed=11).registers["m"]
        idx = bits[:, 0] + 2 * bits[:, 1] + 4 * bits[:, 2]
        tables.append(np.bincount(idx, minlength=8))
    table = np.array(tables)
    table = table[:, table.sum(axis=0) > 0]
    _, pval, _, _ = chi2_contingency(table)
    assert pval > 1e-3


@pytest.mark.parametrize("phi", [0.1, 1.0, math.pi])
@pytest.mark.parametrize("state", ["0", "1", "+", "-", "+i", "-i"])
def test_collective_rz_leaves_dfs_states_unchanged(state, phi):
    sim = StateVectorSimulator(2, 1)
    sim.run(init_circuit(state, build_dfs()))
    before = sim.psi.copy()
    c = Circuit(2)
    c.rz(0, phi)
    c.rz(1, phi)
    sim.run(c)
    fid = abs(np.vdot(before[0], sim.psi[0])) ** 2
    assert abs(fid - 1) < 1e-10


@pytest.mark.parametrize("phi", [0.1, 0.4, 1.0])
def test_differential_rz_rotates_dfs_phase(phi):
    code = build_dfs()
    sim = StateVectorSimulator(2, 1)
    sim.run(init_circuit("+", code))
    c = Circuit(2)
    c.rz(0, phi)
    c.rz(1, -phi)
    sim.run(c)
    survival = 0.5 * (1 + sim.expectation(code.logical_x[0])[0])
    assert survival == pytest.approx(math.cos(phi) ** 2, abs=1e-12)


def test_same_seed_same_records():
    noise = NoiseConfig(p1=0.01, p2=0.02, p_meas=0.01)
    c = _noisy_circuit()
    a = sample(c, "clifford", noise, shots=500, seed=5).to_csv()
    b = sample(c, "clifford", noise, shots=500, seed=5).to_csv()
    assert a == b
    assert a != sample(c, "clifford", noise, shots=500, seed=6).to_csv()


def test_text_round_trip():
    se = synthesize_se_circuits()
    text = se.flagged_2.to_text()
    assert Circuit.from_text(text).to_text() == text
    with pytest.raises(CircuitError):
        Circuit.from_text("QUBITS 2\nFOO 0\n")


def test_clifford_engine_rejects_arbitrary_rz():
    c = Circuit(1)
    c.rz(0, 0.3)
    with pytest.raises(EngineCapabilityError):
        FrameSimulator(1, 1).run(c)
    FrameSimulator(1, 1).run(Circuit(1).extend(_quarter_turn()))


def _quarter_turn() -> Circuit:
    c = Circuit(1)
    c.rz(0, math.pi / 2)
    return c


@pytest.mark.parametrize("engine", [FrameSimulator, StateVectorSimulator])
def test_leaked_qubit_reads_one_until_detected(engine):
    noise = NoiseConfig(p_leak=1.0)
    c = Circuit(1)
    c.add_register("m", 3)
    c.add_register("leak", 1)
    c.prep(0)
    c.idle((0,), 1.0)
    c.measure(0, "m", 0)
    c.x(0)
    c.measure(0, "m", 1)
    c.leak_detect(0, "leak", 0)
    c.measure(0, "m", 2)
    sim = engine(1, 50, noise, 0, ZoneAssignment((0,), ()))
    regs = sim.run(c)
    assert (regs["m"][:, 0] == 1).all() and (regs["m"][:, 1] == 1).all()
    assert (regs["leak"][:, 0] == 1).all()
    if engine is StateVectorSimulator:
        assert (regs["m"][:, 2] == 0).all()
    else:
        # the frame engine can only depolarize a reset qubit relative to its reference
        assert 0 < regs["m"][:, 2].mean() < 1
