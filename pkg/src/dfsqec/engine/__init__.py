"""Circuit IR and the two execution engines."""
from __future__ import annotations

import numpy as np

from ..noise import NoiseConfig, ZoneAssignment
from .circuit import Circuit, CircuitError, Condition, Instruction
from .core import (
    EngineCapabilityError,
    FaultLocation,
    ShotBatch,
    ShotRecord,
    chunk_rngs,
    enumerate_fault_locations,
)
from .frame import FrameSimulator
from .statevector import StateVectorSimulator, max_batch_shots

__all__ = [
    "Circuit",
    "CircuitError",
    "Condition",
    "Instruction",
    "EngineCapabilityError",
    "FaultLocation",
    "ShotBatch",
    "ShotRecord",
    "FrameSimulator",
    "StateVectorSimulator",
    "make_simulator",
    "enumerate_fault_locations",
    "run",
    "sample",
    "run_with_fault",
]

ENGINES = {"clifford": FrameSimulator, "statevector": StateVectorSimulator}


def make_simulator(engine: str, n_qubits: int, shots: int = 1, noise: NoiseConfig | None = None,
                   rng=None, zones: ZoneAssignment | None = None, **options):
    try:
        cls = ENGINES[engine]
    except KeyError:
        raise ValueError(f"engine must be one of {sorted(ENGINES)}") from None
    return cls(n_qubits, shots, noise, rng, zones, **options)


def sample(circuit: Circuit, engine: str = "clifford", noise: NoiseConfig | None = None,
           shots: int = 1, seed: int | None = 0, chunk: int | None = None, **options) -> ShotBatch:
    """Run ``shots`` independent executions; chunk ``j`` always uses stream ``j``."""
    if chunk is None:
        chunk = 4096 if engine == "clifford" else min(4096, max_batch_shots(circuit.n_qubits))
    parts = []
    for _, size, rng in chunk_rngs(seed, shots, chunk):
        sim = make_simulator(engine, circuit.n_qubits, size, noise, rng, **options)
        sim.run(circuit)
        parts.append(sim.batch(seed))
    return ShotBatch.concat(parts)


def run(circuit: Circuit, engine: str = "clifford", noise: NoiseConfig | None = None,
        seed: int | None = 0, **options) -> ShotRecord:
    return sample(circuit, engine, noise, 1, seed, **options).record(0)


def run_with_fault(circuit: Circuit, fault: FaultLocation, engine: str = "clifford",
                   seed: int | None = 0, input_error=None) -> ShotRecord:
    """Noiseless run with one injected fault.

    The returned frame is the residual relative to the fault-free run with the
    same seed (and the same optional ``input_error`` on the input state).
    """
    if engine != "clifford":
        raise EngineCapabilityError("fault injection runs on the clifford engine")
    fault.check(circuit)
    records = []
    for f in (None, fault):
        rng = np.random.default_rng(seed)
        sim = FrameSimulator(circuit.n_qubits, 1, NoiseConfig(), rng)
        if input_error is not None:
            sim.set_frame(input_error)
        sim.run(circuit, faults=[f])
        records.append(sim.batch(seed))
    clean, hit = records
    hit.frame_x ^= clean.frame_x
    hit.frame_z ^= clean.frame_z
    return hit.record(0)
