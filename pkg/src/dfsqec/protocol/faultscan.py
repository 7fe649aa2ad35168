"""Exhaustive single-fault verification of the QEC cycle.

Three checks, all run noiselessly on the Clifford engine with one shot per
case and shot 0 kept clean as the reference:

* (a) an input error of any syndrome leaves the data in the codespace;
* (b) every weight-1 input error is removed exactly;
* (c) a single fault anywhere in the cycle leaves a residual data error
  equivalent to weight at most one.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..codes import CodeSpec, reduced_weight
from ..engine.core import FaultLocation, enumerate_fault_locations
from ..engine.frame import FrameSimulator
from ..pauli import PauliString, brute_force_min_weight
from .cycle import QECCycle, build_qec_cycle
from .hooks import syndrome_ints
from .prep import init_circuit
from .se import N_DATA, synthesize_se_circuits

__all__ = ["FaultScanReport", "run_cases", "syndrome_representatives", "fault_scan", "sample_fault_pairs"]


@dataclass
class FaultScanReport:
    locations: int = 0
    faults: int = 0
    syndromes: int = 0
    weight_one: int = 0
    violations: dict[str, list[str]] = field(default_factory=lambda: {"a": [], "b": [], "c": []})

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())

    def report(self) -> str:
        lines = [
            f"fault locations: {self.locations}",
            f"single faults: {self.faults}",
            f"(a) input syndromes: {self.syndromes}, violations: {len(self.violations['a'])}",
            f"(b) weight-1 inputs: {self.weight_one}, violations: {len(self.violations['b'])}",
            f"(c) single faults, violations: {len(self.violations['c'])}",
        ]
        for k in "abc":
            lines += [f"  ({k}) {v}" for v in self.violations[k][:10]]
        return "\n".join(lines)


def run_cases(cycle: QECCycle, inputs: list[PauliString | None], faults: list[FaultLocation | None],
              state: str = "0") -> list[PauliString]:
    """Residual data error of each case relative to a clean extra shot 0."""
    shots = len(inputs) + 1
    circ = cycle.circuit
    sim = FrameSimulator(circ.n_qubits, shots, rng=0, gauge=False)
    sim.run(init_circuit(state, cycle.se.code, circ.n_qubits))
    for j, e in enumerate(inputs, 1):
        if e is not None:
            sel = np.zeros(shots, dtype=bool)
            sel[j] = True
            sim.set_frame(e, sel)
    cycle.decoder.reset(shots)
    sim.run(circ, faults=[None] + list(faults))
    fx, fz = sim.fx[:N_DATA], sim.fz[:N_DATA]
    weights = 1 << np.arange(N_DATA)
    xs = (fx.T.astype(np.int64) * weights).sum(axis=1)
    zs = (fz.T.astype(np.int64) * weights).sum(axis=1)
    return [PauliString(N_DATA, int(xs[j] ^ xs[0]), int(zs[j] ^ zs[0])) for j in range(1, shots)]


def syndrome_representatives(code: CodeSpec) -> dict[tuple[int, int], PauliString]:
    """One lowest-weight error per (r, s) syndrome."""
    reps: dict[tuple[int, int], PauliString] = {}
    for r in range(32):
        for s in range(16):
            bits = [r >> i & 1 for i in range(5)] + [s >> i & 1 for i in range(4)]
            reps[(r, s)] = min(brute_force_min_weight(bits, code), key=PauliString.key)
    return reps


def fault_scan(cycle: QECCycle | None = None, deflag: bool = False, state: str = "0") -> FaultScanReport:
    """Run checks (a), (b) and (c).  ``deflag`` drops every flag, a negative control."""
    if cycle is None:
        cycle = build_qec_cycle(synthesize_se_circuits(deflag=deflag), rng=0, idle=0.0)
    code = cycle.se.code
    rep = FaultScanReport()

    # (a) every syndrome class
    reps = syndrome_representatives(code)
    keys = sorted(reps)
    rep.syndromes = len(keys)
    for key, res in zip(keys, run_cases(cycle, [reps[k] for k in keys], [None] * len(keys), state)):
        if syndrome_ints(code, res) != (0, 0):
            rep.violations["a"].append(f"input {reps[key]} (r={key[0]:05b} s={key[1]:04b}) leaves {res}")

    # (b) weight-1 inputs
    singles = [PauliString.single(code.n, q, l) for q in range(code.n) for l in "XYZ"]
    rep.weight_one = len(singles)
    for e, res in zip(singles, run_cases(cycle, singles, [None] * len(singles), state)):
        if reduced_weight(res, code) != 0:
            rep.violations["b"].append(f"input {e} leaves {res}")

    # (c) one fault anywhere
    faults = enumerate_fault_locations(cycle.circuit)
    rep.faults = len(faults)
    rep.locations = len({f.index for f in faults})
    for f, res in zip(faults, run_cases(cycle, [None] * len(faults), faults, state)):
        if reduced_weight(res, code) > 1:
            ins = cycle.circuit.instructions[f.index]
            rep.violations["c"].append(f"{f} in '{ins}' leaves {res}")
    return rep


def sample_fault_pairs(cycle: QECCycle | None = None, samples: int = 2000, seed: int = 0,
                       state: str = "0") -> tuple[int, int]:
    """Random pairs of single faults; returns (pairs with residual weight > 1, pairs run).

    Informational only: two faults may legitimately defeat a distance-4 cycle.
    """
    cycle = cycle or build_qec_cycle(rng=seed, idle=0.0)
    faults = enumerate_fault_locations(cycle.circuit)
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(faults), size=(samples, 2))
    cases = [(faults[a], faults[b]) if a != b else faults[a] for a, b in picks]
    res = run_cases(cycle, [None] * samples, cases, state)
    bad = sum(reduced_weight(r, cycle.se.code) > 1 for r in res)
    return int(bad), samples
