"""Execution loop shared by the frame and state-vector engines."""
from __future__ import annotations

import numpy as np

from ..noise import NoiseConfig, ZoneAssignment, gate_channel, idle_channel, sample_quasi_static
from .circuit import MEASUREMENTS, ONE_QUBIT_GATES, TWO_QUBIT_GATES, Circuit, Instruction
from .core import FaultLocation, ShotBatch, faults_by_index

_PAULI_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}


class Simulator:
    """Holds the per-shot quantum state across successive ``run`` calls.

    Classical registers are zeroed at the start of every ``run``; the quantum
    state, leakage flags and quasi-static frequency offsets persist.
    """

    engine = "abstract"

    def __init__(self, n_qubits: int, shots: int = 1, noise: NoiseConfig | None = None,
                 rng: np.random.Generator | int | None = None, zones: ZoneAssignment | None = None):
        if shots < 1:
            raise ValueError("need at least one shot")
        self.n = n_qubits
        self.shots = shots
        self.noise = noise or NoiseConfig()
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.zones = zones or ZoneAssignment.default(n_qubits, self.noise.zone_count)
        if self.zones.n_qubits != n_qubits:
            raise ValueError("zone assignment does not match the qubit count")
        self.leaked = np.zeros((n_qubits, shots), dtype=bool)
        self.registers: dict[str, np.ndarray] = {}
        self.offsets = None
        if self.noise.Gamma_quasi > 0:
            self.offsets = sample_quasi_static(self.noise, self.zones, self.rng, shots).qubit_offsets

    # -- helpers for subclasses ------------------------------------------------
    def _bern(self, p: float) -> np.ndarray:
        """Full-width Bernoulli draw, so consumption never depends on outcomes."""
        if p <= 0:
            return np.zeros(self.shots, dtype=bool)
        return self.rng.random(self.shots) < p

    def _random_paulis(self, arity: int, p: float) -> tuple[np.ndarray, np.ndarray] | None:
        """Uniform non-identity Paulis on ``arity`` qubits with probability ``p``."""
        if p <= 0:
            return None
        hit = self._bern(p)
        pick = self.rng.integers(1, 4 ** arity, size=self.shots)
        pick = np.where(hit, pick, 0)
        xs = np.zeros((arity, self.shots), dtype=bool)
        zs = np.zeros((arity, self.shots), dtype=bool)
        for j in range(arity):
            code = (pick >> (2 * j)) & 3     # 1 = X, 2 = Z, 3 = Y
            xs[j] = code & 1 == 1
            zs[j] = code & 2 == 2
        return xs, zs

    # -- the loop ----------------------------------------------------------------
    def run(self, circuit: Circuit, faults=None) -> dict[str, np.ndarray]:
        if circuit.n_qubits > self.n:
            raise ValueError(f"circuit needs {circuit.n_qubits} qubits, simulator has {self.n}")
        self._prepare(circuit)
        self.registers = {k: np.zeros((self.shots, v), dtype=np.uint8) for k, v in circuit.registers.items()}
        by_index = faults_by_index(faults, self.shots)
        cache_cond, cache_mask = None, None
        everyone = np.ones(self.shots, dtype=bool)
        for i, ins in enumerate(circuit.instructions):
            if ins.condition is None:
                mask = everyone
            else:
                if ins.condition is not cache_cond:
                    cache_cond, cache_mask = ins.condition, ins.condition.evaluate(self.registers)
                mask = cache_mask
            flips = None
            pending = by_index.get(i, ())
            if pending and ins.is_measurement:
                flips = np.zeros(self.shots, dtype=bool)
                for s, _ in pending:
                    flips[s] = True
                flips &= mask
            self._step(ins, mask, flips, circuit)
            if pending and not ins.is_measurement:
                self._inject(pending, mask)
            if ins.target is not None and cache_cond is not None and ins.target[0] in cache_cond.registers:
                cache_cond = None
        return self.registers

    def _inject(self, pending: list[tuple[int, FaultLocation]], mask: np.ndarray) -> None:
        for s, f in pending:
            if not mask[s]:
                continue
            for q, l in zip(f.qubits, f.letters):
                if l != "I":
                    sel = np.zeros(self.shots, dtype=bool)
                    sel[s] = True
                    self.apply_pauli(q, l, sel)

    def _step(self, ins: Instruction, mask: np.ndarray, flips, circuit: Circuit) -> None:
        k = ins.kind
        if k in ONE_QUBIT_GATES or k in TWO_QUBIT_GATES:
            live = mask & ~self.leaked[list(ins.qubits)].any(axis=0)
            self.gate(ins, live, mask)
            ch = gate_channel(self.noise, k)
            paulis = self._random_paulis(ch.arity, ch.p)
            if paulis is not None:
                xs, zs = paulis
                for j, q in enumerate(ins.qubits):
                    self.apply_pauli_bits(q, xs[j] & live, zs[j] & live)
        elif k in MEASUREMENTS:
            q = ins.qubits[0]
            out = self.measure(ins, mask)
            out = out | self.leaked[q]
            out ^= self._bern(self.noise.p_meas)
            if flips is not None:
                out ^= flips
            self._write(ins.target, out, mask)
        elif k in ("PREP", "RESET"):
            q = ins.qubits[0]
            self.prepare(q, mask)
            self.leaked[q] &= ~mask
            err = self._bern(self.noise.p_spam_extra) & mask
            self.apply_pauli_bits(q, err, np.zeros_like(err))
        elif k == "LEAK_DETECT":
            q = ins.qubits[0]
            seen = self.leaked[q] ^ self._bern(self.noise.p_meas)
            if flips is not None:
                seen ^= flips
            seen &= mask
            self._write(ins.target, seen, mask)
            self.reset_leaked(q, seen)
            self.leaked[q] &= ~seen
        elif k == "IDLE":
            self.idle(ins, mask)
        elif k == "DECODE":
            self.decode(ins, mask, circuit)
        elif k == "BARRIER":
            pass
        else:  # pragma: no cover - guarded by Circuit._check
            raise ValueError(k)

    def _write(self, target, values: np.ndarray, mask: np.ndarray) -> None:
        reg, idx = target
        col = self.registers[reg][:, idx]
        col[mask] = values[mask].astype(np.uint8)

    def idle(self, ins: Instruction, mask: np.ndarray) -> None:
        qubits = list(ins.qubits)
        offsets = None if self.offsets is None else self.offsets[qubits]
        ch = idle_channel(self.noise, ins.angle, offsets)
        if ch.is_identity:
            return
        live = mask & ~self.leaked[qubits]          # (k, shots)
        self.coherent_idle(qubits, ch.angles, live)
        for j, q in enumerate(qubits):
            flip = self._bern(ch.p_flip) & live[j]
            self.apply_pauli_bits(q, np.zeros_like(flip), flip)
        if ch.p_leak > 0:
            for j, q in enumerate(qubits):
                new = self._bern(ch.p_leak) & live[j]
                if new.any():
                    self.on_leak(q, new)
                    self.leaked[q] |= new

    def decode(self, ins: Instruction, mask: np.ndarray, circuit: Circuit) -> None:
        fn = circuit.callbacks[ins.label]
        result = fn(self.registers, mask)
        xs, zs = result[0], result[1]
        writes = result[2] if len(result) > 2 else {}
        for j, q in enumerate(ins.qubits):
            self.apply_pauli_bits(q, xs[:, j] & mask, zs[:, j] & mask)
        for name, vals in writes.items():
            self.registers[name][mask] = np.asarray(vals, dtype=np.uint8)[mask]

    def apply_pauli(self, q: int, letter: str, mask: np.ndarray) -> None:
        bx, bz = _PAULI_BITS[letter]
        zero = np.zeros(self.shots, dtype=bool)
        self.apply_pauli_bits(q, mask if bx else zero, mask if bz else zero)

    def batch(self, seed=None) -> ShotBatch:
        return ShotBatch(seed, {k: v.copy() for k, v in self.registers.items()}, self.leaked.copy())

    # -- engine hooks ----------------------------------------------------------
    def _prepare(self, circuit: Circuit) -> None:
        pass

    def gate(self, ins: Instruction, live: np.ndarray, mask: np.ndarray) -> None:
        raise NotImplementedError

    def measure(self, ins: Instruction, mask: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def prepare(self, q: int, mask: np.ndarray) -> None:
        raise NotImplementedError

    def reset_leaked(self, q: int, mask: np.ndarray) -> None:
        raise NotImplementedError

    def on_leak(self, q: int, mask: np.ndarray) -> None:
        pass

    def coherent_idle(self, qubits, angles, live) -> None:
        raise NotImplementedError

    def apply_pauli_bits(self, q: int, xbits: np.ndarray, zbits: np.ndarray) -> None:
        raise NotImplementedError
