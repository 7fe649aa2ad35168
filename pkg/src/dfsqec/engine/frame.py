"""Clifford engine: one noiseless reference tableau plus batched Pauli frames.

The reference executes every instruction, including every conditional block.
A conditional block is only admissible when skipping it leaves the frame
meaningful: its measurements must be deterministic in the reference and each of
its non-Pauli gates must touch a qubit prepared inside the block (an ancilla).
Pauli gates are tracked in the frame only.
"""
from __future__ import annotations

import math

import numpy as np

from ..noise import NoiseConfig, ZoneAssignment
from .base import Simulator
from .circuit import MEASUREMENTS, PAULI_GATES, TWO_QUBIT_GATES, Circuit, Instruction, controlled_letters
from .core import EngineCapabilityError, ShotBatch
from .tableau import Tableau

TWIRLS = ("none", "qubit", "pair")


def _rz_as_clifford(theta: float) -> str | None:
    """Clifford equivalent (up to global phase) of RZ(theta), '' for identity."""
    k = theta / (math.pi / 2)
    r = round(k)
    if abs(k - r) > 1e-9:
        return None
    return ("", "S", "Z", "SDG")[r % 4]


class FrameSimulator(Simulator):
    engine = "clifford"

    def __init__(self, n_qubits: int, shots: int = 1, noise: NoiseConfig | None = None,
                 rng=None, zones: ZoneAssignment | None = None, twirl: str = "none",
                 gauge: bool = True):
        if twirl not in TWIRLS:
            raise ValueError(f"twirl must be one of {TWIRLS}")
        super().__init__(n_qubits, shots, noise, rng, zones)
        self.twirl = twirl
        # Without gauge randomization frames stay deterministic, which fault analysis
        # wants; random reference outcomes are then no longer resampled.
        self.gauge = gauge
        self.ref = Tableau(n_qubits)
        self.fx = np.zeros((n_qubits, shots), dtype=bool)
        self.fz = np.zeros((n_qubits, shots), dtype=bool)
        self._checked: set[int] = set()

    # -- admissibility -------------------------------------------------------------
    def _prepare(self, circuit: Circuit) -> None:
        if id(circuit) in self._checked:
            return
        for ins in circuit.instructions:
            if ins.kind == "RZ" and _rz_as_clifford(ins.angle) is None:
                raise EngineCapabilityError(f"clifford engine cannot run {ins}; use the statevector engine")
        for cond, idxs in circuit.blocks():
            if cond is None:
                continue
            prepared: set[int] = set()
            for i in idxs:
                ins = circuit.instructions[i]
                if ins.kind in ("PREP", "RESET"):
                    prepared.add(ins.qubits[0])
                elif ins.is_gate and ins.kind not in PAULI_GATES:
                    if not prepared.intersection(ins.qubits) or (len(ins.qubits) == 1 and ins.qubits[0] not in prepared):
                        raise EngineCapabilityError(
                            f"conditional {ins} acts on no block-local ancilla; not frame-trackable")
        self._checked.add(id(circuit))

    # -- frame primitives ----------------------------------------------------------
    def apply_pauli_bits(self, q: int, xbits: np.ndarray, zbits: np.ndarray) -> None:
        self.fx[q] ^= xbits
        self.fz[q] ^= zbits

    def _anti(self, q: int, letter: str) -> np.ndarray:
        """Shots whose frame on ``q`` anticommutes with ``letter``."""
        if letter == "Z":
            return self.fx[q].copy()
        if letter == "X":
            return self.fz[q].copy()
        return self.fx[q] ^ self.fz[q]

    def _mul(self, q: int, letter: str, sel: np.ndarray) -> None:
        if letter in "XY":
            self.fx[q] ^= sel
        if letter in "ZY":
            self.fz[q] ^= sel

    def gate(self, ins: Instruction, live: np.ndarray, mask: np.ndarray) -> None:
        k = ins.kind
        if k == "RZ":
            k = _rz_as_clifford(ins.angle)
            if not k:
                return
        if k in PAULI_GATES:
            self._mul(ins.qubits[0], k, live)
            return
        if k in TWO_QUBIT_GATES:
            c, t = ins.qubits
            a, b = controlled_letters(k)
            self.ref.controlled_pauli(a, b, c, t)
            anti_c = self._anti(c, a) & live
            anti_t = self._anti(t, b) & live
            self._mul(t, b, anti_c)
            self._mul(c, a, anti_t)
            broken = mask & ~live
            if broken.any():
                # a leaked partner means the gate never happened; scramble the other qubit
                for q in ins.qubits:
                    ok = broken & ~self.leaked[q]
                    self.fx[q] ^= ok & (self.rng.random(self.shots) < 0.5)
                    self.fz[q] ^= ok & (self.rng.random(self.shots) < 0.5)
            return
        q = ins.qubits[0]
        self.ref.apply(k, (q,))
        if k == "H":
            x, z = self.fx[q].copy(), self.fz[q].copy()
            self.fx[q] = np.where(live, z, x)
            self.fz[q] = np.where(live, x, z)
        else:  # S, SDG
            self.fz[q] ^= self.fx[q] & live

    def measure(self, ins: Instruction, mask: np.ndarray) -> np.ndarray:
        q = ins.qubits[0]
        basis = MEASUREMENTS[ins.kind]
        bit, random = self.ref.measure(q, basis)
        if random and ins.condition is not None:
            raise EngineCapabilityError(f"conditional measurement {ins} is random in the reference")
        out = self._anti(q, basis) ^ bool(bit)
        # the post-measurement state is stabilized by the measured Pauli: randomize that gauge
        if self.gauge:
            self._mul(q, basis, mask & (self.rng.random(self.shots) < 0.5))
        return out

    def prepare(self, q: int, mask: np.ndarray) -> None:
        self.ref.reset(q)
        self.fx[q] &= ~mask
        if self.gauge:
            self.fz[q] = np.where(mask, self.rng.random(self.shots) < 0.5, self.fz[q])
        else:
            self.fz[q] &= ~mask

    def reset_leaked(self, q: int, mask: np.ndarray) -> None:
        # the reset qubit no longer matches the reference: fully random relative Pauli
        if mask.any():
            self.fx[q] ^= mask & (self.rng.random(self.shots) < 0.5)
            self.fz[q] ^= mask & (self.rng.random(self.shots) < 0.5)

    def coherent_idle(self, qubits, angles, live) -> None:
        if angles is None:
            return
        if self.twirl == "none":
            raise EngineCapabilityError(
                "quasi-static dephasing is coherent; pick twirl='qubit' or 'pair' or use the statevector engine")
        done = set()
        if self.twirl == "pair":
            pos = {q: j for j, q in enumerate(qubits)}
            for a, b in self.zones.pairs:
                if a in pos and b in pos:
                    ja, jb = pos[a], pos[b]
                    p = np.sin(0.5 * (angles[ja] - angles[jb])) ** 2
                    flip = (self.rng.random(self.shots) < p) & live[ja] & live[jb]
                    self.fz[a] ^= flip
                    done.update((a, b))
        for j, q in enumerate(qubits):
            if q in done:
                continue
            p = np.sin(0.5 * angles[j]) ** 2
            self.fz[q] ^= (self.rng.random(self.shots) < p) & live[j]

    def batch(self, seed=None) -> ShotBatch:
        b = super().batch(seed)
        b.frame_x, b.frame_z = self.fx.copy(), self.fz.copy()
        return b

    def set_frame(self, pauli, shots=None) -> None:
        """XOR a :class:`PauliString` into the frame of the chosen shots (default all)."""
        sel = np.ones(self.shots, dtype=bool) if shots is None else np.asarray(shots)
        for q in pauli.support:
            self._mul(q, pauli.letter(q), sel)
