"""Shared engine plumbing: fault locations, shot records, seeded chunking."""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field

import numpy as np

from .circuit import ONE_QUBIT_GATES, TWO_QUBIT_GATES, Circuit, Instruction

__all__ = [
    "EngineCapabilityError",
    "FaultLocation",
    "enumerate_fault_locations",
    "ShotBatch",
    "ShotRecord",
    "chunk_rngs",
]

DEFAULT_CHUNK = 4096


class EngineCapabilityError(RuntimeError):
    """The requested engine cannot execute this circuit faithfully."""


@dataclass(frozen=True)
class FaultLocation:
    """A single fault: a Pauli right after instruction ``index`` or a flipped outcome.

    ``letters`` lines up with ``qubits`` (e.g. ``"XZ"`` on a two-qubit gate).
    """

    index: int
    qubits: tuple[int, ...] = ()
    letters: str = ""
    flip: bool = False

    def __post_init__(self):
        if self.flip:
            if self.letters:
                raise ValueError("a measurement flip carries no Pauli")
        else:
            if len(self.letters) != len(self.qubits) or not self.letters:
                raise ValueError("one Pauli letter per qubit is required")
            if set(self.letters) - set("IXYZ") or set(self.letters) == {"I"}:
                raise ValueError(f"bad fault Pauli {self.letters!r}")

    def __str__(self) -> str:
        if self.flip:
            return f"#{self.index} flip"
        return f"#{self.index} " + "".join(f"{l}{q}" for l, q in zip(self.letters, self.qubits) if l != "I")

    def check(self, circuit: Circuit) -> Instruction:
        if not 0 <= self.index < len(circuit):
            raise ValueError(f"fault index {self.index} outside the circuit")
        ins = circuit.instructions[self.index]
        if self.flip:
            if not ins.is_measurement:
                raise ValueError(f"flip fault on non-measurement {ins}")
        elif not set(self.qubits) <= set(ins.qubits):
            raise ValueError(f"fault {self} acts outside the support of {ins}")
        return ins


_PREP_KINDS = {"PREP", "RESET"}


def enumerate_fault_locations(circuit: Circuit) -> list[FaultLocation]:
    """Every single fault of the circuit.

    1-qubit gates and preparations: 3 Paulis.  2-qubit gates: 15 Paulis.
    Measurements and leakage detections: one flip.  Idles: 3 Paulis per idling qubit.
    """
    out: list[FaultLocation] = []
    for i, ins in enumerate(circuit.instructions):
        k = ins.kind
        if k in ONE_QUBIT_GATES or k in _PREP_KINDS:
            out += [FaultLocation(i, ins.qubits, l) for l in "XYZ"]
        elif k in TWO_QUBIT_GATES:
            for a, b in itertools.product("IXYZ", repeat=2):
                if a + b != "II":
                    out.append(FaultLocation(i, ins.qubits, a + b))
        elif ins.is_measurement:
            out.append(FaultLocation(i, flip=True))
        elif k == "IDLE":
            out += [FaultLocation(i, (q,), l) for q in ins.qubits for l in "XYZ"]
    return out


def faults_by_index(faults, shots: int) -> dict[int, list[tuple[int, FaultLocation]]]:
    """Group per-shot faults by instruction index.

    Each entry is ``None`` (clean shot), one :class:`FaultLocation` or a tuple of them.
    """
    if faults is None:
        return {}
    if isinstance(faults, FaultLocation):
        faults = [faults] * shots
    if len(faults) != shots:
        raise ValueError("need one fault (or None) per shot")
    out: dict[int, list[tuple[int, FaultLocation]]] = {}
    for s, entry in enumerate(faults):
        if entry is None:
            continue
        for f in (entry if isinstance(entry, (tuple, list)) else (entry,)):
            out.setdefault(f.index, []).append((s, f))
    return out


@dataclass
class ShotRecord:
    seed: int | None
    registers: dict[str, tuple[int, ...]]
    leaked: tuple[int, ...]
    frame: object | None = None        # PauliString on all qubits (Clifford engine)

    def bits(self, name: str) -> str:
        return "".join(map(str, self.registers[name]))


@dataclass
class ShotBatch:
    seed: int | None
    registers: dict[str, np.ndarray]               # (shots, size) uint8
    leaked: np.ndarray                             # (qubits, shots) bool
    frame_x: np.ndarray | None = None              # (qubits, shots) bool
    frame_z: np.ndarray | None = None
    extras: dict = field(default_factory=dict)

    @property
    def shots(self) -> int:
        return self.leaked.shape[1]

    def record(self, shot: int) -> ShotRecord:
        from ..pauli import PauliString

        regs = {k: tuple(int(b) for b in v[shot]) for k, v in self.registers.items()}
        frame = None
        if self.frame_x is not None:
            n = self.frame_x.shape[0]
            x = sum(1 << q for q in range(n) if self.frame_x[q, shot])
            z = sum(1 << q for q in range(n) if self.frame_z[q, shot])
            frame = PauliString(n, x, z)
        return ShotRecord(self.seed, regs, tuple(int(b) for b in self.leaked[:, shot]), frame)

    def to_csv(self, fh=None) -> str | None:
        """One row per shot: seed, shot, each register as a bit string, leak flags."""
        own = fh is None
        fh = io.StringIO() if own else fh
        w = csv.writer(fh, lineterminator="\n")
        names = list(self.registers)
        w.writerow(["seed", "shot", *names, "leaked"])
        for s in range(self.shots):
            row = [self.seed, s]
            row += ["".join(map(str, self.registers[k][s])) for k in names]
            row.append("".join("1" if b else "0" for b in self.leaked[:, s]))
            w.writerow(row)
        return fh.getvalue() if own else None

    @staticmethod
    def concat(batches: list["ShotBatch"]) -> "ShotBatch":
        first = batches[0]
        regs = {k: np.concatenate([b.registers[k] for b in batches]) for k in first.registers}
        leaked = np.concatenate([b.leaked for b in batches], axis=1)
        fx = fz = None
        if first.frame_x is not None:
            fx = np.concatenate([b.frame_x for b in batches], axis=1)
            fz = np.concatenate([b.frame_z for b in batches], axis=1)
        return ShotBatch(first.seed, regs, leaked, fx, fz)


def chunk_rngs(seed: int | None, shots: int, chunk: int = DEFAULT_CHUNK):
    """Yield (chunk index, chunk size, Generator) with counter-based streams.

    Chunk ``j`` always draws from ``SeedSequence(seed, spawn_key=(j,))`` so the
    numbers do not depend on how chunks are distributed over workers.
    """
    if shots < 0:
        raise ValueError("shots must be non-negative")
    for j, start in enumerate(range(0, shots, chunk)):
        size = min(chunk, shots - start)
        ss = np.random.SeedSequence(seed, spawn_key=(j,))
        yield j, size, np.random.Generator(np.random.PCG64(ss))
