"""Flag lookup table built by enumerating every single fault of the flagged rounds."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..codes import CodeSpec, logically_equivalent, reduced_weight
from ..engine.circuit import Circuit
from ..engine.core import FaultLocation, enumerate_fault_locations
from ..engine.frame import FrameSimulator
from ..pauli import PauliString, commutes
from .decoder import N_FLAGS
from .prep import init_circuit
from .se import N_DATA, SECircuits, synthesize_se_circuits

__all__ = ["FaultEffect", "HookTable", "HookTableConflict", "round_fault_effects", "build_hook_table"]

FLAGS_PER_ROUND = N_FLAGS // 2


class HookTableConflict(RuntimeError):
    """Two logically different data errors share a (flags, syndrome) key."""

    def __init__(self, table: "HookTable"):
        self.table = table
        first = (table.conflicts + table.unflagged_hooks)[0]
        super().__init__(f"{len(table.conflicts)} conflicting keys, {len(table.unflagged_hooks)} "
                         f"unflagged hooks; first: {first}")


@dataclass(frozen=True)
class FaultEffect:
    round: int
    location: FaultLocation
    flags: int
    error: PauliString          # data error left behind, 10 qubits
    r: int
    s: int

    @property
    def key(self) -> tuple[int, int, int]:
        return self.flags, self.r, self.s


def syndrome_ints(code: CodeSpec, error: PauliString) -> tuple[int, int]:
    r = sum(commutes(error, code.generator(f"r{i}")) << i for i in range(5))
    s = sum(commutes(error, code.generator(f"s{i}")) << i for i in range(4))
    return r, s


def _frame_bits(fx: np.ndarray, fz: np.ndarray, shot: int) -> tuple[int, int]:
    x = sum(1 << q for q in range(N_DATA) if fx[q, shot])
    z = sum(1 << q for q in range(N_DATA) if fz[q, shot])
    return x, z


def round_fault_effects(se: SECircuits, round_index: int) -> list[FaultEffect]:
    """Every single fault of one flagged round, with its flags and data error."""
    circ: Circuit = (se.flagged_1, se.flagged_2)[round_index]
    width = se.rounds[round_index].n_flags
    if width > FLAGS_PER_ROUND:
        raise ValueError(f"at most {FLAGS_PER_ROUND} flags per round fit the syndrome record")
    faults = enumerate_fault_locations(circ)
    shots = len(faults) + 1
    sim = FrameSimulator(circ.n_qubits, shots, rng=0, gauge=False)
    sim.run(init_circuit("0", se.code, circ.n_qubits))
    regs = sim.run(circ, faults=[None] + faults)
    freg = regs.get(f"r{round_index + 1}f")
    flags = np.zeros(shots, dtype=np.int64)
    if freg is not None:
        for b in range(width):
            flags |= (freg[:, b].astype(np.int64) ^ int(freg[0, b])) << b
    flags <<= FLAGS_PER_ROUND * round_index
    cx, cz = _frame_bits(sim.fx, sim.fz, 0)
    out = []
    for j, f in enumerate(faults, 1):
        x, z = _frame_bits(sim.fx, sim.fz, j)
        err = PauliString(N_DATA, x ^ cx, z ^ cz)
        r, s = syndrome_ints(se.code, err)
        out.append(FaultEffect(round_index, f, int(flags[j]), err, r, s))
    return out


@dataclass
class HookTable:
    table: dict[tuple[int, int, int], tuple[int, int]] = field(default_factory=dict)
    conflicts: list[str] = field(default_factory=list)
    unflagged_hooks: list[str] = field(default_factory=list)   # weight > 1 with no flag raised
    n_faults: int = 0

    @property
    def ok(self) -> bool:
        return not self.conflicts and not self.unflagged_hooks

    def report(self) -> str:
        lines = [f"faults enumerated: {self.n_faults}", f"flagged keys: {len(self.table)}",
                 f"conflicts: {len(self.conflicts)}", f"unflagged hooks: {len(self.unflagged_hooks)}"]
        lines += ["  " + c for c in self.conflicts[:20]]
        lines += ["  " + c for c in self.unflagged_hooks[:20]]
        return "\n".join(lines)


def build_hook_table(se: SECircuits | None = None, strict: bool = True) -> HookTable:
    """Map (flags, r, s) to the data correction for every flag-raising single fault.

    With ``strict`` a conflict (or an unflagged weight->1 hook) raises
    :class:`HookTableConflict`.
    """
    se = se or synthesize_se_circuits()
    code = se.code
    groups: dict[tuple[int, int, int], list[FaultEffect]] = {}
    result = HookTable()
    for k in (0, 1):
        for eff in round_fault_effects(se, k):
            result.n_faults += 1
            if eff.flags:
                groups.setdefault(eff.key, []).append(eff)
            elif reduced_weight(eff.error, code) > 1:
                result.unflagged_hooks.append(f"round {k + 1} {eff.location}: {eff.error} raises no flag")
    for key, effs in sorted(groups.items()):
        # keep the lightest representative; everything else must be logically equivalent
        rep = min(effs, key=lambda e: (reduced_weight(e.error, code), e.error.weight, e.error.key()))
        for e in effs:
            if not logically_equivalent(e.error, rep.error, code):
                result.conflicts.append(
                    f"flags={key[0]:06b} r={key[1]:05b} s={key[2]:04b}: {rep.error} ({rep.location}) "
                    f"vs {e.error} ({e.location})")
        result.table[key] = (rep.error.x, rep.error.z)
    if strict and not result.ok:
        raise HookTableConflict(result)
    return result
