"""The adaptive QEC cycle and destructive logical readout."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from ..codes import CodeSpec, build_1014
from ..engine.circuit import Circuit, Condition
from ..noise import NoiseConfig
from .decoder import DecodeOutcome, Decoder, SyndromeRecord
from .hooks import FLAGS_PER_ROUND, build_hook_table
from .se import (
    N_DATA,
    N_QUBITS,
    SECircuits,
    add_dfs_se,
    add_flagged_round,
    add_unflagged,
    synthesize_se_circuits,
)

__all__ = [
    "CycleDecoder",
    "QECCycle",
    "build_qec_cycle",
    "se_duration",
    "circuit_duration",
    "readout_circuit",
    "logical_parity",
    "EXPECTED_PARITY",
    "qec_cycle",
]

DATA = tuple(range(N_DATA))
DFS_OK = "11111"


class CycleDecoder:
    """DECODE callback: turns one cycle's registers into per-shot corrections.

    Decisions are memoized per (flags, r, s); only ambiguous syndromes in
    correct mode consult the dedicated tie-break stream.  Per-shot verdicts
    accumulate in ``rejected`` (post-selection) until :meth:`reset`.
    """

    def __init__(self, decoder: Decoder, unflagged_condition: Condition, flag_widths=(3, 3),
                 mode: str = "correct", rng: np.random.Generator | int | None = None,
                 keep_log: bool = False):
        if mode not in ("correct", "post-select"):
            raise ValueError(f"unknown mode {mode!r}")
        self.decoder = decoder
        self.condition = unflagged_condition
        self.flag_widths = flag_widths
        self.mode = mode
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.keep_log = keep_log
        self._memo: dict[tuple[int, int, int], DecodeOutcome] = {}
        self.rejected = None
        self.ps_rejected = None
        self.log: list[list[tuple[SyndromeRecord, DecodeOutcome]]] = []
        self.stats = {"calls": 0, "decoded": 0, "hook": 0, "ambiguous": 0}

    def reset(self, shots: int) -> None:
        self.rejected = np.zeros(shots, dtype=bool)
        self.ps_rejected = np.zeros(shots, dtype=bool)
        self.log = []

    def records(self, registers: dict[str, np.ndarray], taken: np.ndarray) -> list[SyndromeRecord | None]:
        shots = taken.shape[0]
        u = registers["u"]
        r = ((u[:, :5] ^ 1).astype(np.int64) << np.arange(5)).sum(axis=1)
        s = (u[:, 5:9].astype(np.int64) << np.arange(4)).sum(axis=1)
        flags = np.zeros(shots, dtype=np.int64)
        for k, width in enumerate(self.flag_widths):
            reg = registers.get(f"r{k + 1}f")
            if reg is not None:
                flags |= ((reg.astype(np.int64) << np.arange(width)).sum(axis=1)) << (FLAGS_PER_ROUND * k)
        leaks = registers.get("leak")
        out: list[SyndromeRecord | None] = []
        for i in range(shots):
            if not taken[i]:
                out.append(None)
                continue
            leak = 0 if leaks is None else int((leaks[i].astype(np.int64) << np.arange(leaks.shape[1])).sum())
            out.append(SyndromeRecord(int(r[i]), int(s[i]), int(flags[i]), True, leak))
        return out

    def __call__(self, registers: dict[str, np.ndarray], mask: np.ndarray):
        shots = mask.shape[0]
        if self.rejected is None or self.rejected.shape[0] != shots:
            self.reset(shots)
        self.stats["calls"] += 1
        xs = np.zeros((shots, N_DATA), dtype=bool)
        zs = np.zeros((shots, N_DATA), dtype=bool)
        taken = mask & self.condition.evaluate(registers)
        log = []
        if taken.any():
            recs = self.records(registers, taken)
            for i in np.flatnonzero(taken):
                rec = recs[i]
                key = (rec.flags, rec.r, rec.s)
                out = self._memo.get(key)
                if out is None or (out.ambiguous and self.mode == "correct"):
                    out = self.decoder.decode(rec, self.mode, self.rng)
                    if not (out.ambiguous and self.mode == "correct"):
                        self._memo[key] = out
                self.stats["decoded"] += 1
                self.stats["hook"] += out.from_hook_table
                self.stats["ambiguous"] += out.ambiguous
                c = out.correction
                if c.x or c.z:
                    xs[i] = [(c.x >> q) & 1 for q in range(N_DATA)]
                    zs[i] = [(c.z >> q) & 1 for q in range(N_DATA)]
                self.rejected[i] |= out.rejected
                self.ps_rejected[i] |= out.post_select_reject
                if self.keep_log:
                    log.append((i, rec, out))
        if self.keep_log:
            self.log.append(log)
        return xs, zs


def circuit_duration(circ: Circuit, noise: NoiseConfig) -> float:
    """Serial duration of a circuit under the configured gate times (Paulis are free)."""
    total = 0.0
    for ins in circ.instructions:
        if ins.kind in ("IDLE", "DECODE", "BARRIER", "X", "Y", "Z"):
            continue
        if ins.is_measurement or ins.kind == "LEAK_DETECT":
            total += noise.t_meas
        elif len(ins.qubits) == 2:
            total += noise.t_gate_2q
        else:
            total += noise.t_gate_1q
    return total


def se_duration(se: SECircuits, noise: NoiseConfig) -> float:
    """Extraction time on the quiet path: leakage check, DFS round, both flagged rounds."""
    return noise.t_meas + sum(circuit_duration(c, noise) for c in (se.dfs_se, se.flagged_1, se.flagged_2))


@dataclass
class QECCycle:
    circuit: Circuit
    decoder: CycleDecoder
    se: SECircuits
    idle: float
    unflagged_condition: Condition = field(repr=False, default=None)


def build_qec_cycle(se: SECircuits | None = None, decoder: Decoder | None = None, mode: str = "correct",
                    rng=None, idle: float | None = None, noise: NoiseConfig | None = None,
                    use_hooks: bool = True, keep_log: bool = False) -> QECCycle:
    """Idle, leakage detection, DFS extraction, flagged rounds, unflagged fallback, decode.

    ``idle`` defaults to ``tau_cycle`` minus the extraction time so a cycle lasts tau.
    """
    se = se or synthesize_se_circuits()
    code = se.code
    if decoder is None:
        table = build_hook_table(se).table if use_hooks and any(se.flag_widths) else {}
        decoder = Decoder(code, hook_table=table)
    c = Circuit(N_QUBITS, name="qec_cycle")
    c.add_register("leak", N_DATA)
    c.add_register("dfs", 5)
    w1, w2 = se.flag_widths
    c.add_register("r1s", 2)
    c.add_register("r2s", 2)
    if w1:
        c.add_register("r1f", w1)
    if w2:
        c.add_register("r2f", w2)
    c.add_register("u", 9)

    idle_at = len(c.instructions)
    c.idle(DATA, 0.0)
    for q in DATA:
        c.leak_detect(q, "leak", q)
    add_dfs_se(c, "dfs")

    quiet = {"dfs": DFS_OK}
    with c.conditional(Condition.none_differ(**quiet)):
        add_flagged_round(c, code, se.rounds[0], "r1s", "r1f" if w1 else None)
    quiet["r1s"] = "00"
    if w1:
        quiet["r1f"] = "0" * w1
    with c.conditional(Condition.none_differ(**quiet)):
        add_flagged_round(c, code, se.rounds[1], "r2s", "r2f" if w2 else None)
    quiet["r2s"] = "00"
    if w2:
        quiet["r2f"] = "0" * w2
    loud = Condition.any_differ(**quiet)
    with c.conditional(loud):
        add_unflagged(c, code, "u")

    cb = CycleDecoder(decoder, loud, (w1, w2), mode, rng, keep_log)
    c.decode(DATA, "decode", cb)

    noise = noise or NoiseConfig()
    if idle is None:
        idle = max(0.0, noise.tau_cycle - se_duration(se, noise))
    c.instructions[idle_at] = dataclasses.replace(c.instructions[idle_at], angle=float(idle))
    return QECCycle(c, cb, se, idle, loud)


# -- readout ---------------------------------------------------------------

_BASIS = {"0": "Z", "1": "Z", "+": "X", "-": "X", "+i": "Y", "-i": "Y"}
EXPECTED_PARITY = {"0": 0, "1": 1, "+": 0, "-": 1, "+i": 0, "-i": 1}


def readout_circuit(state: str, code: CodeSpec | None = None, n_qubits: int = N_QUBITS) -> Circuit:
    """Measure every data qubit in the basis of the logical operator's support."""
    code = code or build_1014()
    basis = _BASIS[state]
    op = {"Z": code.logical_z[0], "X": code.logical_x[0], "Y": code.logical_y[0]}[basis]
    c = Circuit(n_qubits, name=f"readout_{basis}")
    c.add_register("out", code.n)
    for q in range(code.n):
        letter = op.letter(q)
        c.measure(q, "out", q, basis=letter if letter != "I" else "Z")
    return c


def logical_parity(bits: np.ndarray, state: str, code: CodeSpec | None = None) -> np.ndarray:
    """Parity of the logical operator from destructive readout bits, shape (shots, n)."""
    code = code or build_1014()
    basis = _BASIS[state]
    op = {"Z": code.logical_z[0], "X": code.logical_x[0], "Y": code.logical_y[0]}[basis]
    support = list(op.support)
    parity = bits[:, support].sum(axis=1) % 2
    if op.sign < 0:
        parity ^= 1
    return parity


def qec_cycle(sim, cycle: QECCycle) -> tuple[list[SyndromeRecord | None], np.ndarray]:
    """Run one cycle on ``sim``; returns per-shot records (None when quiet) and post-select flags."""
    cycle.decoder.keep_log = True
    if cycle.decoder.rejected is None or cycle.decoder.rejected.shape[0] != sim.shots:
        cycle.decoder.reset(sim.shots)
    regs = sim.run(cycle.circuit)
    recs = cycle.decoder.records(regs, cycle.unflagged_condition.evaluate(regs))
    return recs, cycle.decoder.rejected.copy()
