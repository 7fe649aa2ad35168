"""Syndrome-extraction circuits for the [[10,1,4]] code.

Qubits 0-9 hold data and 10-19 are ancillas, reset between stages.

* DFS extraction: one |0> ancilla per pair, CNOTs from both pair qubits, Z
  measurement.  For a codeword the pair parity is odd, so the raw bit is 1
  when nothing went wrong.
* Flagged rounds: two |0> ancillas measure two of the s-checks in parallel
  through data-controlled-X couplings (Z-controlled-X = CNOT, X-controlled-X,
  Y-controlled-X), so an ancilla Z or Y fault kicks back onto the data.  Flag
  qubits start in |+>, talk to the ancillas through CNOT(flag -> ancilla) and
  are read in the X basis; a Z on the ancilla between two couplings of the same
  flag flips it.
* Unflagged extraction: one ancilla per check, no flags.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..codes import CodeSpec, build_1014
from ..engine.circuit import Circuit
from ..pauli import PauliString

__all__ = [
    "N_DATA",
    "N_QUBITS",
    "ANCILLAS",
    "RoundDesign",
    "DEFAULT_ROUNDS",
    "SECircuits",
    "synthesize_se_circuits",
    "add_dfs_se",
    "add_flagged_round",
    "add_unflagged",
    "couple",
    "check_parallel_order",
]

N_DATA = 10
N_QUBITS = 20
ANCILLAS = tuple(range(N_DATA, N_QUBITS))


@dataclass(frozen=True)
class RoundDesign:
    """One flagged round: two checks extracted in parallel.

    ``orders[k]`` is the coupling order of check k over its support.  Each flag
    is a tuple of ``(position, k)`` couplings: CNOT(flag -> ancilla k) placed
    just before coupling number ``position`` (0-based) of the round.
    """

    checks: tuple[str, str]
    orders: tuple[tuple[int, ...], tuple[int, ...]]
    flags: tuple[tuple[tuple[int, int], ...], ...]

    @property
    def n_flags(self) -> int:
        return len(self.flags)

    def without_flags(self) -> "RoundDesign":
        return RoundDesign(self.checks, self.orders, ())

    def describe(self) -> str:
        lines = [f"round {self.checks[0]},{self.checks[1]}"]
        for k, name in enumerate(self.checks):
            lines.append(f"  {name} order: " + " ".join(map(str, self.orders[k])))
        for i, fl in enumerate(self.flags):
            lines.append(f"  flag {i}: " + ", ".join(f"before coupling {p} on a{k}" for p, k in fl))
        return "\n".join(lines)


def _support(code: CodeSpec, name: str) -> tuple[int, ...]:
    return code.generator(name).support


# Flag placements certified by the hook-table conflict check and the exhaustive
# single-fault scan (see tests).  Each ancilla has its own bracket flag around
# couplings 1..5.  A third flag spans the middle couplings of both ancillas so
# each round fills the three-bit flag field of the record format; the two
# bracket flags alone are also conflict-free.
DEFAULT_ROUNDS = (
    RoundDesign(
        ("s0", "s1"),
        ((0, 1, 2, 4, 6, 7), (2, 3, 4, 6, 8, 9)),
        (((1, 0), (5, 0)), ((1, 1), (5, 1)), ((2, 0), (4, 0), (2, 1), (4, 1))),
    ),
    RoundDesign(
        ("s2", "s3"),
        ((0, 1, 4, 5, 6, 8), (0, 2, 3, 7, 6, 8)),
        (((1, 0), (5, 0)), ((1, 1), (5, 1)), ((2, 0), (4, 0), (2, 1), (4, 1))),
    ),
)


def check_parallel_order(code: CodeSpec, design: RoundDesign) -> None:
    """Two checks extracted in parallel must visit their anticommuting overlaps in a common order.

    Otherwise the interleaved couplings do not measure the two checks at all.
    """
    checks = [code.generator(n) for n in design.checks]
    for k, order in enumerate(design.orders):
        if sorted(order) != list(checks[k].support):
            raise ValueError(f"order {order} does not cover the support of {design.checks[k]}")
    first = set()
    for q in set(design.orders[0]) & set(design.orders[1]):
        if checks[0].letter(q) != checks[1].letter(q):
            # couplings at the same position run ancilla 0 first
            first.add(design.orders[0].index(q) <= design.orders[1].index(q))
    if len(first) > 1:
        raise ValueError(f"checks {design.checks} are interleaved inconsistently on anticommuting overlaps")


def couple(circ: Circuit, letter: str, data: int, ancilla: int) -> None:
    """Data-controlled-X onto an ancilla in |0>: measures ``letter`` on ``data``."""
    circ.cpauli(letter, "X", data, ancilla)


def add_dfs_se(circ: Circuit, reg: str, ancillas=ANCILLAS[:5], offset: int = 0) -> None:
    """Append DFS-pair parity checks writing raw bits ``reg[offset + i]``."""
    for i, a in enumerate(ancillas):
        circ.prep(a)
    for i, a in enumerate(ancillas):
        circ.cnot(2 * i, a)
        circ.cnot(2 * i + 1, a)
    for i, a in enumerate(ancillas):
        circ.measure(a, reg, offset + i)


def add_flagged_round(circ: Circuit, code: CodeSpec, design: RoundDesign, sreg: str, freg: str | None) -> None:
    anc = ANCILLAS[:2]
    flags = ANCILLAS[2:2 + design.n_flags]
    checks = [code.generator(n) for n in design.checks]
    check_parallel_order(code, design)
    for a in anc:
        circ.prep(a)
    for f in flags:
        circ.prep(f)
        circ.h(f)
    n_steps = max(len(o) for o in design.orders)
    for pos in range(n_steps + 1):
        for fi, couplings in enumerate(design.flags):
            for p, k in couplings:
                if p == pos:
                    circ.cnot(flags[fi], anc[k])
        if pos == n_steps:
            break
        for k, order in enumerate(design.orders):
            if pos < len(order):
                d = order[pos]
                couple(circ, checks[k].letter(d), d, anc[k])
    for k, a in enumerate(anc):
        circ.measure(a, sreg, k)
    for fi, f in enumerate(flags):
        circ.measure(f, freg, fi, basis="X")


def add_unflagged(circ: Circuit, code: CodeSpec, reg: str) -> None:
    """All nine checks: raw DFS bits into ``reg[0:5]``, s0..s3 into ``reg[5:9]``."""
    add_dfs_se(circ, reg, ANCILLAS[:5])
    s_anc = ANCILLAS[5:9]
    for a in s_anc:
        circ.prep(a)
    for k, a in enumerate(s_anc):
        g = code.generator(f"s{k}")
        for d in g.support:
            couple(circ, g.letter(d), d, a)
    for k, a in enumerate(s_anc):
        circ.measure(a, reg, 5 + k)


@dataclass
class SECircuits:
    """The syndrome-extraction building blocks, each as a standalone circuit."""

    code: CodeSpec
    rounds: tuple[RoundDesign, RoundDesign]
    dfs_se: Circuit
    flagged_1: Circuit
    flagged_2: Circuit
    unflagged: Circuit
    unflagged_s: dict[str, PauliString] = field(default_factory=dict)

    @property
    def flag_widths(self) -> tuple[int, int]:
        return self.rounds[0].n_flags, self.rounds[1].n_flags


def synthesize_se_circuits(code: CodeSpec | None = None, rounds: tuple[RoundDesign, RoundDesign] | None = None,
                           deflag: bool = False) -> SECircuits:
    """Build the four extraction circuits.  ``deflag`` drops every flag (negative control)."""
    code = code or build_1014()
    if code.name != build_1014().name:
        raise ValueError("syndrome extraction is built for the [[10,1,4]] code only")
    rounds = rounds or DEFAULT_ROUNDS
    if deflag:
        rounds = tuple(r.without_flags() for r in rounds)

    dfs = Circuit(N_QUBITS, name="dfs_se")
    dfs.add_register("dfs", 5)
    add_dfs_se(dfs, "dfs")

    flagged = []
    for i, design in enumerate(rounds, 1):
        c = Circuit(N_QUBITS, name=f"flagged_{i}")
        c.add_register(f"r{i}s", 2)
        if design.n_flags:
            c.add_register(f"r{i}f", design.n_flags)
        add_flagged_round(c, code, design, f"r{i}s", f"r{i}f" if design.n_flags else None)
        flagged.append(c)

    unf = Circuit(N_QUBITS, name="unflagged")
    unf.add_register("u", 9)
    add_unflagged(unf, code, "u")
    return SECircuits(code, tuple(rounds), dfs, flagged[0], flagged[1], unf,
                      {f"s{k}": code.generator(f"s{k}") for k in range(4)})
