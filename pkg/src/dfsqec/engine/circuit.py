"""Circuit intermediate representation shared by both engines.

A circuit is a flat list of instructions.  An instruction may carry a
:class:`Condition`; consecutive instructions sharing a condition form a
conditional block.  The text form puts one instruction per line::

    GATE q... [angle] [-> reg[i]] [if any|none reg!bits ...]

``angle`` is the RZ angle (radians) or the IDLE duration (seconds) and always
prints with a decimal point.  ``DECODE q... name`` calls a registered classical
callback that returns Pauli corrections for the listed qubits.
"""
from __future__ import annotations

import contextlib
import re
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "CircuitError",
    "Condition",
    "Instruction",
    "Circuit",
    "ONE_QUBIT_GATES",
    "TWO_QUBIT_GATES",
    "MEASUREMENTS",
]


class CircuitError(ValueError):
    """Malformed circuit or register misuse."""


PAULI_GATES = {"X", "Y", "Z"}
ONE_QUBIT_GATES = {"H", "S", "SDG", "X", "Y", "Z", "RZ"}
# A-controlled-B for A, B in {X, Y, Z}; CNOT is the usual Z-controlled-X.
_CP = {f"{a}C{b}" for a in "XYZ" for b in "XYZ"}
_ALIASES = {"CX": "CNOT", "ZCX": "CNOT", "ZCZ": "CZ", "ZCY": "CY", "S_DAG": "SDG", "SDAG": "SDG"}
TWO_QUBIT_GATES = {"CNOT", "CZ", "CY"} | (_CP - {"ZCX", "ZCZ", "ZCY"})
MEASUREMENTS = {"MZ": "Z", "MX": "X", "MY": "Y"}
OTHER = {"PREP", "RESET", "LEAK_DETECT", "IDLE", "BARRIER", "DECODE"}
ALL_KINDS = ONE_QUBIT_GATES | TWO_QUBIT_GATES | set(MEASUREMENTS) | OTHER


def controlled_letters(kind: str) -> tuple[str, str]:
    """(control Pauli, target Pauli) of a two-qubit controlled-Pauli gate."""
    if kind == "CNOT":
        return "Z", "X"
    if kind == "CZ":
        return "Z", "Z"
    if kind == "CY":
        return "Z", "Y"
    return kind[0], kind[2]


@dataclass(frozen=True)
class Condition:
    """``any``: true when some register differs from its expected bits.
    ``none``: true when every register matches."""

    kind: str
    terms: tuple[tuple[str, str], ...]   # (register, expected bits, bit 0 first)

    def __post_init__(self):
        if self.kind not in ("any", "none"):
            raise CircuitError(f"condition kind must be 'any' or 'none', got {self.kind!r}")
        if not self.terms:
            raise CircuitError("condition needs at least one register")
        for _, bits in self.terms:
            if not bits or set(bits) - {"0", "1"}:
                raise CircuitError(f"bad expected bits {bits!r}")

    @classmethod
    def any_differ(cls, **expected: str) -> "Condition":
        return cls("any", tuple(expected.items()))

    @classmethod
    def none_differ(cls, **expected: str) -> "Condition":
        return cls("none", tuple(expected.items()))

    @property
    def registers(self) -> tuple[str, ...]:
        return tuple(r for r, _ in self.terms)

    def evaluate(self, registers: dict[str, np.ndarray]) -> np.ndarray:
        """Per-shot truth value; ``registers`` maps name to (shots, size) uint8."""
        differ = None
        for name, bits in self.terms:
            want = np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
            d = (registers[name] != want).any(axis=1)
            differ = d if differ is None else differ | d
        return differ if self.kind == "any" else ~differ

    def __str__(self) -> str:
        return f"if {self.kind} " + " ".join(f"{r}!{b}" for r, b in self.terms)

    @classmethod
    def parse(cls, text: str) -> "Condition":
        parts = text.split()
        if len(parts) < 2:
            raise CircuitError(f"malformed condition {text!r}")
        terms = []
        for p in parts[1:]:
            name, sep, bits = p.partition("!")
            if not sep:
                raise CircuitError(f"malformed condition term {p!r}")
            terms.append((name, bits))
        return cls(parts[0], tuple(terms))


@dataclass(frozen=True)
class Instruction:
    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None            # RZ angle or IDLE duration
    target: tuple[str, int] | None = None  # measurement / leak-detect output bit
    condition: Condition | None = None
    label: str | None = None              # DECODE callback name or BARRIER tag

    @property
    def is_measurement(self) -> bool:
        return self.kind in MEASUREMENTS or self.kind == "LEAK_DETECT"

    @property
    def is_gate(self) -> bool:
        return self.kind in ONE_QUBIT_GATES or self.kind in TWO_QUBIT_GATES

    def __str__(self) -> str:
        parts = [self.kind, *map(str, self.qubits)]
        if self.angle is not None:
            parts.append(repr(float(self.angle)))
        if self.label is not None:
            parts.append(self.label)
        if self.target is not None:
            parts.append(f"-> {self.target[0]}[{self.target[1]}]")
        if self.condition is not None:
            parts.append(str(self.condition))
        return " ".join(parts)


_LINE = re.compile(r"^(?P<body>.*?)(?:\s*->\s*(?P<reg>\w+)\[(?P<idx>\d+)\])?(?:\s+(?P<cond>if\s.*))?$")


@dataclass
class Circuit:
    n_qubits: int
    instructions: list[Instruction] = field(default_factory=list)
    registers: dict[str, int] = field(default_factory=dict)
    callbacks: dict[str, Callable] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        self._condition: Condition | None = None
        if self.n_qubits < 1:
            raise CircuitError("circuit needs at least one qubit")

    # -- building -----------------------------------------------------------
    def add_register(self, name: str, size: int) -> str:
        if not re.fullmatch(r"[A-Za-z_]\w*", name):
            raise CircuitError(f"bad register name {name!r}")
        if name in self.registers and self.registers[name] != size:
            raise CircuitError(f"register {name} redeclared with a different size")
        self.registers[name] = size
        return name

    @contextlib.contextmanager
    def conditional(self, condition: Condition) -> Iterator[None]:
        if self._condition is not None:
            raise CircuitError("conditional blocks do not nest")
        for r in condition.registers:
            if r not in self.registers:
                raise CircuitError(f"condition reads undeclared register {r}")
        self._condition = condition
        try:
            yield
        finally:
            self._condition = None

    def append(self, kind: str, qubits: Sequence[int] = (), angle: float | None = None,
               target: tuple[str, int] | None = None, label: str | None = None,
               condition: Condition | None = None) -> Instruction:
        kind = _ALIASES.get(kind.upper(), kind.upper())
        if kind == "ZCX":
            kind = "CNOT"
        ins = Instruction(kind, tuple(int(q) for q in qubits), angle, target,
                          condition if condition is not None else self._condition, label)
        self._check(ins)
        self.instructions.append(ins)
        return ins

    def _check(self, ins: Instruction) -> None:
        if ins.kind not in ALL_KINDS:
            raise CircuitError(f"unknown instruction {ins.kind}")
        for q in ins.qubits:
            if not 0 <= q < self.n_qubits:
                raise CircuitError(f"qubit {q} out of range in {ins}")
        if len(set(ins.qubits)) != len(ins.qubits):
            raise CircuitError(f"repeated qubit in {ins}")
        arity = 1 if ins.kind in ONE_QUBIT_GATES | set(MEASUREMENTS) | {"PREP", "RESET", "LEAK_DETECT"} \
            else 2 if ins.kind in TWO_QUBIT_GATES else None
        if arity is not None and len(ins.qubits) != arity:
            raise CircuitError(f"{ins.kind} takes {arity} qubit(s)")
        if ins.kind in ("RZ", "IDLE") and ins.angle is None:
            raise CircuitError(f"{ins.kind} needs an angle/duration")
        if ins.kind == "IDLE" and ins.angle < 0:
            raise CircuitError("idle duration must be non-negative")
        if ins.is_measurement:
            if ins.target is None:
                raise CircuitError(f"{ins.kind} needs a register bit")
            reg, idx = ins.target
            if reg not in self.registers or not 0 <= idx < self.registers[reg]:
                raise CircuitError(f"{ins} writes an undeclared register bit")
            if ins.condition is not None and reg in ins.condition.registers:
                raise CircuitError(f"{ins} writes a register its own condition reads")
        elif ins.target is not None:
            raise CircuitError(f"{ins.kind} does not write registers")
        if ins.kind == "DECODE":
            if ins.label is None:
                raise CircuitError("DECODE needs a callback name")
            if ins.label not in self.callbacks:
                raise CircuitError(f"unregistered callback {ins.label!r}")
        if ins.condition is not None:
            for r, bits in ins.condition.terms:
                if r not in self.registers:
                    raise CircuitError(f"condition reads undeclared register {r}")
                if len(bits) != self.registers[r]:
                    raise CircuitError(f"condition width mismatch on {r}")

    # convenience builders
    def h(self, q): return self.append("H", (q,))
    def s(self, q): return self.append("S", (q,))
    def sdg(self, q): return self.append("SDG", (q,))
    def x(self, q): return self.append("X", (q,))
    def y(self, q): return self.append("Y", (q,))
    def z(self, q): return self.append("Z", (q,))
    def cnot(self, c, t): return self.append("CNOT", (c, t))
    def cz(self, a, b): return self.append("CZ", (a, b))
    def rz(self, q, theta): return self.append("RZ", (q,), angle=float(theta))
    def prep(self, q): return self.append("PREP", (q,))
    def reset(self, q): return self.append("RESET", (q,))
    def barrier(self, qubits=(), tag=None): return self.append("BARRIER", qubits, label=tag)

    def cpauli(self, control_letter: str, target_letter: str, c: int, t: int) -> Instruction:
        return self.append(f"{control_letter}C{target_letter}", (c, t))

    def measure(self, q: int, reg: str, idx: int, basis: str = "Z") -> Instruction:
        return self.append("M" + basis.upper(), (q,), target=(reg, idx))

    def leak_detect(self, q: int, reg: str, idx: int) -> Instruction:
        return self.append("LEAK_DETECT", (q,), target=(reg, idx))

    def idle(self, qubits: Iterable[int], duration: float) -> Instruction:
        return self.append("IDLE", tuple(qubits), angle=float(duration))

    def decode(self, qubits: Iterable[int], name: str, fn: Callable | None = None) -> Instruction:
        if fn is not None:
            self.callbacks[name] = fn
        return self.append("DECODE", tuple(qubits), label=name)

    def pauli(self, op, qubits: Sequence[int] | None = None) -> None:
        """Apply a :class:`PauliString` letter by letter (phase ignored)."""
        qubits = list(range(op.n)) if qubits is None else list(qubits)
        for i in op.support:
            self.append(op.letter(i), (qubits[i],))

    def extend(self, other: "Circuit") -> "Circuit":
        if other.n_qubits > self.n_qubits:
            raise CircuitError("cannot extend with a wider circuit")
        for name, size in other.registers.items():
            self.add_register(name, size)
        self.callbacks.update(other.callbacks)
        for ins in other.instructions:
            if self._condition is not None and ins.condition is not None:
                raise CircuitError("conditional blocks do not nest")
            ins = replace(ins, condition=ins.condition or self._condition)
            self._check(ins)
            self.instructions.append(ins)
        return self

    # -- queries ------------------------------------------------------------
    def __len__(self) -> int:
        return len(self.instructions)

    def __iter__(self):
        return iter(self.instructions)

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for ins in self.instructions:
            out[ins.kind] = out.get(ins.kind, 0) + 1
        return out

    def uses_rz(self) -> bool:
        return any(ins.kind == "RZ" for ins in self.instructions)

    def blocks(self) -> list[tuple[Condition | None, list[int]]]:
        """Maximal runs of consecutive instructions sharing a condition."""
        out: list[tuple[Condition | None, list[int]]] = []
        for i, ins in enumerate(self.instructions):
            if out and out[-1][0] == ins.condition and ins.condition is not None:
                out[-1][1].append(i)
            else:
                out.append((ins.condition, [i]))
        return out

    # -- text form ----------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"QUBITS {self.n_qubits}"]
        lines += [f"REG {name} {size}" for name, size in self.registers.items()]
        lines += [str(ins) for ins in self.instructions]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, callbacks: dict[str, Callable] | None = None) -> "Circuit":
        circ: Circuit | None = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                if circ is None:
                    head, n = line.split()
                    if head != "QUBITS":
                        raise CircuitError("first line must be 'QUBITS n'")
                    circ = cls(int(n), callbacks=dict(callbacks or {}))
                    continue
                if line.startswith("REG "):
                    _, name, size = line.split()
                    circ.add_register(name, int(size))
                    continue
                circ.instructions.append(_parse_instruction(line))
                circ._check(circ.instructions[-1])
            except CircuitError as exc:
                raise CircuitError(f"line {lineno}: {exc}") from None
            except ValueError as exc:
                raise CircuitError(f"line {lineno}: {exc}") from None
        if circ is None:
            raise CircuitError("empty circuit text")
        return circ


def _parse_instruction(line: str) -> Instruction:
    m = _LINE.match(line)
    body = m.group("body").split()
    kind = _ALIASES.get(body[0].upper(), body[0].upper())
    qubits, angle, label = [], None, None
    for tok in body[1:]:
        if re.fullmatch(r"\d+", tok):
            qubits.append(int(tok))
        elif re.fullmatch(r"[-+]?(\d+\.\d*|\.\d+|\d+)(e[-+]?\d+)?|[-+]?\d+e[-+]?\d+|[-+]?(inf|nan)", tok, re.I):
            angle = float(tok)
        else:
            label = tok
    target = (m.group("reg"), int(m.group("idx"))) if m.group("reg") else None
    cond = Condition.parse(m.group("cond")[3:]) if m.group("cond") else None
    return Instruction(kind, tuple(qubits), angle, target, cond, label)
