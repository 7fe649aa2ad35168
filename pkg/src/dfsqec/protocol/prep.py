"""Encoding circuits synthesized from stabilizer descriptions."""
from __future__ import annotations

import functools
from typing import Sequence

import numpy as np

from ..codes import CodeSpec, build_1014
from ..engine.circuit import Circuit
from ..engine.tableau import Tableau
from ..pauli import PauliString, commutes, conjugate, multiply

__all__ = ["SynthesisError", "synthesize_state_prep", "logical_state_stabilizers", "init_circuit", "LOGICAL_STATES"]

_INVERSE = {"H": "H", "S": "SDG", "SDG": "S", "X": "X", "CNOT": "CNOT"}


class SynthesisError(RuntimeError):
    pass


def synthesize_state_prep(stabilizers: Sequence[PauliString]) -> list[tuple[str, tuple[int, ...]]]:
    """Gate list taking |0...0> to the state stabilized by ``stabilizers``.

    The generators must commute, be independent and number ``n``.  We find a
    Clifford V that maps every generator to a signed single-qubit Z (Gaussian
    elimination with H, S and CNOT), flip the minus signs with X, then invert.
    """
    rows = list(stabilizers)
    n = rows[0].n
    if len(rows) != n:
        raise SynthesisError(f"need {n} generators for a state on {n} qubits, got {len(rows)}")
    for i, a in enumerate(rows):
        if not a.is_hermitian:
            raise SynthesisError(f"{a} is not Hermitian")
        for b in rows[i + 1:]:
            if commutes(a, b):
                raise SynthesisError(f"{a} and {b} anticommute")
    gates: list[tuple[str, tuple[int, ...]]] = []

    def apply(gate, qubits):
        gates.append((gate, tuple(qubits)))
        for k in range(len(rows)):
            rows[k] = conjugate(rows[k], gate, qubits)

    pivots: list[int] = []
    done_rows = 0
    free = set(range(n))
    while done_rows < n:
        live = range(done_rows, n)
        r = next((k for k in live if rows[k].x & _mask(free)), None)
        if r is None:
            r = next((k for k in live if rows[k].z & _mask(free)), None)
            if r is None:
                raise SynthesisError("generators are not independent")
        rows[done_rows], rows[r] = rows[r], rows[done_rows]
        row = rows[done_rows]
        if row.x & _mask(free):
            j = _lowest(row.x & _mask(free))
            for k in sorted(free):
                if k != j and rows[done_rows].x >> k & 1:
                    apply("CNOT", (j, k))
            if rows[done_rows].z >> j & 1:
                apply("S", (j,))          # Y -> -X
            apply("H", (j,))
        else:
            j = _lowest(row.z & _mask(free))
        for k in sorted(free):
            if k != j and rows[done_rows].z >> k & 1:
                apply("CNOT", (k, j))
        piv = rows[done_rows]
        if piv.x or piv.z != 1 << j:
            raise SynthesisError(f"reduction failed at {piv}")
        # clear qubit j from every other row (they commute with Z_j, so only Z_j can appear)
        for k in range(n):
            if k != done_rows and rows[k].z >> j & 1:
                rows[k] = multiply(rows[k], piv)
        pivots.append(j)
        free.discard(j)
        done_rows += 1
    for k, j in enumerate(pivots):
        if rows[k].sign < 0:
            apply("X", (j,))
    return [(_INVERSE[g], q) for g, q in reversed(gates)]


def _mask(qubits) -> int:
    return sum(1 << q for q in qubits)


def _lowest(v: int) -> int:
    return (v & -v).bit_length() - 1


LOGICAL_STATES = ("0", "1", "+", "-", "+i", "-i")
# State -> (natively prepared state, logical Pauli applied afterwards)
_NATIVE = {"0": ("0", None), "1": ("0", "X"), "-": ("-", None), "+": ("-", "Z"),
           "-i": ("-i", None), "+i": ("-i", "X")}


def logical_state_stabilizers(code: CodeSpec, state: str) -> list[PauliString]:
    lx, lz, ly = code.logical_x[0], code.logical_z[0], code.logical_y[0]
    extra = {"0": lz, "1": -lz, "+": lx, "-": -lx, "+i": ly, "-i": -ly}[state]
    return list(code.stabilizer_generators) + [extra]


def init_circuit(state: str, code: CodeSpec | None = None, n_qubits: int | None = None) -> Circuit:
    """Noiseless-correct (not fault-tolerant) encoder for a logical Pauli eigenstate.

    |0>, |->, |-i> are synthesized directly; the other three append the
    logical Pauli that flips the eigenvalue.
    """
    code = code or build_1014()
    if state not in _NATIVE:
        raise ValueError(f"state must be one of {LOGICAL_STATES}")
    native, flip = _NATIVE[state]
    circ = Circuit(n_qubits or code.n, name=f"init_{state}")
    for q in range(code.n):
        circ.prep(q)
    for gate, qubits in _prep_gates(code, native):
        circ.append(gate, qubits)
    if flip == "X":
        circ.pauli(code.logical_x[0])
    elif flip == "Z":
        circ.pauli(code.logical_z[0])
    return circ


@functools.lru_cache(maxsize=None)
def _prep_gates(code: CodeSpec, state: str):
    stabs = logical_state_stabilizers(code, state)
    gates = synthesize_state_prep(stabs)
    _check(gates, stabs)
    return tuple(gates)


def _check(gates, stabs) -> None:
    t = Tableau(stabs[0].n)
    for g, q in gates:
        t.apply(g, q)
    for s in stabs:
        ev = t.expectation(np.array(s.x_bits, dtype=bool), np.array(s.z_bits, dtype=bool))
        if ev * s.sign != 1:
            raise SynthesisError(f"synthesized state fails {s}")
