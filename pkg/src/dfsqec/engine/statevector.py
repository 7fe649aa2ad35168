"""Exact state-vector engine, batched over shots.

Amplitudes live in an array of shape ``(shots, 2**n)``; qubit ``q`` is bit ``q``
of the basis index.  Every shot carries its own quasi-static frequency offsets,
so RZ angles are per-shot arrays.
"""
from __future__ import annotations

import numpy as np

from ..noise import NoiseConfig, ZoneAssignment
from .base import Simulator
from .circuit import MEASUREMENTS, TWO_QUBIT_GATES, Instruction, controlled_letters
from .core import EngineCapabilityError

DEFAULT_CAP = 22
AMPLITUDE_BUDGET = 1 << 24   # amplitudes per batch, about 256 MB of complex128

_SQ = 1 / np.sqrt(2)
ONE_QUBIT = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[_SQ, _SQ], [_SQ, -_SQ]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "SDG": np.array([[1, 0], [0, -1j]], dtype=complex),
}


def controlled_pauli_matrix(a: str, b: str) -> np.ndarray:
    """A-controlled-B as a 4x4 matrix, control = first tensor factor."""
    A, B, I = ONE_QUBIT[a], ONE_QUBIT[b], ONE_QUBIT["I"]
    return 0.5 * (np.kron(I + A, I) + np.kron(I - A, B))


def max_batch_shots(n_qubits: int, budget: int = AMPLITUDE_BUDGET) -> int:
    return max(1, budget >> n_qubits)


class StateVectorSimulator(Simulator):
    engine = "statevector"

    def __init__(self, n_qubits: int, shots: int = 1, noise: NoiseConfig | None = None,
                 rng=None, zones: ZoneAssignment | None = None, cap: int = DEFAULT_CAP):
        if n_qubits > cap:
            raise EngineCapabilityError(f"{n_qubits} qubits exceed the state-vector cap of {cap}")
        super().__init__(n_qubits, shots, noise, rng, zones)
        self.psi = np.zeros((shots, 1 << n_qubits), dtype=complex)
        self.psi[:, 0] = 1.0

    # -- linear algebra ----------------------------------------------------------
    def _view(self, q: int) -> np.ndarray:
        # (shots, high, 2, low) with the size-2 axis being qubit q
        return self.psi.reshape(self.shots, 1 << (self.n - q - 1), 2, 1 << q)

    def apply_1q(self, U: np.ndarray, q: int, mask: np.ndarray | None = None) -> None:
        v = self._view(q)
        if mask is None:
            v[:] = np.einsum("ij,sajb->saib", U, v)
        elif mask.any():
            v[mask] = np.einsum("ij,sajb->saib", U, v[mask])

    def apply_2q(self, U: np.ndarray, q0: int, q1: int, mask: np.ndarray | None = None) -> None:
        sel = slice(None) if mask is None else mask
        if mask is not None and not mask.any():
            return
        shots = self.psi[sel].shape[0]
        t = self.psi[sel].reshape((shots,) + (2,) * self.n)
        ax0, ax1 = self.n - q0, self.n - q1          # axis 1 is the top qubit
        t = np.moveaxis(t, (ax0, ax1), (-2, -1))
        shape = t.shape
        t = t.reshape(shots, -1, 4) @ U.T
        t = np.moveaxis(t.reshape(shape), (-2, -1), (ax0, ax1))
        self.psi[sel] = t.reshape(shots, -1)

    def probability_one(self, q: int) -> np.ndarray:
        v = self._view(q)
        return np.einsum("sab,sab->s", v[:, :, 1, :], v[:, :, 1, :].conj()).real

    def _collapse(self, q: int, outcome: np.ndarray, mask: np.ndarray) -> None:
        v = self._view(q)
        keep = outcome.astype(int)
        for val in (0, 1):
            kill = mask & (keep != val)
            v[kill, :, val, :] = 0.0
        norms = np.linalg.norm(self.psi[mask], axis=1)
        self.psi[mask] /= norms[:, None]

    def _measure_z(self, q: int, mask: np.ndarray) -> np.ndarray:
        p1 = np.clip(self.probability_one(q), 0.0, 1.0)
        out = self.rng.random(self.shots) < p1
        act = mask & ~self.leaked[q]
        if act.any():
            self._collapse(q, out, act)
        return out

    # -- engine hooks ------------------------------------------------------------
    def apply_pauli_bits(self, q: int, xbits: np.ndarray, zbits: np.ndarray) -> None:
        if zbits.any():
            self.apply_1q(ONE_QUBIT["Z"], q, zbits)
        if xbits.any():
            self.apply_1q(ONE_QUBIT["X"], q, xbits)

    def gate(self, ins: Instruction, live: np.ndarray, mask: np.ndarray) -> None:
        k = ins.kind
        if k == "RZ":
            self.rz(ins.qubits[0], np.full(self.shots, ins.angle), live)
        elif k in TWO_QUBIT_GATES:
            U = controlled_pauli_matrix(*controlled_letters(k))
            self.apply_2q(U, *ins.qubits, mask=live)
        else:
            self.apply_1q(ONE_QUBIT[k], ins.qubits[0], live)

    def rz(self, q: int, angles: np.ndarray, mask: np.ndarray) -> None:
        """RZ(theta) = diag(exp(-i theta/2), exp(i theta/2)) with per-shot theta."""
        theta = np.where(mask, angles, 0.0)
        v = self._view(q)
        v[:, :, 0, :] *= np.exp(-0.5j * theta)[:, None, None]
        v[:, :, 1, :] *= np.exp(0.5j * theta)[:, None, None]

    def measure(self, ins: Instruction, mask: np.ndarray) -> np.ndarray:
        q = ins.qubits[0]
        basis = MEASUREMENTS[ins.kind]
        pre = {"Z": (), "X": ("H",), "Y": ("SDG", "H")}[basis]
        post = {"Z": (), "X": ("H",), "Y": ("H", "S")}[basis]
        live = mask & ~self.leaked[q]
        for g in pre:
            self.apply_1q(ONE_QUBIT[g], q, live)
        out = self._measure_z(q, mask)
        for g in post:
            self.apply_1q(ONE_QUBIT[g], q, live)
        return out

    def prepare(self, q: int, mask: np.ndarray) -> None:
        self.leaked[q] &= ~mask
        out = self._measure_z(q, mask)
        self.apply_1q(ONE_QUBIT["X"], q, mask & out)

    def reset_leaked(self, q: int, mask: np.ndarray) -> None:
        if mask.any():
            self.prepare(q, mask)

    def on_leak(self, q: int, mask: np.ndarray) -> None:
        # a leaked ion has left the qubit manifold: decohere what is left behind
        self._measure_z(q, mask)

    def coherent_idle(self, qubits, angles, live) -> None:
        if angles is None:
            return
        for j, q in enumerate(qubits):
            self.rz(q, angles[j], live[j])

    def expectation(self, pauli) -> np.ndarray:
        """Per-shot expectation value of a Hermitian :class:`PauliString`."""
        phi = self.psi.copy()
        saved = self.psi
        try:
            self.psi = phi
            for q in pauli.support:
                self.apply_1q(ONE_QUBIT[pauli.letter(q)], q)
            val = np.einsum("si,si->s", saved.conj(), phi)
        finally:
            self.psi = saved
        sign = {0: 1, 2: -1}.get(pauli.phase % 4)
        if sign is None:
            raise ValueError("expectation needs a Hermitian Pauli")
        return sign * val.real
