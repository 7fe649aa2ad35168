"""Stabilizer tableau (Aaronson-Gottesman CHP) used as the reference run of the frame engine."""
from __future__ import annotations

import numpy as np

# Basis changes mapping a control Pauli to Z and a target Pauli to X; used to build
# every A-controlled-B gate from a CNOT.
_TO_Z = {"Z": (), "X": ("H",), "Y": ("SDG", "H")}
_TO_X = {"X": (), "Z": ("H",), "Y": ("SDG",)}
_INVERSE = {"H": "H", "S": "SDG", "SDG": "S"}


def controlled_pauli_decomposition(a: str, b: str) -> tuple[list, list, list]:
    """(pre-control, pre-target, post) gate lists so that A-C-B = post . CNOT . pre."""
    pre_c = list(_TO_Z[a])
    pre_t = list(_TO_X[b])
    post = [(_INVERSE[g], 0) for g in reversed(pre_c)] + [(_INVERSE[g], 1) for g in reversed(pre_t)]
    return pre_c, pre_t, post


class Tableau:
    """n-qubit stabilizer state; starts in |0...0>."""

    def __init__(self, n: int):
        self.n = n
        m = 2 * n + 1
        self.x = np.zeros((m, n), dtype=bool)
        self.z = np.zeros((m, n), dtype=bool)
        self.r = np.zeros(m, dtype=bool)
        idx = np.arange(n)
        self.x[idx, idx] = True          # destabilizers
        self.z[n + idx, idx] = True      # stabilizers

    def copy(self) -> "Tableau":
        t = Tableau.__new__(Tableau)
        t.n = self.n
        t.x, t.z, t.r = self.x.copy(), self.z.copy(), self.r.copy()
        return t

    # -- gates ------------------------------------------------------------
    def h(self, q: int) -> None:
        self.r ^= self.x[:, q] & self.z[:, q]
        self.x[:, q], self.z[:, q] = self.z[:, q].copy(), self.x[:, q].copy()

    def s(self, q: int) -> None:
        self.r ^= self.x[:, q] & self.z[:, q]
        self.z[:, q] ^= self.x[:, q]

    def sdg(self, q: int) -> None:
        self.s(q)
        self.s(q)
        self.s(q)

    def pauli(self, q: int, letter: str) -> None:
        if letter in "XY":
            self.r ^= self.z[:, q]
        if letter in "ZY":
            self.r ^= self.x[:, q]

    def cnot(self, c: int, t: int) -> None:
        xc, zc, xt, zt = self.x[:, c], self.z[:, c], self.x[:, t], self.z[:, t]
        self.r ^= xc & zt & ~(xt ^ zc)
        self.x[:, t] ^= xc
        self.z[:, c] ^= zt

    def apply(self, gate: str, qubits) -> None:
        if gate == "H":
            self.h(qubits[0])
        elif gate == "S":
            self.s(qubits[0])
        elif gate == "SDG":
            self.sdg(qubits[0])
        elif gate in ("X", "Y", "Z"):
            self.pauli(qubits[0], gate)
        elif gate == "CNOT":
            self.cnot(*qubits)
        elif gate in ("CZ", "CY"):
            self.controlled_pauli("Z", gate[1], *qubits)
        elif len(gate) == 3 and gate[1] == "C":
            self.controlled_pauli(gate[0], gate[2], *qubits)
        else:
            raise ValueError(f"tableau cannot apply {gate}")

    def controlled_pauli(self, a: str, b: str, c: int, t: int) -> None:
        pre_c, pre_t, post = controlled_pauli_decomposition(a, b)
        for g in pre_c:
            self.apply(g, (c,))
        for g in pre_t:
            self.apply(g, (t,))
        self.cnot(c, t)
        for g, which in post:
            self.apply(g, (c if which == 0 else t,))

    # -- measurement --------------------------------------------------------
    def _rowsum(self, h: int, i: int) -> None:
        x1, z1, x2, z2 = self.x[i], self.z[i], self.x[h], self.z[h]
        # g(x1,z1,x2,z2) summed over qubits, per CHP
        a = x2.astype(np.int64)
        b = z2.astype(np.int64)
        g = np.where(x1 & z1, b - a, 0)
        g = g + np.where(x1 & ~z1, b * (2 * a - 1), 0)
        g = g + np.where(~x1 & z1, a * (1 - 2 * b), 0)
        total = 2 * int(self.r[h]) + 2 * int(self.r[i]) + int(g.sum())
        self.r[h] = (total % 4) == 2
        self.x[h] ^= x1
        self.z[h] ^= z1

    def measure_z(self, q: int, forced: int = 0) -> tuple[int, bool]:
        """Measure qubit ``q`` in Z.  Returns (outcome, was_random).

        Random outcomes are resolved to ``forced`` so the reference run is deterministic.
        """
        n = self.n
        stab = np.flatnonzero(self.x[n:2 * n, q])
        if stab.size:
            p = n + int(stab[0])
            for i in np.flatnonzero(self.x[:2 * n, q]):
                if i != p:
                    self._rowsum(int(i), p)
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p], self.z[p], self.r[p]
            self.x[p] = False
            self.z[p] = False
            self.z[p, q] = True
            self.r[p] = bool(forced)
            return int(forced), True
        scratch = 2 * n
        self.x[scratch] = False
        self.z[scratch] = False
        self.r[scratch] = False
        for i in np.flatnonzero(self.x[:n, q]):
            self._rowsum(scratch, int(i) + n)
        return int(self.r[scratch]), False

    def measure(self, q: int, basis: str = "Z", forced: int = 0) -> tuple[int, bool]:
        if basis == "Z":
            return self.measure_z(q, forced)
        if basis == "X":
            self.h(q)
            out = self.measure_z(q, forced)
            self.h(q)
            return out
        if basis == "Y":
            self.sdg(q)
            self.h(q)
            out = self.measure_z(q, forced)
            self.h(q)
            self.s(q)
            return out
        raise ValueError(f"unknown basis {basis!r}")

    def reset(self, q: int) -> None:
        out, _ = self.measure_z(q)
        if out:
            self.pauli(q, "X")

    def stabilizers(self) -> list[tuple[np.ndarray, np.ndarray, bool]]:
        n = self.n
        return [(self.x[i].copy(), self.z[i].copy(), bool(self.r[i])) for i in range(n, 2 * n)]

    def expectation(self, x: np.ndarray, z: np.ndarray) -> int:
        """<P> for the Hermitian Pauli with masks (x, z): +1, -1 or 0."""
        n = self.n
        anti = ((self.x[n:2 * n] & z) ^ (self.z[n:2 * n] & x)).sum(axis=1) % 2
        if anti.any():
            return 0
        scratch = 2 * n
        self.x[scratch] = False
        self.z[scratch] = False
        self.r[scratch] = False
        anti_d = ((self.x[:n] & z) ^ (self.z[:n] & x)).sum(axis=1) % 2
        for i in np.flatnonzero(anti_d):
            self._rowsum(scratch, int(i) + n)
        # the scratch row is now the product of stabilizers equal to +-P
        if not (np.array_equal(self.x[scratch], x) and np.array_equal(self.z[scratch], z)):
            raise AssertionError("stabilizer expansion failed")
        return -1 if self.r[scratch] else 1
