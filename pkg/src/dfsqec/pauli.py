"""Signed Pauli strings in symplectic form.

A :class:`PauliString` stores its X and Z components as Python integers used as
bit masks (bit ``q`` set means the operator acts on qubit ``q``), plus a phase
exponent ``k`` so that the operator equals ``i**k`` times the tensor product of
single-qubit Paulis, with ``Y`` written as ``Y`` (not ``XZ``).

Text form::

    sign? (("X" | "Y" | "Z") index)+      e.g. "-Z0Z1", "X1Z6"

Indices must be strictly increasing.  The identity prints as ``I``.
"""
from __future__ import annotations

import functools
import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "DimensionError",
    "ExhaustionError",
    "PauliString",
    "multiply",
    "commutes",
    "syndrome_of",
    "brute_force_min_weight",
    "weight_layer",
    "conjugate",
    "product",
]

_TOKEN = re.compile(r"([XYZ])(\d+)")
_TEXT = re.compile(r"^([+-]?)(i?)((?:[XYZ]\d+)+|I)$")


class DimensionError(ValueError):
    """Operands act on different numbers of qubits."""


class ExhaustionError(RuntimeError):
    """No Pauli with the requested syndrome exists in the searched range."""


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    n: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("qubit count must be non-negative")
        limit = 1 << self.n
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise DimensionError(f"bit masks exceed {self.n} qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    # -- constructors -------------------------------------------------
    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliString":
        if not 0 <= qubit < n:
            raise DimensionError(f"qubit {qubit} out of range for n={n}")
        bit = 1 << qubit
        x = bit if letter in "XY" else 0
        z = bit if letter in "ZY" else 0
        if letter not in "XYZ":
            raise ValueError(f"unknown Pauli letter {letter!r}")
        return cls(n, x, z)

    @classmethod
    def from_letters(cls, letters: str, sign: int = 1) -> "PauliString":
        """Dense form, e.g. ``"XZZXI"`` (qubit 0 first)."""
        x = z = 0
        for q, ch in enumerate(letters):
            if ch in "XY":
                x |= 1 << q
            if ch in "ZY":
                z |= 1 << q
            if ch not in "IXYZ_":
                raise ValueError(f"unknown Pauli letter {ch!r}")
        return cls(len(letters), x, z, 0 if sign > 0 else 2)

    @classmethod
    def from_str(cls, text: str, n: int | None = None) -> "PauliString":
        """Parse the sparse text form.  ``n`` defaults to the largest index + 1."""
        m = _TEXT.match(text.strip())
        if m is None:
            raise ValueError(f"malformed Pauli string {text!r}")
        sign, imag, body = m.groups()
        phase = (2 if sign == "-" else 0) + (1 if imag else 0)
        x = z = 0
        last = -1
        if body != "I":
            for letter, idx in _TOKEN.findall(body):
                q = int(idx)
                if q <= last:
                    raise ValueError(f"indices must be strictly increasing in {text!r}")
                last = q
                if letter in "XY":
                    x |= 1 << q
                if letter in "ZY":
                    z |= 1 << q
        if n is None:
            n = last + 1
        if last >= n:
            raise DimensionError(f"index {last} out of range for n={n}")
        return cls(n, x, z, phase)

    # -- views ----------------------------------------------------------
    @property
    def sign(self) -> int:
        if self.phase % 2:
            raise ValueError(f"{self} has an imaginary phase")
        return 1 if self.phase == 0 else -1

    @property
    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def support(self) -> tuple[int, ...]:
        s = self.x | self.z
        return tuple(q for q in range(self.n) if s >> q & 1)

    @property
    def x_bits(self) -> tuple[int, ...]:
        return tuple(self.x >> q & 1 for q in range(self.n))

    @property
    def z_bits(self) -> tuple[int, ...]:
        return tuple(self.z >> q & 1 for q in range(self.n))

    def letter(self, q: int) -> str:
        return "IXZY"[(self.x >> q & 1) | (self.z >> q & 1) << 1]

    def unsigned(self) -> "PauliString":
        return PauliString(self.n, self.x, self.z, 0)

    def key(self) -> tuple[int, int]:
        """Phase-free identity, handy for hashing cosets."""
        return self.x, self.z

    def __str__(self) -> str:
        prefix = {0: "", 1: "i", 2: "-", 3: "-i"}[self.phase]
        body = "".join(f"{self.letter(q)}{q}" for q in self.support)
        return prefix + (body or "I")

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r}, n={self.n})"

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __neg__(self) -> "PauliString":
        return PauliString(self.n, self.x, self.z, self.phase + 2)

    def commutes(self, other: "PauliString") -> int:
        return commutes(self, other)

    def restrict(self, qubits: Sequence[int]) -> "PauliString":
        """Sub-operator on ``qubits`` (renumbered 0..len-1), phase dropped."""
        x = z = 0
        for i, q in enumerate(qubits):
            x |= (self.x >> q & 1) << i
            z |= (self.z >> q & 1) << i
        return PauliString(len(qubits), x, z)

    def embed(self, n: int, qubits: Sequence[int]) -> "PauliString":
        """Place this operator on ``qubits`` of a larger ``n``-qubit register."""
        if len(qubits) != self.n:
            raise DimensionError("embedding needs one target per qubit")
        x = z = 0
        for i, q in enumerate(qubits):
            x |= (self.x >> i & 1) << q
            z |= (self.z >> i & 1) << q
        return PauliString(n, x, z, self.phase)


def _check_same_n(p: PauliString, q: PauliString) -> None:
    if p.n != q.n:
        raise DimensionError(f"length mismatch: {p.n} vs {q.n}")


def multiply(p: PauliString, q: PauliString) -> PauliString:
    """Return ``p * q`` with the i-phase accumulated exactly."""
    _check_same_n(p, q)
    px_only = p.x & ~p.z
    pz_only = p.z & ~p.x
    py = p.x & p.z
    qx_only = q.x & ~q.z
    qz_only = q.z & ~q.x
    qy = q.x & q.z
    # XY = iZ, YZ = iX, ZX = iY and the reverse orders give -i.
    plus = (px_only & qy) | (py & qz_only) | (pz_only & qx_only)
    minus = (px_only & qz_only) | (py & qx_only) | (pz_only & qy)
    phase = p.phase + q.phase + _popcount(plus) - _popcount(minus)
    return PauliString(p.n, p.x ^ q.x, p.z ^ q.z, phase)


def product(paulis: Iterable[PauliString], n: int | None = None) -> PauliString:
    paulis = list(paulis)
    if not paulis:
        if n is None:
            raise ValueError("empty product needs n")
        return PauliString.identity(n)
    return functools.reduce(multiply, paulis)


def commutes(p: PauliString, q: PauliString) -> int:
    """0 if ``p`` and ``q`` commute, 1 if they anticommute."""
    _check_same_n(p, q)
    return _popcount((p.x & q.z) ^ (p.z & q.x)) & 1


def syndrome_of(error: PauliString, generators: Sequence[PauliString]) -> tuple[int, ...]:
    return tuple(commutes(error, g) for g in generators)


# -- brute-force oracle ---------------------------------------------------

_CLASS_LETTERS = {"any": (1, 2, 3), "Z-only": (2,), "X-only": (1,)}


@functools.lru_cache(maxsize=None)
def weight_layer(n: int, w: int, pauli_class: str = "any") -> tuple[np.ndarray, np.ndarray]:
    """All unsigned Paulis of weight exactly ``w`` as (x, z) mask arrays."""
    codes = _CLASS_LETTERS[pauli_class]
    xs, zs = [], []
    for support in itertools.combinations(range(n), w):
        for letters in itertools.product(codes, repeat=w):
            x = z = 0
            for q, c in zip(support, letters):
                if c & 1:
                    x |= 1 << q
                if c & 2:
                    z |= 1 << q
            xs.append(x)
            zs.append(z)
    return np.array(xs, dtype=np.int64), np.array(zs, dtype=np.int64)


def _layer_syndromes(x: np.ndarray, z: np.ndarray, generators: Sequence[PauliString]) -> np.ndarray:
    """Pack each Pauli's syndrome into an integer (bit i = generator i)."""
    out = np.zeros(x.shape, dtype=np.int64)
    for i, g in enumerate(generators):
        anti = np.bitwise_count((x & g.z) ^ (z & g.x)) & 1
        out |= anti.astype(np.int64) << i
    return out


@functools.lru_cache(maxsize=64)
def _cached_layer_syndromes(n: int, w: int, pauli_class: str, gens: tuple) -> np.ndarray:
    x, z = weight_layer(n, w, pauli_class)
    return _layer_syndromes(x, z, [PauliString(n, gx, gz) for gx, gz in gens])


def brute_force_min_weight(
    syndrome: Sequence[int],
    code,
    pauli_class: str = "any",
    max_qubits: int = 12,
) -> set[PauliString]:
    """Every minimum-weight Pauli (of ``pauli_class``) with the given syndrome.

    ``code`` is a :class:`~dfsqec.codes.CodeSpec` or a plain list of generators.
    The search walks weights 0, 1, 2, ... and stops at the first non-empty layer.
    """
    generators = list(getattr(code, "stabilizer_generators", code))
    if not generators:
        raise ValueError("need at least one generator")
    n = generators[0].n
    if n > max_qubits:
        raise ValueError(f"enumeration bounded to {max_qubits} qubits, got {n}")
    if len(syndrome) != len(generators):
        raise DimensionError("syndrome length differs from generator count")
    if pauli_class not in _CLASS_LETTERS:
        raise ValueError(f"unknown Pauli class {pauli_class!r}")
    target = sum(int(b) << i for i, b in enumerate(syndrome))
    if target == 0:
        return {PauliString.identity(n)}
    gens = tuple(g.key() for g in generators)
    for w in range(1, n + 1):
        synd = _cached_layer_syndromes(n, w, pauli_class, gens)
        hits = np.flatnonzero(synd == target)
        if hits.size:
            x, z = weight_layer(n, w, pauli_class)
            return {PauliString(n, int(x[i]), int(z[i])) for i in hits}
    raise ExhaustionError(f"no {pauli_class} Pauli has syndrome {tuple(syndrome)}")


# -- Clifford conjugation ----------------------------------------------------

def _images(gate: str, n: int, qubits: Sequence[int]) -> dict:
    """U X_q U^dag and U Z_q U^dag for the qubits a gate touches."""
    P = lambda text: PauliString.from_str(text, n)  # noqa: E731
    if gate in ("H", "S", "SDG", "X", "Y", "Z"):
        q = qubits[0]
        table = {
            "H": (f"Z{q}", f"X{q}"),
            "S": (f"Y{q}", f"Z{q}"),
            "SDG": (f"-Y{q}", f"Z{q}"),
            "X": (f"X{q}", f"-Z{q}"),
            "Y": (f"-X{q}", f"-Z{q}"),
            "Z": (f"-X{q}", f"Z{q}"),
        }[gate]
        return {("X", q): P(table[0]), ("Z", q): P(table[1])}
    if gate == "CNOT":
        c, t = qubits
        lo, hi = sorted((c, t))
        xc = f"X{lo}X{hi}"
        zt = f"Z{lo}Z{hi}"
        return {("X", c): P(xc), ("Z", c): P(f"Z{c}"), ("X", t): P(f"X{t}"), ("Z", t): P(zt)}
    raise ValueError(f"no conjugation rule for {gate}")


def conjugate(p: PauliString, gate: str, qubits: Sequence[int]) -> PauliString:
    """Return ``U p U^dag`` for a Clifford gate from {H, S, SDG, X, Y, Z, CNOT}."""
    images = _images(gate, p.n, qubits)
    touched = set(qubits)
    rest_mask = ~sum(1 << q for q in touched)
    out = PauliString(p.n, p.x & rest_mask, p.z & rest_mask, p.phase)
    for q in sorted(touched):
        bx, bz = p.x >> q & 1, p.z >> q & 1
        if bx and bz:                     # Y = i X Z
            out = PauliString(out.n, out.x, out.z, out.phase + 1)
        if bx:
            out = multiply(out, images[("X", q)])
        if bz:
            out = multiply(out, images[("Z", q)])
    return out
