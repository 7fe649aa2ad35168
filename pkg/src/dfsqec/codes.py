"""The [[2,1,1]] DFS code, the [[5,1,3]] code and their [[10,1,4]] concatenation."""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field

import numpy as np

from .pauli import (
    PauliString,
    _cached_layer_syndromes,
    commutes,
    multiply,
    product,
    weight_layer,
)

__all__ = [
    "CodeSpec",
    "ConcatenationMap",
    "CodeVerificationError",
    "UnsupportedCodeError",
    "VerificationReport",
    "build_dfs",
    "build_513",
    "build_1014",
    "build_code",
    "verify_code",
    "stabilizer_group",
    "is_stabilizer",
    "logically_equivalent",
    "reduced_weight",
    "minimal_even_distance_logicals",
    "s_parity",
]

# Published [[10,1,4]] generators, in the fixed order r0..r4, s0..s3.
_PUBLISHED_1014 = {
    "r0": "-Z0Z1",
    "r1": "-Z2Z3",
    "r2": "-Z4Z5",
    "r3": "-Z6Z7",
    "r4": "-Z8Z9",
    "s0": "X0X1Z2Z4X6X7",
    "s1": "X2X3Z4Z6X8X9",
    "s2": "X0X1X4X5Z6Z8",
    "s3": "Z0X2X3X6X7Z8",
}


class CodeVerificationError(RuntimeError):
    def __init__(self, report: "VerificationReport"):
        self.report = report
        super().__init__("; ".join(report.failures))


class UnsupportedCodeError(ValueError):
    pass


@dataclass(frozen=True)
class CodeSpec:
    name: str
    n: int
    k: int
    d: int
    stabilizer_generators: tuple[PauliString, ...]
    logical_x: tuple[PauliString, ...]
    logical_z: tuple[PauliString, ...]
    logical_y: tuple[PauliString, ...]
    generator_names: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.generator_names:
            names = tuple(f"g{i}" for i in range(len(self.stabilizer_generators)))
            object.__setattr__(self, "generator_names", names)
        for p in (*self.stabilizer_generators, *self.logical_x, *self.logical_z, *self.logical_y):
            if p.n != self.n:
                raise ValueError(f"{p} does not act on {self.n} qubits")

    def generator(self, name: str) -> PauliString:
        return self.stabilizer_generators[self.generator_names.index(name)]

    def syndrome(self, error: PauliString) -> tuple[int, ...]:
        return tuple(commutes(error, g) for g in self.stabilizer_generators)

    def to_text(self) -> str:
        lines = [f"name: {self.name}", f"n: {self.n}", f"k: {self.k}", f"d: {self.d}", "generators:"]
        lines += [f"  {nm}: {g}" for nm, g in zip(self.generator_names, self.stabilizer_generators)]
        for label, ops in (("logical_x", self.logical_x), ("logical_y", self.logical_y),
                           ("logical_z", self.logical_z)):
            lines.append(f"{label}: " + ", ".join(str(p) for p in ops))
        return "\n".join(lines) + "\n"


def _logical_y(lx: PauliString, lz: PauliString) -> PauliString:
    # Convention: Y_L := i * X_L * Z_L.
    return multiply(PauliString(lx.n, phase=1), multiply(lx, lz))


def _spec(name, n, d, gens, lx, lz, names=()):
    gens = tuple(PauliString.from_str(g, n) for g in gens)
    lx = PauliString.from_str(lx, n)
    lz = PauliString.from_str(lz, n)
    return CodeSpec(name, n, 1, d, gens, (lx,), (lz,), (_logical_y(lx, lz),), tuple(names))


@functools.lru_cache(maxsize=None)
def build_dfs() -> CodeSpec:
    return _spec("[[2,1,1]]", 2, 1, ["-Z0Z1"], "X0X1", "Z0", names=["r0"])


@functools.lru_cache(maxsize=None)
def build_513() -> CodeSpec:
    return _spec(
        "[[5,1,3]]", 5, 3,
        ["X0Z1Z2X3", "X1Z2Z3X4", "X0X2Z3Z4", "Z0X1X3Z4"],
        "X0X1X2X3X4", "Z0Z1Z2Z3Z4",
        names=["s0", "s1", "s2", "s3"],
    )


@functools.lru_cache(maxsize=None)
def build_1014() -> CodeSpec:
    code = _spec(
        "[[10,1,4]]", 10, 4,
        list(_PUBLISHED_1014.values()),
        "X0X1X2X3X4X5X6X7X8X9", "Z0Z2Z4Z6Z8",
        names=list(_PUBLISHED_1014),
    )
    return code


def build_code(name: str) -> CodeSpec:
    table = {
        "211": build_dfs, "dfs": build_dfs, "[[2,1,1]]": build_dfs,
        "513": build_513, "[[5,1,3]]": build_513,
        "1014": build_1014, "[[10,1,4]]": build_1014,
    }
    try:
        return table[name]()
    except KeyError:
        raise UnsupportedCodeError(f"unknown code {name!r}") from None


def s_parity() -> PauliString:
    """The redundant check s_p = s0 s1 s2 s3 of the [[10,1,4]] code."""
    code = build_1014()
    return product(code.generator(f"s{i}") for i in range(4))


@dataclass(frozen=True)
class ConcatenationMap:
    """Substitute inner-code logicals for each physical Pauli of the outer code."""

    outer: CodeSpec
    inner: CodeSpec
    pairing: tuple[tuple[int, ...], ...] = field(default=())

    def __post_init__(self):
        if not self.pairing:
            m = self.inner.n
            pairing = tuple(tuple(range(m * i, m * i + m)) for i in range(self.outer.n))
            object.__setattr__(self, "pairing", pairing)
        flat = sorted(q for block in self.pairing for q in block)
        if flat != list(range(self.n)):
            raise ValueError("pairing must partition the physical qubits")

    @property
    def n(self) -> int:
        return self.outer.n * self.inner.n

    def substitute(self, outer_op: PauliString) -> PauliString:
        if outer_op.n != self.outer.n:
            raise ValueError("operator does not act on the outer code")
        lx, ly, lz = self.inner.logical_x[0], self.inner.logical_y[0], self.inner.logical_z[0]
        result = PauliString(self.n, phase=outer_op.phase)
        for i in range(self.outer.n):
            letter = outer_op.letter(i)
            if letter == "I":
                continue
            inner = {"X": lx, "Y": ly, "Z": lz}[letter]
            result = multiply(result, inner.embed(self.n, self.pairing[i]))
        return result

    def concatenate(self, name: str = "", d: int = 0) -> CodeSpec:
        inner_gens, inner_names = [], []
        for i, block in enumerate(self.pairing):
            for j, g in enumerate(self.inner.stabilizer_generators):
                inner_gens.append(g.embed(self.n, block))
                inner_names.append(f"r{i}" if len(self.inner.stabilizer_generators) == 1 else f"r{i}_{j}")
        outer_gens = [self.substitute(g) for g in self.outer.stabilizer_generators]
        return CodeSpec(
            name or f"[[{self.n},{self.outer.k},?]]",
            self.n, self.outer.k, d,
            tuple(inner_gens + outer_gens),
            tuple(self.substitute(p) for p in self.outer.logical_x),
            tuple(self.substitute(p) for p in self.outer.logical_z),
            tuple(self.substitute(p) for p in self.outer.logical_y),
            tuple(inner_names) + self.outer.generator_names,
        )


# -- stabilizer group helpers --------------------------------------------

@functools.lru_cache(maxsize=16)
def _group(gens: tuple[PauliString, ...]) -> tuple[PauliString, ...]:
    n = gens[0].n
    elems = [PauliString.identity(n)]
    for g in gens:
        elems = elems + [multiply(e, g) for e in elems]
    return tuple(elems)


def stabilizer_group(code: CodeSpec) -> tuple[PauliString, ...]:
    """All 2**r signed elements of the stabilizer group."""
    return _group(code.stabilizer_generators)


@functools.lru_cache(maxsize=16)
def _group_keys(gens: tuple[PauliString, ...]) -> frozenset:
    return frozenset(p.key() for p in _group(gens))


def is_stabilizer(p: PauliString, code: CodeSpec) -> bool:
    """True if ``p`` equals a stabilizer element up to phase."""
    return p.key() in _group_keys(code.stabilizer_generators)


def logically_equivalent(a: PauliString, b: PauliString, code: CodeSpec) -> bool:
    return is_stabilizer(multiply(a, b), code)


def reduced_weight(p: PauliString, code: CodeSpec) -> int:
    """Minimum weight over the coset ``p * S``."""
    best = p.n
    for s in stabilizer_group(code):
        w = PauliString(p.n, p.x ^ s.x, p.z ^ s.z).weight
        if w < best:
            best = w
            if best == 0:
                break
    return best


# -- verification ----------------------------------------------------------

@dataclass
class VerificationReport:
    code: str
    n: int
    k: int
    declared_distance: int
    distance: int | None = None
    commutation_ok: bool = True
    logical_ok: bool = True
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (self.commutation_ok and self.logical_ok and not self.failures
                and self.distance == self.declared_distance)

    def to_text(self) -> str:
        return "\n".join([
            f"code: {self.code}",
            f"n: {self.n}  k: {self.k}",
            f"generators commute: {'pass' if self.commutation_ok else 'FAIL'}",
            f"logical algebra: {'pass' if self.logical_ok else 'FAIL'}",
            f"distance: {self.distance} (declared {self.declared_distance})",
            *(f"failure: {f}" for f in self.failures),
            f"result: {'PASS' if self.ok else 'FAIL'}",
        ]) + "\n"


def code_distance(code: CodeSpec, max_qubits: int = 12) -> int:
    """Smallest weight of a Pauli that commutes with every generator but is not a stabilizer."""
    if code.n > max_qubits:
        raise ValueError("distance enumeration is bounded to small codes")
    gens = tuple(g.key() for g in code.stabilizer_generators)
    keys = _group_keys(code.stabilizer_generators)
    for w in range(1, code.n + 1):
        synd = _cached_layer_syndromes(code.n, w, "any", gens)
        xs, zs = weight_layer(code.n, w, "any")
        for i in np.flatnonzero(synd == 0):
            if (int(xs[i]), int(zs[i])) not in keys:
                return w
    return code.n + 1


def verify_code(code: CodeSpec, raise_on_failure: bool = False) -> VerificationReport:
    report = VerificationReport(code.name, code.n, code.k, code.d)
    gens = code.stabilizer_generators
    names = code.generator_names
    for (i, g), (j, h) in itertools.combinations(enumerate(gens), 2):
        if commutes(g, h):
            report.commutation_ok = False
            report.failures.append(f"generators {names[i]} and {names[j]} anticommute")
    for i, g in enumerate(gens):
        if not g.is_hermitian:
            report.failures.append(f"generator {names[i]} is not Hermitian")
    for q in range(code.k):
        lx, ly, lz = code.logical_x[q], code.logical_y[q], code.logical_z[q]
        for label, op in (("X", lx), ("Y", ly), ("Z", lz)):
            for i, g in enumerate(gens):
                if commutes(op, g):
                    report.logical_ok = False
                    report.failures.append(f"logical {label}{q} anticommutes with {names[i]}")
        if not commutes(lx, lz):
            report.logical_ok = False
            report.failures.append(f"logical X{q} and Z{q} commute")
        if ly.key() != _logical_y(lx, lz).key() or ly.phase != _logical_y(lx, lz).phase:
            report.logical_ok = False
            report.failures.append(f"logical Y{q} != i X{q} Z{q}")
    if report.commutation_ok:
        report.distance = code_distance(code)
        if report.distance != code.d:
            report.failures.append(f"distance {report.distance} differs from declared {code.d}")
    if raise_on_failure and not report.ok:
        raise CodeVerificationError(report)
    return report


def minimal_even_distance_logicals(code: CodeSpec) -> list[PauliString]:
    """The five weight-4 logicals Z_{2i-2} X_{2i} X_{2i+1} Z_{2i+2} (indices mod 10)."""
    if code.n != 10 or code.stabilizer_generators != build_1014().stabilizer_generators:
        raise UnsupportedCodeError("only defined for the [[10,1,4]] code")
    out = []
    for i in range(5):
        p = product([
            PauliString.single(10, (2 * i - 2) % 10, "Z"),
            PauliString.single(10, 2 * i, "X"),
            PauliString.single(10, 2 * i + 1, "X"),
            PauliString.single(10, (2 * i + 2) % 10, "Z"),
        ])
        out.append(p.unsigned())
    return out


def verify_concatenation(cmap: ConcatenationMap, target: CodeSpec) -> list[str]:
    """Differences between ``cmap``'s output and ``target`` (empty list when equal)."""
    built = cmap.concatenate()
    problems = []
    for name, g in zip(target.generator_names, target.stabilizer_generators):
        if name not in built.generator_names:
            problems.append(f"{name} missing from concatenation")
            continue
        h = built.stabilizer_generators[built.generator_names.index(name)]
        if (h.key(), h.phase) != (g.key(), g.phase):
            problems.append(f"{name}: built {h}, published {g}")
    for label, a, b in (("X", built.logical_x, target.logical_x),
                        ("Z", built.logical_z, target.logical_z),
                        ("Y", built.logical_y, target.logical_y)):
        if (a[0].key(), a[0].phase) != (b[0].key(), b[0].phase):
            problems.append(f"logical {label}: built {a[0]}, published {b[0]}")
    return problems
