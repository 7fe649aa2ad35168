"""Real-time decoder for the [[10,1,4]] code.

Z errors are graph-like once the redundant check ``s_p = s0 s1 s2 s3`` is added:
every even-index ``Z_{2i}`` flips exactly two of the five nodes
``{s0, s1, s2, s3, s_p}``, so the nodes and the five ``Zbar_i`` edges form a
single cycle and matching reduces to walking around it.  X errors are located
pair by pair from the DFS checks ``r_i``; with ``m`` firing checks there are
``2**m`` candidate X sets, each of which leaves a residual ``s`` syndrome for
the Z matcher.  Candidates are ranked by their weight modulo the DFS checks
(a Z edge landing on a pair that already holds an X costs nothing extra) and
then by the number of Z edges.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ..codes import CodeSpec, UnsupportedCodeError, build_1014, s_parity
from ..pauli import PauliString, commutes

__all__ = [
    "ProtocolError",
    "GraphConstructionError",
    "SyndromeRecord",
    "DecodingGraph",
    "DecodeOutcome",
    "Decoder",
    "SyndromeDecoder",
    "build_decoding_graph",
    "decode_z",
    "decode_full",
    "N_PAIRS",
    "N_FLAGS",
]

N_PAIRS = 5
N_S = 4
N_FLAGS = 6  # three flags per flagged round, two rounds
_NODE_NAMES = ("s0", "s1", "s2", "s3", "sp")


class ProtocolError(ValueError):
    """The syndrome record is not one the QEC cycle can produce."""


class GraphConstructionError(RuntimeError):
    pass


def _bits_to_int(bits: Iterable[int]) -> int:
    return sum((int(b) & 1) << i for i, b in enumerate(bits))


def _int_to_bits(v: int, n: int) -> tuple[int, ...]:
    return tuple(v >> i & 1 for i in range(n))


@dataclass(frozen=True)
class SyndromeRecord:
    """One QEC cycle worth of normalized syndrome bits.

    Bits are packed little-endian: bit ``i`` of ``r`` is ``r_i``.  ``r`` bits are
    already normalized so that 0 means "no error" (the raw DFS readout reports
    +ZZ parity and is 1 on a clean codeword).
    """

    r: int = 0
    s: int = 0
    flags: int = 0
    unflagged_taken: bool = True
    leak_detected: int = 0

    @classmethod
    def from_bits(cls, r: Sequence[int] = (0,) * 5, s: Sequence[int] = (0,) * 4,
                  flags: Sequence[int] = (), unflagged_taken: bool | None = None,
                  leak_detected: Sequence[int] = ()) -> "SyndromeRecord":
        if len(r) != N_PAIRS or len(s) != N_S:
            raise ProtocolError("need 5 r bits and 4 s bits")
        f = _bits_to_int(flags)
        if unflagged_taken is None:
            unflagged_taken = True
        return cls(_bits_to_int(r), _bits_to_int(s), f, unflagged_taken, _bits_to_int(leak_detected))

    @classmethod
    def parse(cls, text: str) -> "SyndromeRecord":
        """Parse ``"r=10000 s=1001 flags=000"`` (flags optional, 3 or 6 bits)."""
        fields = dict(re.findall(r"(\w+)=([01]+)", text))
        unknown = set(fields) - {"r", "s", "flags"}
        if unknown or "r" not in fields or "s" not in fields:
            raise ProtocolError(f"malformed record {text!r}")
        r = [int(c) for c in fields["r"]]
        s = [int(c) for c in fields["s"]]
        flags = [int(c) for c in fields.get("flags", "")]
        if len(flags) not in (0, 3, N_FLAGS):
            raise ProtocolError("flags must have 3 or 6 bits")
        return cls.from_bits(r, s, flags)

    @property
    def r_bits(self) -> tuple[int, ...]:
        return _int_to_bits(self.r, N_PAIRS)

    @property
    def s_bits(self) -> tuple[int, ...]:
        return _int_to_bits(self.s, N_S)

    @property
    def flag_bits(self) -> tuple[int, ...]:
        return _int_to_bits(self.flags, N_FLAGS)

    @property
    def sp(self) -> int:
        return bin(self.s).count("1") & 1

    @property
    def trivial(self) -> bool:
        return not (self.r or self.s or self.flags)

    def __str__(self) -> str:
        def b(bits):
            return "".join(map(str, bits))
        return f"r={b(self.r_bits)} s={b(self.s_bits)} flags={b(self.flag_bits)}"


@dataclass(frozen=True)
class DecodingGraph:
    """Five nodes (s0..s3, s_p) in cyclic order, one edge per DFS pair."""

    cycle: tuple[int, ...]          # node indices (0..3 = s_i, 4 = s_p) in walking order
    edge_pairs: tuple[int, ...]     # edge k joins cycle[k] and cycle[k+1]; label = pair index
    endpoints: dict = field(default_factory=dict)  # pair index -> frozenset of node indices

    def edge_nodes(self, pair: int) -> frozenset:
        return self.endpoints[pair]

    def describe(self) -> str:
        names = [_NODE_NAMES[i] for i in self.cycle]
        return "-".join(names + [names[0]])


def build_decoding_graph(code: CodeSpec | None = None) -> DecodingGraph:
    code = code or build_1014()
    if code.n != 10 or code.stabilizer_generators != build_1014().stabilizer_generators:
        raise UnsupportedCodeError("the cyclic matcher is specific to the [[10,1,4]] code")
    checks = [code.generator(f"s{i}") for i in range(N_S)] + [s_parity()]
    endpoints = {}
    for pair in range(N_PAIRS):
        z = PauliString.single(code.n, 2 * pair, "Z")
        hit = frozenset(i for i, c in enumerate(checks) if commutes(z, c))
        if len(hit) != 2:
            raise GraphConstructionError(f"Z{2 * pair} flips {len(hit)} nodes, expected 2")
        endpoints[pair] = hit
    adjacency = {v: [] for v in range(5)}
    for pair, (a, b) in ((p, tuple(sorted(e))) for p, e in endpoints.items()):
        adjacency[a].append((b, pair))
        adjacency[b].append((a, pair))
    if any(len(v) != 2 for v in adjacency.values()):
        raise GraphConstructionError("Z-error graph is not a single cycle")
    # Walk the cycle starting from s2 towards s0, matching the usual drawing.
    start = 2
    prev, node = None, start
    cycle, edges = [], []
    while True:
        cycle.append(node)
        nxt = [(v, p) for v, p in sorted(adjacency[node]) if v != prev or len(cycle) == 1]
        if len(cycle) == 1:
            nxt = [x for x in nxt if x[0] == 0] or nxt
        v, p = nxt[0]
        edges.append(p)
        prev, node = node, v
        if node == start:
            break
    if len(cycle) != 5:
        raise GraphConstructionError("Z-error graph is not a single 5-cycle")
    return DecodingGraph(tuple(cycle), tuple(edges), endpoints)


def _walk(graph: DecodingGraph, nodes: int) -> int:
    """Edge set (bit mask over pairs) pairing consecutive marked nodes clockwise."""
    marked = [k for k, v in enumerate(graph.cycle) if nodes >> v & 1]
    mask = 0
    for a, b in zip(marked[0::2], marked[1::2]):
        for k in range(a, b):
            mask |= 1 << graph.edge_pairs[k]
    return mask


def decode_z(graph: DecodingGraph, s_bits: Sequence[int] | int) -> list[frozenset]:
    """Minimum-weight Z edge sets (as sets of pair indices) explaining ``s_bits``.

    Both candidates are returned only if the path and its complement tie, which
    cannot happen on an odd cycle but is kept for generality.
    """
    s = s_bits if isinstance(s_bits, int) else _bits_to_int(s_bits)
    nodes = s | ((bin(s).count("1") & 1) << 4)
    S = _walk(graph, nodes)
    Sc = ((1 << N_PAIRS) - 1) ^ S
    ws, wc = bin(S).count("1"), bin(Sc).count("1")
    as_set = lambda m: frozenset(p for p in range(N_PAIRS) if m >> p & 1)  # noqa: E731
    if ws < wc:
        return [as_set(S)]
    if wc < ws:
        return [as_set(Sc)]
    return [as_set(S), as_set(Sc)]


@dataclass(frozen=True)
class DecodeOutcome:
    correction: PauliString
    ambiguous: bool = False
    rejected: bool = False
    candidates_considered: int = 0
    rng_draws: int = 0
    from_hook_table: bool = False
    weight: int = 0
    pure_z: bool = True

    @property
    def post_select_reject(self) -> bool:
        """Whether the post-selection rules would discard this cycle."""
        if self.from_hook_table:
            return False
        return self.ambiguous or self.weight >= 3 or (self.pure_z and self.weight == 2)

    def to_text(self) -> str:
        marks = [str(self.correction)]
        if self.ambiguous:
            marks.append("ambiguous")
        if self.rejected:
            marks.append("rejected")
        return " ".join(marks)


class Decoder:
    """Precomputed graph plus per-pair X syndromes; decoding itself is enumeration."""

    def __init__(self, code: CodeSpec | None = None, hook_table: Mapping | None = None):
        self.code = code or build_1014()
        self.graph = build_decoding_graph(self.code)
        self.hook_table = dict(hook_table or {})
        s_checks = [self.code.generator(f"s{i}") for i in range(N_S)]
        n = self.code.n

        def s_synd(p):
            return _bits_to_int(commutes(p, c) for c in s_checks)

        # x_options[i] = ((qubit, s-syndrome of X_qubit), ...) for pair i
        self._x_options = [
            tuple((q, s_synd(PauliString.single(n, q, "X"))) for q in (2 * i, 2 * i + 1))
            for i in range(N_PAIRS)
        ]
        # Matching on the cycle is cheap but it sits on the hot path, so memoize the 16 inputs.
        self._z_table = [
            [(zset, sum(1 << i for i in zset)) for zset in decode_z(self.graph, s)]
            for s in range(1 << N_S)
        ]
        lx, lz = self.code.logical_x[0], self.code.logical_z[0]
        self._lx = (lx.x, lx.z)
        self._lz = (lz.x, lz.z)

    def _logical_class(self, x: int, z: int) -> int:
        def anti(ox, oz):
            return bin((x & oz) ^ (z & ox)).count("1") & 1
        return anti(*self._lx) | anti(*self._lz) << 1

    def standard(self, r: int, s: int, rng=None, mode: str = "correct") -> DecodeOutcome:
        pairs = [i for i in range(N_PAIRS) if r >> i & 1]
        xpairs = 0
        for i in pairs:
            xpairs |= 1 << i
        best = None
        minima = []
        considered = 0
        for choice in range(1 << len(pairs)):
            xmask = 0
            s_x = 0
            for j, i in enumerate(pairs):
                q, syn = self._x_options[i][choice >> j & 1]
                xmask |= 1 << q
                s_x ^= syn
            for zset, zpairs in self._z_table[s ^ s_x]:
                considered += 1
                # A Z edge on a pair that already carries an X merges into a single Y.
                rank = (len(pairs) + bin(zpairs & ~xpairs).count("1"), len(zset))
                if best is None or rank < best:
                    best = rank
                    minima = [(xmask, zset)]
                elif rank == best:
                    minima.append((xmask, zset))
        classes: dict[int, list] = {}
        for xmask, zset in minima:
            zmask = 0
            for i in zset:
                # Z_{2i} and Z_{2i+1} agree up to the DFS check; sit on the X qubit if any.
                zmask |= 1 << (2 * i + 1 if xmask >> (2 * i + 1) & 1 else 2 * i)
            classes.setdefault(self._logical_class(xmask, zmask), []).append((xmask, zmask, zset))
        keys = sorted(classes)
        draws = 0
        ambiguous = len(keys) > 1
        if ambiguous and mode == "correct":
            if rng is None:
                raise ValueError("an rng is required to break decoder ties")
            key = keys[int(rng.integers(len(keys)))]
            draws = 1
        else:
            key = keys[0]
        xmask, zmask, zset = classes[key][0]
        weight = best[0]
        outcome = DecodeOutcome(
            PauliString(self.code.n, xmask, zmask),
            ambiguous=ambiguous,
            candidates_considered=considered,
            rng_draws=draws,
            weight=weight,
            pure_z=xmask == 0,
        )
        if mode == "post-select" and outcome.post_select_reject:
            outcome = _replace(outcome, rejected=True)
        return outcome

    def decode(self, record: SyndromeRecord, mode: str = "correct", rng=None) -> DecodeOutcome:
        if mode not in ("correct", "post-select"):
            raise ValueError(f"unknown mode {mode!r}")
        if record.flags:
            if not record.unflagged_taken:
                raise ProtocolError("flags fired but no unflagged syndromes were extracted")
            hit = self.hook_table.get((record.flags, record.r, record.s))
            if hit is not None:
                x, z = hit
                return DecodeOutcome(PauliString(self.code.n, x, z), from_hook_table=True,
                                     weight=bin(x | z).count("1"), pure_z=x == 0)
        return self.standard(record.r, record.s, rng=rng, mode=mode)


def _replace(outcome: DecodeOutcome, **changes) -> DecodeOutcome:
    from dataclasses import replace
    return replace(outcome, **changes)


_DEFAULT: Decoder | None = None


def decode_full(record: SyndromeRecord, mode: str = "correct", rng=None,
                decoder: Decoder | None = None) -> DecodeOutcome:
    global _DEFAULT
    if decoder is None:
        if _DEFAULT is None:
            _DEFAULT = Decoder()
        decoder = _DEFAULT
    return decoder.decode(record, mode=mode, rng=rng)


class SyndromeDecoder(BaseEstimator):
    """Estimator wrapper: ``fit`` builds the flag lookup table, ``predict`` decodes.

    Rows of ``X`` hold ``r0..r4, s0..s3`` optionally followed by the six flag
    bits; ``predict`` returns correction strings, ``decode_records`` the full
    outcomes.
    """

    def __init__(self, mode: str = "correct", seed: int | None = None, use_flags: bool = True):
        self.mode = mode
        self.seed = seed
        self.use_flags = use_flags

    def fit(self, X=None, y=None, se_circuits=None):
        from .hooks import build_hook_table  # local: hook tables need the circuit engine
        table = {}
        if self.use_flags:
            table = build_hook_table(se_circuits).table
        self.decoder_ = Decoder(hook_table=table)
        self.rng_ = np.random.default_rng(self.seed)
        return self

    def _records(self, X) -> list[SyndromeRecord]:
        X = np.asarray(X, dtype=np.int64)
        if X.ndim != 2 or X.shape[1] not in (9, 9 + N_FLAGS):
            raise ValueError("expected rows of 9 syndrome bits (+6 flag bits)")
        if not np.isin(X, (0, 1)).all():
            raise ValueError("syndrome bits must be 0 or 1")
        return [SyndromeRecord.from_bits(row[:5], row[5:9], row[9:]) for row in X]

    def decode_records(self, X) -> list[DecodeOutcome]:
        if not hasattr(self, "decoder_"):
            from sklearn.exceptions import NotFittedError
            raise NotFittedError("call fit() first")
        return [self.decoder_.decode(rec, self.mode, self.rng_) for rec in self._records(X)]

    def predict(self, X) -> np.ndarray:
        return np.array([o.to_text() for o in self.decode_records(X)], dtype=object)
