import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dfsqec.codes import build_1014, logically_equivalent, reduced_weight
from dfsqec.pauli import PauliString, brute_force_min_weight
from dfsqec.protocol.decoder import (
    Decoder,
    ProtocolError,
    SyndromeDecoder,
    SyndromeRecord,
    build_decoding_graph,
    decode_full,
    decode_z,
)

CODE = build_1014()
DECODER = Decoder(CODE)


def P(text):
    return PauliString.from_str(text, 10)


def record_of(err: PauliString) -> SyndromeRecord:
    synd = CODE.syndrome(err)
    return SyndromeRecord.from_bits(synd[:5], synd[5:])


def test_graph_edges():
    g = build_decoding_graph()
    assert g.edge_nodes(4) == frozenset({1, 4})      # Zbar_4 joins s1 and s_p
    assert sorted(len(g.edge_nodes(p)) for p in range(5)) == [2] * 5
    assert len(g.cycle) == 5


def test_matching_examples():
    g = build_decoding_graph()
    assert decode_z(g, (0, 1, 0, 0)) == [frozenset({4})]
    assert decode_z(g, (0, 0, 0, 0)) == [frozenset()]
    assert decode_z(g, (1, 0, 0, 0)) == [frozenset({0, 2})]


@pytest.mark.parametrize("s", range(16))
def test_matching_duality(s):
    g = build_decoding_graph()
    bits = [s >> i & 1 for i in range(4)]
    (S,) = decode_z(g, bits)
    nodes = s | (bin(s).count("1") & 1) << 4
    Sc = frozenset(range(5)) - S
    assert S | Sc == frozenset(range(5)) and not S & Sc
    for edges in (S, Sc):
        hit = 0
        for p in edges:
            for v in g.edge_nodes(p):
                hit ^= 1 << v
        assert hit == nodes


def test_worked_examples():
    rng = np.random.default_rng(0)
    assert str(decode_full(SyndromeRecord.parse("r=00000 s=0100"), rng=rng).correction) == "Z8"
    out = decode_full(SyndromeRecord.parse("r=10000 s=1001"), rng=rng)
    assert str(out.correction) == "X1Z6" and not out.ambiguous
    out = decode_full(SyndromeRecord(), rng=rng)
    assert out.correction.weight == 0 and not out.ambiguous and not out.rejected


def test_even_distance_pair_is_ambiguous():
    rec = record_of(P("Z0X2"))
    assert rec == record_of(P("X3Z4"))
    out = DECODER.decode(rec, "correct", np.random.default_rng(1))
    assert out.ambiguous and not out.rejected and out.rng_draws == 1
    out = DECODER.decode(rec, "post-select")
    assert out.ambiguous and out.rejected


def test_tie_break_needs_rng():
    with pytest.raises(ValueError):
        DECODER.decode(record_of(P("Z0X2")), "correct", None)


@pytest.mark.parametrize("q,l", [(q, l) for q in range(10) for l in "XYZ"])
def test_weight_one_errors_corrected(q, l):
    e = PauliString.single(10, q, l)
    out = DECODER.decode(record_of(e), "correct", np.random.default_rng(2))
    assert logically_equivalent(out.correction, e, CODE)
    assert not out.ambiguous


@pytest.mark.parametrize("a,b", list(itertools.combinations(range(10), 2)))
def test_weight_two_z_errors_corrected(a, b):
    e = PauliString(10, 0, (1 << a) | (1 << b))
    out = DECODER.decode(record_of(e), "correct", np.random.default_rng(3))
    assert logically_equivalent(out.correction, e, CODE)


def test_oracle_equivalence_over_all_records():
    rng = np.random.default_rng(4)
    for r in range(32):
        for s in range(16):
            bits = [r >> i & 1 for i in range(5)] + [s >> i & 1 for i in range(4)]
            minima = brute_force_min_weight(bits, CODE)
            best = min(reduced_weight(p, CODE) for p in minima)
            out = DECODER.decode(SyndromeRecord(r, s), "correct", rng)
            assert CODE.syndrome(out.correction) == tuple(bits)
            assert reduced_weight(out.correction, CODE) == best
            if not out.ambiguous:
                # ties in weight are broken by Z-edge count, so only one class of minima must match
                assert any(logically_equivalent(out.correction, p, CODE) for p in minima)


@given(st.integers(0, 31), st.integers(0, 15), st.integers(0, 2 ** 32))
def test_randomness_confined_to_ambiguous_records(r, s, seed):
    out = DECODER.decode(SyndromeRecord(r, s), "correct", np.random.default_rng(seed))
    if not out.ambiguous:
        assert out.rng_draws == 0


@given(st.integers(0, 31), st.integers(0, 15))
def test_post_select_rejects_what_correct_mode_guesses(r, s):
    out = DECODER.decode(SyndromeRecord(r, s), "post-select")
    if out.ambiguous:
        assert out.rejected


def test_record_parsing():
    rec = SyndromeRecord.parse("r=10000 s=1001 flags=001")
    assert rec.r == 1 and rec.s == 0b1001 and rec.flags == 0b100
    assert str(SyndromeRecord.parse(str(rec))) == str(rec)
    for bad in ("s=0000", "r=00000 s=0000 flags=01", "r=00000 s=0000 x=1"):
        with pytest.raises(ProtocolError):
            SyndromeRecord.parse(bad)


def test_flags_without_unflagged_extraction_is_a_protocol_error():
    rec = SyndromeRecord(0, 0, 1, unflagged_taken=False)
    with pytest.raises(ProtocolError):
        DECODER.decode(rec)


def test_estimator_api():
    est = SyndromeDecoder(mode="post-select").fit()
    X = np.zeros((3, 15), dtype=int)
    X[1, :9] = [1, 0, 0, 0, 0, 1, 0, 0, 1]
    X[2, :9] = [0, 0, 0, 0, 0, 0, 1, 0, 0]
    assert list(est.predict(X)) == ["I", "X1Z6", "Z8"]
    assert est.get_params() == {"mode": "post-select", "seed": None, "use_flags": True}
    with pytest.raises(ValueError):
        est.predict(np.full((1, 9), 2))
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        SyndromeDecoder().predict(X)
