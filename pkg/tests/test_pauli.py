import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfsqec.codes import build_1014, s_parity, stabilizer_group
from dfsqec.pauli import (
    DimensionError,
    PauliString,
    brute_force_min_weight,
    commutes,
    conjugate,
    multiply,
    product,
    syndrome_of,
)

N = 10
CODE = build_1014()


def paulis(n=N):
    return st.builds(lambda x, z, k: PauliString(n, x, z, 2 * k),
                     st.integers(0, (1 << n) - 1), st.integers(0, (1 << n) - 1), st.integers(0, 1))


def P(text, n=N):
    return PauliString.from_str(text, n)


def test_text_round_trip():
    for text in ("I", "X0", "-Z0Z1", "X1Z6", "Y3", "iX0", "-iY2Z9"):
        assert str(P(text)) == text


def test_malformed_text_rejected():
    for bad in ("Q0", "Z1Z0", "X0X0", ""):
        with pytest.raises(ValueError):
            PauliString.from_str(bad, 4)
    with pytest.raises(DimensionError):
        PauliString.from_str("Z5", 3)


def test_x_times_z_is_minus_i_y():
    assert multiply(P("X0", 1), P("Z0", 1)) == P("-iY0", 1)
    assert multiply(P("Z0", 1), P("X0", 1)) == P("iY0", 1)


def test_involution_and_sign_product():
    zz = P("Z0Z1", 4)
    assert multiply(zz, zz) == PauliString.identity(4)
    assert multiply(P("-Z0Z1", 4), P("-Z2Z3", 4)) == P("Z0Z1Z2Z3", 4)


def test_redundant_check_is_product_of_s_checks():
    sp = product(CODE.generator(f"s{i}") for i in range(4))
    assert sp == s_parity()
    assert all(commutes(sp, g) == 0 for g in CODE.stabilizer_generators)


def test_commutation_examples():
    assert commutes(P("X0"), P("Z0")) == 1
    assert commutes(P("Z8"), CODE.generator("s1")) == 1
    assert all(commutes(P("X1"), CODE.generator(f"s{i}")) == 0 for i in range(4))


def test_syndrome_examples():
    checks = [CODE.generator(f"s{i}") for i in range(4)] + [s_parity()]
    assert syndrome_of(PauliString.identity(N), CODE.stabilizer_generators) == (0,) * 9
    assert syndrome_of(P("Z8"), checks) == (0, 1, 0, 0, 1)
    err = P("X1Z6")
    assert syndrome_of(err, checks[:4]) == (1, 0, 0, 1)
    assert syndrome_of(err, [CODE.generator(f"r{i}") for i in range(5)]) == (1, 0, 0, 0, 0)


def test_brute_force_examples():
    assert brute_force_min_weight([0] * 9, CODE) == {PauliString.identity(N)}
    z8 = CODE.syndrome(P("Z8"))
    found = brute_force_min_weight(z8, CODE, pauli_class="Z-only")
    assert {str(p) for p in found} == {"Z8", "Z9"}
    # s3 alone with r quiet: an X pair ties with weight-2 Z paths
    found = {str(p) for p in brute_force_min_weight([0] * 5 + [0, 0, 0, 1], CODE)}
    assert found == {"X0X1", "Y0Y1", "Z2Z8", "Z2Z9", "Z3Z8", "Z3Z9"}


def test_conjugation_through_cnot():
    assert conjugate(P("Z1", 2), "CNOT", (0, 1)) == P("Z0Z1", 2)
    assert conjugate(P("X0", 2), "CNOT", (0, 1)) == P("X0X1", 2)
    assert conjugate(P("X0", 1), "H", (0,)) == P("Z0", 1)
    assert conjugate(P("X0", 1), "S", (0,)) == P("Y0", 1)


@given(paulis(), paulis())
def test_commutation_symmetric(p, q):
    assert commutes(p, q) == commutes(q, p)


@given(paulis(), paulis(), paulis())
def test_multiplication_associative(p, q, r):
    assert multiply(multiply(p, q), r) == multiply(p, multiply(q, r))


@given(paulis())
def test_square_is_plus_minus_identity(p):
    sq = multiply(p, p)
    assert sq.x == 0 and sq.z == 0 and sq.phase in (0, 2)


@given(paulis(), paulis())
def test_weight_subadditive(p, q):
    assert multiply(p, q).weight <= p.weight + q.weight


@given(paulis(), st.integers(0, 511))
def test_syndrome_is_coset_invariant(e, g_index):
    g = stabilizer_group(CODE)[g_index]
    gens = CODE.stabilizer_generators
    assert syndrome_of(multiply(e, g), gens) == syndrome_of(e, gens)


@settings(max_examples=40, deadline=None)
@given(paulis())
def test_brute_force_members_share_weight_and_syndrome(e):
    synd = CODE.syndrome(e)
    found = brute_force_min_weight(synd, CODE)
    assert found
    assert len({p.weight for p in found}) == 1
    assert all(CODE.syndrome(p) == synd for p in found)
    assert min(p.weight for p in found) <= e.weight
