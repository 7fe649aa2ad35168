import itertools

import pytest

from dfsqec.codes import (
    ConcatenationMap,
    UnsupportedCodeError,
    build_513,
    build_1014,
    build_code,
    build_dfs,
    is_stabilizer,
    minimal_even_distance_logicals,
    stabilizer_group,
    verify_code,
    verify_concatenation,
)
from dfsqec.pauli import PauliString, commutes, multiply

CODES = [build_dfs(), build_513(), build_1014()]


def P(text, n=10):
    return PauliString.from_str(text, n)


def test_published_generators_and_logicals():
    code = build_1014()
    assert str(code.generator("s0")) == "X0X1Z2Z4X6X7"
    assert str(code.logical_z[0]) == "Z0Z2Z4Z6Z8"
    assert str(build_dfs().stabilizer_generators[0]) == "-Z0Z1"


@pytest.mark.parametrize("code,d", [(build_dfs(), 1), (build_513(), 3), (build_1014(), 4)])
def test_distances(code, d):
    report = verify_code(code)
    assert report.ok, report.to_text()
    assert report.distance == d


@pytest.mark.parametrize("code", CODES)
def test_generators_commute_and_logicals_are_logical(code):
    for g, h in itertools.combinations(code.stabilizer_generators, 2):
        assert commutes(g, h) == 0
    lx, ly, lz = code.logical_x[0], code.logical_y[0], code.logical_z[0]
    for g in code.stabilizer_generators:
        assert commutes(lx, g) == commutes(lz, g) == commutes(ly, g) == 0
    assert commutes(lx, lz) == 1
    assert multiply(PauliString(code.n, phase=1), multiply(lx, lz)) == ly


def test_concatenation_reproduces_published_code():
    cmap = ConcatenationMap(build_513(), build_dfs())
    assert verify_concatenation(cmap, build_1014()) == []


def test_stabilizer_group_size_and_closure():
    group = stabilizer_group(build_1014())
    assert len(group) == 512
    keys = {g.key() for g in group}
    assert len(keys) == 512
    for a, b in itertools.islice(itertools.combinations(group, 2), 3000):
        assert multiply(a, b).key() in keys


def test_even_distance_logicals():
    code = build_1014()
    ops = minimal_even_distance_logicals(code)
    assert len(ops) == 5
    assert str(ops[1]) == "Z0X2X3Z4"
    for op in ops:
        assert all(commutes(op, g) == 0 for g in code.stabilizer_generators)
        assert commutes(op, code.logical_x[0]) or commutes(op, code.logical_z[0])
        assert not is_stabilizer(op, code)
    assert code.syndrome(P("Z0X2")) == code.syndrome(P("X3Z4"))


def test_unknown_code_rejected():
    with pytest.raises(UnsupportedCodeError):
        build_code("713")
