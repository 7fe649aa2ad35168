import math

import numpy as np
import pytest

from dfsqec.codes import build_dfs
from dfsqec.engine import Circuit, FrameSimulator, StateVectorSimulator
from dfsqec.noise import (
    PRESETS,
    NoiseConfig,
    ZoneAssignment,
    dephasing_flip_probability,
    gate_channel,
    idle_channel,
    noise_from_mapping,
    preset,
    sample_quasi_static,
)
from dfsqec.protocol.prep import init_circuit

ONE = ZoneAssignment((0,), ())


def plus_survival(engine, noise: NoiseConfig, t: float, shots: int, seed: int = 0, **kw) -> float:
    c = Circuit(1)
    c.add_register("m", 1)
    c.prep(0)
    c.h(0)
    c.idle((0,), t)
    c.h(0)
    c.measure(0, "m", 0)
    sim = engine(1, shots, noise.replace(zone_count=1), seed, ONE, **kw)
    return 1.0 - sim.run(c)["m"].mean()


def within(p_hat: float, p: float, n: int, sigmas: float = 3.0) -> bool:
    return abs(p_hat - p) <= sigmas * math.sqrt(max(p * (1 - p), 1e-12) / n)


def test_offsets_vanish_without_quasi_static_noise():
    s = sample_quasi_static(NoiseConfig(), ZoneAssignment.default(10), np.random.default_rng(0), 100)
    assert not s.qubit_offsets.any()


def test_offset_variance_matches_width():
    G = 0.7071
    cfg = NoiseConfig(Gamma_quasi=G, zone_count=1)
    s = sample_quasi_static(cfg, ONE, np.random.default_rng(1), 100_000)
    assert s.qubit_offsets.var() == pytest.approx(G ** 2, rel=0.02)


def test_colocated_pairs_share_offsets_without_differential_noise():
    cfg = NoiseConfig(Gamma_quasi=1.0, differential_fraction=0.0)
    s = sample_quasi_static(cfg, ZoneAssignment.default(10), np.random.default_rng(2), 1000)
    assert np.array_equal(s.qubit_offsets[0::2], s.qubit_offsets[1::2])


def test_zero_duration_idle_is_identity():
    cfg = preset("h1-like")
    assert idle_channel(cfg, 0.0, np.ones((1, 3))).is_identity


def test_flip_probability_convention():
    # coherence factor 1 - 2p must equal exp(-gamma t)
    for g, t in ((0.1, 2.0), (1.0, 0.5), (3.0, 3.0)):
        assert 1 - 2 * dephasing_flip_probability(g, t) == pytest.approx(math.exp(-g * t))


def test_exponential_dephasing_example():
    p = plus_survival(StateVectorSimulator, NoiseConfig(gamma_fast=0.1), 2.0, 10_000, seed=4)
    assert within(p, 0.5 * (1 + math.exp(-0.2)), 10_000)
    assert 0.5 * (1 + math.exp(-0.2)) == pytest.approx(0.9094, abs=1e-4)


@pytest.mark.parametrize("gamma,Gamma,t", [(0.0, 0.7071, 2.0), (0.2, 0.5, 1.5), (0.05, 1.2, 1.0)])
def test_physical_plus_survival(gamma, Gamma, t):
    n = 10_000
    p = plus_survival(StateVectorSimulator, NoiseConfig(gamma_fast=gamma, Gamma_quasi=Gamma), t, n, seed=7)
    expected = 0.5 * (1 + math.exp(-gamma * t - 0.5 * (Gamma * t) ** 2))
    assert within(p, expected, n)


@pytest.mark.parametrize("Gt", np.linspace(0.0, 3.0, 7))
def test_gaussian_identity(Gt):
    rng = np.random.default_rng(8)
    draws = rng.normal(0.0, 1.0, 100_000) * Gt
    mc = np.cos(draws).mean()
    exact = math.exp(-0.5 * Gt ** 2)
    # absolute tolerance: near Gamma t = 3 the target is ~0.01, below Monte Carlo resolution
    assert abs(mc - exact) < 0.01


def test_measurement_error_rate():
    n = 100_000
    c = Circuit(1)
    c.add_register("m", 1)
    c.prep(0)
    c.measure(0, "m", 0)
    sim = FrameSimulator(1, n, NoiseConfig(p_meas=0.003), 9, ONE)
    assert within(sim.run(c)["m"].mean(), 0.003, n)


def test_twirl_matches_coherent_channel_without_quasi_static_noise():
    n = 10_000
    cfg = NoiseConfig(gamma_fast=0.3)
    a = plus_survival(StateVectorSimulator, cfg, 2.0, n, seed=10)
    b = plus_survival(FrameSimulator, cfg, 2.0, n, seed=11, twirl="qubit")
    assert within(a, b, n, sigmas=4.0)


def test_pair_twirl_tracks_statevector_for_dfs_pairs():
    n = 10_000
    cfg = NoiseConfig(Gamma_quasi=1.0, differential_fraction=0.5, zone_count=1)
    code = build_dfs()
    zones = ZoneAssignment.default(2, 1)
    out = []
    for engine, kw in ((StateVectorSimulator, {}), (FrameSimulator, {"twirl": "pair"})):
        sim = engine(2, n, cfg, 12, zones, **kw)
        sim.run(init_circuit("+", code))
        c = Circuit(2)
        c.idle((0, 1), 2.0)
        c.h(0)
        c.h(1)
        c.add_register("m", 2)
        c.measure(0, "m", 0)
        c.measure(1, "m", 1)
        m = sim.run(c)["m"]
        out.append(((m[:, 0] ^ m[:, 1]) == 0).mean())
    assert within(out[0], out[1], n, sigmas=4.0)


def test_collective_noise_fully_rejected():
    cfg = NoiseConfig(Gamma_quasi=5.0, differential_fraction=0.0, zone_count=1)
    code = build_dfs()
    sim = StateVectorSimulator(2, 500, cfg, 13, ZoneAssignment.default(2, 1))
    sim.run(init_circuit("+", code))
    c = Circuit(2)
    c.idle((0, 1), 3.0)
    sim.run(c)
    assert np.allclose(sim.expectation(code.logical_x[0]), 1.0)


def test_presets_and_mapping():
    assert set(PRESETS) >= {"ideal", "dephasing-only", "h1-like"}
    assert preset("ideal").is_ideal
    h1 = preset("h1-like")
    assert h1.Gamma_quasi / math.sqrt(2) == pytest.approx(0.57)
    assert noise_from_mapping({"preset": "h1-like", "p2": "0.01"}).p2 == 0.01
    with pytest.raises(ValueError):
        preset("nope")
    with pytest.raises(ValueError):
        noise_from_mapping({"bogus": "1"})
    with pytest.raises(ValueError):
        NoiseConfig(p1=1.5)
    assert gate_channel(h1, "CNOT").arity == 2
