"""Noise channels: quasi-static and fast dephasing, gate depolarizing, SPAM, leakage."""
from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .validation import check_nonnegative, check_probability

__all__ = [
    "NoiseConfig",
    "ZoneAssignment",
    "QuasiStaticSample",
    "IdleChannel",
    "PauliChannel",
    "PRESETS",
    "preset",
    "load_noise_config",
    "sample_quasi_static",
    "idle_channel",
    "gate_channel",
    "spam_channels",
    "dephasing_flip_probability",
]


@dataclass(frozen=True)
class NoiseConfig:
    gamma_fast: float = 0.0          # 1/s
    Gamma_quasi: float = 0.0         # rad/s, width of the quasi-static offsets
    zone_count: int = 5
    pair_colocated: bool = True
    differential_fraction: float = 0.0
    p1: float = 0.0
    p2: float = 0.0
    p_meas: float = 0.0
    p_spam_extra: float = 0.0
    p_leak: float = 0.0
    tau_cycle: float = 2.89          # s
    field_sensitivity: float = 2032.0  # Hz/G
    delta_B: float | None = None     # G; when set, overrides Gamma_quasi
    t_gate_1q: float = 5e-4          # s, only used to split tau_cycle into idle + extraction
    t_gate_2q: float = 2e-3
    t_meas: float = 3e-3

    def __post_init__(self):
        for name in ("p1", "p2", "p_meas", "p_spam_extra", "p_leak", "differential_fraction"):
            check_probability(getattr(self, name), name)
        for name in ("gamma_fast", "Gamma_quasi", "tau_cycle", "field_sensitivity",
                     "t_gate_1q", "t_gate_2q", "t_meas"):
            check_nonnegative(getattr(self, name), name)
        if int(self.zone_count) != self.zone_count or self.zone_count < 1:
            raise ValueError("zone_count must be a positive integer")
        if self.delta_B is not None:
            check_nonnegative(self.delta_B, "delta_B")
            object.__setattr__(self, "Gamma_quasi",
                               2 * math.pi * self.field_sensitivity * self.delta_B)

    def replace(self, **changes) -> "NoiseConfig":
        return dataclasses.replace(self, **changes)

    @property
    def is_ideal(self) -> bool:
        return not any((self.gamma_fast, self.Gamma_quasi, self.p1, self.p2, self.p_meas,
                        self.p_spam_extra, self.p_leak))

    @property
    def coherent(self) -> bool:
        return self.Gamma_quasi > 0

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


# "h1-like" is tuned so the simulated memories land near the reported scales:
# physical 2^-1/2 Gamma ~ 0.57/s and residual DFS 2^-1/2 Gamma_d ~ 0.065/s.
PRESETS = {
    "ideal": NoiseConfig(),
    "dephasing-only": NoiseConfig(gamma_fast=1e-3, Gamma_quasi=0.57 * math.sqrt(2),
                                  differential_fraction=0.065 / 0.57),
    "h1-like": NoiseConfig(
        gamma_fast=1e-3,
        Gamma_quasi=0.57 * math.sqrt(2),
        differential_fraction=0.065 / 0.57,
        p1=3e-5,
        p2=4e-3,
        p_meas=2e-3,
        p_spam_extra=1e-3,
    ),
}


def preset(name: str, **overrides) -> NoiseConfig:
    try:
        base = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown noise preset {name!r}; choose from {sorted(PRESETS)}") from None
    return base.replace(**overrides) if overrides else base


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(NoiseConfig)}


def _coerce(name: str, text: str):
    kind = _FIELD_TYPES[name]
    if kind == "bool":
        return text.strip().lower() in ("1", "true", "yes", "on")
    if kind == "int":
        return int(text)
    if text.strip().lower() in ("none", ""):
        return None
    return float(text)


def noise_from_mapping(values: dict, base: NoiseConfig | None = None) -> NoiseConfig:
    values = dict(values)
    name = values.pop("preset", None)
    base = preset(name) if name else (base or NoiseConfig())
    unknown = set(values) - set(_FIELD_TYPES)
    if unknown:
        raise ValueError(f"unknown noise keys: {sorted(unknown)}")
    parsed = {k: v if not isinstance(v, str) else _coerce(k, v) for k, v in values.items()}
    return base.replace(**parsed)


def load_noise_config(path: str | Path, section: str = "noise") -> NoiseConfig:
    """Read a ``[noise]`` section of an INI-style key = value file."""
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise FileNotFoundError(path)
    if not parser.has_section(section):
        return NoiseConfig()
    return noise_from_mapping(dict(parser.items(section)))


# -- zones and quasi-static offsets --------------------------------------------

@dataclass(frozen=True)
class ZoneAssignment:
    """Which zone each qubit idles in, and which qubits form DFS pairs."""

    zone_of: tuple[int, ...]
    pairs: tuple[tuple[int, int], ...] = ()
    redraw: str = "per-shot"

    def __post_init__(self):
        if self.redraw not in ("per-shot", "per-batch"):
            raise ValueError("redraw must be 'per-shot' or 'per-batch'")
        for a, b in self.pairs:
            if self.zone_of[a] != self.zone_of[b]:
                raise ValueError(f"pair ({a},{b}) is split across zones")

    @classmethod
    def default(cls, n_qubits: int, zone_count: int = 5, n_paired: int | None = None,
                colocated: bool = True) -> "ZoneAssignment":
        """Pairs (2i, 2i+1) share zone ``i mod zone_count``; extra qubits follow on."""
        n_paired = n_qubits - n_qubits % 2 if n_paired is None else n_paired
        zone_of = [(q // 2) % zone_count for q in range(n_qubits)]
        pairs = tuple((2 * i, 2 * i + 1) for i in range(n_paired // 2)) if colocated else ()
        return cls(tuple(zone_of), pairs)

    @property
    def n_qubits(self) -> int:
        return len(self.zone_of)


@dataclass
class QuasiStaticSample:
    zone_offsets: np.ndarray    # (zones, shots) rad/s
    qubit_offsets: np.ndarray   # (qubits, shots) rad/s


def sample_quasi_static(config: NoiseConfig, zones: ZoneAssignment, rng: np.random.Generator,
                        shots: int = 1) -> QuasiStaticSample:
    """Draw per-zone offsets and spread them onto qubits.

    Co-located pair members get ``c +/- f*u/2`` with ``u ~ N(0, Gamma^2)``, so the
    pair's differential frequency has width ``f * Gamma``.  Without co-location
    every qubit draws its own offset.
    """
    G = config.Gamma_quasi
    n_zones = config.zone_count
    zone_off = rng.normal(0.0, 1.0, size=(n_zones, shots)) * G
    n = zones.n_qubits
    if config.pair_colocated:
        q_off = zone_off[np.asarray(zones.zone_of) % n_zones].copy()
        if zones.pairs:
            u = rng.normal(0.0, 1.0, size=(len(zones.pairs), shots)) * G
            half = 0.5 * config.differential_fraction * u
            a = np.array([p[0] for p in zones.pairs])
            b = np.array([p[1] for p in zones.pairs])
            q_off[a] += half
            q_off[b] -= half
    else:
        q_off = rng.normal(0.0, 1.0, size=(n, shots)) * G
    if zones.redraw == "per-batch" and shots > 1:
        zone_off = np.repeat(zone_off[:, :1], shots, axis=1)
        q_off = np.repeat(q_off[:, :1], shots, axis=1)
    return QuasiStaticSample(zone_off, q_off)


def dephasing_flip_probability(gamma: float, t: float) -> float:
    """Z-flip probability whose ensemble coherence factor is exactly exp(-gamma t)."""
    return 0.5 * (1.0 - math.exp(-gamma * t))


@dataclass(frozen=True)
class IdleChannel:
    duration: float
    angles: np.ndarray | None   # (qubits, shots) coherent RZ angles; None when Gamma = 0
    p_flip: float               # stochastic Z
    p_leak: float

    @property
    def is_identity(self) -> bool:
        return self.duration == 0 or (self.angles is None and self.p_flip == 0 and self.p_leak == 0)


def idle_channel(config: NoiseConfig, duration: float,
                 qubit_offsets: np.ndarray | None = None) -> IdleChannel:
    if duration < 0:
        raise ValueError("idle duration must be non-negative")
    angles = None
    if qubit_offsets is not None and config.Gamma_quasi > 0 and duration > 0:
        angles = np.asarray(qubit_offsets) * duration
    p_leak = config.p_leak if duration > 0 else 0.0
    return IdleChannel(duration, angles, dephasing_flip_probability(config.gamma_fast, duration), p_leak)


@dataclass(frozen=True)
class PauliChannel:
    """Uniform depolarizing on ``arity`` qubits with total error probability ``p``."""

    p: float
    arity: int = 1

    @property
    def is_identity(self) -> bool:
        return self.p == 0


_ONE_QUBIT = {"H", "S", "SDG", "X", "Y", "Z", "RZ"}
_TWO_QUBIT = {"CNOT", "CZ", "XCX"}


def gate_channel(config: NoiseConfig, gate: str) -> PauliChannel:
    if gate in _ONE_QUBIT:
        return PauliChannel(config.p1, 1)
    if gate in _TWO_QUBIT:
        return PauliChannel(config.p2, 2)
    raise ValueError(f"{gate} is not a unitary gate")


def spam_channels(config: NoiseConfig) -> tuple[float, float]:
    """(preparation flip probability, measurement flip probability)."""
    return config.p_spam_extra, config.p_meas
