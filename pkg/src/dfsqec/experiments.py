"""Memory experiments for bare qubits, DFS pairs and the DFS-concatenated code, plus metrics."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from .codes import build_dfs
from .engine.circuit import Circuit
from .engine.frame import FrameSimulator
from .engine.statevector import StateVectorSimulator
from .noise import NoiseConfig, ZoneAssignment
from .protocol.cycle import EXPECTED_PARITY, build_qec_cycle, logical_parity, readout_circuit
from .protocol.prep import LOGICAL_STATES, init_circuit
from .protocol.se import N_QUBITS

__all__ = [
    "STATES",
    "PARTNER",
    "ExperimentPlan",
    "PointCounts",
    "MemoryResult",
    "Metrics",
    "MetricsError",
    "run_memory",
    "compute_metrics",
    "metrics_from_probabilities",
    "retention",
    "wilson",
    "plan_from_mapping",
]

STATES = LOGICAL_STATES
PARTNER = {"0": "1", "1": "0", "+": "-", "-": "+", "+i": "-i", "-i": "+i"}
BASES = (("0", "1"), ("+", "-"), ("+i", "-i"))
KINDS = ("physical", "dfs", "dfs_qec")
N_ZONES_USED = 5          # one bare qubit or one pair per zone, five zones per shot

# single-qubit rotations taking |0> to each state (inverse is applied before readout)
_ROTATE = {"0": (), "1": ("X",), "+": ("H",), "-": ("X", "H"), "+i": ("H", "S"), "-i": ("H", "SDG")}
_INVERSE = {"H": "H", "S": "SDG", "SDG": "S", "X": "X"}


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentPlan:
    """What to run.  ``times`` are seconds for physical/dfs and cycle counts for dfs_qec."""

    qubit_kind: str = "physical"
    states: tuple[str, ...] = STATES
    times: tuple[float, ...] = (0.0, 1.0, 2.0)
    shots: int = 1000
    mode: str = "correct"
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    seed: int = 0
    chunk: int = 2000

    def __post_init__(self):
        if self.qubit_kind not in KINDS:
            raise ValueError(f"qubit_kind must be one of {KINDS}")
        if self.mode not in ("correct", "post-select"):
            raise ValueError("mode must be 'correct' or 'post-select'")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        bad = set(self.states) - set(STATES)
        if bad:
            raise ValueError(f"unknown states {sorted(bad)}")
        if any(t < 0 for t in self.times):
            raise ValueError("times must be non-negative")
        if self.qubit_kind == "dfs_qec" and any(float(t) != int(t) for t in self.times):
            raise ValueError("dfs_qec times are cycle counts")

    def time_seconds(self, t: float) -> float:
        return float(t) * self.noise.tau_cycle if self.qubit_kind == "dfs_qec" else float(t)


@dataclass
class PointCounts:
    state: str
    time_s: float
    cycles: int
    total: int
    survivors: int
    accepted: int
    accepted_survivors: int

    def p(self, mode: str = "correct") -> float:
        if mode == "correct":
            return self.survivors / self.total
        return self.accepted_survivors / self.accepted if self.accepted else float("nan")

    def interval(self, mode: str = "correct", alpha: float = 0.05) -> tuple[float, float]:
        if mode == "correct":
            return wilson(self.survivors, self.total, alpha)
        return wilson(self.accepted_survivors, self.accepted, alpha)


def wilson(k: int, n: int, alpha: float = 0.05) -> tuple[float, float]:
    if n == 0:
        return (float("nan"), float("nan"))
    lo, hi = proportion_confint(k, n, alpha=alpha, method="wilson")
    return float(lo), float(hi)


@dataclass
class MemoryResult:
    plan: ExperimentPlan
    points: list[PointCounts]

    def counts(self, state: str, time_s: float) -> PointCounts:
        for pt in self.points:
            if pt.state == state and math.isclose(pt.time_s, time_s):
                return pt
        raise KeyError((state, time_s))

    @property
    def times_s(self) -> list[float]:
        return sorted({pt.time_s for pt in self.points})

    def probabilities(self, mode: str | None = None) -> dict[float, dict[str, float]]:
        mode = mode or self.plan.mode
        out: dict[float, dict[str, float]] = {}
        for pt in self.points:
            out.setdefault(pt.time_s, {})[pt.state] = pt.p(mode)
        return out

    def series(self, state: str, mode: str | None = None, x: str = "time"):
        """(x, p, n) arrays for fitting; ``x`` is 'time' or 'cycles'."""
        mode = mode or self.plan.mode
        pts = sorted((pt for pt in self.points if pt.state == state), key=lambda p: p.time_s)
        xs = np.array([pt.time_s if x == "time" else pt.cycles for pt in pts], dtype=float)
        ps = np.array([pt.p(mode) for pt in pts])
        ns = np.array([pt.total if mode == "correct" else pt.accepted for pt in pts], dtype=float)
        return xs, ps, ns

    def modes(self) -> tuple[str, ...]:
        return ("correct", "post-select") if self.plan.qubit_kind == "dfs_qec" else ("correct",)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "mode", "state", "time_s", "cycles", "survivors", "accepted", "total",
                    "p", "ci_lo", "ci_hi"])
        for mode in self.modes():
            for pt in self.points:
                lo, hi = pt.interval(mode)
                surv = pt.survivors if mode == "correct" else pt.accepted_survivors
                w.writerow([self.plan.qubit_kind, mode, pt.state, f"{pt.time_s:.6g}", pt.cycles, surv,
                            pt.accepted, pt.total, f"{pt.p(mode):.8g}", f"{lo:.8g}", f"{hi:.8g}"])
        return buf.getvalue()

    def summary(self, assume_partners: bool = True) -> dict:
        metrics = {}
        for mode in self.modes():
            rows = []
            for t, probs in sorted(self.probabilities(mode).items()):
                try:
                    m = metrics_from_probabilities(probs, assume_partners)
                except MetricsError:
                    continue
                rows.append({"time_s": t, **asdict(m)})
            metrics[mode] = rows
        plan = asdict(self.plan)
        plan["noise"] = self.plan.noise.as_dict()
        return {
            "plan": plan,
            "metrics": metrics,
            "retention": retention(self) if self.plan.qubit_kind == "dfs_qec" else None,
            "fit_input": {
                "kind": "qec_cycles" if self.plan.qubit_kind == "dfs_qec" else "phys_dfs",
                "tau_cycle": self.plan.noise.tau_cycle,
                "series": {mode: {s: [list(map(float, a)) for a in self.series(s, mode)]
                                  for s in self.plan.states} for mode in self.modes()},
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, float) and math.isnan(o):
        return None
    raise TypeError(type(o))


# -- metrics -----------------------------------------------------------------

@dataclass(frozen=True)
class Metrics:
    F_a: float
    F_p: float
    p_worst: float
    R: float
    assumed: tuple[str, ...] = ()


def metrics_from_probabilities(probs: dict[str, float], assume_partners: bool = False) -> Metrics:
    """Average/process fidelity and integrity from per-state survival probabilities."""
    p = dict(probs)
    assumed = []
    for s in STATES:
        if s not in p:
            if assume_partners and PARTNER[s] in p:
                p[s] = p[PARTNER[s]]
                assumed.append(s)
            else:
                raise MetricsError(f"state {s} missing (pass assume_partners to copy its partner)")
    F_a = sum(p[s] for s in STATES) / 6.0
    F_p = (3.0 * F_a - 1.0) / 2.0
    p_worst = min(0.5 * (p[a] + p[b]) for a, b in BASES)
    R = 2.0 * abs(p_worst - 0.5)
    return Metrics(F_a, F_p, p_worst, R, tuple(assumed))


def compute_metrics(result: MemoryResult | dict, mode: str | None = None,
                    assume_partners: bool = False) -> dict[float, Metrics]:
    """Per-time metrics from a result, or from ``{time: {state: p}}``."""
    probs = result.probabilities(mode) if isinstance(result, MemoryResult) else result
    return {t: metrics_from_probabilities(ps, assume_partners) for t, ps in sorted(probs.items())}


def retention(result: MemoryResult) -> list[dict]:
    """Accepted fraction per (state, time) with a Wilson interval and per-cycle retention."""
    if result.plan.qubit_kind != "dfs_qec":
        raise ValueError("retention needs a dfs_qec run")
    rows = []
    for pt in sorted(result.points, key=lambda p: (p.state, p.time_s)):
        frac = pt.accepted / pt.total
        lo, hi = wilson(pt.accepted, pt.total)
        per_cycle = frac ** (1.0 / pt.cycles) if pt.cycles and frac > 0 else 1.0
        rows.append({"state": pt.state, "time_s": pt.time_s, "cycles": pt.cycles, "fraction": frac,
                     "ci_lo": lo, "ci_hi": hi, "per_cycle": per_cycle})
    return rows


# -- circuits ------------------------------------------------------------------

def _physical_circuit(state: str, duration: float, n: int) -> Circuit:
    run = Circuit(n, name=f"physical_{state}")
    for q in range(n):
        run.prep(q)
        for g in _ROTATE[state]:
            run.append(g, (q,))
    run.idle(range(n), duration)
    for q in range(n):
        for g in reversed(_ROTATE[state]):
            run.append(_INVERSE[g], (q,))
    run.add_register("out", n)
    for q in range(n):
        run.measure(q, "out", q)
    return run


def _dfs_circuits(state: str, duration: float) -> tuple[Circuit, Circuit]:
    code = build_dfs()
    body = init_circuit(state, code)
    body.idle((0, 1), duration)
    return body, readout_circuit(state, code, n_qubits=2)


# -- runners -------------------------------------------------------------------

def _task_rngs(seed: int, key: tuple[int, ...]):
    ss = np.random.SeedSequence(seed, spawn_key=key)
    noise_ss, tie_ss = ss.spawn(2)
    return np.random.default_rng(noise_ss), np.random.default_rng(tie_ss)


def _run_task(args) -> tuple[int, int, int, int]:
    """One (state, time, chunk) block: returns (total, survivors, accepted, accepted_survivors)."""
    plan, state, t, shots, key = args
    noise = plan.noise
    noise_rng, tie_rng = _task_rngs(plan.seed, key)
    kind = plan.qubit_kind
    if kind in ("physical", "dfs"):
        # zones are i.i.d., so the five zones of one shot are five independent one-zone shots
        n_trials = shots * N_ZONES_USED
        one_zone = noise.replace(zone_count=1)
        if kind == "physical":
            sim = StateVectorSimulator(1, n_trials, one_zone, noise_rng, ZoneAssignment((0,), ()))
            ok = sim.run(_physical_circuit(state, float(t), 1))["out"][:, 0] == 0
        else:
            sim = StateVectorSimulator(2, n_trials, one_zone, noise_rng, ZoneAssignment.default(2, 1))
            body, readout = _dfs_circuits(state, float(t))
            sim.run(body)
            bits = sim.run(readout)["out"]
            ok = logical_parity(bits, state, build_dfs()) == EXPECTED_PARITY[state]
        return ok.size, int(ok.sum()), ok.size, int(ok.sum())
    cycles = int(t)
    cycle = build_qec_cycle(mode="correct", rng=tie_rng, noise=noise)
    sim = FrameSimulator(N_QUBITS, shots, noise, noise_rng, twirl="pair" if noise.Gamma_quasi > 0 else "none")
    sim.run(init_circuit(state, n_qubits=N_QUBITS))
    cycle.decoder.reset(shots)
    for _ in range(cycles):
        sim.run(cycle.circuit)
    bits = sim.run(readout_circuit(state))["out"]
    ok = logical_parity(bits, state) == EXPECTED_PARITY[state]
    accepted = ~cycle.decoder.ps_rejected
    return shots, int(ok.sum()), int(accepted.sum()), int((ok & accepted).sum())


def run_memory(plan: ExperimentPlan, workers: int | None = 1) -> MemoryResult:
    """Run every (state, time) point; a pure function of the plan, whatever ``workers`` is."""
    tasks, index = [], []
    for si, state in enumerate(plan.states):
        for ti, t in enumerate(plan.times):
            done = 0
            ci = 0
            while done < plan.shots:
                n = min(plan.chunk, plan.shots - done)
                tasks.append((plan, state, t, n, (STATES.index(state), ti, ci)))
                index.append((state, t))
                done += n
                ci += 1
    workers = workers or os.cpu_count() or 1
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(_run_task, tasks))
    else:
        outs = [_run_task(t) for t in tasks]
    acc: dict[tuple[str, float], list[int]] = {}
    for key, out in zip(index, outs):
        tot = acc.setdefault(key, [0, 0, 0, 0])
        for i, v in enumerate(out):
            tot[i] += v
    points = []
    for state in plan.states:
        for t in plan.times:
            total, surv, accepted, acc_surv = acc[(state, t)]
            cycles = int(t) if plan.qubit_kind == "dfs_qec" else 0
            points.append(PointCounts(state, plan.time_seconds(t), cycles, total, surv, accepted, acc_surv))
    return MemoryResult(plan, points)


def plan_from_mapping(values: dict, noise: NoiseConfig) -> ExperimentPlan:
    """Build a plan from string-valued config entries (states/times are comma lists)."""
    kw: dict = {"noise": noise}
    for k, v in values.items():
        if k == "qubit_kind" or k == "mode":
            kw[k] = str(v)
        elif k == "states":
            kw[k] = tuple(s.strip() for s in str(v).split(",") if s.strip())
        elif k == "times":
            kw[k] = tuple(float(s) for s in str(v).split(",") if s.strip())
        elif k in ("shots", "seed", "chunk"):
            kw[k] = int(v)
        else:
            raise ValueError(f"unknown plan key {k!r}")
    return ExperimentPlan(**kw)
