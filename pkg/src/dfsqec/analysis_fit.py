"""Weighted least-squares fits of the memory decay models and lifetime extraction."""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .validation import check_series

log = logging.getLogger(__name__)

__all__ = [
    "KINDS",
    "PARAMS",
    "FitError",
    "DecayModel",
    "Lifetime",
    "evaluate",
    "jacobian",
    "fit",
    "default_pin",
    "lifetime",
    "lifetime_report",
    "table_csv",
    "fit_summary",
    "DecayCurveRegressor",
]

PARAMS = {
    "phys_dfs": ("eps_s", "gamma", "Gamma"),
    "qec_cycles": ("eps_s", "eps_m"),
    "retention": ("eta",),
}
KINDS = tuple(PARAMS)
_UPPER = {"eps_s": 0.5, "eps_m": 0.5}
PROCESS_TARGET = 1.0 - 1.0 / (2.0 * math.e)
INTEGRITY_TARGET = 1.0 / math.e


class FitError(RuntimeError):
    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass
class DecayModel:
    kind: str
    params: dict[str, float]
    stderr: dict[str, float] = field(default_factory=dict)
    cov: np.ndarray | None = None
    pinned: tuple[str, ...] = ()
    boundary: tuple[str, ...] = ()     # free parameters that ended on a bound
    tau: float | None = None           # seconds per cycle, qec_cycles only
    chi2: float = 0.0
    iterations: int = 0

    def __post_init__(self):
        if self.kind not in PARAMS:
            raise ValueError(f"kind must be one of {KINDS}")
        missing = set(PARAMS[self.kind]) - set(self.params)
        if missing:
            raise ValueError(f"missing parameters {sorted(missing)}")
        for k, v in self.params.items():
            if v < 0 or v > _UPPER.get(k, math.inf):
                raise ValueError(f"{k}={v} is out of range")

    def vector(self) -> np.ndarray:
        return np.array([self.params[k] for k in PARAMS[self.kind]], dtype=float)

    def __call__(self, x, time: bool = False) -> np.ndarray:
        return evaluate(self, x, time)

    def derived(self) -> dict[str, tuple[float, float]]:
        """Quantities in the reporting convention, with propagated standard errors."""
        out = {}
        if self.kind == "phys_dfs":
            s = self.stderr.get("Gamma", 0.0)
            out["Gamma/sqrt2"] = (self.params["Gamma"] / math.sqrt(2), s / math.sqrt(2))
        if self.kind == "qec_cycles" and self.tau:
            s = self.stderr.get("eps_m", 0.0)
            out["2eps_m/tau"] = (2 * self.params["eps_m"] / self.tau, 2 * s / self.tau)
        return out


def _curve(kind: str, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
    if kind == "phys_dfs":
        eps, g, G = theta
        return 0.5 + (0.5 - eps) * np.exp(-g * x - 0.5 * (G * x) ** 2)
    if kind == "qec_cycles":
        eps, m = theta
        return 0.5 + (0.5 - eps) * np.power(1.0 - 2.0 * m, x)
    (eta,) = theta
    return np.exp(-eta * x)


def jacobian(kind: str, theta, x) -> np.ndarray:
    """Analytic d(model)/d(theta), shape (len(x), len(theta))."""
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    if kind == "phys_dfs":
        eps, g, G = theta
        y = np.exp(-g * x - 0.5 * (G * x) ** 2)
        a = 0.5 - eps
        return np.stack([-y, -a * x * y, -a * G * x ** 2 * y], axis=1)
    if kind == "qec_cycles":
        eps, m = theta
        base = 1.0 - 2.0 * m
        y = np.power(base, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            dy = np.where(x == 0, 0.0, -2.0 * x * np.power(base, x - 1.0))
        return np.stack([-y, (0.5 - eps) * dy], axis=1)
    (eta,) = theta
    y = np.exp(-eta * x)
    return (-x * y)[:, None]


def evaluate(model: DecayModel, x, time: bool = False) -> np.ndarray:
    """Closed-form model value; with ``time`` a qec_cycles model takes seconds (n = t / tau)."""
    x = np.asarray(x, dtype=float)
    if model.kind == "qec_cycles" and time:
        if not model.tau:
            raise ValueError("tau is needed to evaluate a cycle model against wall-clock time")
        x = x / model.tau
    return _curve(model.kind, model.vector(), x)


def default_pin(state: str | None) -> dict[str, float]:
    """Superposition states decay Gaussian-like (gamma=0); computational states exponentially (Gamma=0)."""
    if state is None:
        return {}
    return {"Gamma": 0.0} if state in ("0", "1") else {"gamma": 0.0}


def _bounds(names) -> list[tuple[float, float]]:
    return [(0.0, _UPPER.get(n, math.inf)) for n in names]


def _starts(kind: str, x: np.ndarray, p: np.ndarray) -> list[dict[str, float]]:
    """Starting points for the simplex; phys_dfs gets exponential, Gaussian and mixed guesses."""
    if kind == "retention":
        tail = p[x > 0]
        xs = x[x > 0]
        eta = float(np.mean(-np.log(np.clip(tail, 1e-6, 1.0)) / xs)) if xs.size else 0.0
        return [{"eta": max(eta, 0.0)}]
    p0 = float(p[np.argmin(x)])
    eps = float(np.clip(1.0 - p0, 0.0, 0.49))
    a = 0.5 - eps
    # crude rates from the early decay of (p - 1/2) / a, before it hits the noise floor
    y = np.clip((p - 0.5) / a, 1e-6, 1.0)
    use = (x > 0) & (y > 0.2)
    if not use.any():
        use = x > 0
    if not use.any():
        rate = gauss = 0.0
    else:
        nl = -np.log(y[use])
        rate = max(float(np.median(nl / x[use])), 0.0)
        gauss = float(np.median(np.sqrt(2.0 * nl) / x[use]))
    if kind == "phys_dfs":
        return [{"eps_s": eps, "gamma": rate, "Gamma": 0.0},
                {"eps_s": eps, "gamma": 0.0, "Gamma": gauss},
                {"eps_s": eps, "gamma": 0.5 * rate, "Gamma": 0.5 * gauss}]
    return [{"eps_s": eps, "eps_m": float(np.clip(0.5 * (1 - math.exp(-rate)), 0.0, 0.49))}]


def fit(x, p, weight=None, kind: str = "phys_dfs", pin: dict[str, float] | None = None,
        tau: float | None = None, max_iter: int = 200, tol: float = 1e-12) -> DecayModel:
    """Weighted least squares: Nelder-Mead for a start, Gauss-Newton on the analytic Jacobian to finish.

    ``weight`` is the shot count per point; residuals are scaled by the binomial
    standard error.  Without it every point gets unit weight.  ``pin`` fixes
    parameters (for example ``{"gamma": 0}``).
    """
    if kind not in PARAMS:
        raise ValueError(f"kind must be one of {KINDS}")
    x, p, n = check_series(x, p, weight)
    names = PARAMS[kind]
    pin = dict(pin or {})
    unknown = set(pin) - set(names)
    if unknown:
        raise ValueError(f"cannot pin {sorted(unknown)} in a {kind} model")
    free = [k for k in names if k not in pin]
    if weight is None:
        w = np.ones_like(p)
    else:
        # binomial variance of the observed fraction, floored so perfect points keep finite weight
        q = np.clip(p, 0.5 / n, 1.0 - 0.5 / n)
        w = n / (q * (1.0 - q))
    sw = np.sqrt(w)

    def full(theta_free):
        vals = dict(pin)
        vals.update(zip(free, theta_free))
        return np.array([vals[k] for k in names])

    def resid(theta_free):
        return sw * (_curve(kind, full(theta_free), x) - p)

    def cost(theta_free):
        r = resid(np.clip(theta_free, lo, hi))
        return float(r @ r)

    bounds = _bounds(free)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    theta = np.clip(np.array([_starts(kind, x, p)[0][k] for k in free]), lo, hi)
    if free:
        best = math.inf
        for start in _starts(kind, x, p):
            t0 = np.clip(np.array([start[k] for k in free]), lo, hi)
            nm = minimize(cost, t0, method="Nelder-Mead", bounds=bounds,
                          options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
            if nm.fun < best:
                best, theta = nm.fun, np.clip(nm.x, lo, hi)

    idx = [names.index(k) for k in free]
    converged = not free
    it = 0
    c = cost(theta) if free else 0.0
    for it in range(1, max_iter + 1):
        if not free:
            break
        J = sw[:, None] * jacobian(kind, full(theta), x)[:, idx]
        r = resid(theta)
        # parameters sitting on a bound and pushed outward stay fixed this step
        grad = J.T @ r
        active = ((theta <= lo) & (grad > 0)) | ((theta >= hi) & (grad < 0))
        step = np.zeros_like(theta)
        act = ~active
        if act.any():
            Ja = J[:, act]
            step[act] = np.linalg.lstsq(Ja, -r, rcond=None)[0]
        lam = 1.0
        improved = False
        while lam > 1e-10:
            trial = np.clip(theta + lam * step, lo, hi)
            ct = cost(trial)
            if ct <= c:
                improved = True
                break
            lam *= 0.5
        if not improved:
            converged = True
            break
        delta = np.max(np.abs(trial - theta) / np.maximum(np.abs(theta), 1e-8)) if theta.size else 0.0
        theta, c_old, c = trial, c, ct
        if delta < tol or c_old - c <= tol * max(c_old, 1e-300):
            converged = True
            break
    if not converged:
        raise FitError(f"Gauss-Newton did not converge in {max_iter} iterations",
                       {"theta": dict(zip(free, theta.tolist())), "cost": c})

    values = dict(pin)
    values.update(zip(free, (float(v) for v in theta)))
    params = {k: values[k] for k in names}
    boundary = tuple(k for k, v, l, h in zip(free, theta, lo, hi) if v <= l + 1e-12 or v >= h - 1e-12)
    stderr = {k: 0.0 for k in names}
    cov = None
    if free:
        J = sw[:, None] * jacobian(kind, full(theta), x)[:, idx]
        JTJ = J.T @ J
        try:
            cov = np.linalg.inv(JTJ)
        except np.linalg.LinAlgError:
            cov = np.linalg.pinv(JTJ)
        for j, k in enumerate(free):
            stderr[k] = float(math.sqrt(max(cov[j, j], 0.0)))
    return DecayModel(kind, params, stderr, cov, tuple(pin), boundary, tau, float(c), it)


# -- lifetimes -------------------------------------------------------------------

@dataclass(frozen=True)
class Lifetime:
    value: float                 # seconds, inf when not reached
    bounded: bool

    def ratio(self, reference: "Lifetime") -> float:
        return self.value / reference.value


def _solve(fn, target: float, horizon: float) -> Lifetime:
    """First crossing of ``fn(t) = target`` on a geometric grid, refined by bisection."""
    if fn(0.0) <= target:
        return Lifetime(0.0, True)
    grid = np.concatenate([[0.0], np.geomspace(1e-6 * horizon, horizon, 400)])
    vals = fn(grid)
    below = np.flatnonzero(vals <= target)
    if not below.size:
        return Lifetime(math.inf, False)
    a, b = grid[below[0] - 1], grid[below[0]]
    for _ in range(200):
        m = 0.5 * (a + b)
        if fn(m) > target:
            a = m
        else:
            b = m
        if b - a <= 1e-12 * max(b, 1.0):
            break
    return Lifetime(0.5 * (a + b), True)


def lifetime(model_or_curve, target: float = PROCESS_TARGET, horizon: float = 1e4, tau: float | None = None) -> Lifetime:
    """Time (seconds) at which the curve falls to ``target``.

    Accepts a :class:`DecayModel` (qec_cycles models use n = t / tau) or any
    callable of time.
    """
    if isinstance(model_or_curve, DecayModel):
        model = model_or_curve
        if model.kind == "qec_cycles" and not model.tau:
            if tau is None:
                raise ValueError("tau is needed for a cycle model lifetime")
            model = DecayModel(model.kind, model.params, model.stderr, model.cov, model.pinned,
                               model.boundary, tau)

        def fn(t):
            return evaluate(model, t, time=True)
    else:
        fn = model_or_curve
    return _solve(lambda t: np.asarray(fn(np.asarray(t, dtype=float)), dtype=float), target, horizon)


def lifetime_report(models: dict[str, DecayModel], reference: str | None = None,
                    target: float = PROCESS_TARGET, horizon: float = 1e4) -> dict:
    """Lifetimes per label plus improvement factors relative to ``reference``."""
    lives = {k: lifetime(m, target, horizon) for k, m in models.items()}
    out = {"target": target, "lifetimes": {k: (v.value if v.bounded else None) for k, v in lives.items()},
           "bounded": {k: v.bounded for k, v in lives.items()}}
    if reference is not None:
        ref = lives[reference]
        out["reference"] = reference
        out["improvement"] = {k: (v.ratio(ref) if v.bounded and ref.bounded and ref.value > 0 else None)
                              for k, v in lives.items()}
    return out


def table_csv(models: dict[str, DecayModel]) -> str:
    """One row per (label, parameter): value and standard error, plus derived quantities."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "kind", "parameter", "value", "stderr", "pinned", "boundary"])
    for label, m in models.items():
        for k in PARAMS[m.kind]:
            w.writerow([label, m.kind, k, f"{m.params[k]:.6g}", f"{m.stderr.get(k, 0.0):.2g}",
                        int(k in m.pinned), int(k in m.boundary)])
        for k, (v, s) in m.derived().items():
            w.writerow([label, m.kind, k, f"{v:.6g}", f"{s:.2g}", 0, 0])
    return buf.getvalue()


def fit_summary(summary: dict) -> tuple[dict[str, DecayModel], dict[str, DecayModel]]:
    """Fit one memory-run summary: per-state curves and one process-fidelity curve per mode.

    Labels are ``kind`` for correct mode and ``kind_ps`` for post-selection.
    Cycle models are fitted against n = t / tau.  The process-fidelity curve is
    fitted with the same model family, weighted by the summed shot counts.
    Failed fits are logged and skipped.
    """
    from .experiments import metrics_from_probabilities

    info = summary["fit_input"]
    kind, tau = info["kind"], info["tau_cycle"]
    cycle_tau = tau if kind == "qec_cycles" else None
    label0 = summary["plan"]["qubit_kind"]
    models: dict[str, DecayModel] = {}
    fp_models: dict[str, DecayModel] = {}
    for mode, series in info["series"].items():
        label = label0 if mode == "correct" else f"{label0}_ps"
        probs: dict[float, dict[str, float]] = {}
        weights: dict[float, float] = {}
        for state, (x, p, n) in series.items():
            xs = np.asarray(x) / tau if cycle_tau else np.asarray(x)
            pin = default_pin(state) if kind == "phys_dfs" else None
            try:
                models[f"{label}:{state}"] = fit(xs, p, n, kind, pin, cycle_tau)
            except (FitError, ValueError) as exc:
                log.warning("fit %s:%s failed: %s", label, state, exc)
            for t, pv, nv in zip(x, p, n):
                probs.setdefault(t, {})[state] = pv
                weights[t] = weights.get(t, 0.0) + nv
        ts = sorted(probs)
        fps = [metrics_from_probabilities(probs[t], assume_partners=True).F_p for t in ts]
        xs = np.asarray(ts) / tau if cycle_tau else np.asarray(ts)
        try:
            fp_models[label] = fit(xs, fps, [weights[t] for t in ts], kind, None, cycle_tau)
        except (FitError, ValueError) as exc:
            log.warning("process fidelity fit %s failed: %s", label, exc)
    return models, fp_models


class DecayCurveRegressor(BaseEstimator, RegressorMixin):
    """Estimator face of :func:`fit`: ``X`` is a column of times (or cycle counts), ``y`` survival."""

    def __init__(self, kind: str = "phys_dfs", pin: dict | None = None, tau: float | None = None):
        self.kind = kind
        self.pin = pin
        self.tau = tau

    def fit(self, X, y, sample_weight=None):
        x = np.asarray(X, dtype=float).reshape(len(y), -1)[:, 0]
        self.model_ = fit(x, y, sample_weight, self.kind, self.pin, self.tau)
        self.params_ = dict(self.model_.params)
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        x = np.asarray(X, dtype=float).reshape(np.shape(X)[0], -1)[:, 0]
        return evaluate(self.model_, x)
