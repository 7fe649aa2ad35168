import csv
import io
import math
from types import SimpleNamespace

import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from dfsqec.analysis_fit import (
    PROCESS_TARGET,
    DecayCurveRegressor,
    DecayModel,
    FitError,
    evaluate,
    fit,
    fit_summary,
    jacobian,
    lifetime,
    lifetime_report,
    table_csv,
)
from dfsqec.experiments import ExperimentPlan, run_memory
from dfsqec.noise import NoiseConfig

G_P = 0.5 * math.sqrt(2)


def sampled(model: DecayModel, x, shots: int, seed: int):
    rng = np.random.default_rng(seed)
    return rng.binomial(shots, evaluate(model, x)) / shots


def test_phys_dfs_example():
    m = DecayModel("phys_dfs", {"eps_s": 0.002, "gamma": 0.0, "Gamma": G_P})
    assert float(m(2.0)) == pytest.approx(0.5 + 0.498 * math.exp(-1.0), abs=1e-12)
    assert float(m(2.0)) == pytest.approx(0.6832, abs=1e-4)


def test_qec_model_without_per_cycle_error_is_flat():
    m = DecayModel("qec_cycles", {"eps_s": 0.03, "eps_m": 0.0})
    assert np.allclose(m(np.arange(20)), 0.97)


def test_retention_example():
    m = DecayModel("retention", {"eta": 0.019})
    assert float(m(23.0)) == pytest.approx(math.exp(-0.437), abs=1e-12)
    assert float(m(23.0)) == pytest.approx(0.646, abs=1e-3)


def test_model_validation():
    with pytest.raises(ValueError):
        DecayModel("qec_cycles", {"eps_s": 0.6, "eps_m": 0.0})
    with pytest.raises(ValueError):
        DecayModel("phys_dfs", {"eps_s": 0.0, "gamma": 0.0})
    with pytest.raises(ValueError):
        DecayModel("cubic", {})
    with pytest.raises(ValueError):
        fit([0, 1], [1, 1])
    with pytest.raises(ValueError):
        fit([0, 1, 2], [1, 1, 1], pin={"eta": 0.0})


@pytest.mark.parametrize("kind,params,x,pin", [
    ("phys_dfs", {"eps_s": 0.01, "gamma": 0.05, "Gamma": 0.3}, np.linspace(0, 8, 20), None),
    ("phys_dfs", {"eps_s": 0.002, "gamma": 0.0, "Gamma": G_P}, np.linspace(0, 6, 25), {"gamma": 0.0}),
    ("qec_cycles", {"eps_s": 0.04, "eps_m": 0.029}, np.arange(9.0), None),
    ("retention", {"eta": 0.019}, np.linspace(0, 40, 10), None),
])
def test_noiseless_round_trip(kind, params, x, pin):
    truth = DecayModel(kind, params)
    got = fit(x, evaluate(truth, x), kind=kind, pin=pin)
    for k, v in params.items():
        assert got.params[k] == pytest.approx(v, abs=1e-6)


@pytest.mark.parametrize("kind,lo,hi", [
    ("phys_dfs", [0.0, 0.0, 0.0], [0.4, 1.0, 2.0]),
    ("qec_cycles", [0.0, 0.0], [0.4, 0.4]),
    ("retention", [0.0], [1.0]),
])
def test_jacobian_matches_finite_differences(kind, lo, hi):
    rng = np.random.default_rng(0)
    x = np.linspace(0.1, 8, 15)
    for _ in range(10):
        theta = rng.uniform(lo, hi)
        J = jacobian(kind, theta, x)
        for j in range(theta.size):
            h = 1e-6 * max(abs(theta[j]), 1e-3)
            up, dn = theta.copy(), theta.copy()
            up[j] += h
            dn[j] -= h
            names = {"phys_dfs": ("eps_s", "gamma", "Gamma"), "qec_cycles": ("eps_s", "eps_m"),
                     "retention": ("eta",)}[kind]
            fd = (evaluate(DecayModel(kind, dict(zip(names, up))), x)
                  - evaluate(DecayModel(kind, dict(zip(names, dn))), x)) / (2 * h)
            scale = np.maximum(np.abs(J[:, j]), 1e-8)
            assert np.all(np.abs(fd - J[:, j]) / scale < 1e-6 + 1e-6 / scale)


@pytest.mark.parametrize("eps_s", [0.0, 0.02, 0.1])
def test_qec_exponential_approximation(eps_s):
    tau = 2.89
    n = np.arange(11)
    for eps_m in np.linspace(0.0, 0.05, 11):
        m = DecayModel("qec_cycles", {"eps_s": eps_s, "eps_m": eps_m}, tau=tau)
        approx = 0.5 + (0.5 - eps_s) * np.exp(-2 * eps_m * n * tau / tau)
        # one percentage point of fidelity; the relative gap reaches ~1.4% at eps_m = 0.05, n = 10
        assert np.all(np.abs(m(n * tau, time=True) - approx) < 0.01)


def test_lifetime_ratio_invariant_under_time_rescaling():
    a = DecayModel("phys_dfs", {"eps_s": 0.002, "gamma": 0.0, "Gamma": 0.8})
    b = DecayModel("phys_dfs", {"eps_s": 0.003, "gamma": 0.01, "Gamma": 0.09})
    base = lifetime(b).ratio(lifetime(a))
    for c in (0.5, 3.0, 10.0):
        x = np.linspace(0, 10, 30)
        fa = fit(x * c, evaluate(a, x))
        fb = fit(x * c, evaluate(b, x))
        assert lifetime(fb).ratio(lifetime(fa)) == pytest.approx(base, rel=1e-6)


def test_lifetime_definition_and_horizon():
    m = DecayModel("qec_cycles", {"eps_s": 0.01, "eps_m": 0.02}, tau=2.89)
    life = lifetime(m)
    assert life.bounded
    assert float(m(life.value, time=True)) == pytest.approx(PROCESS_TARGET, abs=1e-9)
    flat = DecayModel("qec_cycles", {"eps_s": 0.0, "eps_m": 0.0}, tau=2.89)
    assert not lifetime(flat).bounded
    with pytest.raises(ValueError):
        lifetime(DecayModel("qec_cycles", {"eps_s": 0.0, "eps_m": 0.01}))


def test_phys_recovery_from_sampled_data():
    truth = DecayModel("phys_dfs", {"eps_s": 0.002, "gamma": 0.0, "Gamma": G_P})
    x = np.linspace(0, 6, 25)
    p = sampled(truth, x, 10_000, 1)
    got = fit(x, p, np.full(x.size, 10_000), pin={"gamma": 0.0})
    est, err = got.derived()["Gamma/sqrt2"]
    assert est == pytest.approx(0.5, rel=0.05)
    assert 0 < err < 0.05


def test_qec_recovery_from_sampled_data():
    truth = DecayModel("qec_cycles", {"eps_s": 0.04, "eps_m": 0.029})
    n = np.arange(9.0)
    p = sampled(truth, n, 10_000, 2)
    got = fit(n, p, np.full(n.size, 10_000), kind="qec_cycles", tau=2.89)
    assert got.params["eps_m"] == pytest.approx(0.029, rel=0.10)
    assert got.derived()["2eps_m/tau"][0] == pytest.approx(2 * got.params["eps_m"] / 2.89)


def test_constant_series_is_a_flagged_boundary():
    got = fit(np.arange(5.0), np.ones(5), np.full(5, 100))
    assert got.params["eps_s"] == pytest.approx(0.0, abs=1e-9)
    assert got.params["gamma"] == pytest.approx(0.0, abs=1e-9)
    assert got.params["Gamma"] == pytest.approx(0.0, abs=1e-9)
    assert set(got.boundary) == {"eps_s", "gamma", "Gamma"}


def test_non_convergence_raises_with_diagnostics(monkeypatch):
    import dfsqec.analysis_fit as af

    # a simplex stage that stops far from the optimum leaves Gauss-Newton real work to do
    monkeypatch.setattr(af, "minimize", lambda f, x0, **kw: SimpleNamespace(x=np.array([0.2, 1.5, 1.5]), fun=0.0))
    x = np.linspace(0, 6, 25)
    p = evaluate(DecayModel("phys_dfs", {"eps_s": 0.01, "gamma": 0.1, "Gamma": 0.4}), x)
    with pytest.raises(FitError) as exc:
        fit(x, p, max_iter=1, tol=0.0)
    assert "theta" in exc.value.diagnostics


def test_regressor_estimator():
    x = np.linspace(0, 6, 25)
    truth = DecayModel("phys_dfs", {"eps_s": 0.002, "gamma": 0.0, "Gamma": G_P})
    y = evaluate(truth, x)
    est = DecayCurveRegressor(pin={"gamma": 0.0})
    with pytest.raises(NotFittedError):
        est.predict(x[:, None])
    est.fit(x[:, None], y)
    assert est.params_["Gamma"] == pytest.approx(G_P, abs=1e-6)
    assert est.score(x[:, None], y) == pytest.approx(1.0)
    assert est.get_params()["kind"] == "phys_dfs"


def test_table_and_report():
    a = DecayModel("phys_dfs", {"eps_s": 0.002, "gamma": 0.0, "Gamma": 0.8})
    b = DecayModel("qec_cycles", {"eps_s": 0.01, "eps_m": 0.02}, tau=2.89)
    rows = list(csv.DictReader(io.StringIO(table_csv({"physical": a, "dfs_qec": b}))))
    assert {r["parameter"] for r in rows} >= {"Gamma", "Gamma/sqrt2", "eps_m", "2eps_m/tau"}
    rep = lifetime_report({"physical": a, "dfs_qec": b}, "physical")
    assert rep["improvement"]["physical"] == 1.0
    assert rep["improvement"]["dfs_qec"] > 1.0


def test_fit_summary_on_a_memory_run():
    cfg = NoiseConfig(Gamma_quasi=G_P)
    plan = ExperimentPlan("physical", ("0", "+", "+i"), (0.0, 1.0, 2.0, 3.0, 4.0), shots=2000, noise=cfg, seed=3)
    models, fp = fit_summary(run_memory(plan).summary())
    assert set(models) == {"physical:0", "physical:+", "physical:+i"}
    assert models["physical:0"].pinned == ("Gamma",)
    assert models["physical:+"].derived()["Gamma/sqrt2"][0] == pytest.approx(0.5, rel=0.1)
    assert set(fp) == {"physical"}
    assert lifetime(fp["physical"]).bounded
