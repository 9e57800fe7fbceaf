import json

import numpy as np
import pytest
from scipy.optimize import least_squares

from recovery_cases import CASES, clean_curve, noiseless_worst, param_errors
from sicvac.fitkit import (
    PARAM_NAMES,
    ArityError,
    DecayModel,
    ModelKind,
    arity,
    evaluate,
    fit,
    initial_guess,
    jacobian,
    parse_csv,
    value,
)
from sicvac.fitkit.lm import levenberg_marquardt

ALL_KINDS = list(ModelKind)
SAMPLE = {
    ModelKind.RABI: (dict(A=0.3, B=0.7, phi=0.4, nu=5.0, T=0.5), np.linspace(0, 1, 120)),
    ModelKind.FID: (dict(A=0.8, nu=20.0, phi=-0.3, T=0.1), np.linspace(0, 0.3, 150)),
    ModelKind.EXP_DECAY: (dict(A=2.0, T=10.0), np.linspace(0, 40, 30)),
    ModelKind.STRETCHED_EXP: (dict(A=1.0, T=20.0, n=2.2), np.linspace(0, 50, 40)),
    ModelKind.SATURATION: (dict(s_max=0.2, p0=0.9), np.linspace(0, 5, 25)),
    ModelKind.SQRT_LINEWIDTH: (dict(lw0=6.0, a=2.5), np.linspace(0, 5, 25)),
}


def _vec(kind, params):
    return np.array([params[n] for n in PARAM_NAMES[kind]])


def test_kind_aliases_and_arity():
    assert ModelKind.parse("CPMG") is ModelKind.STRETCHED_EXP
    assert ModelKind.parse("exp-decay") is ModelKind.EXP_DECAY
    assert arity("rabi") == 5
    with pytest.raises(ValueError):
        ModelKind.parse("gaussian")


def test_model_validation():
    with pytest.raises(ArityError):
        DecayModel("exp_decay", {"A": 1.0})
    with pytest.raises(ValueError):
        DecayModel("exp_decay", {"A": 1.0, "T": 0.0})
    with pytest.raises(ValueError):
        DecayModel("stretched_exp", {"A": 1.0, "T": 1.0, "n": -1.0})
    with pytest.raises(ValueError):
        DecayModel("exp_decay", {"A": 1.0, "T": np.inf})


def test_closed_form_values():
    assert evaluate(DecayModel("exp_decay", {"A": 1.0, "T": 1e9}), [0.0])[0] == 1.0
    rabi = DecayModel("rabi", dict(A=0.65, B=0.53, phi=-0.08 * np.pi, nu=8.36, T=0.20481))
    assert rabi([0.0])[0] == pytest.approx(0.65 + 0.53 * np.cos(0.08 * np.pi), rel=1e-14)
    stretched = DecayModel("stretched_exp", dict(A=1.0, T=51.0, n=3.47))
    assert stretched([51.0])[0] == pytest.approx(np.exp(-1), rel=1e-14)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_jacobian_against_finite_differences(kind):
    params, x = SAMPLE[kind]
    p = _vec(kind, params)
    x = x[1:]  # sqrt has an infinite slope at 0
    jac = jacobian(kind, p, x)
    for i in range(p.size):
        h = 1e-6 * max(abs(p[i]), 1.0)
        dp = np.zeros_like(p)
        dp[i] = h
        fd = (value(kind, p + dp, x) - value(kind, p - dp, x)) / (2 * h)
        assert np.allclose(jac[:, i], fd, rtol=1e-6, atol=1e-8)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_noiseless_recovery_from_guess(kind):
    params, x = SAMPLE[kind]
    res = fit(kind, x, value(kind, _vec(kind, params), x))
    assert res.converged
    assert max(param_errors(params, res.params).values()) < 1e-8


@pytest.mark.parametrize("case", CASES, ids=[c[0] for c in CASES])
def test_measured_parameter_recovery(case):
    assert noiseless_worst(case) < 1e-3


def test_rabi_recovers_frequency_within_a_thousandth():
    _, kind, truth, x = CASES[0]
    res = fit(kind, x, clean_curve(kind, truth, x))
    assert res.params["nu"] == pytest.approx(12.44, rel=1e-3)
    assert res.params["B"] < 0


def test_init_at_truth_converges_fast():
    params, x = SAMPLE[ModelKind.EXP_DECAY]
    y = value(ModelKind.EXP_DECAY, _vec(ModelKind.EXP_DECAY, params), x)
    res = fit("exp_decay", x, y, init=params)
    assert res.converged and res.iterations <= 2


def test_cost_is_monotone_and_matches_scipy():
    rng = np.random.default_rng(7)
    params, x = SAMPLE[ModelKind.STRETCHED_EXP]
    kind = ModelKind.STRETCHED_EXP
    y = value(kind, _vec(kind, params), x) + 0.02 * rng.standard_normal(x.size)
    init = np.array([0.8, 15.0, 1.5])
    res = levenberg_marquardt(kind, x, y, init, None, None, 500)
    assert res.converged
    assert np.all(np.diff(res.costs) <= 1e-15 * res.costs[0])
    ref = least_squares(lambda p: value(kind, p, x) - y, init, method="lm", xtol=1e-15, ftol=1e-15)
    assert np.allclose(_vec(kind, res.params), ref.x, rtol=1e-6)
    assert res.rss == pytest.approx(2 * ref.cost, rel=1e-9)


def test_standard_errors_match_covariance():
    rng = np.random.default_rng(11)
    params, x = SAMPLE[ModelKind.EXP_DECAY]
    kind = ModelKind.EXP_DECAY
    sd = 0.05
    y = value(kind, _vec(kind, params), x) + sd * rng.standard_normal(x.size)
    res = fit(kind, x, y, sigma=np.full(x.size, sd))
    j = jacobian(kind, _vec(kind, res.params), x) / sd
    cov = np.linalg.inv(j.T @ j)
    assert np.allclose([res.stderr["A"], res.stderr["T"]], np.sqrt(np.diag(cov)), rtol=1e-6)
    unweighted = fit(kind, x, y)
    s2 = unweighted.rss / (x.size - 2)
    j = jacobian(kind, _vec(kind, unweighted.params), x)
    assert unweighted.stderr["T"] == pytest.approx(np.sqrt(s2 * np.linalg.inv(j.T @ j)[1, 1]), rel=1e-6)


def test_nonconvergence_is_flagged_not_raised():
    params, x = SAMPLE[ModelKind.RABI]
    y = value(ModelKind.RABI, _vec(ModelKind.RABI, params), x)
    res = fit("rabi", x, y, init=dict(A=0, B=0.1, phi=0, nu=1.0, T=0.1), max_iter=1)
    assert not res.converged
    assert res.stderr is None


def test_singular_problem_is_flagged():
    x = np.linspace(0, 1, 10)
    res = fit("rabi", x, np.zeros_like(x), init=dict(A=0, B=0, phi=0, nu=1.0, T=1.0))
    assert not res.converged
    assert "singular" in res.status or "singular" in res.message


def test_input_checks():
    x = np.linspace(0, 1, 5)
    with pytest.raises(ValueError):
        fit("rabi", x, x)  # too few points for five parameters
    x = np.linspace(0, 1, 10)
    with pytest.raises(ValueError):
        fit("exp_decay", x, np.exp(-x), sigma=np.zeros(10))
    with pytest.raises(ValueError):
        fit("exp_decay", x, np.exp(-x), init=dict(A=1.0, T=1.0), bounds=([2.0, 0.0], [3.0, 9.0]))


def test_bounds_are_respected():
    x = np.linspace(0, 40, 30)
    y = 2.0 * np.exp(-x / 10)
    res = fit("exp_decay", x, y, init=dict(A=1.0, T=5.0), bounds=([0.0, 1.0], [1.5, 100.0]))
    assert res.params["A"] <= 1.5 + 1e-12


def test_multistart_is_deterministic():
    params, x = SAMPLE[ModelKind.FID]
    y = value(ModelKind.FID, _vec(ModelKind.FID, params), x)
    a = fit("fid", x, y, n_starts=4, seed=3)
    b = fit("fid", x, y, n_starts=4, seed=3)
    assert a.params == b.params


def test_result_json():
    params, x = SAMPLE[ModelKind.EXP_DECAY]
    res = fit("exp_decay", x, value(ModelKind.EXP_DECAY, _vec(ModelKind.EXP_DECAY, params), x))
    obj = json.loads(res.to_json())
    assert obj["model"] == "exp_decay"
    assert set(obj) >= {"params", "stderr", "rss", "converged", "iterations"}
    assert all(v >= 0 for v in obj["stderr"].values())


def test_fid_frequency_guess_within_one_bin():
    x = np.linspace(0, 0.2, 401)
    y = np.cos(2 * np.pi * 40 * x) * np.exp(-x / 0.038)
    g = initial_guess("fid", x, y)
    bin_width = 1 / (x[-1] - x[0])
    assert abs(g.params["nu"] - 40.0) <= bin_width


def test_constant_data_give_flagged_guess():
    x = np.linspace(0, 1, 10)
    g = initial_guess("exp_decay", x, np.full(10, 0.7))
    assert g.degenerate
    assert g.params["A"] == pytest.approx(0.7)
    with pytest.raises(ValueError):
        initial_guess("exp_decay", x[:3], x[:3])


RANGES = {
    ModelKind.RABI: dict(A=(-1, 1), B=(0.2, 1), phi=(-1.4, 1.4), nu=(3, 15), T=(0.2, 1.0)),
    ModelKind.FID: dict(A=(0.2, 1), nu=(20, 60), phi=(-1.4, 1.4), T=(0.03, 0.1)),
    ModelKind.EXP_DECAY: dict(A=(0.1, 2), T=(5, 40)),
    ModelKind.STRETCHED_EXP: dict(A=(0.1, 2), T=(10, 30), n=(0.7, 4)),
    ModelKind.SATURATION: dict(s_max=(0.05, 0.3), p0=(0.3, 2)),
    ModelKind.SQRT_LINEWIDTH: dict(lw0=(3, 10), a=(0.5, 4)),
}


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_guess_then_fit_converges_on_random_instances(kind):
    rng = np.random.default_rng(100)
    x = SAMPLE[kind][1]
    ok = 0
    n = 500
    for _ in range(n):
        truth = {k: rng.uniform(*r) for k, r in RANGES[kind].items()}
        res = fit(kind, x, value(kind, _vec(kind, truth), x))
        ok += res.converged and max(param_errors(truth, res.params).values()) < 1e-6
    assert ok >= 0.95 * n


def test_parse_csv_named_columns():
    text = "# comment\nt,signal,stderr\n0,1,0.1\n1,0.5,0.1\n"
    x, y, s = parse_csv(text)
    assert np.allclose(x, [0, 1]) and np.allclose(y, [1, 0.5]) and np.allclose(s, 0.1)
    x, y, s = parse_csv("0 ,1\n1, 2\n")
    assert s is None and np.allclose(y, [1, 2])
    with pytest.raises(ValueError):
        parse_csv("# nothing\n")
