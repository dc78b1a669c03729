import math

import numpy as np
import pytest

from mewfit import (FitConfig, InfeasibleTarget, RawDataset, adapt, entropy,
                    entropy_identity_check, mem_fit, partition_function,
                    residuals, solve_beta, uniform_baseline, weighted_mse,
                    weights_from_beta)
from mewfit.experiments import PEARSON_X, PEARSON_Y


def pearson_adapted():
    return adapt(RawDataset(np.array(PEARSON_X), np.array(PEARSON_Y)))


def bisect_beta(e2, target, lo=-1e9, hi=1e9, iters=200):
    """Independent root oracle for the constraint equation."""
    def mean(beta):
        t = -beta * (e2 - e2.min())
        w = np.exp(t - t.max())
        return float((w / w.sum()) @ e2)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mean(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------- partition

def test_partition_beta_zero_is_n():
    e = np.array([0.3, -0.1, 0.7, 0.2])
    assert partition_function(e, 0.0) == pytest.approx(4.0, rel=1e-15)


def test_partition_hand_case():
    e = np.array([0.0, 1.0])
    assert partition_function(e, math.log(2.0)) == pytest.approx(1.5, rel=1e-14)


def test_partition_zero_residuals():
    assert partition_function(np.zeros(7), 123.4) == pytest.approx(7.0)


def test_partition_survives_huge_beta():
    e = np.array([0.5, 0.6, 0.9])
    q = partition_function(e, 1e12)
    assert q >= 0.0 and math.isfinite(q)
    p = weights_from_beta(e, 1e12)
    assert p[0] == pytest.approx(1.0)


# ------------------------------------------------------------------ weights

def test_weights_beta_zero_uniform():
    p = weights_from_beta(np.array([0.1, 0.5, 0.2]), 0.0)
    assert np.allclose(p, 1 / 3)
    assert abs(p.sum() - 1.0) < 1e-12


def test_weights_hand_case():
    p = weights_from_beta(np.array([0.0, 1.0]), math.log(3.0))
    assert np.allclose(p, [0.75, 0.25], rtol=1e-14)


def test_weights_saturation_and_floor():
    p = weights_from_beta(np.array([0.0, 10.0]), 1e12, floor=1e-300)
    assert p[0] == 1.0
    assert p[1] == 0.0


def test_weights_always_normalized():
    rng = np.random.default_rng(0)
    for _ in range(50):
        e = rng.normal(size=rng.integers(2, 60))
        beta = rng.uniform(-5.0, 5e4)
        p = weights_from_beta(e, beta)
        assert abs(float(p.sum()) - 1.0) < 1e-12


# ------------------------------------------------------------------- entropy

def test_entropy_uniform_is_log_n():
    assert entropy(np.full(10, 0.1)) == pytest.approx(math.log(10), rel=1e-14)


def test_entropy_degenerate_is_zero():
    assert entropy(np.array([1.0, 0.0, 0.0])) == 0.0


def test_entropy_bounds():
    rng = np.random.default_rng(1)
    for _ in range(30):
        p = rng.random(rng.integers(2, 40))
        p /= p.sum()
        h = entropy(p)
        assert -1e-15 <= h <= math.log(len(p)) + 1e-12


# ---------------------------------------------------------------- solve_beta

def test_solve_beta_mean_target_is_zero():
    e = np.array([0.1, 0.2, 0.4, 0.8])
    target = float(np.mean(e * e))
    assert solve_beta(e, target) == 0.0


def test_solve_beta_two_point_closed_form():
    # 0.25 (1 + exp(-b)) = exp(-b)  =>  b = ln 3
    beta = solve_beta(np.array([0.0, 1.0]), 0.25)
    assert beta == pytest.approx(math.log(3.0), abs=1e-12)


def test_solve_beta_negative_root():
    e = np.array([0.1, 0.9])
    e2 = e * e
    target = 0.6 * e2.max() + 0.4 * e2.min()
    beta = solve_beta(e, target)
    assert beta < 0.0
    p = weights_from_beta(e, beta)
    assert float(p @ e2) == pytest.approx(target, rel=1e-12)


def test_solve_beta_infeasible_low_and_high():
    e = np.array([0.2, 0.4, 0.9])
    with pytest.raises(InfeasibleTarget):
        solve_beta(e, 0.03)          # below min e^2
    with pytest.raises(InfeasibleTarget):
        solve_beta(e, 0.9)           # above max e^2


def test_solve_beta_beyond_cap():
    e2 = np.array([1e-4, 2e-4])
    with pytest.raises(InfeasibleTarget):
        solve_beta(np.sqrt(e2), 1.0000001e-4, beta_max=1e3)


def test_solve_beta_matches_bisection_oracle():
    rng = np.random.default_rng(42)
    for _ in range(200):
        n = int(rng.integers(2, 30))
        e = rng.normal(size=n)
        e2 = e * e
        frac = rng.uniform(0.05, 0.95)
        target = float(e2.min() + frac * (np.mean(e2) - e2.min()))
        if target <= e2.min() or target >= e2.max():
            continue
        beta = solve_beta(e, target, beta_init=float(rng.uniform(0, 10)))
        oracle = bisect_beta(e2, target)
        assert beta == pytest.approx(oracle, rel=1e-9, abs=1e-9)


def test_solve_beta_warm_start_far_off():
    e = np.array([0.05, 0.3, 0.6])
    e2 = e * e
    target = float(np.mean(e2)) / 5.0
    cold = solve_beta(e, target, beta_init=0.0)
    hot = solve_beta(e, target, beta_init=1e6)
    assert cold == pytest.approx(hot, rel=1e-9)


def test_gibbs_mean_strictly_decreasing():
    rng = np.random.default_rng(9)
    e = rng.normal(size=12)
    e2 = e * e
    betas = np.linspace(-20.0, 400.0, 60)
    means = []
    for b in betas:
        p = weights_from_beta(e, b)
        means.append(float(p @ e2))
    assert all(a > b for a, b in zip(means, means[1:]))


# ----------------------------------------------------------------- baseline

def test_uniform_baseline_pearson():
    model, mse_uw = uniform_baseline(pearson_adapted(), 1)
    assert model.coeffs[0] == pytest.approx(0.96845, abs=1e-4)
    assert model.coeffs[1] == pytest.approx(-0.90747, abs=1e-4)
    assert mse_uw == pytest.approx(0.41357e-2, abs=1e-6)


def test_uniform_baseline_exact_line():
    data = adapt(RawDataset(np.linspace(0, 2, 12), np.linspace(1, 5, 12)))
    model, mse_uw = uniform_baseline(data, 1)
    assert np.allclose(model.coeffs, [0.0, 1.0], atol=1e-12)
    assert mse_uw <= 1e-30


# ------------------------------------------------------------------ mem_fit

def test_mem_fit_r1_recovers_baseline_exactly():
    data = pearson_adapted()
    baseline, mse_uw = uniform_baseline(data, 1)
    result = mem_fit(data, FitConfig(degree=1, reduction_factor=1.0))
    assert np.array_equal(result.model.coeffs, baseline.coeffs)
    assert np.array_equal(result.state.weights, np.full(10, 0.1))
    assert result.state.beta == 0.0
    assert result.state.mse == mse_uw
    assert len(result.trace) == 1


def test_mem_fit_perfect_fit_short_circuit():
    data = adapt(RawDataset(np.linspace(0, 1, 8), np.linspace(0, 1, 8)))
    result = mem_fit(data, FitConfig(degree=1, reduction_factor=50.0))
    assert result.converged
    assert result.state.capped
    assert result.state.beta == 0.0
    assert np.allclose(result.model.coeffs, [0.0, 1.0], atol=1e-12)
    assert np.allclose(result.state.weights, 1 / 8)


def test_mem_fit_pearson_matches_published_line():
    data = pearson_adapted()
    result = mem_fit(data, FitConfig(degree=1, reduction_factor=100.0))
    assert result.converged
    assert result.model.coeffs[0] == pytest.approx(0.99781, abs=1e-3)
    assert result.model.coeffs[1] == pytest.approx(-0.84758, abs=1e-3)
    e = residuals(result.model, data)
    band = np.abs(e) < 0.01
    assert int(band.sum()) == 5
    assert float(result.state.weights[band].sum()) >= 0.99


def test_mem_fit_constraint_satisfied_exactly():
    data = pearson_adapted()
    result = mem_fit(data, FitConfig(degree=1, reduction_factor=100.0))
    target = result.trace[0].mse / 100.0
    assert result.state.mse == pytest.approx(target, rel=1e-10)
    e = residuals(result.model, data)
    assert weighted_mse(e, result.state.weights) == pytest.approx(target,
                                                                  rel=1e-10)


def test_mem_fit_state_invariants():
    data = pearson_adapted()
    result = mem_fit(data, FitConfig(degree=1, reduction_factor=100.0))
    state = result.state
    e = residuals(result.model, data)
    # Gibbs form against the state's own beta
    rebuilt = weights_from_beta(e, state.beta)
    live = state.weights > 1e-300
    assert np.abs(rebuilt[live] / state.weights[live] - 1.0).max() < 1e-10
    # entropy identity
    assert abs(state.entropy
               - (state.beta * state.mse + state.log_partition)) < 1e-10
    # ln p_i + beta e_i^2 constant on live weights
    gibbs_const = np.log(state.weights[live]) + state.beta * e[live] ** 2
    assert gibbs_const.max() - gibbs_const.min() < 1e-8
    # stationarity transfers to the final weights
    for k in range(2):
        assert abs(float(np.sum(state.weights * e * data.x ** k))) < 1e-10


def test_mem_fit_trace_entropy_monotone():
    data = pearson_adapted()
    result = mem_fit(data, FitConfig(degree=1, reduction_factor=1000.0,
                                     continuation_steps=6))
    hs = [t.entropy for t in result.trace]
    assert hs[0] == pytest.approx(math.log(10), rel=1e-12)
    assert all(a >= b - 1e-12 for a, b in zip(hs, hs[1:]))


def test_mem_fit_entropy_ceiling():
    data = pearson_adapted()
    for r in (2.0, 10.0, 100.0):
        result = mem_fit(data, FitConfig(degree=1, reduction_factor=r))
        assert result.state.entropy <= math.log(10) + 1e-12


def test_mem_fit_warm_start_matches_cold():
    data = pearson_adapted()
    cold = mem_fit(data, FitConfig(degree=1, reduction_factor=100.0))
    half = mem_fit(data, FitConfig(degree=1, reduction_factor=10.0))
    warm = mem_fit(data, FitConfig(degree=1, reduction_factor=100.0),
                   p0=half.state.weights)
    assert np.abs(cold.model.coeffs - warm.model.coeffs).max() < 1e-9
    assert np.abs(cold.state.weights - warm.state.weights).max() < 1e-9


# ------------------------------------------------------- entropy identity

def test_entropy_identity_uniform_baseline_exact():
    data = pearson_adapted()
    result = mem_fit(data, FitConfig(degree=1, reduction_factor=1.0))
    state = result.state
    assert state.entropy == pytest.approx(math.log(10), rel=1e-14)
    assert state.beta * state.mse + state.log_partition == pytest.approx(
        math.log(10), rel=1e-14)


def test_entropy_identity_check_pearson():
    data = pearson_adapted()
    result = mem_fit(data, FitConfig(degree=1, reduction_factor=100.0))
    diag = entropy_identity_check(result, h=1e-3)
    assert diag.identity_residual <= 1e-10
    assert diag.derivative_gap <= 1e-2 * abs(diag.beta)
