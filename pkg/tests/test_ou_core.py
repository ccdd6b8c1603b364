"""Exact discretization, path simulation, and the stationary coupling."""

import math

import numpy as np
import pytest

from ou_drift_bench import (
    OuParams,
    SamplePath,
    Variant,
    path_rng,
    rho,
    simulate_coupled,
    simulate_path,
    transition_coefficients,
)


def test_transition_coefficients_closed_form():
    # theta=1, delta=ln 2: a = 1/2, s2 = (1 - 1/4)/2 = 3/8
    a, s2 = transition_coefficients(1.0, math.log(2.0))
    assert a == pytest.approx(0.5, rel=1e-15)
    assert s2 == pytest.approx(0.375, rel=1e-15)


def test_transition_coefficients_small_step_limit():
    # a -> 1 and s2 -> delta as delta -> 0, with s2 stable at tiny theta*delta
    a, s2 = transition_coefficients(1e-8, 1e-8)
    assert a == pytest.approx(1.0, abs=1e-12)
    assert s2 == pytest.approx(1e-8, rel=1e-10)


@pytest.mark.parametrize("theta,delta", [(0.0, 0.1), (-1.0, 0.1), (1.0, 0.0), (1.0, -0.5)])
def test_transition_coefficients_rejects_nonpositive(theta, delta):
    with pytest.raises(ValueError):
        transition_coefficients(theta, delta)


def test_rho_values_and_symmetry():
    assert rho(0.5, 0.0) == pytest.approx(1.0, rel=1e-15)
    # theta=1, t=ln 4: e^{-ln 4}/2 = 1/8
    assert rho(1.0, math.log(4.0)) == pytest.approx(0.125, rel=1e-14)
    for t in (-2.0, -0.3, 0.0, 0.3, 2.0):
        assert rho(1.3, t) == rho(1.3, -t)


def test_ou_params_validation():
    p = OuParams(theta=2.0, delta=0.25, n=8)
    assert p.horizon == pytest.approx(2.0, rel=1e-15)
    assert np.allclose(p.times(), 0.25 * np.arange(9))
    for bad in (dict(theta=0.0), dict(delta=0.0), dict(n=0)):
        kwargs = dict(theta=1.0, delta=0.1, n=4)
        kwargs.update(bad)
        with pytest.raises(ValueError):
            OuParams(**kwargs)


def test_from_zero_starts_at_zero_and_keeps_innovations():
    p = OuParams(theta=1.0, delta=0.05, n=32)
    path = simulate_path(p, Variant.FROM_ZERO, seed=11, stream=0)
    assert path.values[0] == 0.0
    assert path.values.shape == (33,)
    assert path.innovations is not None and path.innovations.shape == (32,)
    assert path.z0 is None


def test_simulated_path_follows_ar1_recursion():
    p = OuParams(theta=0.8, delta=0.1, n=50)
    path = simulate_path(p, Variant.FROM_ZERO, seed=3, stream=5)
    a, s2 = transition_coefficients(p.theta, p.delta)
    scale = math.sqrt(s2)
    x = path.values
    xi = path.innovations
    recursed = a * x[:-1] + scale * xi
    assert np.max(np.abs(x[1:] - recursed)) <= 1e-14


def test_determinism_same_key_bitwise_same_path():
    p = OuParams(theta=1.0, delta=0.05, n=64)
    one = simulate_path(p, Variant.STATIONARY, seed=9, stream=123)
    two = simulate_path(p, Variant.STATIONARY, seed=9, stream=123)
    other = simulate_path(p, Variant.STATIONARY, seed=9, stream=124)
    assert np.array_equal(one.values, two.values)
    assert np.array_equal(one.innovations, two.innovations)
    assert one.z0 == two.z0
    assert not np.array_equal(one.values, other.values)


def test_stationary_initial_variance():
    # values[0] = Z_0 ~ N(0, 1/(2 theta)); check the sample variance at 4 SE
    theta = 0.5
    p = OuParams(theta=theta, delta=0.1, n=1)
    z0 = np.array(
        [simulate_path(p, Variant.STATIONARY, seed=77, stream=s).z0 for s in range(4000)]
    )
    target = 1.0 / (2.0 * theta)
    var = float(np.var(z0))
    # SE of the variance of a normal sample: target * sqrt(2/m)
    se = target * math.sqrt(2.0 / z0.size)
    assert abs(var - target) <= 4.0 * se


def test_stationary_lag_covariance_matches_rho():
    # Cov(Z_s, Z_t) = e^{-theta|t-s|}/(2 theta), checked on one column pair
    theta, delta, n = 1.0, 0.1, 8
    p = OuParams(theta=theta, delta=delta, n=n)
    a, s2 = transition_coefficients(theta, delta)
    rng = np.random.default_rng(2026)
    m = 200_000
    z = np.empty((m, n + 1))
    z[:, 0] = rng.normal(size=m) / math.sqrt(2.0 * theta)
    for i in range(n):
        z[:, i + 1] = a * z[:, i] + math.sqrt(s2) * rng.normal(size=m)
    for lag in (1, 4, 8):
        emp = float(np.mean(z[:, 0] * z[:, lag]))
        exact = rho(theta, lag * delta)
        prod = z[:, 0] * z[:, lag]
        se = float(np.std(prod)) / math.sqrt(m)
        assert abs(emp - exact) <= 4.0 * se


def test_coupling_identity_pathwise():
    # X_t = Z_t - e^{-theta t} Z_0 exactly, shared innovations
    p = OuParams(theta=1.3, delta=0.07, n=40)
    x_path, z_path = simulate_coupled(p, seed=21, stream=4)
    decay = np.exp(-p.theta * p.times())
    recon = z_path.values - decay * z_path.z0
    assert np.max(np.abs(x_path.values - recon)) <= 1e-13
    assert np.array_equal(x_path.innovations, z_path.innovations)


def test_coupling_with_forced_zero_start_collapses():
    p = OuParams(theta=1.0, delta=0.05, n=16)
    x_path, z_path = simulate_coupled(p, seed=5, stream=0, z0=0.0)
    assert np.array_equal(x_path.values, z_path.values)


def test_sample_path_invariants():
    p = OuParams(theta=1.0, delta=0.1, n=2)
    good = np.array([0.0, 1.0, -0.5])
    SamplePath(params=p, variant=Variant.FROM_ZERO, values=good)
    with pytest.raises(ValueError):
        SamplePath(params=p, variant=Variant.FROM_ZERO, values=np.array([0.1, 1.0, -0.5]))
    with pytest.raises(ValueError):
        SamplePath(params=p, variant=Variant.FROM_ZERO, values=np.array([0.0, np.nan, 0.2]))
    with pytest.raises(ValueError):
        SamplePath(params=p, variant=Variant.FROM_ZERO, values=np.zeros(4))


def test_path_rng_streams_are_reproducible_and_distinct():
    a1 = path_rng(42, 7).normal(size=4)
    a2 = path_rng(42, 7).normal(size=4)
    b = path_rng(42, 8).normal(size=4)
    c = path_rng(43, 7).normal(size=4)
    assert np.array_equal(a1, a2)
    assert not np.array_equal(a1, b)
    assert not np.array_equal(a1, c)
