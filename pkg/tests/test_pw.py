import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smilab.errors import ConfigError, DimensionError, NullConditioningError
from smilab.linalg import (
    SIGMA_X,
    SIGMA_Z,
    partial_trace,
    projector_from_state,
    random_density,
    random_hermitian,
    random_state,
)
from smilab.pw import (
    JointSystemConfig,
    commutation_identity_gap,
    conditional_expectation,
    joint_evolve,
    lift_system_operator,
    limit_consistency_check,
    pw_heisenberg_expectation,
    relative_density,
    smi_zero_noise_expectation,
)

seeds = st.integers(0, 2**32 - 1)
ZERO = np.zeros((2, 2))


def test_lift_acts_on_the_system_factor():
    lifted = lift_system_operator(SIGMA_Z, 2)
    np.testing.assert_array_equal(lifted, np.diag([1, 1, -1, -1]))


def test_ising_evolution_closed_form():
    cfg = JointSystemConfig(ZERO, ZERO, np.kron(SIGMA_Z, SIGMA_Z))
    rho0 = np.full((4, 4), 0.25, dtype=complex)
    # hand-computed: aligned spins pick up exp(-i pi/4), anti-aligned exp(+i pi/4)
    psi = 0.5 * np.exp(-1j * math.pi / 4) * np.array([1, 1j, 1j, 1])
    np.testing.assert_allclose(joint_evolve(rho0, cfg, math.pi / 4), np.outer(psi, psi.conj()), atol=1e-12)


def test_joint_evolve_preserves_trace_and_purity():
    rng = np.random.default_rng(1)
    cfg = JointSystemConfig(random_hermitian(rng, 2), random_hermitian(rng, 3), random_hermitian(rng, 6))
    rho = random_density(rng, 6)
    out = joint_evolve(rho, cfg, 0.9)
    assert abs(np.trace(out) - 1) < 1e-12
    assert abs(np.trace(out @ out) - np.trace(rho @ rho)) < 1e-12


def test_conditional_expectation_matches_post_selection():
    rng = np.random.default_rng(2)
    c = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    c /= np.linalg.norm(c)
    rho = np.outer(c.reshape(-1), c.reshape(-1).conj())
    # observer found in |0>: system branch is c[:, 0]
    weights = np.abs(c[:, 0]) ** 2
    expected = (weights[0] - weights[1]) / weights.sum()
    res = conditional_expectation(SIGMA_Z, rho, np.array([1, 0]), (2, 2))
    assert res.value == pytest.approx(expected, abs=1e-12)
    assert res.denominator == pytest.approx(weights.sum(), abs=1e-12)


def test_conditional_expectation_null_event():
    rho = np.kron(np.diag([1.0, 0.0]), np.diag([1.0, 0.0]))
    with pytest.raises(NullConditioningError):
        conditional_expectation(SIGMA_Z, rho, np.array([0, 1]), (2, 2))


def test_conditional_expectation_dimension_check():
    with pytest.raises(DimensionError):
        conditional_expectation(SIGMA_Z, np.eye(6) / 6, np.array([1, 0]), (2, 2))


def test_relative_density_of_product_state():
    rng = np.random.default_rng(3)
    rs, psi = random_density(rng, 2), random_state(rng, 3)
    rel = relative_density(np.kron(rs, projector_from_state(psi)), psi, (2, 3))
    np.testing.assert_allclose(rel, rs, atol=1e-12)


def test_relative_density_of_entangled_state():
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    rel = relative_density(np.outer(bell, bell), np.array([0, 1]), (2, 2))
    np.testing.assert_allclose(rel, np.diag([0, 1]), atol=1e-12)


@pytest.mark.parametrize("tau", [0.0, 0.3, 1.0, math.pi / 4, 2.5])
def test_rabi_oscillation(tau):
    rho = np.diag([1.0, 0.0])
    assert pw_heisenberg_expectation(SIGMA_Z, SIGMA_X, rho, tau) == pytest.approx(math.cos(2 * tau), abs=1e-12)
    assert smi_zero_noise_expectation(SIGMA_Z, SIGMA_X, rho, tau) == pytest.approx(math.cos(2 * tau), abs=1e-12)


def test_limit_consistency_example():
    cfg = JointSystemConfig(SIGMA_X, SIGMA_Z)
    gap = limit_consistency_check(cfg, SIGMA_Z, np.diag([1.0, 0.0]), np.ones(2) / math.sqrt(2), 0.7)
    assert gap <= 1e-10


@settings(max_examples=30, deadline=None)
@given(seed=seeds, tau=st.floats(0.0, 5.0))
def test_limit_consistency_random(seed, tau):
    rng = np.random.default_rng(seed)
    cfg = JointSystemConfig(random_hermitian(rng, 2), random_hermitian(rng, 2))
    gap = limit_consistency_check(cfg, random_hermitian(rng, 2), random_density(rng, 2), random_state(rng, 2), tau)
    assert gap <= 1e-10


def test_limit_consistency_with_mixed_observer():
    rng = np.random.default_rng(4)
    cfg = JointSystemConfig(random_hermitian(rng, 2), random_hermitian(rng, 3))
    psi = random_state(rng, 3)
    rho_o = 0.6 * projector_from_state(psi) + 0.4 * random_density(rng, 3)
    gap = limit_consistency_check(cfg, SIGMA_Z, random_density(rng, 2), psi, 1.1, rho_o0=rho_o)
    assert gap <= 1e-10


def test_inverted_sign_convention_is_inconsistent():
    rng = np.random.default_rng(6)
    cfg = JointSystemConfig(random_hermitian(rng, 2), random_hermitian(rng, 2))
    args = (random_hermitian(rng, 2), random_density(rng, 2), random_state(rng, 2), 1.3)
    assert limit_consistency_check(cfg, *args, convention="inverted") > 1e-3
    assert limit_consistency_check(cfg, *args) <= 1e-10


def test_limit_consistency_requires_no_interaction():
    cfg = JointSystemConfig(SIGMA_X, SIGMA_Z, np.kron(SIGMA_Z, SIGMA_Z))
    with pytest.raises(ConfigError):
        limit_consistency_check(cfg, SIGMA_Z, np.eye(2) / 2, np.array([1, 0]), 1.0)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, tau=st.floats(-4.0, 4.0))
def test_observer_rotation_commutes_with_system_observable(seed, tau):
    rng = np.random.default_rng(seed)
    gap = commutation_identity_gap(random_hermitian(rng, 2), random_hermitian(rng, 3), random_state(rng, 3),
                                   random_density(rng, 6), tau)
    assert gap <= 1e-12


def test_unknown_convention():
    with pytest.raises(ConfigError):
        joint_evolve(np.eye(4) / 4, JointSystemConfig(ZERO, ZERO), 1.0, convention="heisenberg")


def test_partial_trace_of_joint_product_recovers_system():
    rng = np.random.default_rng(7)
    rs, ro = random_density(rng, 2), random_density(rng, 2)
    out = joint_evolve(np.kron(rs, ro), JointSystemConfig(ZERO, random_hermitian(rng, 2)), 2.0)
    np.testing.assert_allclose(partial_trace(out, (2, 2), "left"), rs, atol=1e-12)
