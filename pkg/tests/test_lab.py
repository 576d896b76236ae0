import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smilab.engine import (
    EnsembleSpec,
    TimeGrid,
    channel_from_trajectory,
    dress_operator,
    ensemble_average_operator,
    sample_trajectory,
)
from smilab.errors import ConfigError, DimensionError, PreconditionError
from smilab.lab import (
    born_distribution,
    decay_curve,
    decoherence_metrics,
    dephased,
    eigenprojector_weights,
    reduced_operator_check,
    stability_test,
)
from smilab.linalg import SIGMA_X, SIGMA_Z, random_density, random_hermitian, spectral_decompose

from conftest import dephasing

Z = spectral_decompose(SIGMA_Z)
PLUS = np.array([1, 1]) / math.sqrt(2)


@pytest.mark.parametrize("psi, value", [([1, 0], 1.0), ([0, 1], -1.0)])
def test_eigenstates_are_stable(psi, value):
    rep = stability_test(np.array(psi, dtype=complex), SIGMA_Z, dephasing(1.0), TimeGrid(1.0, 50), 1000, 3)
    assert rep.is_stable
    assert rep.expectation_variance <= 1e-16
    assert np.allclose(rep.expectations, value, atol=1e-12)
    np.testing.assert_allclose(rep.return_fidelity, 1.0, atol=1e-12)


def test_superposition_disperses():
    rep = stability_test(PLUS, SIGMA_Z, dephasing(1.0), TimeGrid(1.0, 50), 10_000, 4)
    assert not rep.is_stable
    assert rep.expectation_variance > 1e-3
    assert abs(rep.expectation_mean) <= 3 * rep.standard_error
    # the plain dressed value commutes through a dephasing kernel
    np.testing.assert_allclose(rep.dressed_expectations, 0.0, atol=1e-12)


def test_superposition_variance_matches_closed_form():
    # per-trajectory amplitude is (i/2) sin(2 phi), phi ~ N(0, x/2) per branch difference
    x = 1.0
    rep = stability_test(PLUS, SIGMA_Z, dephasing(1.0), TimeGrid(x, 40), 20_000, 5)
    expected = (1 - math.exp(-4 * x)) / 8
    assert abs(rep.expectation_variance - expected) < 0.05 * expected


def test_zero_noise_eigenstate_phase_is_deterministic():
    rep = stability_test(np.array([1, 0], dtype=complex), SIGMA_Z, EnsembleSpec("zero-noise", 0.0, SIGMA_Z),
                         TimeGrid(0.5, 4), 10, 0)
    # <0|K^dag|0> = exp(-i * 0.5)
    np.testing.assert_allclose(rep.phase_estimates, -0.5, atol=1e-12)


def test_stability_rejects_bad_inputs():
    with pytest.raises(PreconditionError):
        stability_test([0, 0], SIGMA_Z, dephasing(1.0), TimeGrid(1.0, 2), 10, 0)
    with pytest.raises(ConfigError):
        stability_test(PLUS, SIGMA_Z, dephasing(1.0), TimeGrid(1.0, 2), 1, 0)


def test_born_examples():
    np.testing.assert_allclose(born_distribution(np.full((2, 2), 0.5), Z), [0.5, 0.5])
    np.testing.assert_allclose(born_distribution(np.diag([1.0, 0.0]), Z), [0.0, 1.0])
    # ascending eigenvalue order: -1 first
    np.testing.assert_allclose(born_distribution(np.diag([0.25, 0.75]), Z), [0.75, 0.25])


def test_born_rejects_mismatched_dimension():
    with pytest.raises(DimensionError):
        born_distribution(np.eye(3) / 3, Z)


def test_metrics_examples():
    plus = np.full((2, 2), 0.5)
    m = decoherence_metrics(plus, plus, Z)
    assert m.offdiagonal_norm == pytest.approx(0.5)
    assert m.purity == pytest.approx(1.0)
    assert m.born_deviation == 0 and m.diagonal_drift == 0
    mixed = decoherence_metrics(np.eye(2) / 2, plus, Z)
    assert mixed.offdiagonal_norm == 0
    assert mixed.purity == pytest.approx(0.5)
    assert mixed.born_deviation == pytest.approx(0.0, abs=1e-15)


def test_metrics_ignore_coherence_inside_a_degenerate_block():
    decomp = spectral_decompose(np.diag([1.0, 1.0, 2.0]))
    rho = np.zeros((3, 3))
    rho[:2, :2] = 0.5
    assert decoherence_metrics(rho, rho, decomp).offdiagonal_norm == 0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(2, 6))
def test_dephasing_preserves_born_and_lowers_purity(seed, dim):
    rng = np.random.default_rng(seed)
    decomp = spectral_decompose(random_hermitian(rng, dim))
    rho = random_density(rng, dim)
    out = dephased(rho, decomp)
    np.testing.assert_allclose(born_distribution(out, decomp), born_distribution(rho, decomp), atol=1e-12)
    m = decoherence_metrics(out, rho, decomp)
    assert m.offdiagonal_norm <= 1e-12
    assert m.purity <= decoherence_metrics(rho, rho, decomp).purity + 1e-12


def test_decay_curve_tracks_exponential():
    curve = decay_curve(np.full((2, 2), 0.5), dephasing(1.0), [0.5, 1.0, 2.0], 4000, 17, slices=100)
    assert curve.within(3.0).all()
    np.testing.assert_allclose(curve.analytic, 0.5 * np.exp(-np.array([0.5, 1.0, 2.0])))
    assert curve.slices == (100, 100, 100)


def test_decay_curve_small_tau_keeps_coherence():
    curve = decay_curve(np.full((2, 2), 0.5), dephasing(1.0), [1e-6], 200, 1, slices=5)
    assert curve.measured[0] == pytest.approx(0.5, abs=1e-3)


def test_decay_curve_slices_per_unit_time():
    curve = decay_curve(np.full((2, 2), 0.5), dephasing(0.5), [0.3, 1.2], 50, 1, slices_per_unit_time=10)
    assert curve.slices == (3, 12)


def test_decay_curve_rejects_noiseless_ensembles():
    with pytest.raises(ConfigError):
        decay_curve(np.full((2, 2), 0.5), dephasing(0.0), [1.0], 10, 0, slices=4)
    with pytest.raises(ConfigError):
        decay_curve(np.full((2, 2), 0.5), EnsembleSpec("zero-noise", 0.0, SIGMA_Z, measurement_basis=Z),
                    [1.0], 10, 0, slices=4)


def test_decay_curve_gue_has_no_analytic_column():
    spec = EnsembleSpec("gue-perturbed", 0.5, np.zeros((2, 2)), measurement_basis=Z)
    curve = decay_curve(np.full((2, 2), 0.5), spec, [0.5], 50, 0, slices=4)
    assert curve.analytic is None
    with pytest.raises(ConfigError):
        curve.within()


def test_reduced_operator_check_against_loop():
    a = np.diag([-3.0, -1.0, 1.0, 3.0])
    spec = EnsembleSpec("gue-perturbed", 1.0, np.zeros((4, 4)))
    grid = TimeGrid(0.5, 10)
    n = 300
    loop = sum(dress_operator(a, channel_from_trajectory(sample_trajectory(spec, grid, 5, l))) for l in range(n)) / n
    fast = ensemble_average_operator(a, spec, grid, n, 5)
    decomp = spectral_decompose(a)
    got = reduced_operator_check(fast, decomp)
    want_off = np.max(np.abs(loop[~np.eye(4, dtype=bool)]))
    want_drift = np.max(np.abs(np.diag(loop) - np.diag(a)))
    assert got[0] == pytest.approx(want_off, abs=1e-12)
    assert got[1] == pytest.approx(want_drift, abs=1e-12)


def test_reduced_operator_check_exact_on_observable():
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert reduced_operator_check(a, spectral_decompose(a)) == pytest.approx((0.0, 0.0), abs=1e-12)
    assert reduced_operator_check(SIGMA_Z, spectral_decompose(SIGMA_X))[0] == pytest.approx(1.0)


def test_eigenprojector_weights_uniform_under_gue():
    a = np.diag([-3.0, -1.0, 1.0, 3.0])
    decomp = spectral_decompose(a)
    np.testing.assert_allclose(eigenprojector_weights(a, decomp), 1.0)
    spec = EnsembleSpec("gue-perturbed", 1.0, np.zeros((4, 4)))
    s = ensemble_average_operator(a, spec, TimeGrid(0.5, 10), 4000, 21)
    w = eigenprojector_weights(s, decomp)
    assert np.all(w < 1)
    # no eigenprojector singled out: the weights agree to Monte Carlo accuracy
    assert np.ptp(w) < 0.1
