"""Stability protocol, decoherence metrics and decay curves.

All basis-dependent quantities are evaluated in the eigenbasis of the
measured observable. "Off-diagonal" means coupling two *different*
eigenspaces; coherences inside a degenerate eigenspace are not counted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import EnsembleSpec, EnsembleSummary, TimeGrid, map_trajectories, summarize
from .errors import ConfigError, DimensionError, PreconditionError
from .linalg import (
    SpectralDecomposition,
    check_density,
    check_hermitian,
    check_state,
    dagger,
    purity,
)

STABILITY_THRESHOLD = 1e-16
ADIABATIC_GATE = 0.99


@dataclass(frozen=True)
class StabilityReport:
    """Per-trajectory outcome of the send-measure-return protocol.

    ``expectations[l]`` is ``<psi| K_l P_psi A_s K_l^dag |psi>``: the state is
    sent through ``K_l^dag``, hit by ``A_s``, and the amplitude that comes back
    onto the original ray through ``K_l`` is recorded. An eigenstate returns
    ``a_i`` on every trajectory; a superposition returns a trajectory-dependent
    amplitude. ``dressed_expectations`` holds the plain ``<psi|K_l A_s K_l^dag|psi>``.
    """

    expectations: np.ndarray
    return_fidelity: np.ndarray
    phase_estimates: np.ndarray
    dressed_expectations: np.ndarray
    expectation_mean: complex
    expectation_variance: float
    standard_error: float
    threshold: float

    @property
    def is_stable(self) -> bool:
        return self.expectation_variance <= self.threshold


@dataclass(frozen=True)
class DecoherenceMetrics:
    offdiagonal_norm: float
    purity: float
    born_deviation: float
    diagonal_drift: float


@dataclass(frozen=True)
class DecayCurve:
    taus: np.ndarray
    measured: np.ndarray
    analytic: np.ndarray | None
    mc_errors: np.ndarray
    slices: tuple[int, ...]

    def within(self, n_sigma: float = 3.0) -> np.ndarray:
        if self.analytic is None:
            raise ConfigError("no analytic column for this ensemble")
        return np.abs(self.measured - self.analytic) <= n_sigma * self.mc_errors


def _block_labels(decomp: SpectralDecomposition) -> np.ndarray:
    return np.repeat(np.arange(len(decomp)), decomp.multiplicities)


def _in_eigenbasis(m: np.ndarray, decomp: SpectralDecomposition) -> np.ndarray:
    b = decomp.eigenbasis
    return dagger(b) @ m @ b


def _offblock_mask(decomp: SpectralDecomposition) -> np.ndarray:
    labels = _block_labels(decomp)
    return labels[:, None] != labels[None, :]


def stability_test(
    psi,
    a_s,
    spec: EnsembleSpec,
    grid: TimeGrid,
    n: int,
    master_seed: int,
    threshold: float = STABILITY_THRESHOLD,
    ordering: str = "time-ordered",
    workers: int | None = None,
) -> StabilityReport:
    psi = check_state(psi, "psi")
    a_s = check_hermitian(a_s, "A_s")
    if n < 2:
        raise ConfigError(f"stability test needs N >= 2, got {n}")
    if psi.shape[0] != a_s.shape[0] or a_s.shape[0] != spec.dim:
        raise DimensionError("psi, A_s and the ensemble must share one dimension")

    def per_batch(k: np.ndarray) -> np.ndarray:
        sent = dagger(k) @ psi  # K^dag |psi>, shape (B, d)
        overlap = sent @ psi.conj()  # <psi|K^dag|psi>
        hit = sent @ a_s.T  # A_s K^dag |psi>
        amp = (hit @ psi.conj()) * overlap.conj()
        dressed = np.real(np.einsum("bi,bi->b", sent.conj(), hit))
        return np.stack([amp, overlap, dressed.astype(complex)], axis=1)

    out = map_trajectories(spec, grid, n, master_seed, per_batch, ordering, workers)
    amp, overlap, dressed = out[:, 0], out[:, 1], out[:, 2].real
    summary = summarize(amp)
    a_psi = float(np.linalg.norm(a_s @ psi))
    fidelity = np.abs(amp) / a_psi if a_psi > 0 else np.abs(amp)
    phases = np.where(np.abs(overlap) > ADIABATIC_GATE, np.angle(overlap), np.nan)
    return StabilityReport(
        expectations=amp,
        return_fidelity=fidelity,
        phase_estimates=phases,
        dressed_expectations=dressed,
        expectation_mean=complex(summary.mean),
        expectation_variance=float(summary.variance),
        standard_error=float(summary.standard_error),
        threshold=threshold,
    )


def born_distribution(rho, decomp: SpectralDecomposition) -> np.ndarray:
    """Outcome probabilities ``tr(P_i rho)`` in ascending eigenvalue order."""
    rho = check_density(rho, "rho")
    if rho.shape[0] != decomp.dim:
        raise DimensionError(f"rho has dim {rho.shape[0]}, decomposition has dim {decomp.dim}")
    p = np.array([np.real(np.trace(proj @ rho)) for proj in decomp.projectors])
    if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-12:
        raise PreconditionError(f"invalid outcome distribution {p}")
    return p


def decoherence_metrics(rho, rho0, decomp: SpectralDecomposition) -> DecoherenceMetrics:
    rho = check_density(rho, "rho")
    rho0 = check_density(rho0, "rho0")
    if rho.shape != rho0.shape or rho.shape[0] != decomp.dim:
        raise DimensionError("rho, rho0 and the decomposition must share one dimension")
    r = _in_eigenbasis(rho, decomp)
    r0 = _in_eigenbasis(rho0, decomp)
    off = np.abs(r[_offblock_mask(decomp)])
    return DecoherenceMetrics(
        offdiagonal_norm=float(off.max()) if off.size else 0.0,
        purity=purity(rho),
        born_deviation=float(np.max(np.abs(born_distribution(rho, decomp) - born_distribution(rho0, decomp)))),
        diagonal_drift=float(np.max(np.abs(np.diagonal(r) - np.diagonal(r0)))),
    )


def dephased(rho, decomp: SpectralDecomposition) -> np.ndarray:
    """Block-diagonal part of ``rho``: ``sum_i P_i rho P_i``."""
    return sum(p @ rho @ p for p in decomp.projectors)


def decay_curve(
    rho0,
    spec: EnsembleSpec,
    taus,
    n: int,
    master_seed: int,
    slices_per_unit_time: int | None = None,
    slices: int | None = None,
    decomp: SpectralDecomposition | None = None,
    ordering: str = "time-ordered",
    workers: int | None = None,
) -> DecayCurve:
    """Largest inter-eigenspace coherence of the mean state versus tau.

    Each tau gets its own grid: ``slices`` fixed, or
    ``ceil(tau * slices_per_unit_time)``. For the dephasing ensemble the
    analytic column is ``|rho0_ij| exp(-lambda**2 tau)`` at the measured entry.
    """
    if spec.kind == "zero-noise" or spec.strength == 0:
        raise ConfigError("decay curve needs a noisy ensemble (lambda > 0)")
    rho0 = check_density(rho0, "rho0")
    taus = np.asarray(taus, dtype=float)
    if taus.ndim != 1 or taus.size == 0 or np.any(np.diff(taus) <= 0) or np.any(taus <= 0):
        raise ConfigError("taus must be a non-empty, strictly increasing list of positive values")
    if (slices is None) == (slices_per_unit_time is None):
        raise ConfigError("give exactly one of slices or slices_per_unit_time")
    if decomp is None:
        decomp = spec.measurement_basis
    if decomp is None:
        raise ConfigError("decay curve needs a measurement basis")
    b = decomp.eigenbasis
    r0 = dagger(b) @ rho0 @ b
    mask = _offblock_mask(decomp)
    if not mask.any():
        raise ConfigError("observable has a single eigenspace; nothing can decohere")

    measured, errors, analytic, used = [], [], [], []
    for tau in taus:
        m = slices if slices is not None else max(1, math.ceil(tau * slices_per_unit_time))
        grid = TimeGrid(float(tau), int(m))
        samples = map_trajectories(
            spec, grid, n, master_seed, lambda k: dagger(b) @ dagger(k) @ rho0 @ k @ b, ordering, workers
        )
        s = summarize(samples)
        mags = np.where(mask, np.abs(s.mean), -1.0)
        i, j = np.unravel_index(np.argmax(mags), mags.shape)
        measured.append(float(mags[i, j]))
        errors.append(float(s.standard_error[i, j]))
        analytic.append(float(abs(r0[i, j]) * math.exp(-spec.strength**2 * tau)))
        used.append(int(m))
    return DecayCurve(
        taus=taus,
        measured=np.array(measured),
        analytic=np.array(analytic) if spec.kind == "dephasing" else None,
        mc_errors=np.array(errors),
        slices=tuple(used),
    )


def _mean_of(x):
    return x.mean if isinstance(x, EnsembleSummary) else x


def reduced_operator_check(mean_operator, decomp: SpectralDecomposition) -> tuple[float, float]:
    """How far a (mean) operator is from ``sum_i a_i P_i``.

    Returns ``(offdiag_norm, eigenvalue_drift)``: the largest entry coupling
    distinct eigenspaces, and the largest deviation of a diagonal block from
    ``a_i * I``.
    """
    m = np.asarray(_mean_of(mean_operator), dtype=complex)
    if m.shape != (decomp.dim, decomp.dim):
        raise DimensionError(f"operator shape {m.shape} vs decomposition dim {decomp.dim}")
    r = _in_eigenbasis(m, decomp)
    mask = _offblock_mask(decomp)
    labels = _block_labels(decomp)
    target = np.diag(decomp.eigenvalues[labels]).astype(complex)
    off = np.abs(r[mask])
    drift = np.abs((r - target)[~mask])
    return (float(off.max()) if off.size else 0.0, float(drift.max()))


def eigenprojector_weights(mean_operator, decomp: SpectralDecomposition) -> np.ndarray:
    """``tr(P_i M) / (a_i * rank_i)`` for each eigenprojector with ``a_i != 0``.

    For ``M = A_s`` every weight is 1. A mean dressed operator that favours
    no eigenprojector shrinks all weights by the same factor.
    """
    m = np.asarray(_mean_of(mean_operator))
    w = []
    for a, p, r in zip(decomp.eigenvalues, decomp.projectors, decomp.multiplicities):
        if a != 0:
            w.append(np.real(np.trace(p @ m)) / (a * r))
    return np.array(w)
