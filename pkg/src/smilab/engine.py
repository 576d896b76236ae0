"""Stochastic trajectories of the system Hamiltonian and the dressing they induce.

A trajectory is a piecewise-constant sequence of Hermitian slices on a
:class:`TimeGrid`. Each trajectory ``l`` yields a unitary channel kernel
``K_l = exp(i H(t_M) dt) ... exp(i H(t_1) dt)`` (later slices to the left),
and the ensemble average over ``l`` approximates the stochastic matrix
integral.

Randomness: trajectory ``l`` owns a Philox stream keyed by
``(master_seed, l)``; its slices are drawn from that stream in slice order.
Trajectories are processed in fixed-size chunks whose composition does not
depend on the worker count, and every ensemble reduction runs over the full
per-trajectory array in index order. Results are therefore bit-identical for
any number of workers (``SMILAB_WORKERS`` overrides the default).
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, DimensionError, PreconditionError
from .linalg import (
    SpectralDecomposition,
    check_density,
    check_hermitian,
    check_square,
    commutator,
    dagger,
    expi_batch,
    max_abs,
)

KINDS = ("zero-noise", "dephasing", "gue-perturbed")
ORDERINGS = ("time-ordered", "naive-sum")
CHUNK_SIZE = 256
WORKERS_ENV = "SMILAB_WORKERS"
COMMUTE_TOL = 1e-10


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        if env:
            try:
                workers = int(env)
            except ValueError:
                raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
        else:
            workers = os.cpu_count() or 1
    if workers < 1:
        raise ConfigError(f"worker count must be >= 1, got {workers}")
    return workers


@dataclass(frozen=True)
class TimeGrid:
    tau: float
    slices: int

    def __post_init__(self):
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ConfigError(f"tau must be > 0, got {self.tau!r}")
        if int(self.slices) != self.slices or self.slices < 1:
            raise ConfigError(f"slices must be a positive integer, got {self.slices!r}")

    @property
    def dt(self) -> float:
        return self.tau / self.slices

    @property
    def times(self) -> np.ndarray:
        """Left endpoints ``t_m`` of the slices."""
        return np.arange(self.slices) * self.dt


@dataclass(frozen=True)
class EnsembleSpec:
    """Distribution over trajectories of the non-conserved system Hamiltonian.

    ``strength`` (lambda) has energy units. For ``dephasing`` the per-slice
    noise on each eigenprojector of the measured observable has standard
    deviation ``lambda / sqrt(dt)``, so the accumulated phase variance is
    ``lambda**2 * tau`` on any grid. For ``gue-perturbed`` each slice adds
    ``lambda * V_m`` with ``V_m`` from the GUE normalized to
    ``E ||V_m||_F**2 = dim``.
    """

    kind: str
    strength: float
    base_hamiltonian: np.ndarray
    total_hamiltonian: np.ndarray | None = None
    measurement_basis: SpectralDecomposition | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown ensemble kind {self.kind!r}; expected one of {KINDS}")
        if not (np.isfinite(self.strength) and self.strength >= 0):
            raise ConfigError(f"strength must satisfy lambda >= 0, got {self.strength!r}")
        if self.kind == "zero-noise" and self.strength != 0:
            raise ConfigError("zero-noise ensemble requires lambda = 0")
        base = check_hermitian(self.base_hamiltonian, "base_hamiltonian")
        object.__setattr__(self, "base_hamiltonian", base)
        if self.total_hamiltonian is not None:
            total = check_hermitian(self.total_hamiltonian, "total_hamiltonian")
            if total.shape != base.shape:
                raise DimensionError("total and base Hamiltonians differ in dimension")
            object.__setattr__(self, "total_hamiltonian", total)
        if self.kind == "dephasing":
            basis = self.measurement_basis
            if basis is None:
                raise ConfigError("dephasing ensemble requires a measurement_basis")
            if basis.dim != base.shape[0]:
                raise DimensionError("measurement basis and base Hamiltonian differ in dimension")
            for p in basis.projectors:
                if max_abs(commutator(base, p)) > COMMUTE_TOL:
                    raise ConfigError(
                        "dephasing ensemble requires the base Hamiltonian to commute "
                        "with every measurement projector"
                    )

    @property
    def dim(self) -> int:
        return self.base_hamiltonian.shape[0]


@dataclass(frozen=True)
class HamiltonianTrajectory:
    grid: TimeGrid
    slices: np.ndarray  # (M, d, d)
    index: int
    master_seed: int | None = None
    complement_of: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.slices.shape[-1]


@dataclass(frozen=True)
class ChannelOperator:
    K: np.ndarray
    index: int
    grid: TimeGrid
    ordering: str = "time-ordered"


@dataclass(frozen=True)
class EnsembleSummary:
    """Trajectory average of a matrix-valued quantity.

    ``variance`` is the entrywise unbiased sample variance ``E|x - mean|^2``;
    ``standard_error`` is ``sqrt(variance / N)`` and ``monte_carlo_error`` its
    maximum over entries.
    """

    n_trajectories: int
    mean: np.ndarray
    variance: np.ndarray
    standard_error: np.ndarray
    monte_carlo_error: float
    samples: np.ndarray | None = field(default=None, repr=False)

    @property
    def mean_operator(self) -> np.ndarray:
        return self.mean

    @property
    def mean_state(self) -> np.ndarray:
        return self.mean


def summarize(samples: np.ndarray, keep_samples: bool = False) -> EnsembleSummary:
    n = samples.shape[0]
    if n < 2:
        raise ConfigError(f"need N >= 2 trajectories, got {n}")
    mean = np.add.reduce(samples, axis=0) / n
    var = np.add.reduce(np.abs(samples - mean) ** 2, axis=0) / (n - 1)
    se = np.sqrt(var / n)
    return EnsembleSummary(
        n_trajectories=n,
        mean=mean,
        variance=var,
        standard_error=se,
        monte_carlo_error=float(np.max(se)),
        samples=samples if keep_samples else None,
    )


# -- sampling ----------------------------------------------------------------

def trajectory_rng(master_seed: int, index: int) -> np.random.Generator:
    if master_seed < 0 or index < 0:
        raise ConfigError("master_seed and trajectory index must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(master_seed), int(index)])))


def gue_matrices(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    """``count`` GUE matrices with ``E ||V||_F**2 = dim``."""
    g = rng.standard_normal((count, dim, dim)) + 1j * rng.standard_normal((count, dim, dim))
    return (g + dagger(g)) / (2.0 * np.sqrt(dim))


def _sample_slices(spec: EnsembleSpec, grid: TimeGrid, master_seed: int, index: int) -> np.ndarray:
    m, d = grid.slices, spec.dim
    base = np.broadcast_to(spec.base_hamiltonian, (m, d, d))
    if spec.kind == "zero-noise" or spec.strength == 0:
        return np.array(base)
    rng = trajectory_rng(master_seed, index)
    if spec.kind == "dephasing":
        projectors = np.stack(spec.measurement_basis.projectors)
        xi = rng.standard_normal((m, len(projectors))) * (spec.strength / np.sqrt(grid.dt))
        return base + np.einsum("mi,ijk->mjk", xi, projectors)
    return base + spec.strength * gue_matrices(rng, m, d)


def sample_trajectory(spec: EnsembleSpec, grid: TimeGrid, master_seed: int, index: int) -> HamiltonianTrajectory:
    """Draw trajectory ``index``; a pure function of its arguments."""
    if index < 0:
        raise ConfigError(f"trajectory index must be >= 0, got {index}")
    return HamiltonianTrajectory(grid, _sample_slices(spec, grid, master_seed, index), int(index), master_seed)


def complement_trajectory(traj: HamiltonianTrajectory, h_total) -> HamiltonianTrajectory:
    """Slice-wise ``H - H_s(t_m)``, i.e. the observer part of a fixed total energy."""
    h_total = check_hermitian(h_total, "H_total")
    if h_total.shape[-1] != traj.dim:
        raise DimensionError(f"H_total has dim {h_total.shape[-1]}, trajectory has dim {traj.dim}")
    if traj.complement_of is not None:
        parent, parent_total = traj.complement_of
        if np.array_equal(parent_total, h_total):
            return parent
    return HamiltonianTrajectory(
        traj.grid, h_total - traj.slices, traj.index, traj.master_seed, complement_of=(traj, h_total)
    )


# -- channels ----------------------------------------------------------------

def channel_batch(slices: np.ndarray, dt: float, ordering: str = "time-ordered") -> np.ndarray:
    """Kernels for a stack of trajectories, ``slices`` shaped (B, M, d, d)."""
    if ordering == "time-ordered":
        steps = expi_batch(slices, dt)
        k = steps[:, 0]
        for m in range(1, slices.shape[1]):
            k = steps[:, m] @ k
        return k
    if ordering == "naive-sum":
        return expi_batch(np.add.reduce(slices, axis=1), dt)
    raise ConfigError(f"unknown ordering {ordering!r}; expected one of {ORDERINGS}")


def channel_from_trajectory(traj: HamiltonianTrajectory, ordering: str = "time-ordered") -> ChannelOperator:
    k = channel_batch(traj.slices[None], traj.grid.dt, ordering)[0]
    return ChannelOperator(k, traj.index, traj.grid, ordering)


def _kernel(k) -> np.ndarray:
    return k.K if isinstance(k, ChannelOperator) else check_square(k, "K")


def dress_operator(a_s, k) -> np.ndarray:
    """``K A_s K^dag``: the operator seen through one trajectory."""
    a_s = check_hermitian(a_s, "A_s")
    kk = _kernel(k)
    if kk.shape != a_s.shape:
        raise DimensionError(f"A_s {a_s.shape} vs K {kk.shape}")
    out = kk @ a_s @ dagger(kk)
    return 0.5 * (out + dagger(out))


def dress_state(rho, k, direction: str = "forward") -> np.ndarray:
    """Schrodinger-picture dual of :func:`dress_operator`.

    ``forward`` gives ``K^dag rho K`` so that
    ``tr[dress_operator(A, K) rho] == tr[A dress_state(rho, K)]``.
    """
    rho = check_square(rho, "rho")
    kk = _kernel(k)
    if kk.shape != rho.shape:
        raise DimensionError(f"rho {rho.shape} vs K {kk.shape}")
    if direction == "forward":
        return dagger(kk) @ rho @ kk
    if direction == "reverse":
        return kk @ rho @ dagger(kk)
    raise PreconditionError(f"direction must be 'forward' or 'reverse', got {direction!r}")


# -- ensembles ---------------------------------------------------------------

def map_trajectories(
    spec: EnsembleSpec,
    grid: TimeGrid,
    n: int,
    master_seed: int,
    fn: Callable[[np.ndarray], np.ndarray],
    ordering: str = "time-ordered",
    workers: int | None = None,
) -> np.ndarray:
    """Apply ``fn`` to the kernels of trajectories ``0..n-1``; stack the results.

    ``fn`` receives a (B, d, d) stack of kernels and returns an array with
    leading axis B. Chunks are fixed at ``CHUNK_SIZE`` trajectories.
    """
    if n < 1:
        raise ConfigError(f"need at least one trajectory, got {n}")
    if ordering not in ORDERINGS:
        raise ConfigError(f"unknown ordering {ordering!r}; expected one of {ORDERINGS}")

    def run_chunk(start: int) -> np.ndarray:
        idx = range(start, min(start + CHUNK_SIZE, n))
        slices = np.stack([_sample_slices(spec, grid, master_seed, l) for l in idx])
        return fn(channel_batch(slices, grid.dt, ordering))

    starts = list(range(0, n, CHUNK_SIZE))
    nworkers = min(resolve_workers(workers), len(starts))
    if nworkers == 1:
        parts = [run_chunk(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            parts = list(pool.map(run_chunk, starts))
    return np.concatenate(parts, axis=0)


def _require_n(n: int):
    if n < 2:
        raise ConfigError(f"ensemble averages need N >= 2, got {n}")


def ensemble_average_operator(
    a_s,
    spec: EnsembleSpec,
    grid: TimeGrid,
    n: int,
    master_seed: int,
    ordering: str = "time-ordered",
    workers: int | None = None,
    keep_samples: bool = False,
) -> EnsembleSummary:
    """``(1/N) sum_l K_l A_s K_l^dag`` with per-entry Monte Carlo errors."""
    _require_n(n)
    a_s = check_hermitian(a_s, "A_s")
    if a_s.shape[0] != spec.dim:
        raise DimensionError(f"A_s has dim {a_s.shape[0]}, ensemble has dim {spec.dim}")
    samples = map_trajectories(spec, grid, n, master_seed, lambda k: k @ a_s @ dagger(k), ordering, workers)
    return summarize(samples, keep_samples)


def ensemble_average_state(
    rho0,
    spec: EnsembleSpec,
    grid: TimeGrid,
    n: int,
    master_seed: int,
    ordering: str = "time-ordered",
    workers: int | None = None,
    keep_samples: bool = False,
) -> EnsembleSummary:
    """``(1/N) sum_l K_l^dag rho0 K_l``: a mixture of unitary conjugations."""
    _require_n(n)
    rho0 = check_density(rho0, "rho0")
    if rho0.shape[0] != spec.dim:
        raise DimensionError(f"rho0 has dim {rho0.shape[0]}, ensemble has dim {spec.dim}")
    samples = map_trajectories(spec, grid, n, master_seed, lambda k: dagger(k) @ rho0 @ k, ordering, workers)
    return summarize(samples, keep_samples)
