"""Conditional expectations on the joint system-observer space.

The joint space is ordered system-first, ``S (x) O``. An observable written
``I_o (x) A_s`` (acting on the system only) is therefore represented as
``kron(A_s, I_o)``, and the observer projector ``I_s (x) |psi_o><psi_o|`` as
``kron(I_s, |psi_o><psi_o|)``; see :func:`lift_system_operator`.

Joint evolution uses ``rho_tau = exp(-iH tau) rho_0 exp(iH tau)`` and the
observer reference moves as ``psi_o(tau) = exp(-i H_o tau) psi_o(0)``. With
these signs the conditional expectation equals the expectation of the
dressed operator ``exp(i H_s tau) A_s exp(-i H_s tau)`` when ``H_I = 0``.
The opposite sign on the joint evolution is available as
``convention="inverted"`` and breaks that agreement for generic inputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import engine
from .errors import ConfigError, DimensionError, NullConditioningError
from .linalg import (
    check_density,
    check_hermitian,
    check_state,
    dagger,
    matrix_exponential,
    partial_trace,
    projector_from_state,
)

NULL_CONDITIONING_TOL = 1e-12
CONVENTIONS = ("schrodinger", "inverted")


@dataclass(frozen=True)
class JointSystemConfig:
    h_s0: np.ndarray
    h_o0: np.ndarray
    h_i: np.ndarray | None = None
    h_total: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        h_s = check_hermitian(self.h_s0, "H_s0")
        h_o = check_hermitian(self.h_o0, "H_o0")
        d = h_s.shape[0] * h_o.shape[0]
        h_i = np.zeros((d, d), dtype=complex) if self.h_i is None else check_hermitian(self.h_i, "H_I")
        if h_i.shape != (d, d):
            raise DimensionError(f"H_I must be {d}x{d}, got {h_i.shape}")
        object.__setattr__(self, "h_s0", h_s)
        object.__setattr__(self, "h_o0", h_o)
        object.__setattr__(self, "h_i", h_i)
        total = np.kron(h_s, np.eye(h_o.shape[0])) + np.kron(np.eye(h_s.shape[0]), h_o) + h_i
        object.__setattr__(self, "h_total", total)

    @property
    def dims(self) -> tuple[int, int]:
        return self.h_s0.shape[0], self.h_o0.shape[0]

    @property
    def interacting(self) -> bool:
        return bool(np.any(self.h_i))


@dataclass(frozen=True)
class ConditionalExpectationResult:
    value: float
    numerator: float
    denominator: float


def lift_system_operator(a_s, d_o: int) -> np.ndarray:
    """System observable on ``S (x) O``."""
    return np.kron(check_hermitian(a_s, "A_s"), np.eye(d_o))


def observer_projector(psi_o, d_s: int) -> np.ndarray:
    return np.kron(np.eye(d_s), projector_from_state(psi_o))


def _sign(convention: str) -> float:
    if convention not in CONVENTIONS:
        raise ConfigError(f"unknown convention {convention!r}; expected one of {CONVENTIONS}")
    return -1.0 if convention == "schrodinger" else 1.0


def joint_evolve(rho0, config: JointSystemConfig, tau: float, convention: str = "schrodinger") -> np.ndarray:
    rho0 = check_density(rho0, "rho0")
    if rho0.shape != config.h_total.shape:
        raise DimensionError(f"rho0 {rho0.shape} vs joint Hamiltonian {config.h_total.shape}")
    u = matrix_exponential(config.h_total, _sign(convention) * tau)
    return u @ rho0 @ dagger(u)


def evolve_observer_state(psi_o0, h_o, tau: float) -> np.ndarray:
    return matrix_exponential(h_o, -tau) @ check_state(psi_o0, "psi_o0")


def conditional_expectation(a_s, rho_tau, psi_o_tau, dims: tuple[int, int]) -> ConditionalExpectationResult:
    """``tr[A P rho] / tr[P rho]`` with ``P`` projecting the observer onto ``psi_o``."""
    d_s, d_o = dims
    a_s = check_hermitian(a_s, "A_s")
    psi = check_state(psi_o_tau, "psi_o")
    rho = check_density(rho_tau, "rho_tau")
    if a_s.shape[0] != d_s or psi.shape[0] != d_o or rho.shape[0] != d_s * d_o:
        raise DimensionError(f"inconsistent dims {dims} for A_s {a_s.shape}, psi_o {psi.shape}, rho {rho.shape}")
    p = observer_projector(psi, d_s)
    den = float(np.real(np.trace(p @ rho)))
    if den <= NULL_CONDITIONING_TOL:
        raise NullConditioningError(f"conditioning event has probability {den:.3g}")
    num = float(np.real(np.trace(lift_system_operator(a_s, d_o) @ p @ rho)))
    return ConditionalExpectationResult(num / den, num, den)


def relative_density(rho0, psi_o0, dims: tuple[int, int]) -> np.ndarray:
    """``tr_o[P_0 rho_0] / tr[P_0 rho_0]``: the system state relative to the observer."""
    d_s, d_o = dims
    rho0 = check_density(rho0, "rho0")
    psi = check_state(psi_o0, "psi_o0")
    if rho0.shape[0] != d_s * d_o or psi.shape[0] != d_o:
        raise DimensionError(f"inconsistent dims {dims}")
    p = observer_projector(psi, d_s)
    den = float(np.real(np.trace(p @ rho0)))
    if den <= NULL_CONDITIONING_TOL:
        raise NullConditioningError(f"observer state has overlap {den:.3g} with rho0")
    reduced = partial_trace(p @ rho0 @ p, (d_s, d_o), keep="left") / den
    return 0.5 * (reduced + dagger(reduced))


def pw_heisenberg_expectation(a_s, h_s, rho_s0, tau: float) -> float:
    """``tr[exp(i H_s tau) A_s exp(-i H_s tau) rho_s0]``."""
    a_s = check_hermitian(a_s, "A_s")
    rho = check_density(rho_s0, "rho_s0")
    u = matrix_exponential(h_s, tau)
    if u.shape != a_s.shape or rho.shape != a_s.shape:
        raise DimensionError("A_s, H_s and rho_s0 must share one dimension")
    return float(np.real(np.trace(u @ a_s @ dagger(u) @ rho)))


def smi_zero_noise_expectation(a_s, h_s, rho_s0, tau: float, slices: int = 8) -> float:
    """Expectation of ``A_s`` dressed by the single zero-noise trajectory."""
    rho = check_density(rho_s0, "rho_s0")
    if tau == 0:
        return float(np.real(np.trace(check_hermitian(a_s, "A_s") @ rho)))
    spec = engine.EnsembleSpec("zero-noise", 0.0, h_s)
    traj = engine.sample_trajectory(spec, engine.TimeGrid(tau, slices), 0, 0)
    dressed = engine.dress_operator(a_s, engine.channel_from_trajectory(traj))
    return float(np.real(np.trace(dressed @ rho)))


def limit_consistency_check(
    config: JointSystemConfig,
    a_s,
    rho_s0,
    psi_o0,
    tau: float,
    rho_o0=None,
    slices: int = 8,
    convention: str = "schrodinger",
) -> float:
    """Largest pairwise gap between the three non-interacting expectation routes.

    Routes: the joint conditional expectation on ``rho_s0 (x) rho_o0``; the
    Heisenberg reference on the relative state; the zero-noise dressed
    operator on the relative state.
    """
    if config.interacting:
        raise ConfigError("limit consistency is only defined for H_I = 0")
    d_s, d_o = config.dims
    rho_s0 = check_density(rho_s0, "rho_s0")
    rho_o0 = projector_from_state(psi_o0) if rho_o0 is None else check_density(rho_o0, "rho_o0")
    rho0 = np.kron(rho_s0, rho_o0)
    rel = relative_density(rho0, psi_o0, config.dims)
    joint = conditional_expectation(
        a_s,
        joint_evolve(rho0, config, tau, convention),
        evolve_observer_state(psi_o0, config.h_o0, tau),
        (d_s, d_o),
    ).value
    heis = pw_heisenberg_expectation(a_s, config.h_s0, rel, tau)
    smi = smi_zero_noise_expectation(a_s, config.h_s0, rel, tau, slices)
    return max(abs(joint - heis), abs(joint - smi), abs(heis - smi))


def commutation_identity_gap(a_s, h_o, psi_o0, rho, tau: float) -> float:
    """Check that an observer-only rotation can be moved from ``P`` onto ``rho``.

    With ``U = I_s (x) exp(-i H_o tau)`` and ``A = A_s (x) I_o``:
    ``tr[A U P_0 U^dag rho] == tr[A P_0 U^dag rho U]`` because ``[A, U] = 0``.
    """
    a_s = check_hermitian(a_s, "A_s")
    d_s, d_o = a_s.shape[0], np.asarray(h_o).shape[0]
    rho = check_density(rho, "rho")
    if rho.shape[0] != d_s * d_o:
        raise DimensionError("rho does not live on S (x) O")
    u = np.kron(np.eye(d_s), matrix_exponential(h_o, -tau))
    a = lift_system_operator(a_s, d_o)
    p0 = observer_projector(psi_o0, d_s)
    lhs = np.trace(a @ u @ p0 @ dagger(u) @ rho)
    rhs = np.trace(a @ p0 @ dagger(u) @ rho @ u)
    return float(abs(lhs - rhs))
