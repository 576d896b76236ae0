"""Einselection baseline: envariant tripartite states and coarse-graining.

The state ``sum_j |s_{k(j)}> |O_j> |e_j> / sqrt(M)`` is stored by its
multiplicities ``m_k``; fine index ``j`` (0-based) belongs to coarse block
``k(j)`` with contiguous blocks. Probabilities are exact ``Fraction``s.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DimensionError, PreconditionError, ResolutionError


@dataclass(frozen=True)
class EnvarianceState:
    multiplicities: tuple[int, ...]
    dims: tuple[int, int, int]

    def __post_init__(self):
        m = tuple(int(x) for x in self.multiplicities)
        if not m or any(x < 1 for x in m):
            raise PreconditionError(f"multiplicities must be positive integers, got {self.multiplicities}")
        object.__setattr__(self, "multiplicities", m)
        d_s, d_o, d_e = (int(d) for d in self.dims)
        if d_s < len(m) or d_o < self.M or d_e < self.M:
            raise DimensionError(
                f"dims {self.dims} too small for {len(m)} coarse outcomes and M = {self.M}"
            )
        object.__setattr__(self, "dims", (d_s, d_o, d_e))

    @property
    def M(self) -> int:
        return sum(self.multiplicities)

    @property
    def n_coarse(self) -> int:
        return len(self.multiplicities)

    @property
    def coarse_map(self) -> np.ndarray:
        """``coarse_map[j] = k(j)`` for every fine index."""
        return np.repeat(np.arange(self.n_coarse), self.multiplicities)

    @property
    def amplitude_squared(self) -> Fraction:
        return Fraction(1, self.M)

    def state_vector(self) -> np.ndarray:
        return _vector(self, self.coarse_map, np.arange(self.M), np.arange(self.M))

    def outcome_probabilities(self) -> tuple[Fraction, ...]:
        """Exact ``p(s_{k(j)}, O_j)`` for each fine index ``j``."""
        return (self.amplitude_squared,) * self.M

    def system_density(self) -> np.ndarray:
        """Reduced state on S (the environment and apparatus traced out)."""
        d_s, d_o, d_e = self.dims
        psi = self.state_vector().reshape(d_s, d_o * d_e)
        return psi @ psi.conj().T


def _vector(state: EnvarianceState, s_labels, o_labels, e_labels) -> np.ndarray:
    d_s, d_o, d_e = state.dims
    psi = np.zeros((d_s, d_o, d_e))
    psi[s_labels, o_labels, e_labels] = 1.0 / np.sqrt(state.M)
    return psi.reshape(-1)


@dataclass(frozen=True)
class RationalApproximation:
    target: tuple[float, ...]
    numerators: tuple[int, ...]
    denominator: int
    max_denominator: int
    achieved_error: float

    @property
    def probabilities(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(m, self.denominator) for m in self.numerators)


def build_equal_state(M: int, dims: Sequence[int] | None = None) -> EnvarianceState:
    """Every one of the ``M`` branches is its own outcome, each with weight ``1/M``."""
    if M < 1:
        raise PreconditionError(f"M must be >= 1, got {M}")
    return EnvarianceState((1,) * M, tuple(dims) if dims is not None else (M, M, M))


def build_coarse_state(approx, dims: Sequence[int] | None = None) -> EnvarianceState:
    m = approx.numerators if isinstance(approx, RationalApproximation) else tuple(approx)
    if any(int(x) < 1 for x in m):
        raise PreconditionError(f"coarse state needs positive multiplicities, got {m}")
    M = sum(int(x) for x in m)
    return EnvarianceState(tuple(m), tuple(dims) if dims is not None else (len(m), M, M))


def coarse_probabilities(state: EnvarianceState) -> tuple[Fraction, ...]:
    return tuple(Fraction(m, state.M) for m in state.multiplicities)


def _best_allocation(targets: list[Fraction], M: int) -> list[int] | None:
    # min-max |m_k - M t_k| subject to sum m_k = M, m_k >= 1 iff t_k > 0
    scaled = [M * t for t in targets]
    m = [0 if t == 0 else max(1, int(x)) for t, x in zip(targets, scaled)]
    live = [k for k, t in enumerate(targets) if t > 0]
    if len(live) > M:
        return None
    deficit = M - sum(m)
    while deficit > 0:
        k = max(live, key=lambda i: (scaled[i] - m[i], -i))
        m[k] += 1
        deficit -= 1
    while deficit < 0:
        k = max((i for i in live if m[i] > 1), key=lambda i: (m[i] - scaled[i], -i))
        m[k] -= 1
        deficit += 1
    return m


def fine_grain(alpha_sq: Sequence[float], max_denominator: int) -> RationalApproximation:
    """Best common-denominator approximation ``m_k / M`` of a distribution.

    Minimizes ``max_k |m_k/M - alpha_sq_k|`` over ``M <= max_denominator``;
    ties go to the smaller ``M``. Zero targets get ``m_k = 0``, every other
    target at least one branch.
    """
    a = [float(x) for x in alpha_sq]
    if not a or any(not np.isfinite(x) or x < 0 for x in a):
        raise PreconditionError(f"alpha_sq must be non-negative and finite, got {alpha_sq}")
    if abs(sum(a) - 1.0) > 1e-12:
        raise PreconditionError(f"alpha_sq must sum to 1, got {sum(a)!r}")
    if max_denominator < 1:
        raise PreconditionError(f"max_denominator must be >= 1, got {max_denominator}")
    targets = [Fraction(x) for x in a]
    best, best_err, best_M = None, None, None
    for M in range(1, max_denominator + 1):
        m = _best_allocation(targets, M)
        if m is None:
            continue
        err = max(abs(Fraction(mk, M) - t) for mk, t in zip(m, targets))
        if best_err is None or err < best_err:
            best, best_err, best_M = m, err, M
            if err == 0:
                break
    if best is None:
        raise ResolutionError(
            f"{sum(1 for t in targets if t > 0)} non-zero outcomes cannot be resolved "
            f"with denominator <= {max_denominator}"
        )
    return RationalApproximation(tuple(a), tuple(best), best_M, int(max_denominator), float(best_err))


def apply_fine_permutation(
    state: EnvarianceState,
    perm: Sequence[int],
    registers: str = "oe",
    system_perm: Sequence[int] | None = None,
) -> np.ndarray:
    """State vector after relabelling fine indices ``j -> perm[j]``.

    ``registers`` selects which of the apparatus (``o``) and environment
    (``e``) labels move; ``system_perm`` optionally relabels ``|s_k>``.
    """
    perm = _check_perm(perm, state.M)
    fine = np.arange(state.M)
    o = perm if "o" in registers else fine
    e = perm if "e" in registers else fine
    s = state.coarse_map
    if system_perm is not None:
        s = np.asarray(system_perm)[s]
    return _vector(state, s, o, e)


def _check_perm(perm, M: int) -> np.ndarray:
    perm = np.asarray(perm, dtype=int)
    if perm.shape != (M,) or sorted(perm.tolist()) != list(range(M)):
        raise PreconditionError(f"not a permutation of the {M} fine indices: {list(perm)}")
    return perm


def induced_system_permutation(state: EnvarianceState, perm: Sequence[int]) -> np.ndarray | None:
    """Coarse relabelling ``sigma`` with ``sigma(k(j)) = k(perm[j])``, if one exists."""
    perm = _check_perm(perm, state.M)
    k = state.coarse_map
    sigma = -np.ones(state.dims[0], dtype=int)
    for j in range(state.M):
        src, dst = k[j], k[perm[j]]
        if sigma[src] not in (-1, dst):
            return None
        sigma[src] = dst
    # labels beyond the coarse outcomes stay put
    unused = sigma < 0
    sigma[unused] = np.flatnonzero(unused)
    if len(set(sigma.tolist())) != len(sigma):
        return None
    return sigma


def envariance_swap_check(state: EnvarianceState, perm: Sequence[int], relabel_system: bool = True) -> bool:
    """Is the global state entry-identical after permuting the fine labels?

    The permutation acts on the O and E labels; with ``relabel_system`` the
    S labels follow through the coarse map. A permutation that mixes coarse
    blocks of different sizes induces no relabelling and fails.
    """
    sigma = None
    if relabel_system:
        sigma = induced_system_permutation(state, perm)
        if sigma is None:
            return False
    moved = apply_fine_permutation(state, perm, "oe", sigma)
    return bool(np.array_equal(moved, state.state_vector()))
