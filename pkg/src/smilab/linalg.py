"""Dense complex linear algebra for small quantum systems.

Operators, states and density matrices are plain ``numpy`` arrays. The
``check_*`` helpers validate the algebraic invariants each kind of object
must satisfy and return a ``complex128`` copy-free view where possible.

Tensor products put the left factor on the slow index, so for a joint
system-observer space the system is always the first factor.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericalError, PreconditionError

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
NORM_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-10
DEGENERACY_TOL = 1e-9

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


def max_abs(a) -> float:
    """Max-entry norm; 0.0 for empty arrays."""
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def check_matrix(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
        raise DimensionError(f"{name} must be a non-empty 2-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise PreconditionError(f"{name} has non-finite entries")
    return a


def check_square(a, name: str = "matrix") -> np.ndarray:
    a = check_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    return a


def is_hermitian(a, atol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and max_abs(a - dagger(a)) <= atol


def check_hermitian(a, name: str = "operator", atol: float = HERMITIAN_TOL) -> np.ndarray:
    a = check_square(a, name)
    err = max_abs(a - dagger(a))
    if err > atol:
        raise PreconditionError(f"{name} is not Hermitian (max |A - A^dag| = {err:.3g} > {atol:g})")
    return a


def check_unitary(u, name: str = "unitary", atol: float = UNITARY_TOL) -> np.ndarray:
    u = check_square(u, name)
    err = max_abs(dagger(u) @ u - np.eye(u.shape[0]))
    if err > atol:
        raise PreconditionError(f"{name} is not unitary (max |U^dag U - I| = {err:.3g} > {atol:g})")
    return u


def check_state(psi, name: str = "state", atol: float = NORM_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.size == 0:
        raise DimensionError(f"{name} must be a non-empty 1-d array, got shape {psi.shape}")
    if not np.all(np.isfinite(psi)):
        raise PreconditionError(f"{name} has non-finite amplitudes")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > atol:
        raise PreconditionError(f"{name} is not normalized (norm = {norm!r})")
    return psi


def check_density(rho, name: str = "density matrix") -> np.ndarray:
    rho = check_hermitian(rho, name)
    tr = np.trace(rho)
    if abs(tr - 1.0) > TRACE_TOL:
        raise PreconditionError(f"{name} has trace {tr!r}, expected 1")
    lowest = np.linalg.eigvalsh(rho)[0]
    if lowest < -POSITIVITY_TOL:
        raise PreconditionError(f"{name} is not positive (smallest eigenvalue {lowest:.3g})")
    return rho


def normalize(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise PreconditionError("cannot normalize the zero vector")
    return psi / norm


def _expi_hermitian(h: np.ndarray, scale: float) -> np.ndarray:
    # batched over leading axes; h assumed Hermitian
    if h.shape[-1] == 1 or _is_diagonal(h):
        d = np.exp(1j * scale * np.real(np.diagonal(h, axis1=-2, axis2=-1)))
        out = np.zeros(h.shape, dtype=complex)
        idx = np.arange(h.shape[-1])
        out[..., idx, idx] = d
        return out
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    return (v * np.exp(1j * scale * w)[..., None, :]) @ dagger(v)


def _is_diagonal(h: np.ndarray) -> bool:
    d = h.shape[-1]
    off = h * (1 - np.eye(d))
    return not np.any(off)


def expi_batch(h: np.ndarray, scale: float) -> np.ndarray:
    """``exp(i*scale*H)`` for a stack of Hermitian matrices of shape (..., d, d)."""
    return _expi_hermitian(np.asarray(h, dtype=complex), float(scale))


def matrix_exponential(h, scale: float = 1.0) -> np.ndarray:
    """Return the unitary ``exp(i * scale * H)`` via the spectral theorem.

    Diagonal inputs are exponentiated entrywise, so they are exact.
    """
    h = check_hermitian(h, "H")
    if not np.isfinite(scale):
        raise PreconditionError(f"scale must be finite, got {scale!r}")
    return _expi_hermitian(h, float(scale))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Distinct eigenvalues (ascending) with their orthogonal projectors."""

    eigenvalues: np.ndarray
    projectors: tuple[np.ndarray, ...]
    multiplicities: tuple[int, ...]

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    @property
    def eigenbasis(self) -> np.ndarray:
        """Unitary whose columns span the projectors in eigenvalue order."""
        cols = []
        for p in self.projectors:
            w, v = np.linalg.eigh(p)
            cols.append(v[:, w > 0.5])
        return np.hstack(cols)

    def reconstruct(self) -> np.ndarray:
        return sum(a * p for a, p in zip(self.eigenvalues, self.projectors))

    def __len__(self) -> int:
        return len(self.projectors)


def spectral_decompose(a, degeneracy_tol: float = DEGENERACY_TOL) -> SpectralDecomposition:
    """Group the eigenvectors of a Hermitian operator by (near-)equal eigenvalue.

    Eigenvalues whose consecutive gap is at most ``degeneracy_tol`` times the
    spectral range (floored at 1) share one projector; the reported value is
    the group mean.
    """
    a = check_hermitian(a, "A")
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    threshold = degeneracy_tol * max(float(w[-1] - w[0]), 1.0)
    groups: list[list[int]] = [[0]]
    for i in range(1, len(w)):
        if w[i] - w[i - 1] <= threshold:
            groups[-1].append(i)
        else:
            groups.append([i])
    values, projectors = [], []
    for g in groups:
        vg = v[:, g]
        p = vg @ dagger(vg)
        projectors.append(0.5 * (p + dagger(p)))
        values.append(float(np.mean(w[g])))
    return SpectralDecomposition(
        eigenvalues=np.array(values),
        projectors=tuple(projectors),
        multiplicities=tuple(len(g) for g in groups),
    )


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product, left factor on the slow index."""
    return np.kron(check_matrix(a, "A"), check_matrix(b, "B"))


def partial_trace(rho, dims: tuple[int, int], keep: str = "left") -> np.ndarray:
    """Trace out one factor of a bipartite operator on ``d_left x d_right``."""
    rho = check_square(rho, "rho")
    dl, dr = (int(d) for d in dims)
    if dl < 1 or dr < 1 or rho.shape[0] != dl * dr:
        raise DimensionError(f"rho has dim {rho.shape[0]}, incompatible with dims {dims}")
    r = rho.reshape(dl, dr, dl, dr)
    if keep == "left":
        return np.einsum("ajbj->ab", r)
    if keep == "right":
        return np.einsum("iaib->ab", r)
    raise PreconditionError(f"keep must be 'left' or 'right', got {keep!r}")


def projector_from_state(psi) -> np.ndarray:
    """Rank-one projector ``|psi><psi|``; global phases cancel."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or not np.any(psi):
        raise PreconditionError("projector needs a non-zero 1-d state vector")
    psi = check_state(psi)
    return np.outer(psi, psi.conj())


def conjugate(a, u) -> np.ndarray:
    """``U A U^dag``."""
    a = check_square(a, "A")
    u = check_square(u, "U")
    if a.shape != u.shape:
        raise DimensionError(f"dimension mismatch: A {a.shape} vs U {u.shape}")
    return u @ a @ dagger(u)


def commutator(a, b) -> np.ndarray:
    return a @ b - b @ a


def purity(rho) -> float:
    rho = np.asarray(rho)
    return float(np.real(np.trace(rho @ rho)))


# -- random instances (tests, fixtures, verification) ------------------------

def random_hermitian(rng: np.random.Generator, dim: int, scale: float = 1.0) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * 0.5 * (g + dagger(g))


def random_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    return normalize(rng.standard_normal(dim) + 1j * rng.standard_normal(dim))


def random_density(rng: np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ dagger(g)
    rho = 0.5 * (rho + dagger(rho))
    return rho / np.trace(rho).real
