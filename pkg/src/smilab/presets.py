"""Named fixtures for configs: observables, Hamiltonians and initial states.

Accepted forms
--------------
observable / Hamiltonian
    ``sigma_x``, ``sigma_y``, ``sigma_z``, ``identity:d``, ``zero`` (dimension
    taken from context), ``diag:[a, b, ...]``, ``ising:J`` (``J sz (x) sz``),
    or an explicit nested list. Complex entries may be written as strings,
    e.g. ``"1+2j"``.
state
    ``plus`` (uniform superposition), ``minus`` (qubit only), ``basis:i``,
    ``eigenstate:i`` (i-th eigenvector of the observable, ascending),
    ``diag:[p0, p1, ...]`` (diagonal mixed state), an explicit amplitude list,
    or an explicit density matrix (nested list).
"""
from __future__ import annotations

import numpy as np
import yaml

from .errors import ConfigError
from .linalg import SIGMA_X, SIGMA_Y, SIGMA_Z, check_density, check_hermitian, normalize

_PAULI = {"sigma_x": SIGMA_X, "sigma_y": SIGMA_Y, "sigma_z": SIGMA_Z}


def _number(x) -> complex:
    if isinstance(x, str):
        return complex(x.replace(" ", ""))
    return complex(x)


def _array(value, what: str) -> np.ndarray:
    try:
        return np.array([[_number(x) for x in row] for row in value], dtype=complex) if isinstance(
            value[0], (list, tuple)
        ) else np.array([_number(x) for x in value], dtype=complex)
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"cannot read {what} from {value!r}: {exc}") from None


def _payload(text: str, prefix: str):
    try:
        return yaml.safe_load(text[len(prefix):])
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed preset {text!r}: {exc}") from None


def operator(spec, dim: int | None = None, what: str = "observable") -> np.ndarray:
    if isinstance(spec, str):
        name = spec.strip()
        if name in _PAULI:
            return _PAULI[name].copy()
        if name == "zero":
            if dim is None:
                raise ConfigError(f"{what} 'zero' needs a known dimension")
            return np.zeros((dim, dim), dtype=complex)
        if name.startswith("identity:"):
            return np.eye(int(_payload(name, "identity:")), dtype=complex)
        if name.startswith("diag:"):
            return np.diag(_array(_payload(name, "diag:"), what))
        if name.startswith("ising:"):
            return float(_payload(name, "ising:")) * np.kron(SIGMA_Z, SIGMA_Z)
        raise ConfigError(f"unknown {what} preset {spec!r}")
    m = _array(spec, what)
    if m.ndim != 2:
        raise ConfigError(f"{what} must be a square matrix, got {spec!r}")
    return check_hermitian(m, what)


def state(spec, observable: np.ndarray) -> np.ndarray:
    """Initial density matrix in the observable's dimension."""
    d = observable.shape[0]
    if isinstance(spec, str):
        name = spec.strip()
        if name == "plus":
            psi = np.ones(d) / np.sqrt(d)
        elif name == "minus":
            if d != 2:
                raise ConfigError("state 'minus' is only defined for a qubit")
            psi = np.array([1, -1]) / np.sqrt(2)
        elif name.startswith("basis:"):
            psi = np.eye(d)[_index(_payload(name, "basis:"), d)]
        elif name.startswith("eigenstate:"):
            _, v = np.linalg.eigh(observable)
            psi = v[:, _index(_payload(name, "eigenstate:"), d)]
        elif name.startswith("diag:"):
            p = np.real(_array(_payload(name, "diag:"), "state"))
            if p.shape != (d,) or np.any(p < 0) or p.sum() <= 0:
                raise ConfigError(f"diag state needs {d} non-negative weights, got {spec!r}")
            return np.diag(p / p.sum()).astype(complex)
        else:
            raise ConfigError(f"unknown state preset {spec!r}")
        psi = np.asarray(psi, dtype=complex)
        return np.outer(psi, psi.conj())
    arr = _array(spec, "state")
    if arr.ndim == 1:
        if arr.shape != (d,) or not np.any(arr):
            raise ConfigError(f"state needs {d} non-zero amplitudes, got {spec!r}")
        psi = normalize(arr)
        return np.outer(psi, psi.conj())
    return check_density(arr, "state")


def _index(i, d: int) -> int:
    if not isinstance(i, int) or not 0 <= i < d:
        raise ConfigError(f"index {i!r} out of range for dimension {d}")
    return i


def pure_state(rho: np.ndarray) -> np.ndarray:
    """Unit vector of a rank-one density matrix."""
    w, v = np.linalg.eigh(rho)
    if abs(w[-1] - 1.0) > 1e-10:
        raise ConfigError("this experiment needs a pure initial state")
    return v[:, -1]
