"""Built-in verification suite: the acceptance checks, runnable from the CLI.

Each check returns a :class:`CheckResult` carrying the measured value, the
bound it is held to, a verdict and the digest of the parameters it ran with.
``inject_fault="naive-sum"`` swaps the time-ordered channel for the naive-sum
one inside the time-ordering check, which must then fail.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .config import parse_config
from .errors import ConfigError
from .einselection import (
    build_coarse_state,
    build_equal_state,
    coarse_probabilities,
    envariance_swap_check,
)
from .engine import (
    EnsembleSpec,
    HamiltonianTrajectory,
    TimeGrid,
    channel_from_trajectory,
    ensemble_average_operator,
    ensemble_average_state,
    sample_trajectory,
)
from .lab import decay_curve, decoherence_metrics, reduced_operator_check, stability_test
from .linalg import (
    SIGMA_X,
    SIGMA_Z,
    IDENTITY_2,
    random_density,
    random_hermitian,
    random_state,
    spectral_decompose,
)
from .pw import JointSystemConfig, limit_consistency_check
from .report import payload_bytes

FAULTS = ("naive-sum",)


@dataclass
class CheckResult:
    name: str
    measured: float
    bound: str
    passed: bool
    config_digest: str
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "measured": self.measured,
            "bound": self.bound,
            "passed": self.passed,
            "config_digest": self.config_digest,
            "detail": self.detail,
            "seconds": self.seconds,
        }

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] {self.name}: measured {self.measured:.6g} vs {self.bound} ({self.seconds:.2f}s)"


@dataclass
class VerifyReport:
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _digest(params: dict) -> str:
    return hashlib.sha256(json.dumps(params, sort_keys=True, default=str).encode()).hexdigest()


def _dephasing(lam: float, obs=SIGMA_Z, base=None) -> EnsembleSpec:
    base = np.zeros_like(obs) if base is None else base
    return EnsembleSpec("dephasing", lam, base, measurement_basis=spectral_decompose(obs))


def check_pw_limit(workers=None, inject_fault=None) -> CheckResult:
    params = {"instances": 100, "seed": 2024, "dims": [2, 2], "tol": 1e-10}
    rng = np.random.default_rng(params["seed"])
    worst = 0.0
    for _ in range(params["instances"]):
        cfg = JointSystemConfig(random_hermitian(rng, 2), random_hermitian(rng, 2))
        gap = limit_consistency_check(
            cfg, random_hermitian(rng, 2), random_density(rng, 2), random_state(rng, 2), float(rng.uniform(0.1, 3.0))
        )
        worst = max(worst, gap)
    return CheckResult("pw_limit", worst, "<= 1e-10", worst <= 1e-10, _digest(params))


def check_dephasing_decay(workers=None, inject_fault=None) -> CheckResult:
    params = {"lambda": 1.0, "taus": [0.5, 1.0, 2.0], "n": 10_000, "slices": 200, "seed": 7}
    plus = np.full((2, 2), 0.5, dtype=complex)
    curve = decay_curve(
        plus, _dephasing(params["lambda"]), params["taus"], params["n"], params["seed"],
        slices=params["slices"], workers=workers,
    )
    z = np.abs(curve.measured - curve.analytic) / curve.mc_errors
    return CheckResult(
        "dephasing_decay", float(z.max()), "<= 3 standard errors", bool(np.all(z <= 3.0)), _digest(params),
        {"measured": curve.measured.tolist(), "analytic": curve.analytic.tolist(), "mc_error": curve.mc_errors.tolist()},
    )


def check_born_diagonal(workers=None, inject_fault=None) -> CheckResult:
    params = {"dims": list(range(2, 9)), "lambda": 1.0, "tau": 1.0, "slices": 50, "n": 500, "seed": 31}
    rng = np.random.default_rng(params["seed"])
    worst = 0.0
    grid = TimeGrid(params["tau"], params["slices"])
    for d in params["dims"]:
        obs = np.diag(np.arange(d, dtype=float) - d / 2).astype(complex)
        _, q = np.linalg.eigh(random_hermitian(rng, d))
        for a_s in (obs, q @ obs @ q.conj().T):
            decomp = spectral_decompose(a_s)
            rho0 = random_density(rng, d)
            spec = _dephasing(params["lambda"], a_s)
            mean = ensemble_average_state(rho0, spec, grid, params["n"], params["seed"] + d, workers=workers).mean
            mean = 0.5 * (mean + mean.conj().T)
            worst = max(worst, decoherence_metrics(mean, rho0, decomp).diagonal_drift)
    return CheckResult("born_diagonal", worst, "<= 1e-12", worst <= 1e-12, _digest(params))


def check_eigenstate_stability(workers=None, inject_fault=None) -> CheckResult:
    params = {"n": 2000, "tau": 1.0, "slices": 100, "seed": 5, "lambda": 1.0}
    grid = TimeGrid(params["tau"], params["slices"])
    worst = 0.0
    a4 = np.diag([-1.5, -0.5, 0.5, 2.0]).astype(complex)
    fixtures = [
        (SIGMA_Z, _dephasing(params["lambda"])),
        (a4, _dephasing(params["lambda"], a4, base=np.diag([0.3, -0.2, 0.1, 0.7]).astype(complex))),
        (SIGMA_Z, EnsembleSpec("zero-noise", 0.0, 0.8 * SIGMA_Z)),
        (a4, EnsembleSpec("zero-noise", 0.0, np.diag([1.0, 2.0, 3.0, 4.0]).astype(complex))),
    ]
    for a_s, spec in fixtures:
        _, vecs = np.linalg.eigh(a_s)
        for i in range(a_s.shape[0]):
            rep = stability_test(vecs[:, i], a_s, spec, grid, params["n"], params["seed"], workers=workers)
            worst = max(worst, rep.expectation_variance)
    return CheckResult("eigenstate_stability", worst, "<= 1e-20", worst <= 1e-20, _digest(params))


def _plus_dispersion(x: float, n: int, seed: int, workers=None) -> float:
    plus = np.ones(2) / math.sqrt(2)
    rep = stability_test(plus, SIGMA_Z, _dephasing(math.sqrt(x)), TimeGrid(1.0, 200), n, seed, workers=workers)
    return rep.expectation_variance


def check_superposition_dispersion(workers=None, inject_fault=None) -> CheckResult:
    params = {"lambda_sq_tau": 1.0, "n": 10_000, "seed": 11, "slices": 200}
    v = _plus_dispersion(1.0, params["n"], params["seed"], workers)
    return CheckResult("superposition_dispersion", v, "> 1e-6", v > 1e-6, _digest(params))


def check_dispersion_monotone(workers=None, inject_fault=None) -> CheckResult:
    params = {"lambda_sq_tau": [0.25, 0.5, 1.0, 2.0], "n": 10_000, "seed": 11, "slices": 200}
    v = [_plus_dispersion(x, params["n"], params["seed"], workers) for x in params["lambda_sq_tau"]]
    steps = np.diff(v)
    return CheckResult(
        "dispersion_monotone", float(steps.min()), ">= 0 (smallest step)", bool(np.all(steps >= 0)),
        _digest(params), {"variances": v},
    )


def check_einselection_exact(workers=None, inject_fault=None) -> CheckResult:
    params = {"max_M": 64, "fixture": [1, 3], "swap_max_M": 6}
    failures = 0
    for M in range(1, params["max_M"] + 1):
        st = build_equal_state(M)
        if any(p != Fraction(1, M) for p in st.outcome_probabilities()):
            failures += 1
        if any(p != Fraction(1, M) for p in coarse_probabilities(st)):
            failures += 1
    if coarse_probabilities(build_coarse_state(params["fixture"])) != (Fraction(1, 4), Fraction(3, 4)):
        failures += 1
    for M in range(1, params["swap_max_M"] + 1):
        st = build_equal_state(M)
        failures += sum(not envariance_swap_check(st, p) for p in itertools.permutations(range(M)))
    return CheckResult("einselection_exact", failures, "== 0 failures", failures == 0, _digest(params))


def check_operator_reduction(workers=None, inject_fault=None) -> CheckResult:
    params = {
        "dim": 4, "lambda": 1.0, "tau": 0.5, "slices": 10, "ns": [100, 1000, 10_000], "seed": 5,
        "born_lambdas": [0.01, 0.0316, 0.1, 0.316, 1.0], "born_n": 2000, "rho0": [0.4, 0.3, 0.2, 0.1],
    }
    a_s = np.diag([-3.0, -1.0, 1.0, 3.0]).astype(complex)
    decomp = spectral_decompose(a_s)
    grid = TimeGrid(params["tau"], params["slices"])
    base = np.zeros((4, 4), dtype=complex)
    spec = EnsembleSpec("gue-perturbed", params["lambda"], base)
    offdiag = [
        reduced_operator_check(ensemble_average_operator(a_s, spec, grid, n, params["seed"], workers=workers), decomp)[0]
        for n in params["ns"]
    ]
    decreasing = bool(np.all(np.diff(offdiag) < 0))
    rho0 = np.diag(params["rho0"]).astype(complex)
    devs = []
    for lam in params["born_lambdas"]:
        mean = ensemble_average_state(
            rho0, EnsembleSpec("gue-perturbed", lam, base), grid, params["born_n"], params["seed"], workers=workers
        ).mean
        devs.append(decoherence_metrics(0.5 * (mean + mean.conj().T), rho0, decomp).born_deviation)
    slope = float(np.polyfit(np.log(params["born_lambdas"]), np.log(devs), 1)[0])
    ok = decreasing and abs(slope - 2.0) <= 0.3
    return CheckResult(
        "operator_reduction", slope, "slope 2 +- 0.3 and off-diagonal decreasing in N", ok, _digest(params),
        {"offdiag_by_n": offdiag, "born_deviation": devs},
    )


NONCOMMUTING_FIXTURE = (SIGMA_X, SIGMA_Z)  # slice 1 then slice 2, dt = 0.5


def _closed_form_expi(pauli: np.ndarray, theta: float) -> np.ndarray:
    return math.cos(theta) * IDENTITY_2 + 1j * math.sin(theta) * pauli


def check_time_ordering(workers=None, inject_fault=None) -> CheckResult:
    params = {"fixture": "sigma_x then sigma_z", "dt": 0.5, "fault": inject_fault}
    ordered = "naive-sum" if inject_fault == "naive-sum" else "time-ordered"
    # commuting fixtures
    commuting_gap = 0.0
    rng = np.random.default_rng(3)
    for spec in (_dephasing(1.0), EnsembleSpec("zero-noise", 0.0, SIGMA_Z)):
        for l in range(5):
            traj = sample_trajectory(spec, TimeGrid(1.0, 20), 9, l)
            a = channel_from_trajectory(traj, "time-ordered").K
            b = channel_from_trajectory(traj, "naive-sum").K
            commuting_gap = max(commuting_gap, float(np.max(np.abs(a - b))))
    d = np.diag(rng.uniform(-1, 1, 3)).astype(complex)
    traj = HamiltonianTrajectory(TimeGrid(1.0, 3), np.stack([d, 2 * d, -d]), 0)
    commuting_gap = max(commuting_gap, float(np.max(np.abs(
        channel_from_trajectory(traj, "time-ordered").K - channel_from_trajectory(traj, "naive-sum").K))))
    # non-commuting fixture
    dt = params["dt"]
    traj = HamiltonianTrajectory(TimeGrid(2 * dt, 2), np.stack(NONCOMMUTING_FIXTURE), 0)
    k_time = channel_from_trajectory(traj, ordered).K
    k_naive = channel_from_trajectory(traj, "naive-sum").K
    expected = _closed_form_expi(SIGMA_Z, dt) @ _closed_form_expi(SIGMA_X, dt)
    n_hat = (SIGMA_X + SIGMA_Z) / math.sqrt(2)
    expected_naive = math.cos(dt * math.sqrt(2)) * IDENTITY_2 + 1j * math.sin(dt * math.sqrt(2)) * n_hat
    closed_form_gap = max(float(np.max(np.abs(k_time - expected))), float(np.max(np.abs(k_naive - expected_naive))))
    separation = float(np.max(np.abs(k_time - k_naive)))
    ok = commuting_gap <= 1e-12 and separation > 1e-3 and closed_form_gap <= 1e-12
    return CheckResult(
        "time_ordering", separation, "commuting <= 1e-12, non-commuting > 1e-3, closed form <= 1e-12", ok,
        _digest(params), {"commuting_gap": commuting_gap, "closed_form_gap": closed_form_gap},
    )


DETERMINISM_CONFIG = """
kind: decay-curve
master_seed: 99
ensemble: {kind: dephasing, lambda: 1.0}
grid: {tau: [0.5, 1.0, 2.0], slices: 200}
n_trajectories: 1000
state: plus
observable: sigma_z
"""


def check_determinism(workers=None, inject_fault=None) -> CheckResult:
    from .runner import run_experiment

    cfg = parse_config(DETERMINISM_CONFIG)
    blobs = {w: payload_bytes(run_experiment(cfg, workers=w)) for w in (1, 2, 4, 8)}
    distinct = len(set(blobs.values()))
    return CheckResult("determinism", distinct, "== 1 distinct payload over workers {1,2,4,8}", distinct == 1, cfg.digest())


CHECKS: dict[str, Callable[..., CheckResult]] = {
    "pw_limit": check_pw_limit,
    "dephasing_decay": check_dephasing_decay,
    "born_diagonal": check_born_diagonal,
    "eigenstate_stability": check_eigenstate_stability,
    "superposition_dispersion": check_superposition_dispersion,
    "dispersion_monotone": check_dispersion_monotone,
    "einselection_exact": check_einselection_exact,
    "operator_reduction": check_operator_reduction,
    "time_ordering": check_time_ordering,
    "determinism": check_determinism,
}


def run_check(name: str, workers=None, inject_fault=None) -> CheckResult:
    start = time.perf_counter()
    result = CHECKS[name](workers=workers, inject_fault=inject_fault)
    result.seconds = time.perf_counter() - start
    return result


def verify_suite(name_filter: str | None = None, workers=None, inject_fault: str | None = None) -> VerifyReport:
    """Run every check whose name contains ``name_filter``."""
    if inject_fault is not None and inject_fault not in FAULTS:
        raise ConfigError(f"unknown fault {inject_fault!r}; expected one of {FAULTS}")
    names = [n for n in CHECKS if name_filter is None or name_filter in n]
    return VerifyReport([run_check(n, workers, inject_fault) for n in names])
