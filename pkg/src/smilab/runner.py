"""Execute validated experiment configs and sweeps."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .einselection import build_coarse_state, build_equal_state, coarse_probabilities, fine_grain
from .engine import EnsembleSpec, TimeGrid, ensemble_average_operator, ensemble_average_state
from .errors import ConfigError, SMIError
from .lab import born_distribution, decay_curve, decoherence_metrics, reduced_operator_check, stability_test
from .linalg import random_density, random_hermitian, random_state, spectral_decompose
from .presets import operator, pure_state, state
from .pw import JointSystemConfig, limit_consistency_check


@dataclass
class RunResult:
    config_digest: str
    version: str
    kind: str
    payload: dict
    duration_s: float = 0.0
    errors: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config_digest": self.config_digest,
            "version": self.version,
            "kind": self.kind,
            "payload": self.payload,
            "errors": self.errors,
            "duration_s": self.duration_s,
        }


def derive_seed(master_seed: int, index: int) -> int:
    """Independent 64-bit seed for sweep point ``index``."""
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1, np.uint64)[0])


def _scalar(config: ExperimentConfig, key: str) -> float:
    v = config[key]
    if isinstance(v, list):
        raise ConfigError(f"{key} is list-valued; use a sweep")
    return v


def build_spec(config: ExperimentConfig, lam: float | None = None) -> tuple[EnsembleSpec, np.ndarray]:
    obs = operator(config["observable"])
    d = obs.shape[0]
    lam = _scalar(config, "ensemble.lambda") if lam is None else lam
    kind = config["ensemble.kind"]
    base = operator(config["ensemble.base"], d, "ensemble.base")
    total = config["ensemble.total"]
    spec = EnsembleSpec(
        kind=kind,
        strength=0.0 if kind == "zero-noise" else float(lam),
        base_hamiltonian=base,
        total_hamiltonian=None if total is None else operator(total, d, "ensemble.total"),
        measurement_basis=spectral_decompose(obs),
    )
    return spec, obs


def _grid_kwargs(config: ExperimentConfig) -> dict:
    spu = config["grid.slices_per_unit_time"]
    return {"slices_per_unit_time": spu} if spu is not None else {"slices": config["grid.slices"]}


def _grid(config: ExperimentConfig, tau: float) -> TimeGrid:
    spu = config["grid.slices_per_unit_time"]
    slices = config["grid.slices"] if spu is None else max(1, int(np.ceil(tau * spu)))
    return TimeGrid(tau, slices)


def _cplx(z) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def _matrix(m) -> list:
    return [[_cplx(x) for x in row] for row in np.asarray(m)]


def _decay(config, workers):
    spec, obs = build_spec(config)
    taus = config["grid.tau"]
    taus = taus if isinstance(taus, list) else [taus]
    curve = decay_curve(
        state(config["state"], obs),
        spec,
        taus,
        config["n_trajectories"],
        config.master_seed,
        ordering=config["ensemble.ordering"],
        workers=workers,
        **_grid_kwargs(config),
    )
    return {
        "ensemble": spec.kind,
        "lambda": spec.strength,
        "n_trajectories": config["n_trajectories"],
        "taus": curve.taus.tolist(),
        "slices": list(curve.slices),
        "measured": curve.measured.tolist(),
        "analytic": None if curve.analytic is None else curve.analytic.tolist(),
        "mc_error": curve.mc_errors.tolist(),
        "within_3se": None if curve.analytic is None else curve.within(3.0).tolist(),
    }


def _stability(config, workers):
    spec, obs = build_spec(config)
    tau = _scalar(config, "grid.tau")
    psi = pure_state(state(config["state"], obs))
    rep = stability_test(
        psi,
        obs,
        spec,
        _grid(config, tau),
        config["n_trajectories"],
        config.master_seed,
        threshold=config["stability.threshold"],
        ordering=config["ensemble.ordering"],
        workers=workers,
    )
    gated = np.isfinite(rep.phase_estimates)
    return {
        "tau": tau,
        "lambda": spec.strength,
        "expectation_mean": _cplx(rep.expectation_mean),
        "expectation_variance": rep.expectation_variance,
        "standard_error": rep.standard_error,
        "is_stable": rep.is_stable,
        "threshold": rep.threshold,
        "mean_return_fidelity": float(np.mean(rep.return_fidelity)),
        "dressed_expectation_mean": float(np.mean(rep.dressed_expectations)),
        "adiabatic_fraction": float(np.mean(gated)),
        "phase_mean": float(np.mean(rep.phase_estimates[gated])) if gated.any() else None,
    }


def _ensemble_average(config, workers):
    spec, obs = build_spec(config)
    tau = _scalar(config, "grid.tau")
    grid = _grid(config, tau)
    rho0 = state(config["state"], obs)
    n, seed, order = config["n_trajectories"], config.master_seed, config["ensemble.ordering"]
    st = ensemble_average_state(rho0, spec, grid, n, seed, order, workers)
    op = ensemble_average_operator(obs, spec, grid, n, seed, order, workers)
    decomp = spec.measurement_basis
    mean_state = 0.5 * (st.mean + st.mean.conj().T)
    m = decoherence_metrics(mean_state, rho0, decomp)
    offdiag, drift = reduced_operator_check(op.mean, decomp)
    return {
        "tau": tau,
        "lambda": spec.strength,
        "mean_state": _matrix(st.mean),
        "state_mc_error": st.monte_carlo_error,
        "metrics": {
            "offdiagonal_norm": m.offdiagonal_norm,
            "purity": m.purity,
            "born_deviation": m.born_deviation,
            "diagonal_drift": m.diagonal_drift,
        },
        "born_initial": born_distribution(rho0, decomp).tolist(),
        "born_mean": born_distribution(mean_state, decomp).tolist(),
        "operator": {"offdiag_norm": offdiag, "eigenvalue_drift": drift, "mc_error": op.monte_carlo_error},
    }


def _baseline(config, workers):
    approx = fine_grain(config["baseline.alpha_sq"], config["baseline.cap"])
    st = build_coarse_state([m for m in approx.numerators if m > 0])
    probs = coarse_probabilities(st)
    diag_obs = np.diag(np.arange(st.dims[0], dtype=float))
    born = born_distribution(st.system_density(), spectral_decompose(diag_obs))[: st.n_coarse]
    return {
        "alpha_sq": list(approx.target),
        "numerators": list(approx.numerators),
        "denominator": approx.denominator,
        "achieved_error": approx.achieved_error,
        "probabilities": [str(p) for p in probs],
        "probabilities_float": [float(p) for p in probs],
        "born_crosscheck_gap": float(np.max(np.abs(born - np.array([float(p) for p in probs])))),
        "equal_state_probability": str(build_equal_state(st.M).outcome_probabilities()[0]),
    }


def _pw(config, workers):
    tau = _scalar(config, "grid.tau")
    pw = config["pw"]
    slices = pw["slices"]
    if pw["random_instances"] > 0:
        rng = np.random.default_rng(config.master_seed)
        worst = 0.0
        for _ in range(pw["random_instances"]):
            c = JointSystemConfig(random_hermitian(rng, 2), random_hermitian(rng, 2))
            gap = limit_consistency_check(
                c, random_hermitian(rng, 2), random_density(rng, 2), random_state(rng, 2), tau, slices=slices
            )
            worst = max(worst, gap)
        return {"tau": tau, "instances": pw["random_instances"], "max_discrepancy": worst}
    obs = operator(config["observable"])
    d_s = obs.shape[0]
    h_o = operator(pw["observer_hamiltonian"], None, "pw.observer_hamiltonian")
    c = JointSystemConfig(operator(pw["system_hamiltonian"], d_s, "pw.system_hamiltonian"), h_o)
    psi_o = pure_state(state(pw["observer_state"], h_o))
    gap = limit_consistency_check(c, obs, state(config["state"], obs), psi_o, tau, slices=slices)
    return {"tau": tau, "instances": 1, "max_discrepancy": gap}


def _verify(config, workers):
    from .verify import verify_suite

    report = verify_suite(config["verify.filter"], workers=workers)
    return {"passed": report.passed, "checks": [c.to_dict() for c in report.checks]}


_DISPATCH = {
    "decay-curve": _decay,
    "stability": _stability,
    "ensemble-average": _ensemble_average,
    "baseline-envariance": _baseline,
    "pw-consistency": _pw,
    "verify-suite": _verify,
}


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> RunResult:
    start = time.perf_counter()
    try:
        payload = _DISPATCH[config.kind](config, workers)
    except SMIError as exc:
        raise type(exc)(f"[{config.kind} {config.digest()[:12]}] {exc}") from exc
    return RunResult(config.digest(), __version__, config.kind, payload, time.perf_counter() - start)


def sweep_points(config: ExperimentConfig) -> list[ExperimentConfig]:
    """Cartesian product of the list-valued axes, each with a derived seed."""
    lam = config["ensemble.lambda"]
    tau = config["grid.tau"]
    lam_axis = lam if isinstance(lam, list) else None
    tau_axis = tau if isinstance(tau, list) and config.kind != "decay-curve" else None
    if lam_axis is None and tau_axis is None:
        raise ConfigError("sweep needs a list-valued ensemble.lambda or grid.tau")
    points = []
    for li, lv in enumerate(lam_axis if lam_axis is not None else [lam]):
        for ti, tv in enumerate(tau_axis if tau_axis is not None else [tau]):
            index = len(points)
            points.append(
                config.replace(**{
                    "ensemble.lambda": lv,
                    "grid.tau": tv,
                    "master_seed": derive_seed(config.master_seed, index),
                })
            )
    return points


def run_sweep(config: ExperimentConfig, workers: int | None = None) -> list[RunResult]:
    return [run_experiment(p, workers) for p in sweep_points(config)]
