"""Experiment configuration: YAML documents with a fixed key vocabulary.

Example::

    kind: decay-curve
    master_seed: 20240611
    ensemble: {kind: dephasing, lambda: 1.0}
    grid: {tau: [0.5, 1.0, 2.0], slices: 200}
    n_trajectories: 10000
    state: plus
    observable: sigma_z
    output: {path: results/decay.csv, format: csv}

Unset keys take the defaults in ``DEFAULTS``. ``ensemble.lambda`` and
``grid.tau`` may be lists; ``run_sweep`` expands them.
"""
from __future__ import annotations

import copy
import difflib
import hashlib
import json
from dataclasses import dataclass
from typing import Any

import yaml

from .errors import ConfigError

EXPERIMENT_KINDS = ("decay-curve", "stability", "ensemble-average", "baseline-envariance", "pw-consistency", "verify-suite")

DEFAULTS: dict[str, Any] = {
    "kind": None,
    "master_seed": 0,
    "ensemble": {"kind": "dephasing", "lambda": 1.0, "base": "zero", "total": None, "ordering": "time-ordered"},
    "grid": {"tau": 1.0, "slices": 200, "slices_per_unit_time": None},
    "n_trajectories": 10000,
    "state": "plus",
    "observable": "sigma_z",
    "stability": {"threshold": 1e-16},
    "baseline": {"alpha_sq": None, "cap": 1000},
    "pw": {
        "system_hamiltonian": "sigma_x",
        "observer_hamiltonian": "sigma_z",
        "observer_state": "plus",
        "random_instances": 0,
        "slices": 8,
    },
    "verify": {"filter": None},
    "output": {"path": None, "format": "json"},
}

SECTIONS = {k for k, v in DEFAULTS.items() if isinstance(v, dict)}
U64_MAX = 2**64 - 1


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated configuration; ``data`` mirrors ``DEFAULTS`` fully filled in."""

    data: dict

    def __getitem__(self, dotted: str):
        node = self.data
        for part in dotted.split("."):
            node = node[part]
        return node

    @property
    def kind(self) -> str:
        return self.data["kind"]

    @property
    def master_seed(self) -> int:
        return self.data["master_seed"]

    def replace(self, **dotted) -> "ExperimentConfig":
        """Copy with dotted keys overridden (``replace(**{"ensemble.lambda": 0.2})``)."""
        data = copy.deepcopy(self.data)
        for key, value in dotted.items():
            node = data
            *head, last = key.split(".")
            for part in head:
                node = node[part]
            node[last] = value
        return validate(data)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON of everything except ``output``."""
        body = {k: v for k, v in self.data.items() if k != "output"}
        text = json.dumps(body, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(text.encode()).hexdigest()


def _suggest(key: str, allowed) -> str:
    close = difflib.get_close_matches(key, sorted(allowed), n=1)
    return f" (did you mean {close[0]!r}?)" if close else ""


def _merge(raw: dict) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping of keys to values")
    unknown = []
    for key, value in raw.items():
        if key not in DEFAULTS:
            unknown.append(f"{key!r}{_suggest(key, DEFAULTS)}")
        elif key in SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"{key}: expected a mapping, got {value!r}")
            for sub in value:
                if sub not in DEFAULTS[key]:
                    unknown.append(f"'{key}.{sub}'{_suggest(sub, DEFAULTS[key])}")
    if unknown:
        raise ConfigError("unknown configuration keys: " + ", ".join(unknown))
    data = copy.deepcopy(DEFAULTS)
    for key, value in raw.items():
        if key in SECTIONS:
            data[key].update(value)
        else:
            data[key] = value
    return data


def _violation(key: str, value, constraint: str) -> ConfigError:
    return ConfigError(f"{key} = {value!r} violates constraint {constraint}")


def _as_list(value):
    return value if isinstance(value, list) else [value]


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def validate(data: dict) -> ExperimentConfig:
    kind = data["kind"]
    if kind not in EXPERIMENT_KINDS:
        raise _violation("kind", kind, f"kind in {EXPERIMENT_KINDS}")
    seed = data["master_seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed <= U64_MAX:
        raise _violation("master_seed", seed, "0 <= master_seed < 2**64")

    ens = data["ensemble"]
    if ens["kind"] not in ("zero-noise", "dephasing", "gue-perturbed"):
        raise _violation("ensemble.kind", ens["kind"], "kind in (zero-noise, dephasing, gue-perturbed)")
    lams = _as_list(ens["lambda"])
    if not lams:
        raise _violation("ensemble.lambda", ens["lambda"], "non-empty sweep axis")
    for lam in lams:
        if not _is_number(lam) or not lam >= 0:
            raise _violation("ensemble.lambda", lam, "lambda >= 0")
    ens["lambda"] = [float(x) for x in lams] if isinstance(ens["lambda"], list) else float(lams[0])
    if ens["ordering"] not in ("time-ordered", "naive-sum"):
        raise _violation("ensemble.ordering", ens["ordering"], "ordering in (time-ordered, naive-sum)")

    grid = data["grid"]
    taus = _as_list(grid["tau"])
    if not taus:
        raise _violation("grid.tau", grid["tau"], "non-empty sweep axis")
    for tau in taus:
        if not _is_number(tau) or not tau > 0:
            raise _violation("grid.tau", tau, "tau > 0")
    grid["tau"] = [float(x) for x in taus] if isinstance(grid["tau"], list) else float(taus[0])
    for key in ("slices", "slices_per_unit_time"):
        v = grid[key]
        if v is not None and (not isinstance(v, int) or isinstance(v, bool) or v < 1):
            raise _violation(f"grid.{key}", v, f"{key} >= 1")

    n = data["n_trajectories"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 2:
        raise _violation("n_trajectories", n, "N >= 2")
    thr = data["stability"]["threshold"]
    if not _is_number(thr) or thr < 0:
        raise _violation("stability.threshold", thr, "threshold >= 0")
    cap = data["baseline"]["cap"]
    if not isinstance(cap, int) or isinstance(cap, bool) or cap < 1:
        raise _violation("baseline.cap", cap, "cap >= 1")
    if kind == "baseline-envariance":
        a = data["baseline"]["alpha_sq"]
        if not isinstance(a, list) or not a or not all(_is_number(x) and x >= 0 for x in a):
            raise _violation("baseline.alpha_sq", a, "non-empty list of non-negative numbers")
    ri = data["pw"]["random_instances"]
    if not isinstance(ri, int) or isinstance(ri, bool) or ri < 0:
        raise _violation("pw.random_instances", ri, "random_instances >= 0")
    fmt = data["output"]["format"]
    if fmt not in ("json", "csv"):
        raise _violation("output.format", fmt, "format in (json, csv)")
    if fmt == "csv" and kind != "decay-curve":
        raise _violation("output.format", fmt, "csv output only for decay-curve")
    return ExperimentConfig(data)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a YAML (or JSON) experiment document."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed configuration document: {exc}") from None
    if raw is None:
        raise ConfigError("empty configuration document")
    return validate(_merge(raw))


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
