"""Strict JSON run configuration and the run manifest.

The schema is flat key/value JSON. Unknown keys and duplicate keys are
rejected rather than ignored: a typo in epsilon or lambda would silently
invalidate a statistical run. A manifest written by a previous run can be
passed wherever a config is accepted; its embedded config snapshot is used,
so re-running a manifest reproduces the numeric outputs bit-exactly.
"""

import json
import os
from dataclasses import dataclass

from .spde import ConstantInitial, InstantonInitial, SimConfig

EXPERIMENTS = (
    "simulate",
    "track",
    "spectrum",
    "linear-decay",
    "diffusion",
    "noise-projection",
    "verify-comparison",
    "verify-barrier",
    "verify-bounded",
    "d-epsilon",
)

_KNOWN_KEYS = {
    "epsilon",
    "lambda",
    "dx",
    "dt",
    "t_end",
    "seed",
    "mode",
    "initial",
    "experiment",
    "output_dir",
    "half_length",
    "record_stride",
    "n_replicas",
    "tau_grid",
    "workers",
    "format",
    "agreement_radius",
    "offset",
    "k_eigen",
}

_DEFAULT_T_END = {
    "simulate": 10.0,
    "track": 10.0,
    "linear-decay": 4.0,
    "noise-projection": 10.0,
    "verify-comparison": 10.0,
    "verify-barrier": 5.0,
}

_DEFAULT_N_REPLICAS = {
    "diffusion": 200,
    "noise-projection": 200,
    "verify-comparison": 20,
    "verify-bounded": 100,
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    experiment: str
    sim: SimConfig
    output_dir: str
    n_replicas: int
    tau_grid: list
    workers: int
    format: str
    agreement_radius: float
    offset: float
    k_eigen: int

    @property
    def x0(self) -> float:
        return getattr(self.sim.initial, "x0", 0.0)

    def as_dict(self) -> dict:
        init = self.sim.initial
        if isinstance(init, InstantonInitial):
            initial = {"kind": "instanton", "x0": init.x0}
        elif isinstance(init, ConstantInitial):
            initial = {"kind": "constant", "value": init.value}
        else:
            initial = {"kind": "pair"}
        return {
            "experiment": self.experiment,
            "epsilon": self.sim.epsilon,
            "lambda": self.sim.lam,
            "dx": self.sim.dx,
            "dt": self.sim.dt,
            "t_end": self.sim.t_end,
            "seed": self.sim.seed,
            "mode": self.sim.mode,
            "initial": initial,
            "half_length": self.sim.half_length,
            "record_stride": self.sim.record_stride,
            "output_dir": self.output_dir,
            "n_replicas": self.n_replicas,
            "tau_grid": list(self.tau_grid),
            "workers": self.workers,
            "format": self.format,
            "agreement_radius": self.agreement_radius,
            "offset": self.offset,
            "k_eigen": self.k_eigen,
        }


def _reject_duplicates(pairs):
    seen = {}
    for key, value in pairs:
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} in config")
        seen[key] = value
    return seen


def _require(cond, key, message):
    if not cond:
        raise ConfigError(f"invalid value for {key!r}: {message}")


def _parse_initial(raw):
    if raw is None:
        return InstantonInitial(0.0)
    if isinstance(raw, str):
        raw = {"kind": raw}
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ConfigError("invalid value for 'initial': expected {kind: instanton|constant, ...}")
    kind = raw.get("kind")
    if kind == "instanton":
        extra = set(raw) - {"kind", "x0"}
        if extra:
            raise ConfigError(f"unknown initial keys {sorted(extra)}")
        return InstantonInitial(float(raw.get("x0", 0.0)))
    if kind == "constant":
        extra = set(raw) - {"kind", "value"}
        if extra:
            raise ConfigError(f"unknown initial keys {sorted(extra)}")
        return ConstantInitial(float(raw.get("value", 0.0)))
    raise ConfigError(f"invalid value for 'initial': unknown kind {kind!r}")


def parse_config(path, experiment=None, seed_override=None, workers_override=None,
                 output_override=None) -> RunConfig:
    """Load, validate and resolve a config (or manifest) file."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            raw = json.load(fh, object_pairs_hook=_reject_duplicates)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if raw.get("kind") == "kinklab-run-manifest":
        raw = raw.get("config")
        if not isinstance(raw, dict):
            raise ConfigError("manifest has no config snapshot")

    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    exp = raw.get("experiment", experiment)
    if exp is None:
        raise ConfigError("no experiment selected (config key or subcommand)")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {exp!r}; choose from {EXPERIMENTS}")
    if experiment is not None and exp != experiment:
        raise ConfigError(
            f"config selects experiment {exp!r} but subcommand is {experiment!r}"
        )

    if "epsilon" not in raw:
        raise ConfigError("missing required key 'epsilon'")
    epsilon = float(raw["epsilon"])
    _require(epsilon >= 0, "epsilon", "must be nonnegative")
    lam = float(raw.get("lambda", 1.0))
    _require(lam >= 0, "lambda", "must be nonnegative")
    dx = float(raw.get("dx", 0.1))
    _require(dx > 0, "dx", "must be positive")
    dt = float(raw["dt"]) if "dt" in raw else dx / 4.0
    _require(dt > 0, "dt", "must be positive")
    _require(dt <= dx, "dt", f"dt={dt} exceeds dx={dx}")
    seed = int(seed_override if seed_override is not None else raw.get("seed", 1))
    mode = raw.get("mode", "coupled")
    _require(mode in ("coupled", "single"), "mode", "must be 'coupled' or 'single'")
    initial = _parse_initial(raw.get("initial"))
    half_length = raw.get("half_length")
    if half_length is not None:
        half_length = float(half_length)
        _require(half_length > 0, "half_length", "must be positive")
    elif epsilon == 0:
        raise ConfigError("half_length required when epsilon = 0")

    tau_grid = [float(v) for v in raw.get("tau_grid", [0.25, 0.5, 0.75, 1.0])]
    _require(all(v > 0 for v in tau_grid) and tau_grid == sorted(tau_grid),
             "tau_grid", "must be positive and increasing")

    if "t_end" in raw:
        t_end = float(raw["t_end"])
    elif exp == "diffusion" and epsilon > 0:
        t_end = max(tau_grid) / epsilon
    elif exp == "verify-bounded" and epsilon > 0:
        t_end = 1.0 / epsilon
    else:
        t_end = _DEFAULT_T_END.get(exp, 10.0)
    _require(t_end > 0, "t_end", "must be positive")

    record_stride = raw.get("record_stride")
    if record_stride is not None:
        record_stride = int(record_stride)
        _require(record_stride >= 1, "record_stride", "must be a positive integer")

    workers = int(
        workers_override if workers_override is not None
        else raw.get("workers", os.cpu_count() or 1)
    )
    _require(workers >= 1, "workers", "must be >= 1")

    fmt = raw.get("format", "csv")
    _require(fmt in ("csv", "binary"), "format", "must be 'csv' or 'binary'")

    n_replicas = int(raw.get("n_replicas", _DEFAULT_N_REPLICAS.get(exp, 100)))
    _require(n_replicas >= 1, "n_replicas", "must be >= 1")

    agreement_radius = float(raw.get("agreement_radius", 15.0))
    offset = float(raw.get("offset", 0.1))
    k_eigen = int(raw.get("k_eigen", 5))
    _require(k_eigen >= 1, "k_eigen", "must be >= 1")

    output_dir = output_override or raw.get("output_dir") or os.environ.get("KINKLAB_OUT", "out")

    try:
        sim = SimConfig(
            epsilon=epsilon, lam=lam, dx=dx, dt=dt, t_end=t_end, seed=seed,
            record_stride=record_stride, mode=mode, initial=initial,
            half_length=half_length,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    return RunConfig(
        experiment=exp, sim=sim, output_dir=output_dir, n_replicas=n_replicas,
        tau_grid=tau_grid, workers=workers, format=fmt,
        agreement_radius=agreement_radius, offset=offset, k_eigen=k_eigen,
    )
