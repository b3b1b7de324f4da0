"""Run configuration: loading, validation and resolution.

Configs are YAML (plain key/value with nesting).  A "resolved" config has
every seed pinned to an explicit integer; the CLI writes the resolved copy
beside its outputs so any run can be reproduced from that single file.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigurationError
from .fit import FitConfig
from .integrate import IntegratorConfig
from .models import DEFAULT_OBSERVATION_TIMES, ModelSpec, make_builtin
from .rcs_data import SyntheticSpec

__all__ = ["RunConfig", "load_run_config", "dump_resolved_config"]

_METHODS = ("epd", "ap", "mean")


@dataclass
class RunConfig:
    """Validated run description used by every CLI subcommand."""

    model: str
    csv_path: str | None = None
    synthetic: dict | None = None
    observed: list[str] | None = None
    n_trajectories: int = 1000
    c: float = 100.0
    method: str = "epd"
    bounds: dict = field(default_factory=dict)
    y0: list[float] | None = None
    fit: FitConfig = field(default_factory=FitConfig)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    seeds: dict = field(default_factory=dict)
    jobs: int = 1
    plots: bool = True

    def build_model(self) -> ModelSpec:
        model = make_builtin(self.model)
        if self.observed:
            model = model.with_observed(self.observed)
        if self.bounds:
            model = model.with_bounds(self.bounds)
        return model

    def build_synthetic_spec(self, model: ModelSpec) -> SyntheticSpec:
        if self.synthetic is None:
            raise ConfigurationError("dataset.synthetic: missing (config has a csv dataset)")
        syn = self.synthetic
        centers = np.atleast_2d(np.asarray(syn["centers"], dtype=float))
        if "half_widths" in syn and syn["half_widths"] is not None:
            widths = np.asarray(syn["half_widths"], dtype=float)
        else:
            widths = float(syn.get("half_width_fraction", 0.1)) * np.abs(centers)
        if "times" in syn and syn["times"] is not None:
            times = np.asarray(syn["times"], dtype=float)
        else:
            try:
                times = DEFAULT_OBSERVATION_TIMES[model.name]
            except KeyError:
                raise ConfigurationError(
                    "dataset.synthetic.times: required for models without a default grid"
                ) from None
        return SyntheticSpec(
            model=model,
            centers=centers,
            half_widths=widths,
            samples_per_center=int(syn.get("samples_per_center", 12)),
            times=times,
            noise_level=float(syn.get("noise_level", 0.0)),
            seed=int(self.seeds["data"]),
            initial_state=None if self.y0 is None else np.asarray(self.y0, dtype=float),
            integrator=self.integrator,
        )


def _require(mapping: dict, key: str, path: str):
    if key not in mapping:
        raise ConfigurationError(f"{path}.{key}: required field is missing")
    return mapping[key]


def _sub_config(raw: dict, key: str, cls, path: str):
    section = raw.get(key) or {}
    if not isinstance(section, dict):
        raise ConfigurationError(f"{path}: expected a mapping")
    try:
        return cls(**section)
    except TypeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def load_run_config(path) -> RunConfig:
    """Parse and validate a YAML run config; field paths appear in errors."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"{path}: not valid YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")

    model = _require(raw, "model", "config")
    dataset = _require(raw, "dataset", "config")
    if not isinstance(dataset, dict):
        raise ConfigurationError("config.dataset: expected a mapping")
    csv_path = dataset.get("csv")
    synthetic = dataset.get("synthetic")
    if (csv_path is None) == (synthetic is None):
        raise ConfigurationError(
            "config.dataset: exactly one of 'csv' or 'synthetic' must be given"
        )
    if synthetic is not None:
        if not isinstance(synthetic, dict):
            raise ConfigurationError("config.dataset.synthetic: expected a mapping")
        _require(synthetic, "centers", "config.dataset.synthetic")

    method = str(raw.get("method", "epd"))
    if method not in _METHODS:
        raise ConfigurationError(
            f"config.method: {method!r} is not one of {', '.join(_METHODS)}"
        )

    seeds = raw.get("seeds") or {}
    if not isinstance(seeds, dict):
        raise ConfigurationError("config.seeds: expected a mapping")
    unknown = set(seeds) - {"data", "resample", "gate"}
    if unknown:
        raise ConfigurationError(f"config.seeds: unknown keys {sorted(unknown)}")

    cfg = RunConfig(
        model=str(model),
        csv_path=None if csv_path is None else str(csv_path),
        synthetic=synthetic,
        observed=raw.get("observed"),
        n_trajectories=int(raw.get("n_trajectories", 1000)),
        c=float(raw.get("c", 100.0)),
        method=method,
        bounds=raw.get("bounds") or {},
        y0=raw.get("y0"),
        fit=_sub_config(raw, "fit", FitConfig, "config.fit"),
        integrator=_sub_config(raw, "integrator", IntegratorConfig, "config.integrator"),
        seeds={k: int(v) for k, v in seeds.items()},
        jobs=int(raw.get("jobs", 1)),
        plots=bool(raw.get("plots", True)),
    )
    if cfg.n_trajectories < 1:
        raise ConfigurationError("config.n_trajectories: must be positive")
    if cfg.c < 0:
        raise ConfigurationError("config.c: must be nonnegative")
    if cfg.csv_path is None and cfg.synthetic is None:
        raise ConfigurationError("config.dataset: a data source is required")
    return cfg


def resolve_seeds(cfg: RunConfig, override: int | None = None) -> None:
    """Pin all three seeds.  ``override`` derives the triple deterministically;
    otherwise missing seeds are drawn from OS entropy (and then persisted)."""
    if override is not None:
        cfg.seeds = {"data": override, "resample": override + 1, "gate": override + 2}
        return
    for name in ("data", "resample", "gate"):
        if name not in cfg.seeds:
            cfg.seeds[name] = secrets.randbits(31)


def dump_resolved_config(cfg: RunConfig, out_path) -> None:
    """Write the fully resolved config (seeds pinned) next to the outputs."""
    doc = {
        "model": cfg.model,
        "dataset": {"csv": cfg.csv_path} if cfg.csv_path else {"synthetic": cfg.synthetic},
        "observed": cfg.observed,
        "n_trajectories": cfg.n_trajectories,
        "c": cfg.c,
        "method": cfg.method,
        "bounds": cfg.bounds or None,
        "y0": cfg.y0,
        "fit": {
            "max_iterations": cfg.fit.max_iterations,
            "param_tol": cfg.fit.param_tol,
            "loss_tol": cfg.fit.loss_tol,
            "finite_difference_step": cfg.fit.finite_difference_step,
            "n_multistart": cfg.fit.n_multistart,
            "multistart_seed": cfg.fit.multistart_seed,
        },
        "integrator": {
            "rel_tol": cfg.integrator.rel_tol,
            "abs_tol": cfg.integrator.abs_tol,
            "max_steps": cfg.integrator.max_steps,
            "min_step": cfg.integrator.min_step,
        },
        "seeds": cfg.seeds,
        "jobs": cfg.jobs,
        "plots": cfg.plots,
    }
    with open(out_path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
