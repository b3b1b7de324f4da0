"""Repeated cross-sectional (RCS) datasets: containers, synthetic generation,
noise, CSV input/output and the mean-trajectory baseline.

An RCS dataset keeps a pool of observation vectors per time point with no
linkage between pool positions across times.  Synthetic generation draws
parameter sets uniformly around cluster centers, integrates each, adds
multiplicative noise and then shuffles every pool independently; the linked
originals survive only in the returned :class:`TruthRecord` so estimators
cannot accidentally exploit them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, DataFormatError, GenerationError, IntegrationFailure
from .integrate import DEFAULT_INTEGRATOR, IntegratorConfig, solve_ivp
from .models import ModelSpec
from .resample import SYNTHETIC_SOURCE, ArtificialTrajectory

__all__ = [
    "RcsDataset",
    "SyntheticSpec",
    "TruthRecord",
    "generate_synthetic",
    "apply_multiplicative_noise",
    "load_rcs_csv",
    "save_rcs_csv",
    "save_truth_csv",
    "load_params_csv",
    "mean_trajectory",
    "align_to_model",
]

_FLOAT_FMT = "%.17g"  # round-trips float64 exactly


@dataclass(frozen=True)
class RcsDataset:
    """Per-timepoint pools of observation vectors.

    ``pools[i]`` is a (J_i, n_components) array of the observations taken at
    ``times[i]``; row order carries no information.  ``components`` names the
    observed columns.  ``observed_mask`` mirrors the originating model's
    state layout when known, else None until bound with
    :func:`align_to_model`.
    """

    times: np.ndarray
    pools: tuple[np.ndarray, ...]
    components: tuple[str, ...]
    observed_mask: np.ndarray | None = None
    units: str = ""

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        pools = tuple(np.atleast_2d(np.asarray(p, dtype=float)) for p in self.pools)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "pools", pools)
        object.__setattr__(self, "components", tuple(self.components))
        if self.observed_mask is not None:
            mask = np.asarray(self.observed_mask, dtype=bool)
            mask.setflags(write=False)
            object.__setattr__(self, "observed_mask", mask)

        if times.ndim != 1 or times.size < 2:
            raise ConfigurationError("an RCS dataset needs at least two time points")
        if np.any(np.diff(times) <= 0):
            raise ConfigurationError("dataset times must be strictly increasing")
        if len(pools) != times.size:
            raise ConfigurationError("one pool per time point required")
        n_comp = len(self.components)
        for i, pool in enumerate(pools):
            if pool.shape[0] < 1:
                raise ConfigurationError(f"pool at t={times[i]:g} is empty")
            if pool.shape[1] != n_comp:
                raise ConfigurationError(
                    f"pool at t={times[i]:g} has {pool.shape[1]} columns, expected {n_comp}"
                )
            if not np.all(np.isfinite(pool)) or np.any(pool < 0):
                raise ConfigurationError(
                    f"pool at t={times[i]:g} contains negative or non-finite values"
                )
            pool.setflags(write=False)
        times.setflags(write=False)

    @property
    def n_times(self) -> int:
        return self.times.size

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def pool_sizes(self) -> np.ndarray:
        return np.array([p.shape[0] for p in self.pools])


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for synthetic RCS data.

    ``centers`` has one row per cluster; ``half_widths`` gives the uniform
    sampling half-width per center and parameter and defaults to 10% of the
    center values.  ``samples_per_center`` trajectories are drawn per
    cluster, so pools have H*S entries at every time.
    """

    model: ModelSpec
    centers: np.ndarray
    times: np.ndarray
    samples_per_center: int
    half_widths: np.ndarray | None = None
    noise_level: float = 0.0
    seed: int = 0
    initial_state: np.ndarray | None = None
    integrator: IntegratorConfig = DEFAULT_INTEGRATOR

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        if self.half_widths is None:
            widths = 0.1 * np.abs(centers)
        else:
            widths = np.broadcast_to(
                np.asarray(self.half_widths, dtype=float), centers.shape
            ).copy()
        object.__setattr__(self, "half_widths", widths)
        if self.initial_state is not None:
            object.__setattr__(
                self, "initial_state", np.asarray(self.initial_state, dtype=float)
            )

        if centers.shape[1] != self.model.n_params:
            raise ConfigurationError(
                f"centers have {centers.shape[1]} parameters, model expects {self.model.n_params}"
            )
        if self.samples_per_center < 1:
            raise ConfigurationError("samples_per_center must be at least 1")
        if np.any(widths < 0):
            raise ConfigurationError("sampling half-widths must be nonnegative")
        if self.noise_level < 0:
            raise ConfigurationError("noise level must be nonnegative")
        lower = centers - widths
        nonneg = self.model.param_bounds[:, 0] >= 0
        if np.any(lower[:, nonneg] < 0):
            raise ConfigurationError(
                "sampling bounds extend below zero for a nonnegative parameter"
            )

    @property
    def n_centers(self) -> int:
        return self.centers.shape[0]


@dataclass(frozen=True)
class TruthRecord:
    """Generation-side provenance: the sampled parameters and their linked
    trajectories, kept separate from the dataset on purpose."""

    param_names: tuple[str, ...]
    params: np.ndarray          # (H*S, n_params), center-major order
    center_index: np.ndarray    # (H*S,)
    times: np.ndarray
    states: np.ndarray          # (H*S, T, dim_state), noise-free
    observed: np.ndarray        # (H*S, T, n_observed), noisy pool values pre-shuffle


def _noisy(values: np.ndarray, level: float, rng: np.random.Generator) -> np.ndarray:
    if level == 0:
        return values.copy()
    eta = rng.normal(0.0, level, size=values.shape)
    return np.maximum(values * (1.0 + eta), 0.0)


def apply_multiplicative_noise(data: RcsDataset, level: float, seed: int) -> RcsDataset:
    """Return a copy with each value y replaced by y*(1+eta), eta ~ N(0, level^2).

    Results are clamped at zero, so exact zeros are preserved.  Deterministic
    for a given seed; pool order is unchanged.
    """
    if level < 0:
        raise ConfigurationError("noise level must be nonnegative")
    rng = np.random.default_rng(seed)
    pools = tuple(_noisy(pool, level, rng) for pool in data.pools)
    return replace(data, pools=pools)


def generate_synthetic(spec: SyntheticSpec) -> tuple[RcsDataset, TruthRecord]:
    """Sample parameters around each center, integrate, add noise, pool.

    Returns the dataset (pools shuffled per time) and the
    :class:`TruthRecord` holding the linked originals for evaluation.

    Raises
    ------
    GenerationError
        If any sampled parameter set fails to integrate; the message names
        the offending parameter vector.
    """
    model = spec.model
    ss = np.random.SeedSequence(spec.seed)
    ss_draw, ss_noise, ss_shuffle = ss.spawn(3)
    rng = np.random.default_rng(ss_draw)

    lower = spec.centers - spec.half_widths
    upper = spec.centers + spec.half_widths
    n_total = spec.n_centers * spec.samples_per_center
    params = np.empty((n_total, model.n_params))
    center_index = np.empty(n_total, dtype=int)
    row = 0
    for h in range(spec.n_centers):
        for _ in range(spec.samples_per_center):
            params[row] = rng.uniform(lower[h], upper[h])
            center_index[row] = h
            row += 1

    y0 = spec.initial_state if spec.initial_state is not None else model.default_initial_state
    states = np.empty((n_total, spec.times.size, model.dim_state))
    for i in range(n_total):
        try:
            traj = solve_ivp(model, params[i], y0, spec.times, spec.integrator)
        except IntegrationFailure as exc:
            raise GenerationError(
                f"sampled parameter set {params[i].tolist()} failed to integrate: {exc}"
            ) from exc
        states[i] = traj.states

    observed = states[:, :, model.observed_mask]
    observed = _noisy(observed, spec.noise_level, np.random.default_rng(ss_noise))

    shuffle_rng = np.random.default_rng(ss_shuffle)
    pools = tuple(
        observed[shuffle_rng.permutation(n_total), i, :] for i in range(spec.times.size)
    )
    data = RcsDataset(
        times=spec.times,
        pools=pools,
        components=model.observed_names,
        observed_mask=model.observed_mask,
    )
    truth = TruthRecord(
        param_names=model.param_names,
        params=params,
        center_index=center_index,
        times=spec.times,
        states=states,
        observed=observed,
    )
    return data, truth


def mean_trajectory(data: RcsDataset) -> ArtificialTrajectory:
    """Component-wise arithmetic mean of each pool (the classical baseline)."""
    values = np.vstack([pool.mean(axis=0) for pool in data.pools])
    idx = np.full(data.n_times, SYNTHETIC_SOURCE, dtype=int)
    return ArtificialTrajectory(times=data.times, values=values, source_indices=idx)


def align_to_model(data: RcsDataset, model: ModelSpec) -> RcsDataset:
    """Reorder dataset columns to the model's observed-component order.

    Raises
    ------
    ConfigurationError
        If the dataset components and the model's observed components differ
        as sets.
    """
    wanted = model.observed_names
    if set(data.components) != set(wanted):
        raise ConfigurationError(
            f"dataset components {sorted(data.components)} do not match the model's "
            f"observed components {sorted(wanted)}"
        )
    if data.components == wanted and data.observed_mask is not None:
        return data
    order = [data.components.index(name) for name in wanted]
    pools = tuple(pool[:, order] for pool in data.pools)
    return RcsDataset(
        times=data.times,
        pools=pools,
        components=wanted,
        observed_mask=model.observed_mask,
        units=data.units,
    )


# --- CSV input/output ------------------------------------------------------

def save_rcs_csv(data: RcsDataset, path) -> None:
    """Write the dataset in the long format ``time,component,value,replicate_id``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "component", "value", "replicate_id"])
        for t, pool in zip(data.times, data.pools):
            for j in range(pool.shape[0]):
                for c, name in enumerate(data.components):
                    writer.writerow(
                        [_FLOAT_FMT % t, name, _FLOAT_FMT % pool[j, c], j]
                    )


def load_rcs_csv(path, model: ModelSpec | None = None) -> RcsDataset:
    """Read a dataset written in the long format above.

    Header must be ``time,component,value`` with an optional
    ``replicate_id`` column.  Rows may come in any order; pool sizes may
    differ between times.  Datasets observing more than one component need
    ``replicate_id`` to associate the components of one specimen.  When
    ``model`` is given, components are validated against it and the columns
    are ordered accordingly.

    Raises
    ------
    DataFormatError
        On malformed rows or negative values, naming the line number.
    """
    cells: dict[float, dict] = {}
    components: list[str] = []
    has_replicate = False

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("file is empty", line=1) from None
        header = [h.strip() for h in header]
        if header[:3] != ["time", "component", "value"]:
            raise DataFormatError(
                f"expected header time,component,value[,replicate_id], got {','.join(header)}",
                line=1,
            )
        has_replicate = len(header) > 3 and header[3] == "replicate_id"

        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < 3:
                raise DataFormatError("expected at least 3 columns", line=lineno)
            try:
                t = float(row[0])
                value = float(row[2])
            except ValueError as exc:
                raise DataFormatError(str(exc), line=lineno) from None
            if not np.isfinite(value) or value < 0:
                raise DataFormatError(f"value {row[2]} must be finite and nonnegative", line=lineno)
            name = row[1].strip()
            if name not in components:
                components.append(name)
            replicate = row[3].strip() if has_replicate and len(row) > 3 else None
            cells.setdefault(t, {}).setdefault(name, []).append((replicate, value, lineno))

    if len(cells) < 2:
        raise DataFormatError("need at least two distinct time points", line=1)

    if model is not None:
        unknown = [c for c in components if c not in model.state_names]
        if unknown:
            raise ConfigurationError(
                f"components {unknown} are not states of model {model.name!r}"
            )
        components = [n for n in model.state_names if n in components]

    times = np.array(sorted(cells))
    pools = []
    for t in times:
        per_comp = cells[t]
        missing = [c for c in components if c not in per_comp]
        if missing:
            raise DataFormatError(
                f"time {t:g} has no values for component(s) {missing}", line=1
            )
        if len(components) == 1:
            col = per_comp[components[0]]
            pools.append(np.array([[v] for _, v, _ in col]))
            continue
        # multi-component pools need replicate ids to form observation vectors
        by_rep: dict[str, dict[str, float]] = {}
        for name in components:
            for replicate, value, lineno in per_comp[name]:
                if replicate is None:
                    raise DataFormatError(
                        "replicate_id is required when several components are observed",
                        line=lineno,
                    )
                by_rep.setdefault(replicate, {})[name] = value
        def _rep_key(rep):
            try:
                return (0, float(rep), rep)
            except ValueError:
                return (1, 0.0, rep)

        rows = []
        for replicate in sorted(by_rep, key=_rep_key):
            entry = by_rep[replicate]
            missing = [c for c in components if c not in entry]
            if missing:
                raise DataFormatError(
                    f"replicate {replicate!r} at time {t:g} lacks component(s) {missing}",
                    line=1,
                )
            rows.append([entry[c] for c in components])
        pools.append(np.array(rows))

    mask = None
    if model is not None:
        mask = np.array([n in components for n in model.state_names], dtype=bool)
    return RcsDataset(times=times, pools=tuple(pools), components=tuple(components), observed_mask=mask)


def save_truth_csv(truth: TruthRecord, path) -> None:
    """Write the true parameter sample set; header is exactly the parameter names."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(truth.param_names)
        for row in truth.params:
            writer.writerow([_FLOAT_FMT % v for v in row])


def load_params_csv(path) -> tuple[tuple[str, ...], np.ndarray]:
    """Read a parameter-samples CSV (header = parameter names). Returns (names, rows)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            names = tuple(h.strip() for h in next(reader))
        except StopIteration:
            raise DataFormatError("file is empty", line=1) from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(names):
                raise DataFormatError(
                    f"expected {len(names)} columns, got {len(row)}", line=lineno
                )
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise DataFormatError(str(exc), line=lineno) from None
    return names, np.array(rows).reshape(-1, len(names))
