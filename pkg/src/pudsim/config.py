"""Run configuration files.

Experiments are driven from a TOML file with up to five sections:

    [run]         profile / seed / trials / workers / out
    [topology]    bank geometry (num_subarrays, rows_per_subarray, ...)
    [experiment]  sweep knobs (n_values, temperatures, data_pattern, ...)
    [noise]       per-field overrides of the profile's noise parameters
    [timing]      per-field overrides of the profile's timing thresholds

Parsing is fail-closed: unknown sections or keys raise InvalidConfigError
instead of being ignored, so a typo in a noise parameter cannot silently
run the wrong chip model.  The effective seed is resolved with the
precedence  command-line flag > FCDRAM_SEED env var > config file >
DEFAULT_SEED.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path

import tomli

from .errors import InvalidConfigError
from .harness import DEFAULT_SEED, ExperimentSpec
from .topology import TopologyConfig
from .variation import NoiseParams, TimingThresholds

ENV_SEED = "FCDRAM_SEED"

# key -> allowed value types, per section
_RUN_KEYS = {
    "profile": (str,),
    "seed": (int,),
    "trials": (int,),
    "workers": (int,),
    "out": (str,),
}
_EXPERIMENT_KEYS = {
    "n_values": (list,),
    "k_values": (list,),
    "temperatures": (list,),
    "data_pattern": (str,),
    "anchors": (int,),
    "filter_not90": (bool,),
    "flip_prob": (int, float),
    "subarray": (int,),
}
_TOPOLOGY_KEYS = {f.name: (int,) for f in dataclasses.fields(TopologyConfig)}
_NOISE_KEYS = {f.name: (int, float) for f in dataclasses.fields(NoiseParams)}
_TIMING_KEYS = {f.name: (int, float)
                for f in dataclasses.fields(TimingThresholds)}
_SECTIONS = {
    "run": _RUN_KEYS,
    "topology": _TOPOLOGY_KEYS,
    "experiment": _EXPERIMENT_KEYS,
    "noise": _NOISE_KEYS,
    "timing": _TIMING_KEYS,
}
_INT_LISTS = {"n_values", "k_values"}


@dataclass(frozen=True)
class RunConfig:
    """Resolved invocation state: file + command-line overrides."""
    subcommand: str
    config_path: Path | None = None
    out_dir: Path = Path(".")
    seed: int | None = None         # command-line override, if given
    workers: int | None = None      # command-line override, if given


def _type_name(types) -> str:
    return " or ".join(t.__name__ for t in types)


def _check_value(section: str, key: str, value, types) -> None:
    # bool is an int subclass; only accept it where bool is meant
    if isinstance(value, bool) and bool not in types:
        raise InvalidConfigError(
            f"[{section}] {key} must be {_type_name(types)}, got bool")
    if not isinstance(value, tuple(types)):
        raise InvalidConfigError(
            f"[{section}] {key} must be {_type_name(types)}, "
            f"got {type(value).__name__}")
    if isinstance(value, list):
        want = (int,) if key in _INT_LISTS else (int, float)
        for item in value:
            if isinstance(item, bool) or not isinstance(item, want):
                raise InvalidConfigError(
                    f"[{section}] {key} entries must be {_type_name(want)}")


def check_tree(data: dict) -> None:
    """Validate a parsed config tree; unknown keys are errors."""
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise InvalidConfigError(f"unknown config sections {sorted(unknown)}")
    for section, keys in _SECTIONS.items():
        body = data.get(section, {})
        if not isinstance(body, dict):
            raise InvalidConfigError(f"[{section}] must be a table")
        bad = set(body) - set(keys)
        if bad:
            raise InvalidConfigError(
                f"unknown keys {sorted(bad)} in [{section}]")
        for key, value in body.items():
            _check_value(section, key, value, keys[key])


def load_config(path: str | Path) -> dict:
    """Parse and validate a TOML config file."""
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except OSError as exc:
        raise InvalidConfigError(f"cannot read config {path}: {exc}") from exc
    except tomli.TOMLDecodeError as exc:
        raise InvalidConfigError(f"malformed config {path}: {exc}") from exc
    check_tree(data)
    return data


def resolve_seed(flag_seed: int | None, file_cfg: dict,
                 env: dict | None = None) -> int:
    """Apply the seed precedence chain; see module docstring."""
    if flag_seed is not None:
        return flag_seed
    env = os.environ if env is None else env
    raw = env.get(ENV_SEED)
    if raw is not None:
        try:
            return int(raw, 0)
        except ValueError:
            raise InvalidConfigError(
                f"{ENV_SEED}={raw!r} is not an integer") from None
    run = file_cfg.get("run", {})
    if "seed" in run:
        return run["seed"]
    return DEFAULT_SEED


def make_spec(kind: str, file_cfg: dict, *, profile: str | None = None,
              seed: int | None = None, trials: int | None = None,
              workers: int | None = None, env: dict | None = None,
              **experiment_overrides) -> ExperimentSpec:
    """Assemble an ExperimentSpec from file config plus flag overrides.

    Flags win over the file; anything still unset keeps the
    ExperimentSpec default.
    """
    run = file_cfg.get("run", {})
    fields: dict = {"kind": kind, "seed": resolve_seed(seed, file_cfg, env)}

    picked_profile = profile if profile is not None else run.get("profile")
    if picked_profile is not None:
        fields["profile"] = picked_profile
    picked_trials = trials if trials is not None else run.get("trials")
    if picked_trials is not None:
        fields["trials"] = picked_trials
    picked_workers = workers if workers is not None else run.get("workers")
    if picked_workers is not None:
        fields["workers"] = picked_workers

    if "topology" in file_cfg:
        fields["topology"] = TopologyConfig(**file_cfg["topology"])

    exp = dict(file_cfg.get("experiment", {}))
    exp.update({k: v for k, v in experiment_overrides.items()
                if v is not None})
    for key in ("n_values", "k_values", "temperatures"):
        if key in exp:
            exp[key] = tuple(exp[key])
    fields.update(exp)

    overrides = {}
    for section in ("noise", "timing"):
        if section in file_cfg:
            overrides[section] = dict(file_cfg[section])
    if overrides:
        fields["overrides"] = overrides

    return ExperimentSpec(**fields)
