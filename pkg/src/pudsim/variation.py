"""Chip capability profiles and the stochastic imperfection model.

All default noise magnitudes are tuning outputs chosen so the characterization
corridors in the acceptance suite pass; they are not measurements. See
docs/MODEL.md for the full parameter ledger.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from .errors import InvalidConfigError
from .topology import BankTopology

# Flip chance per victim cell per hammering episode. Enough evidence for
# order inference; has no role anywhere else.
DEFAULT_FLIP_PROB = 0.01

_CHIP_STREAM_TAG = 0xC41B


@dataclass(frozen=True)
class TimingThresholds:
    tras_nominal: float = 35.0
    trp_nominal: float = 13.5
    t_decoder_reset: float = 3.0   # PRE shorter than this keeps decoder latches
    t_latch: float = 8.0           # sensing completes this long after ACT

    def __post_init__(self):
        if not 0 < self.t_decoder_reset < self.trp_nominal:
            raise InvalidConfigError(
                "need 0 < t_decoder_reset < trp_nominal, got "
                f"{self.t_decoder_reset} / {self.trp_nominal}")
        if not 0 < self.t_latch < self.tras_nominal:
            raise InvalidConfigError(
                "need 0 < t_latch < tras_nominal, got "
                f"{self.t_latch} / {self.tras_nominal}")


@dataclass(frozen=True)
class NoiseParams:
    """Imperfection magnitudes, all in VDD units unless noted.

    The defaults describe an ideal chip: every disturbance is zero and the
    restore-failure logistic midpoint sits at infinity (probability exactly 0).
    drive_slope stays nonzero there on purpose: a zero slope means a flat
    logistic, i.e. failure probability 0.5 for any row count.
    """
    sigma_amp_offset: float = 0.0    # static per-amp comparator offset
    sigma_trial: float = 0.0         # fresh sensing noise per trial
    temp_coeff: float = 0.0          # per-degC multiplier on sigma_trial
    sigma_cell_weight: float = 0.0   # relative cell capacitance spread
    coupling_kappa: float = 0.0      # bitline-to-bitline coupling scale
    sigma_frac: float = 0.0          # spread of an interrupted-restore voltage
    cm_sensitivity: float = 0.0      # sensing noise growth with common mode
    sigma_amp_strength: float = 0.0  # static per-amp restore drive spread
    drive_k0: float = math.inf       # restore-failure logistic midpoint (rows)
    drive_slope: float = 1.0         # restore-failure logistic steepness
    distance_beta: float = 0.0       # design-induced attenuation with distance
    sense_bias: float = 0.0          # fixed tilt toward latching 1 on the top terminal

    def __post_init__(self):
        for name in ("sigma_amp_offset", "sigma_trial", "sigma_cell_weight",
                     "coupling_kappa", "sigma_frac", "cm_sensitivity",
                     "sigma_amp_strength"):
            if getattr(self, name) < 0:
                raise InvalidConfigError(f"{name} must be >= 0")
        if not self.drive_k0 > 0:
            raise InvalidConfigError("drive_k0 must be > 0")

    @classmethod
    def zero(cls) -> "NoiseParams":
        return cls()


@dataclass(frozen=True)
class ChipProfile:
    name: str
    supports_simultaneous_neighbor_activation: bool
    supports_sequential_neighbor_activation: bool
    supports_n2n_pattern: bool
    max_log2_n: int = 4
    timing: TimingThresholds = field(default_factory=TimingThresholds)
    noise: NoiseParams = field(default_factory=NoiseParams)
    rowhammer_threshold: int = 50_000

    def __post_init__(self):
        if (self.supports_simultaneous_neighbor_activation
                and not self.supports_sequential_neighbor_activation):
            raise InvalidConfigError(
                "a chip that merges activations can also chain them: "
                "simultaneous implies sequential")
        if self.max_log2_n < 0:
            raise InvalidConfigError("max_log2_n must be >= 0")
        if self.rowhammer_threshold < 0:
            raise InvalidConfigError("rowhammer_threshold must be >= 0")

    def check_rows(self, topology: BankTopology) -> None:
        if self.max_log2_n >= topology.row_bits:
            raise InvalidConfigError(
                f"max_log2_n={self.max_log2_n} needs subarrays larger than "
                f"{topology.rows_per_subarray} rows")


@dataclass(frozen=True, eq=False)
class VariationSample:
    """Static per-chip imperfections, drawn once from (profile, seed)."""
    amp_offset: np.ndarray     # [amp arrays, columns]
    amp_strength: np.ndarray   # [amp arrays, columns]
    cell_weight: np.ndarray    # [subarrays, rows, columns]


def sample_chip(profile: ChipProfile, seed: int,
                topology: BankTopology) -> VariationSample:
    rng = np.random.default_rng(np.random.SeedSequence([_CHIP_STREAM_TAG, seed]))
    n = profile.noise
    amps = topology.num_amp_arrays
    shape_cells = (topology.num_subarrays, topology.rows_per_subarray,
                   topology.columns)
    offset = rng.normal(0.0, 1.0, (amps, topology.columns)) * n.sigma_amp_offset
    strength = 1.0 + rng.normal(0.0, 1.0,
                                (amps, topology.columns)) * n.sigma_amp_strength
    np.clip(strength, 0.05, None, out=strength)
    weight = 1.0 + rng.normal(0.0, 1.0, shape_cells) * n.sigma_cell_weight
    np.clip(weight, 0.05, 1.95, out=weight)
    return VariationSample(amp_offset=offset, amp_strength=strength,
                           cell_weight=weight)


def trial_sigma(noise: NoiseParams, temperature: float) -> float:
    if not 20.0 <= temperature <= 110.0:
        raise InvalidConfigError(
            f"temperature {temperature} outside supported range [20, 110]")
    return noise.sigma_trial * (1.0 + noise.temp_coeff * (temperature - 50.0))


def trial_noise(noise: NoiseParams, temperature: float,
                rng: np.random.Generator, size=None):
    return rng.normal(0.0, trial_sigma(noise, temperature), size)


def restore_failure_prob(noise: NoiseParams, k_rows, distance_factor,
                         amp_strength):
    """Chance that a driven cell fails to take the latched value.

    Logistic in the number of rows the amp must drive at once, with the
    midpoint derated by distance from the stripe and by amp strength.
    Scalar or ndarray distance_factor/amp_strength, clamped to [0, 1).
    """
    if np.any(np.asarray(k_rows) < 1):
        raise InvalidConfigError("k_rows must be >= 1")
    if noise.drive_slope == 0.0:
        return np.broadcast_arrays(
            np.asarray(k_rows, dtype=np.float64),
            np.asarray(distance_factor), np.asarray(amp_strength)
        )[0] * 0.0 + 0.5
    midpoint = (noise.drive_k0 * np.asarray(amp_strength)
                * (1.0 - noise.distance_beta * np.asarray(distance_factor)))
    arg = np.where(np.isinf(midpoint), -np.inf,
                   (np.asarray(k_rows) - midpoint) * noise.drive_slope)
    p = expit(arg)
    return np.minimum(p, 1.0 - 1e-12)


def coupling_shift(noise: NoiseParams, left_neighbor_bit, right_neighbor_bit):
    """Static shift from the two horizontally adjacent bitlines; None = idle."""
    left = 0.5 if left_neighbor_bit is None else float(left_neighbor_bit)
    right = 0.5 if right_neighbor_bit is None else float(right_neighbor_bit)
    return noise.coupling_kappa * ((left + right) - 1.0)


def hammer(topology: BankTopology, profile: ChipProfile, subarray: int,
           aggressor_row: int, activation_count: int,
           rng: np.random.Generator,
           flip_prob: float = DEFAULT_FLIP_PROB) -> dict[int, np.ndarray]:
    """Bitflip masks per victim row for one hammering episode.

    Victims are the physically adjacent rows of the aggressor in the same
    subarray. Returns {global victim row: bool mask over columns}; empty when
    the activation count stays below the profile threshold.
    """
    if activation_count < 0:
        raise InvalidConfigError("activation_count must be >= 0")
    if activation_count < profile.rowhammer_threshold:
        return {}
    flips: dict[int, np.ndarray] = {}
    for victim in topology.physical_neighbors(aggressor_row):
        mask = rng.random(topology.columns) < flip_prob
        if mask.any():
            flips[topology.global_row(subarray, victim)] = mask
    return flips


# ---- built-in profiles ----------------------------------------------------

def _tuned_noise() -> NoiseParams:
    return NoiseParams(
        sigma_amp_offset=0.05,
        sigma_trial=0.06,
        temp_coeff=0.002,
        sigma_cell_weight=0.04,
        coupling_kappa=0.12,
        sigma_frac=0.45,
        cm_sensitivity=0.5,
        sigma_amp_strength=0.08,
        drive_k0=34.0,
        drive_slope=0.16,
        distance_beta=0.15,
        sense_bias=0.02,
    )


def _builtin(name: str) -> ChipProfile:
    if name == "ideal":
        return ChipProfile(
            name=name,
            supports_simultaneous_neighbor_activation=True,
            supports_sequential_neighbor_activation=True,
            supports_n2n_pattern=True,
            noise=NoiseParams.zero(),
        )
    if name == "vendorA-like":
        return ChipProfile(
            name=name,
            supports_simultaneous_neighbor_activation=True,
            supports_sequential_neighbor_activation=True,
            supports_n2n_pattern=True,
            noise=_tuned_noise(),
        )
    if name == "vendorB-like":
        # chains activations but never merges them: NOT works, N-ary does not
        return ChipProfile(
            name=name,
            supports_simultaneous_neighbor_activation=False,
            supports_sequential_neighbor_activation=True,
            supports_n2n_pattern=False,
            noise=_tuned_noise(),
        )
    if name == "vendorC-like":
        # ignores the timing violation altogether
        return ChipProfile(
            name=name,
            supports_simultaneous_neighbor_activation=False,
            supports_sequential_neighbor_activation=False,
            supports_n2n_pattern=False,
            noise=_tuned_noise(),
        )
    raise InvalidConfigError(f"unknown profile {name!r}")


PROFILE_NAMES = ("ideal", "vendorA-like", "vendorB-like", "vendorC-like")


def get_profile(name: str) -> ChipProfile:
    return _builtin(name)


def override_profile(profile: ChipProfile, *,
                     timing: TimingThresholds | dict | None = None,
                     noise: NoiseParams | dict | None = None,
                     **fields) -> ChipProfile:
    """Field-by-field override used by the config file loader (fail-closed).

    `timing`/`noise` accept either a whole replacement object or a dict of
    individual field overrides; unknown keys are rejected.
    """
    if isinstance(timing, TimingThresholds):
        profile = replace(profile, timing=timing)
    elif timing:
        _check_fields(TimingThresholds, timing)
        profile = replace(profile, timing=replace(profile.timing, **timing))
    if isinstance(noise, NoiseParams):
        profile = replace(profile, noise=noise)
    elif noise:
        _check_fields(NoiseParams, noise)
        profile = replace(profile, noise=replace(profile.noise, **noise))
    if fields:
        _check_fields(ChipProfile, fields)
        profile = replace(profile, **fields)
    return profile


def _check_fields(cls, values: dict) -> None:
    allowed = set(cls.__dataclass_fields__)
    unknown = set(values) - allowed
    if unknown:
        raise InvalidConfigError(
            f"unknown {cls.__name__} fields: {sorted(unknown)}")
