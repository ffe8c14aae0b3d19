"""Analog-behavioral simulator of in-DRAM bulk bitwise computation.

Models how timing-violating ACT-PRE-ACT command sequences on commodity
DDR4 chips activate multiple rows at once and let the sense amplifiers
compute NOT, many-input AND/OR/NAND/NOR, and 3-input majority directly
inside the bank, including the analog failure modes (charge sharing,
restore failures, process variation) that make those operations
probabilistic on real silicon.
"""

from .config import RunConfig, load_config, make_spec, resolve_seed
from .decoder import (ActivationSet, PatternKind, activation_sets,
                      pattern_coverage)
from .engine import (Act, Engine, Idle, Pre, Rd, Wr, bits_to_mask,
                     format_trace, mask_to_bits, parse_trace, validate_trace)
from .errors import (AmbiguousOrderError, CapabilityError,
                     InvalidConfigError, NotActivatedError, NotAdjacentError,
                     PudsimError, TraceError)
from .harness import (DEFAULT_SEED, EXPERIMENT_KINDS, CoverageReport,
                      ExperimentSpec, GroupResult, RowOrderReport,
                      SubarrayMapReport, SuccessRateReport, box_stats,
                      infer_row_order, infer_subarray_map, run_experiment,
                      write_csv)
from .pudops import (LogicKind, Maj3Result, NaryOpSpec, NaryResult,
                     NotResult, build_copy_trace, build_frac_trace,
                     build_nary_trace, frac_store_half, majority3,
                     nary_logic, not_op, plan_nary, plan_not, rowclone)
from .topology import BankTopology, Region, TopologyConfig, build_topology
from .variation import (DEFAULT_FLIP_PROB, PROFILE_NAMES, ChipProfile,
                        NoiseParams, TimingThresholds, VariationSample,
                        get_profile, hammer, override_profile,
                        restore_failure_prob, sample_chip, trial_sigma)

__version__ = "0.1.0"

__all__ = [
    "Act", "ActivationSet", "AmbiguousOrderError", "BankTopology",
    "CapabilityError", "ChipProfile", "CoverageReport", "DEFAULT_FLIP_PROB",
    "DEFAULT_SEED", "EXPERIMENT_KINDS", "Engine", "ExperimentSpec",
    "GroupResult", "Idle", "InvalidConfigError", "LogicKind", "Maj3Result",
    "NaryOpSpec", "NaryResult", "NoiseParams", "NotActivatedError",
    "NotAdjacentError", "NotResult", "PROFILE_NAMES", "PatternKind", "Pre",
    "PudsimError", "Rd", "Region", "RowOrderReport", "RunConfig",
    "SubarrayMapReport", "SuccessRateReport", "TimingThresholds",
    "TopologyConfig", "TraceError", "VariationSample", "Wr",
    "activation_sets", "bits_to_mask", "box_stats", "build_copy_trace",
    "build_frac_trace", "build_nary_trace", "build_topology", "format_trace",
    "frac_store_half", "get_profile", "hammer", "infer_row_order",
    "infer_subarray_map", "load_config", "majority3", "make_spec",
    "mask_to_bits", "nary_logic", "not_op", "override_profile",
    "parse_trace", "pattern_coverage", "plan_nary", "plan_not",
    "restore_failure_prob", "rowclone", "run_experiment", "sample_chip",
    "trial_sigma", "validate_trace", "write_csv",
]
