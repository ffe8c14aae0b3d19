"""Monte Carlo characterization experiments and report persistence.

Every experiment is a deterministic function of (spec, seed). Trials run in
fixed-size blocks whose generators derive from
``SeedSequence([seed, kind tag, config, anchor, block])``; block results are
integer success counts, so accumulation order cannot change a report and any
worker count produces byte-identical CSVs.

Paired comparisons (AND vs OR, fixed vs random data, one temperature vs
another) intentionally share those block seeds: the runs see common random
numbers and their difference reflects the modeled effect, not resampling
noise. One simulated chip per seed; sweeping seeds stands in for sweeping
chips.
"""

from __future__ import annotations

import math
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .decoder import PatternKind, coverage_sort_key, pattern_coverage
from .engine import Engine
from .errors import AmbiguousOrderError, CapabilityError, InvalidConfigError
from .pudops import (LogicKind, NaryOpSpec, build_copy_trace, nary_logic,
                     plan_nary, plan_not)
from .topology import BankTopology, TopologyConfig, build_topology
from .variation import (DEFAULT_FLIP_PROB, ChipProfile, get_profile, hammer,
                        override_profile, sample_chip)

DEFAULT_SEED = 0x5EED
BLOCK_TRIALS = 500
FILTER_TRIALS = 1000          # pre-pass length for the >90% NOT cell filter
FILTER_THRESHOLD = 0.9

DEFAULT_DEST_COUNTS = (1, 2, 4, 8, 16, 32)
DEFAULT_INPUT_COUNTS = (2, 4, 8, 16)
DEFAULT_TEMPERATURES = (50.0, 60.0, 70.0, 80.0, 95.0)

EXPERIMENT_KINDS = ("not_sweep", "logic_sweep", "logic1_count",
                    "region_heatmap", "temperature_sweep", "pattern_compare",
                    "coverage", "reveng_subarrays", "reveng_roworder")
_KIND_TAGS = {kind: 11 + i for i, kind in enumerate(EXPERIMENT_KINDS)}
_FILTER_TAG = 98

SUCCESS_HEADER = ("kind,n,temperature,pattern,region_f,region_l,"
                  "cell_id,success_rate")

_REASON_NO_NEIGHBOR = "no neighbor activation"
_REASON_NO_MERGE = "no multi-row activation"
_REASON_NO_N2N = "no N:2N activation"


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    profile: str = "vendorA-like"
    seed: int = DEFAULT_SEED
    trials: int = 10000
    temperatures: tuple[float, ...] = ()
    n_values: tuple[int, ...] = ()      # destination counts / input counts
    k_values: tuple[int, ...] = ()      # logic1_count only
    data_pattern: str = "all1s0s"
    filter_not90: bool | None = None    # None: on for logic kinds
    anchors: int = 8
    flip_prob: float = DEFAULT_FLIP_PROB
    subarray: int = 0                   # reveng_roworder target
    workers: int = 1
    overrides: dict = field(default_factory=dict)
    topology: TopologyConfig = field(default_factory=TopologyConfig)


def _validate_spec(spec: ExperimentSpec) -> None:
    if spec.kind not in EXPERIMENT_KINDS:
        raise InvalidConfigError(f"unknown experiment kind {spec.kind!r}")
    if spec.trials < 1:
        raise InvalidConfigError("trials must be >= 1")
    if spec.data_pattern not in ("all1s0s", "random"):
        raise InvalidConfigError(
            f"unknown data pattern {spec.data_pattern!r}")
    if spec.anchors < 1:
        raise InvalidConfigError("anchors must be >= 1")
    if spec.workers < 1:
        raise InvalidConfigError("workers must be >= 1")


def resolve_profile(spec: ExperimentSpec) -> ChipProfile:
    overrides = dict(spec.overrides)
    timing = overrides.pop("timing", None)
    noise = overrides.pop("noise", None)
    return override_profile(get_profile(spec.profile),
                            timing=timing, noise=noise, **overrides)


# ---- reports ---------------------------------------------------------------

def box_stats(values) -> dict[str, float]:
    """Box-and-whiskers summary; quartiles are medians of the sorted halves."""
    x = np.sort(np.asarray(values, dtype=np.float64))
    if x.size == 0:
        raise InvalidConfigError("no cells to aggregate")
    lower = x[: x.size // 2]
    upper = x[(x.size + 1) // 2:]
    half = lambda h: float(np.median(h)) if h.size else float(np.median(x))
    return {"mean": float(x.mean()), "min": float(x[0]),
            "q1": half(lower), "median": float(np.median(x)),
            "q3": half(upper), "max": float(x[-1])}


@dataclass
class GroupResult:
    kind: str
    n: int
    temperature: float
    pattern: str
    region_f: str
    region_l: str
    cell_ids: np.ndarray     # global row * columns + column
    successes: np.ndarray    # per cell, out of `trials`
    trials: int
    reason: str = ""         # non-empty when capability-blocked (0% recorded)

    def rates(self) -> np.ndarray:
        return self.successes / self.trials


_GROUP_KEYS = ("kind", "n", "temperature", "pattern", "region_f", "region_l")


class SuccessRateReport:
    def __init__(self, experiment: str, trials: int,
                 groups: list[GroupResult]):
        self.experiment = experiment
        self.trials = trials
        self.groups = groups

    def select(self, **keys) -> list[GroupResult]:
        bad = set(keys) - set(_GROUP_KEYS)
        if bad:
            raise InvalidConfigError(f"unknown group keys {sorted(bad)}")
        return [g for g in self.groups
                if all(getattr(g, k) == v for k, v in keys.items())]

    def rates(self, **keys) -> np.ndarray:
        picked = self.select(**keys)
        if not picked:
            raise InvalidConfigError(f"no groups match {keys}")
        return np.concatenate([g.rates() for g in picked])

    def mean(self, **keys) -> float:
        return float(self.rates(**keys).mean())

    def median(self, **keys) -> float:
        return float(np.median(self.rates(**keys)))

    def box(self, **keys) -> dict[str, float]:
        return box_stats(self.rates(**keys))

    def summary(self) -> list[dict[str, Any]]:
        """One row per (kind, n, temperature, pattern), sorted."""
        seen: dict[tuple, list[GroupResult]] = {}
        for g in self.groups:
            seen.setdefault((g.kind, g.n, g.temperature, g.pattern),
                            []).append(g)
        out = []
        for key in sorted(seen):
            gs = seen[key]
            rates = np.concatenate([g.rates() for g in gs])
            out.append({"kind": key[0], "n": key[1], "temperature": key[2],
                        "pattern": key[3], "cells": int(rates.size),
                        "mean": float(rates.mean()),
                        "reason": gs[0].reason})
        return out


@dataclass
class CoverageReport:
    fractions: dict[str, float]


@dataclass
class SubarrayMapReport:
    assignment: tuple[int, ...]          # global row -> subarray index


@dataclass
class RowOrderReport:
    subarray: int
    order: tuple[int, ...]               # physical position -> address


# ---- units: one (config, anchor) simulation --------------------------------

@dataclass
class _Unit:
    op: str                              # "not" | "logic"
    temperature: float
    entropy: tuple[int, int, int]        # (kind tag, config idx, anchor idx)
    groups: tuple[tuple[dict, tuple[int, ...]], ...]   # (labels, judged rows)
    valid_cols: np.ndarray
    trials: int
    blocked: str = ""
    # not-op payload
    init_rows: tuple[int, ...] = ()
    trace: tuple = ()
    data_pattern: str = "all1s0s"
    # logic payload
    nary: NaryOpSpec | None = None
    base_kind: LogicKind | None = None
    k_fixed: int | None = None

    @property
    def cell_count(self) -> int:
        return sum(len(rows) for _, rows in self.groups) * self.valid_cols.size


def _pattern_bits(unit: _Unit, data_rng: np.random.Generator,
                  trial_idx: int, columns: int) -> np.ndarray:
    if unit.data_pattern == "random":
        return data_rng.integers(0, 2, columns, dtype=np.uint8)
    # all1s0s: the two constant patterns, alternating trial by trial
    return np.full(columns, (trial_idx + 1) % 2, dtype=np.uint8)


def _trial_not(eng: Engine, unit: _Unit, eng_rng, data_rng,
               trial_idx: int) -> np.ndarray:
    bits = _pattern_bits(unit, data_rng, trial_idx, eng.topology.columns)
    fbits = bits.astype(np.float64)
    for g in unit.init_rows:
        eng.poke_row(g, fbits)
    eng.execute(list(unit.trace), eng_rng)
    vc = unit.valid_cols
    want = bits[vc] == 0          # destination cells must hold the complement
    oks = []
    for _, rows in unit.groups:
        for g in rows:
            oks.append((eng.peek_row(g)[vc] > 0.5) == want)
    return np.concatenate(oks)


def _trial_logic(eng: Engine, unit: _Unit, eng_rng, data_rng,
                 trial_idx: int) -> np.ndarray:
    spec = unit.nary
    n = spec.n
    if unit.k_fixed is None:
        # balanced logic-1 counts: k uniform per column, ones in the first
        # k operand rows; exercises every margin class equally
        k = data_rng.integers(0, n + 1, eng.topology.columns)
    else:
        k = np.full(eng.topology.columns, unit.k_fixed)
    inputs = (np.arange(n)[:, None] < k).astype(np.uint8)
    out = nary_logic(eng, spec, inputs, eng_rng)
    if unit.base_kind is LogicKind.AND:
        truth = k == n
    else:
        truth = k >= 1
    vc = unit.valid_cols
    want = truth[vc].astype(np.uint8)
    return np.concatenate([out.result[vc] == want,
                           out.complement[vc] == 1 - want])


# ---- block execution (worker side) ------------------------------------------

_ENGINE_CACHE: dict[tuple, Engine] = {}


def _cached_engine(topo_cfg: TopologyConfig, profile: ChipProfile,
                   temperature: float, chip_seed: int) -> Engine:
    key = (topo_cfg, profile, temperature, chip_seed)
    eng = _ENGINE_CACHE.get(key)
    if eng is None:
        topo = build_topology(topo_cfg)
        sample = sample_chip(profile, chip_seed, topo)
        eng = Engine(topo, profile, sample=sample, temperature=temperature)
        _ENGINE_CACHE[key] = eng
    return eng


def _run_block(task) -> np.ndarray:
    unit, topo_cfg, profile, chip_seed, entropy, n_trials, first_trial = task
    eng = _cached_engine(topo_cfg, profile, unit.temperature, chip_seed)
    eng_ss, data_ss = np.random.SeedSequence(entropy).spawn(2)
    eng_rng = np.random.default_rng(eng_ss)
    data_rng = np.random.default_rng(data_ss)
    trial = _trial_not if unit.op == "not" else _trial_logic
    counts = np.zeros(unit.cell_count, dtype=np.uint64)
    for t in range(n_trials):
        counts += trial(eng, unit, eng_rng, data_rng, first_trial + t)
    return counts


def _run_units(spec: ExperimentSpec, profile: ChipProfile,
               units: list[_Unit]) -> list[np.ndarray]:
    totals = [np.zeros(u.cell_count, dtype=np.uint64) for u in units]
    tasks = []
    for ui, unit in enumerate(units):
        if unit.blocked:
            continue
        for b in range(math.ceil(spec.trials / BLOCK_TRIALS)):
            first = b * BLOCK_TRIALS
            n = min(BLOCK_TRIALS, spec.trials - first)
            entropy = (spec.seed, *unit.entropy, b)
            tasks.append((ui, (unit, spec.topology, profile, spec.seed,
                               entropy, n, first)))
    if spec.workers > 1:
        ctx = mp.get_context("fork")
        with ProcessPoolExecutor(max_workers=spec.workers,
                                 mp_context=ctx) as pool:
            for (ui, _), counts in zip(
                    tasks, pool.map(_run_block, [t for _, t in tasks],
                                    chunksize=4)):
                totals[ui] += counts
    else:
        for ui, task in tasks:
            totals[ui] += _run_block(task)
    return totals


# ---- unit builders -----------------------------------------------------------

def _anchor_bases(topology: BankTopology, anchors: int) -> list[int]:
    r = topology.rows_per_subarray
    return [(i * r) // anchors for i in range(anchors)]


def _permissive(profile: ChipProfile) -> ChipProfile:
    return override_profile(
        profile,
        supports_sequential_neighbor_activation=True,
        supports_simultaneous_neighbor_activation=True,
        supports_n2n_pattern=True)


def _blocked_reason(profile: ChipProfile, pattern: PatternKind,
                    multi_row: bool) -> str:
    if not profile.supports_sequential_neighbor_activation:
        return _REASON_NO_NEIGHBOR
    if pattern is PatternKind.N2N and not profile.supports_n2n_pattern:
        return _REASON_NO_N2N
    if multi_row and not profile.supports_simultaneous_neighbor_activation:
        return _REASON_NO_MERGE
    return ""


def _not_unit(topology: BankTopology, profile: ChipProfile, dest: int,
              pattern: PatternKind, base: int, temperature: float,
              entropy: tuple[int, int, int], trials: int,
              data_pattern: str, pattern_label: str | None = None) -> _Unit:
    reason = _blocked_reason(profile, pattern, dest > 1)
    planner = _permissive(profile) if reason else profile
    plan = plan_not(topology, planner, (0, 1), dest, pattern, min_base=base)
    shared = topology.amp_between((0, 1))
    label = {
        "kind": "NOT", "n": dest, "temperature": temperature,
        "pattern": pattern_label if pattern_label is not None
        else plan.pattern.value,
        "region_f": topology.region_of(0, plan.r_f, shared).value,
        "region_l": topology.region_of(1, plan.r_l, shared).value,
    }
    dsts = tuple(topology.global_row(1, a) for a in plan.rows_compute)
    srcs = tuple(topology.global_row(0, a) for a in plan.rows_ref)
    return _Unit(op="not", temperature=temperature, entropy=entropy,
                 groups=((label, dsts),), valid_cols=plan.valid_columns,
                 trials=trials, blocked=reason, init_rows=srcs + dsts,
                 trace=plan.trace, data_pattern=data_pattern)


def _logic_unit(topology: BankTopology, profile: ChipProfile,
                base_kind: LogicKind, n: int, base: int, temperature: float,
                entropy: tuple[int, int, int], trials: int,
                pattern_label: str, k_fixed: int | None = None) -> _Unit:
    reason = _blocked_reason(profile, PatternKind.NN, True)
    planner = _permissive(profile) if reason else profile
    plan = plan_nary(topology, planner, (0, 1), base_kind, n, min_base=base)
    shared = topology.amp_between((0, 1))
    common = {
        "n": n, "temperature": temperature, "pattern": pattern_label,
        "region_f": topology.region_of(plan.sub_ref, plan.r_f, shared).value,
        "region_l": topology.region_of(plan.sub_compute, plan.r_l,
                                       shared).value,
    }
    inverse = {LogicKind.AND: LogicKind.NAND, LogicKind.OR: LogicKind.NOR}
    result_row = topology.global_row(plan.sub_compute, plan.rows_compute[0])
    comp_row = topology.global_row(plan.sub_ref, plan.rows_ref[0])
    groups = (
        (dict(common, kind=base_kind.name), (result_row,)),
        (dict(common, kind=inverse[base_kind].name), (comp_row,)),
    )
    return _Unit(op="logic", temperature=temperature, entropy=entropy,
                 groups=groups, valid_cols=plan.valid_columns, trials=trials,
                 blocked=reason, nary=plan, base_kind=base_kind,
                 k_fixed=k_fixed)


def _build_units(spec: ExperimentSpec, topology: BankTopology,
                 profile: ChipProfile) -> list[_Unit]:
    tag = _KIND_TAGS[spec.kind]
    bases = _anchor_bases(topology, spec.anchors)
    temp = spec.temperatures[0] if spec.temperatures else 50.0
    units: list[_Unit] = []

    if spec.kind == "not_sweep":
        dests = spec.n_values or DEFAULT_DEST_COUNTS
        configs = []
        for d in dests:
            if d.bit_length() - 1 <= profile.max_log2_n:
                configs.append((d, PatternKind.NN))
            if d > 1 and d % 2 == 0 \
                    and (d // 2).bit_length() - 1 <= profile.max_log2_n:
                configs.append((d, PatternKind.N2N))
        for ci, (d, pat) in enumerate(configs):
            for ai, base in enumerate(bases):
                units.append(_not_unit(topology, profile, d, pat, base, temp,
                                       (tag, ci, ai), spec.trials,
                                       spec.data_pattern))

    elif spec.kind in ("region_heatmap", "temperature_sweep",
                       "pattern_compare"):
        temps = [temp]
        patterns = [spec.data_pattern]
        if spec.kind == "temperature_sweep":
            temps = list(spec.temperatures or DEFAULT_TEMPERATURES)
        elif spec.kind == "pattern_compare":
            patterns = ["all1s0s", "random"]
        # config index stays 0 across temps/patterns: paired runs share seeds
        for t in temps:
            for pat_name in patterns:
                for ai, base in enumerate(bases):
                    units.append(_not_unit(
                        topology, profile, 1, PatternKind.NN, base, t,
                        (tag, 0, ai), spec.trials, pat_name,
                        pattern_label=pat_name
                        if spec.kind == "pattern_compare" else None))

    elif spec.kind == "logic_sweep":
        n_values = spec.n_values or DEFAULT_INPUT_COUNTS
        for ci, n in enumerate(n_values):
            for base_kind in (LogicKind.AND, LogicKind.OR):
                for ai, base in enumerate(bases):
                    units.append(_logic_unit(topology, profile, base_kind, n,
                                             base, temp, (tag, ci, ai),
                                             spec.trials, spec.data_pattern))

    elif spec.kind == "logic1_count":
        n = spec.n_values[0] if spec.n_values else 16
        k_values = spec.k_values or tuple(range(n + 1))
        for ci, k in enumerate(k_values):
            if not 0 <= k <= n:
                raise InvalidConfigError(f"k={k} outside [0, {n}]")
            for ai, base in enumerate(bases):
                units.append(_logic_unit(topology, profile, LogicKind.AND, n,
                                         base, temp, (tag, ci, ai),
                                         spec.trials, f"k={k}", k_fixed=k))
    else:
        raise InvalidConfigError(f"{spec.kind} does not build trial units")
    return units


# ---- the >90% NOT cell filter -------------------------------------------------

def _not90_mask(spec: ExperimentSpec, topology: BankTopology,
                profile: ChipProfile, unit: _Unit, group_idx: int,
                judged_row: int) -> np.ndarray:
    sub, addr = topology.split_row(judged_row)
    src = topology.global_row(1 - sub, addr)
    trace = build_copy_trace(profile.timing, src, judged_row)
    eng = _cached_engine(spec.topology, profile, unit.temperature, spec.seed)
    entropy = (spec.seed, _FILTER_TAG, *unit.entropy[1:], group_idx)
    rng = np.random.default_rng(np.random.SeedSequence(entropy))
    vc = unit.valid_cols
    hits = np.zeros(vc.size, dtype=np.int64)
    probe = _Unit(op="not", temperature=unit.temperature,
                  entropy=unit.entropy, groups=(({}, (judged_row,)),),
                  valid_cols=vc, trials=FILTER_TRIALS,
                  init_rows=(src, judged_row), trace=trace)
    data_rng = np.random.default_rng(0)   # unused for all1s0s
    for t in range(FILTER_TRIALS):
        hits += _trial_not(eng, probe, rng, data_rng, t)
    return hits / FILTER_TRIALS > FILTER_THRESHOLD


def _filter_masks(spec: ExperimentSpec, topology: BankTopology,
                  profile: ChipProfile,
                  units: list[_Unit]) -> dict[tuple[int, int], np.ndarray]:
    enabled = spec.filter_not90
    if enabled is None:
        enabled = spec.kind in ("logic_sweep", "logic1_count")
    if not enabled:
        return {}
    masks: dict[tuple[int, int], np.ndarray] = {}
    cache: dict[tuple, np.ndarray] = {}
    for ui, unit in enumerate(units):
        if unit.op != "logic" or unit.blocked:
            continue
        for gi, (_, rows) in enumerate(unit.groups):
            key = (unit.temperature, rows[0])
            if key not in cache:
                cache[key] = _not90_mask(spec, topology, profile, unit, gi,
                                         rows[0])
            masks[(ui, gi)] = cache[key]
    return masks


# ---- assembly -----------------------------------------------------------------

def _assemble(spec: ExperimentSpec, topology: BankTopology,
              units: list[_Unit], totals: list[np.ndarray],
              masks: dict[tuple[int, int], np.ndarray]) -> SuccessRateReport:
    columns = topology.columns
    groups: list[GroupResult] = []
    for ui, (unit, counts) in enumerate(zip(units, totals)):
        vc = unit.valid_cols
        offset = 0
        for gi, (label, rows) in enumerate(unit.groups):
            width = len(rows) * vc.size
            cnt = counts[offset:offset + width]
            offset += width
            ids = (np.repeat(np.asarray(rows, dtype=np.uint64), vc.size)
                   * columns + np.tile(vc, len(rows)).astype(np.uint64))
            mask = masks.get((ui, gi))
            if mask is not None:
                full = np.tile(mask, len(rows))
                ids, cnt = ids[full], cnt[full]
            groups.append(GroupResult(**label, cell_ids=ids,
                                      successes=cnt.astype(np.uint64),
                                      trials=spec.trials,
                                      reason=unit.blocked))
    return SuccessRateReport(spec.kind, spec.trials, groups)


# ---- reverse engineering --------------------------------------------------------

def infer_subarray_map(engine: Engine, rng: np.random.Generator,
                       episodes: int = 3) -> np.ndarray:
    """Recover the row-address -> subarray partition by copy probing.

    Copies between neighboring row addresses land upright inside a subarray
    and inverted across a boundary (the destination hangs off the opposite
    amp terminal). Initializing the destination to the complement makes the
    two cases unambiguous: an in-subarray copy moves cells toward the probe
    bits even when many widened rows fail their restore, while a cross-stripe
    copy leaves every cell at the complement. The 0.25 cut sits well below
    any restore-failure plateau.
    """
    topo, profile = engine.topology, engine.profile
    if not profile.supports_sequential_neighbor_activation:
        raise CapabilityError(
            "subarray probing needs back-to-back activation; this chip "
            "resets its row decoder on every precharge")
    columns = topo.columns
    bits = (np.arange(columns) % 2).astype(np.float64)
    assignment = np.zeros(topo.num_rows, dtype=np.int64)
    current = 0
    for g in range(topo.num_rows - 1):
        assignment[g] = current
        match = 0.0
        for _ in range(episodes):
            engine.poke_row(g, bits)
            engine.poke_row(g + 1, 1.0 - bits)
            engine.execute(build_copy_trace(profile.timing, g, g + 1), rng)
            match += np.mean((engine.peek_row(g + 1) > 0.5) == (bits > 0.5))
        if match / episodes < 0.25:
            current += 1
        assignment[g + 1] = current
    return assignment


def infer_row_order(engine: Engine, subarray: int, rng: np.random.Generator,
                    flip_prob: float = DEFAULT_FLIP_PROB) -> list[int]:
    """Recover the physical row order of one subarray from hammer victims.

    Rows whose repeated hammering flips bits in exactly one other row are the
    physical edges; flip co-occurrence gives the adjacency path. The result
    starts at the lower-addressed edge, so it equals the ground-truth order
    or its exact reversal.
    """
    topo, profile = engine.topology, engine.profile
    r = topo.rows_per_subarray
    columns = topo.columns
    if flip_prob > 0:
        # enough victim cells that a neighbor escaping every episode is
        # vanishingly unlikely: (1-p)^(episodes*columns) < 1e-7
        per_episode = -math.log1p(-min(flip_prob, 0.5)) * columns
        episodes = max(1, math.ceil(16.2 / per_episode))
    else:
        episodes = 1
    adjacency: dict[int, set[int]] = {a: set() for a in range(r)}
    for addr in range(r):
        for _ in range(episodes):
            flips = hammer(topo, profile, subarray, addr,
                           profile.rowhammer_threshold, rng, flip_prob)
            for victim_global in flips:
                victim = victim_global - subarray * r
                adjacency[addr].add(victim)
                adjacency[victim].add(addr)
    ends = [a for a in range(r) if len(adjacency[a]) == 1]
    edge_count = sum(len(v) for v in adjacency.values()) // 2
    if len(ends) != 2 or edge_count != r - 1 \
            or any(len(v) > 2 for v in adjacency.values()):
        raise AmbiguousOrderError(
            "hammer evidence does not form a single path "
            f"({len(ends)} endpoints, {edge_count} edges for {r} rows)")
    order = [min(ends)]
    prev = -1
    while len(order) < r:
        nxt = [a for a in adjacency[order[-1]] if a != prev]
        if len(nxt) != 1:
            raise AmbiguousOrderError("hammer adjacency branches")
        prev = order[-1]
        order.append(nxt[0])
    return order


# ---- experiment entry point ------------------------------------------------------

def run_experiment(spec: ExperimentSpec):
    _validate_spec(spec)
    topology = build_topology(spec.topology)
    profile = resolve_profile(spec)
    profile.check_rows(topology)

    if spec.kind == "coverage":
        return CoverageReport(pattern_coverage(topology, profile))

    if spec.kind in ("reveng_subarrays", "reveng_roworder"):
        engine = _cached_engine(spec.topology, profile, 50.0, spec.seed)
        entropy = (spec.seed, _KIND_TAGS[spec.kind], 0, 0, 0)
        rng = np.random.default_rng(np.random.SeedSequence(entropy))
        if spec.kind == "reveng_subarrays":
            return SubarrayMapReport(
                tuple(int(x) for x in infer_subarray_map(engine, rng)))
        if not 0 <= spec.subarray < topology.num_subarrays:
            raise InvalidConfigError(f"no subarray {spec.subarray}")
        order = infer_row_order(engine, spec.subarray, rng, spec.flip_prob)
        return RowOrderReport(spec.subarray, tuple(order))

    units = _build_units(spec, topology, profile)
    masks = _filter_masks(spec, topology, profile, units)
    totals = _run_units(spec, profile, units)
    return _assemble(spec, topology, units, totals, masks)


# ---- CSV persistence ---------------------------------------------------------------

def _fmt_num(x: float) -> str:
    return f"{x:g}"


def write_csv(report, path) -> None:
    if isinstance(report, SuccessRateReport):
        rows = []
        for g in report.groups:
            rate = g.rates()
            for i in range(g.cell_ids.size):
                rows.append((g.kind, g.n, g.temperature, g.pattern,
                             g.region_f, g.region_l, int(g.cell_ids[i]),
                             f"{rate[i]:.6f}"))
        rows.sort()
        lines = [SUCCESS_HEADER]
        lines += [f"{k},{n},{_fmt_num(t)},{p},{rf},{rl},{c},{s}"
                  for k, n, t, p, rf, rl, c, s in rows]
    elif isinstance(report, CoverageReport):
        lines = ["pattern,fraction"]
        for label in sorted(report.fractions, key=coverage_sort_key):
            lines.append(f"{label},{report.fractions[label]:.6f}")
    elif isinstance(report, SubarrayMapReport):
        lines = ["row,subarray"]
        lines += [f"{row},{sub}"
                  for row, sub in enumerate(report.assignment)]
    elif isinstance(report, RowOrderReport):
        lines = ["row,physical_position"]
        base = report.subarray * len(report.order)
        by_row = sorted((base + addr, pos)
                        for pos, addr in enumerate(report.order))
        lines += [f"{row},{pos}" for row, pos in by_row]
    else:
        raise InvalidConfigError(f"cannot serialize {type(report).__name__}")
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
