"""Bulk bitwise operations composed from timing-violating command traces.

Three trace shapes cover everything here:

- copy/complement: full activation, short PRE, second ACT, long idle. The
  second row set joins an already-latched stripe and is driven toward the
  terminal on its own side; crossing the shared stripe lands on the opposite
  terminal, which is why cross-subarray chaining inverts and same-subarray
  chaining copies.
- merged logic: two ACTs a few ns apart so every row joins while the stripe
  is still charge-sharing, then one sense decides majority against the
  reference side.
- fractional store: same short gap, but PRE fires before the sense does, so
  the connected cells keep the shared intermediate voltage.

All row arguments are global row ids unless a name says otherwise.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .decoder import PatternKind, activation_sets
from .engine import Act, Command, Engine, Idle, Pre
from .errors import (CapabilityError, InvalidConfigError, NotAdjacentError)
from .topology import BankTopology
from .variation import ChipProfile, TimingThresholds


class LogicKind(enum.Enum):
    AND = "AND"
    OR = "OR"
    NAND = "NAND"
    NOR = "NOR"

    @property
    def inverting(self) -> bool:
        return self in (LogicKind.NAND, LogicKind.NOR)

    @property
    def reference_fill(self) -> float:
        """Value the non-fractional reference rows hold."""
        return 1.0 if self in (LogicKind.AND, LogicKind.NAND) else 0.0


@dataclass(frozen=True)
class NaryOpSpec:
    kind: LogicKind | None        # None for plain multi-destination NOT
    n: int                        # operand count (reference-side rows)
    sub_ref: int
    sub_compute: int
    rows_ref: tuple[int, ...]     # in-subarray addresses
    rows_compute: tuple[int, ...]
    r_f: int                      # anchor addresses handed to the decoder
    r_l: int
    pattern: PatternKind
    valid_columns: np.ndarray
    trace: tuple[Command, ...]


@dataclass(frozen=True)
class NotResult:
    destination_rows: tuple[int, ...]  # global ids holding the complement
    collateral_rows: tuple[int, ...]   # source-side block rows driven with copies
    valid_columns: np.ndarray
    trace: tuple[Command, ...]


@dataclass(frozen=True)
class RowCloneResult:
    valid_columns: np.ndarray
    collateral_rows: tuple[int, ...]   # global ids clobbered with copies
    trace: tuple[Command, ...]


@dataclass(frozen=True)
class FracResult:
    partner_row: int                   # global id, left at the shared value
    trace: tuple[Command, ...]


@dataclass(frozen=True)
class NaryResult:
    result: np.ndarray                 # thresholded bits, full row width
    complement: np.ndarray
    margins: np.ndarray                # |v_compute - v_ref| at sense time
    sense_columns: np.ndarray
    spec: NaryOpSpec


@dataclass(frozen=True)
class Maj3Result:
    result: np.ndarray
    clobbered_rows: tuple[int, ...]    # all quad rows end up holding MAJ
    trace: tuple[Command, ...]


# ---- trace builders (dry-run external interface) ---------------------------

def _short_pre(timing: TimingThresholds) -> float:
    return timing.t_decoder_reset / 3.0


def build_copy_trace(timing: TimingThresholds, src: int, dst: int) -> list[Command]:
    """Chained activation with a settled latch: copy or complement."""
    return [Act(src, timing.tras_nominal),
            Pre(_short_pre(timing)),
            Act(dst, 0.0),
            Idle(timing.tras_nominal),
            Pre(timing.trp_nominal)]


def build_nary_trace(timing: TimingThresholds, r_f: int, r_l: int) -> list[Command]:
    """Both ACTs land inside the charge-sharing window; one sense decides."""
    gap = 2.0 * timing.t_decoder_reset / 3.0
    lead = gap + _short_pre(timing)
    if lead >= timing.t_latch:
        raise InvalidConfigError("t_latch too short for a merged activation")
    idle = timing.t_latch + timing.tras_nominal - lead
    return [Act(r_f, gap),
            Pre(_short_pre(timing)),
            Act(r_l, 0.0),
            Idle(idle),
            Pre(timing.trp_nominal)]


def build_frac_trace(timing: TimingThresholds, row: int, partner: int) -> list[Command]:
    """PRE interrupts the merged share before sensing fires."""
    gap = 2.0 * timing.t_decoder_reset / 3.0
    if 2 * gap + _short_pre(timing) >= timing.t_latch:
        raise InvalidConfigError("t_latch too short to precharge before sensing")
    return [Act(row, gap),
            Pre(_short_pre(timing)),
            Act(partner, gap),
            Pre(timing.trp_nominal)]


# ---- planning ---------------------------------------------------------------

def _require_chaining(profile: ChipProfile) -> None:
    if not profile.supports_sequential_neighbor_activation:
        raise CapabilityError(
            f"{profile.name} resets its row decoder on every precharge")


def _require_merge(profile: ChipProfile) -> None:
    if not profile.supports_simultaneous_neighbor_activation:
        raise CapabilityError(
            f"{profile.name} cannot hold multiple rows in one sharing window")


def _align_up(x: int, a: int) -> int:
    return -(-x // a) * a


def shared_valid_columns(topology: BankTopology, pair: tuple[int, int]) -> np.ndarray:
    return np.array(sorted(topology.shared_columns(pair)), dtype=np.int64)


def all_columns(topology: BankTopology) -> np.ndarray:
    return np.arange(topology.columns, dtype=np.int64)


def _plan_blocks(topology: BankTopology, profile: ChipProfile,
                 sub_f: int, sub_l: int, n_ref: int, pattern: PatternKind,
                 min_base: int = 0):
    """Pick the lowest aligned anchor pair >= min_base and verify it against
    the decoder model; the planner never trusts its own arithmetic."""
    if n_ref < 1 or n_ref & (n_ref - 1):
        raise InvalidConfigError(f"operand count {n_ref} is not a power of two")
    z = n_ref.bit_length() - 1
    if z > profile.max_log2_n:
        raise CapabilityError(
            f"{profile.name} caps simultaneous blocks at 2^{profile.max_log2_n}")
    if n_ref > 1:
        _require_merge(profile)

    if pattern is PatternKind.NN:
        a = _align_up(min_base, 2 * n_ref)
        b = a + n_ref - 1
        rows_l = tuple(range(a, a + n_ref))
    elif pattern is PatternKind.N2N:
        if not profile.supports_n2n_pattern:
            raise CapabilityError(f"{profile.name} lacks the widened row match")
        if sub_f == sub_l:
            raise InvalidConfigError(
                "widened match only applies across the shared stripe")
        a = _align_up(min_base, 2 * n_ref) + n_ref
        b = a ^ (n_ref - 1)
        rows_l = tuple(range(a - n_ref, a + n_ref))
    else:
        raise InvalidConfigError(f"cannot plan pattern {pattern}")
    rows_f = tuple(range(a, a + n_ref))
    if max(rows_f[-1], rows_l[-1], b) >= topology.rows_per_subarray:
        raise InvalidConfigError("anchor search ran past the subarray")

    sets = activation_sets(topology, profile,
                           topology.global_row(sub_f, a),
                           topology.global_row(sub_l, b))
    ok_kind = sets.kind is pattern or (n_ref == 1 and sets.kind in
                                       (PatternKind.NN, PatternKind.SINGLE))
    if not (ok_kind and sets.rows_f == frozenset(rows_f)
            and sets.rows_l == frozenset(rows_l)):
        raise InvalidConfigError("planned anchors disagree with the decoder")
    return a, b, rows_f, rows_l


def plan_not(topology: BankTopology, profile: ChipProfile,
             subarrays: tuple[int, int], dest_count: int,
             pattern: PatternKind = PatternKind.NN,
             min_base: int = 0) -> NaryOpSpec:
    """Plan a multi-destination complement; every destination row receives
    the inverse of the (replicated) source block."""
    sub_f, sub_l = subarrays
    if abs(sub_f - sub_l) != 1:
        raise NotAdjacentError("complement crosses exactly one shared stripe")
    _require_chaining(profile)
    if pattern is PatternKind.N2N:
        if dest_count % 2:
            raise InvalidConfigError("widened match doubles the destination count")
        n_ref = dest_count // 2
    else:
        n_ref = dest_count
    a, b, rows_f, rows_l = _plan_blocks(topology, profile, sub_f, sub_l,
                                        n_ref, pattern, min_base)
    return NaryOpSpec(kind=None, n=n_ref, sub_ref=sub_f, sub_compute=sub_l,
                      rows_ref=rows_f, rows_compute=rows_l, r_f=a, r_l=b,
                      pattern=pattern,
                      valid_columns=shared_valid_columns(topology, subarrays),
                      trace=tuple(build_copy_trace(
                          profile.timing,
                          topology.global_row(sub_f, a),
                          topology.global_row(sub_l, b))))


def plan_nary(topology: BankTopology, profile: ChipProfile,
              subarrays: tuple[int, int], kind: LogicKind, n: int,
              min_base: int = 0) -> NaryOpSpec:
    """Plan an n-input AND/OR/NAND/NOR between adjacent subarrays.

    The reference block lives on the lower-numbered subarray so the compute
    rows sit on the stripe's top terminal.
    """
    lo, hi = min(subarrays), max(subarrays)
    if hi - lo != 1:
        raise NotAdjacentError("merged logic crosses exactly one shared stripe")
    if n < 2:
        raise InvalidConfigError("n-ary logic needs at least two operands")
    _require_merge(profile)
    a, b, rows_f, rows_l = _plan_blocks(topology, profile, lo, hi, n,
                                        PatternKind.NN, min_base)
    return NaryOpSpec(kind=kind, n=n, sub_ref=lo, sub_compute=hi,
                      rows_ref=rows_f, rows_compute=rows_l, r_f=a, r_l=b,
                      pattern=PatternKind.NN,
                      valid_columns=shared_valid_columns(topology, (lo, hi)),
                      trace=tuple(build_nary_trace(
                          profile.timing,
                          topology.global_row(lo, a),
                          topology.global_row(hi, b))))


# ---- operations -------------------------------------------------------------

def frac_store_half(engine: Engine, row: int,
                    rng: np.random.Generator) -> FracResult:
    """Leave the weighted midpoint voltage in `row` (0.5 for matched cells).

    The partner row (address XOR 1) supplies the opposing charge and is left
    at the same shared value; callers rewrite it afterwards.
    """
    _require_chaining(engine.profile)
    partner = row ^ 1
    cols = engine.topology.columns
    engine.write_row(row, np.ones(cols, dtype=np.uint8), rng)
    engine.write_row(partner, np.zeros(cols, dtype=np.uint8), rng)
    trace = build_frac_trace(engine.profile.timing, row, partner)
    engine.execute(trace, rng)
    return FracResult(partner_row=partner, trace=tuple(trace))


def not_op(engine: Engine, src: int, dst: int,
           rng: np.random.Generator) -> NotResult:
    """Complement src into the destination block across the shared stripe.

    The decoder may widen `dst` to a block (up to 2^(max_log2_n+1) rows);
    every destination row receives the complement on the shared columns.
    Source-side block mates join after the latch settles and are driven with
    plain copies of src; they are reported as collateral.
    """
    t = engine.topology
    sub_s, addr_s = t.split_row(src)
    sub_d, _ = t.split_row(dst)
    if abs(sub_s - sub_d) != 1:
        raise NotAdjacentError("complement needs rows on both sides of a stripe")
    _require_chaining(engine.profile)
    sets = activation_sets(t, engine.profile, src, dst)
    trace = build_copy_trace(engine.profile.timing, src, dst)
    engine.execute(trace, rng)
    return NotResult(
        destination_rows=tuple(t.global_row(sub_d, r)
                               for r in sorted(sets.rows_l)),
        collateral_rows=tuple(t.global_row(sub_s, r)
                              for r in sorted(sets.rows_f - {addr_s})),
        valid_columns=shared_valid_columns(t, (sub_s, sub_d)),
        trace=tuple(trace))


def rowclone(engine: Engine, src: int, dst: int,
             rng: np.random.Generator) -> RowCloneResult:
    """Copy src into dst within one subarray via chained activation."""
    t = engine.topology
    sub_s, addr_s = t.split_row(src)
    sub_d, addr_d = t.split_row(dst)
    if sub_s != sub_d:
        raise InvalidConfigError(
            "cross-subarray chaining inverts; use not_op for that")
    if src == dst:
        raise InvalidConfigError("source and destination are the same row")
    _require_chaining(engine.profile)
    sets = activation_sets(t, engine.profile, src, dst)
    extras = (sets.rows_f | sets.rows_l) - {addr_s, addr_d}
    trace = build_copy_trace(engine.profile.timing, src, dst)
    engine.execute(trace, rng)
    return RowCloneResult(
        valid_columns=all_columns(t),
        collateral_rows=tuple(t.global_row(sub_s, r) for r in sorted(extras)),
        trace=tuple(trace))


def nary_logic(engine: Engine, spec: NaryOpSpec, inputs,
               rng: np.random.Generator) -> NaryResult:
    """Run a planned n-ary op over `inputs` (n bit-vectors, one per operand).

    Reference rows are staged first (n-1 fill rows plus one fractional row),
    then the inputs are written to the compute rows and the merged activation
    fires. Only spec.valid_columns carry meaning; operand rows end up holding
    the result (and reference rows its complement) as a side effect of the
    restore.
    """
    if spec.kind is None:
        raise InvalidConfigError("spec was planned for a complement, not logic")
    _require_merge(engine.profile)
    t = engine.topology
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.uint8))
    if inputs.shape != (spec.n, t.columns):
        raise InvalidConfigError(
            f"expected {spec.n} operand vectors of width {t.columns}")
    frac_addr = spec.rows_ref[-1]
    frac_store_half(engine, t.global_row(spec.sub_ref, frac_addr), rng)
    fill = spec.kind.reference_fill
    pattern = np.full(t.columns, fill, dtype=np.uint8)
    for addr in spec.rows_ref[:-1]:
        engine.write_row(t.global_row(spec.sub_ref, addr), pattern, rng)
    for vec, addr in zip(inputs, spec.rows_compute):
        engine.write_row(t.global_row(spec.sub_compute, addr), vec, rng)
    engine.execute(list(spec.trace), rng)

    compute_bits = (engine.peek_row(
        t.global_row(spec.sub_compute, spec.rows_compute[0])) > 0.5).astype(np.uint8)
    ref_bits = (engine.peek_row(
        t.global_row(spec.sub_ref, spec.rows_ref[0])) > 0.5).astype(np.uint8)
    shared_amp = max(spec.sub_ref, spec.sub_compute)
    cols, v_t, v_b = engine.last_sense[shared_amp]
    margins = np.abs(v_t - v_b)
    if spec.kind.inverting:
        result, complement = ref_bits, compute_bits
    else:
        result, complement = compute_bits, ref_bits
    return NaryResult(result=result, complement=complement, margins=margins,
                      sense_columns=cols, spec=spec)


def majority3(engine: Engine, subarray: int, quad_base: int,
              rng: np.random.Generator) -> Maj3Result:
    """Bitwise majority of the three rows at quad_base..quad_base+2.

    The fourth row of the aligned quad stages the midpoint reference; all
    four rows end up holding the majority value (full row width).
    """
    t = engine.topology
    if quad_base % 4 or quad_base + 3 >= t.rows_per_subarray:
        raise InvalidConfigError("majority needs a quad-aligned base row")
    _require_merge(engine.profile)
    if engine.profile.max_log2_n < 2:
        raise CapabilityError(
            f"{engine.profile.name} cannot hold a four-row block")
    spare = quad_base + 3
    partner = spare ^ 1            # third operand; staged around the frac
    g = lambda addr: t.global_row(subarray, addr)
    saved = engine.read_row(g(partner), rng)
    frac_store_half(engine, g(spare), rng)
    engine.write_row(g(partner), saved, rng)
    trace = build_nary_trace(engine.profile.timing, g(quad_base), g(spare))
    engine.execute(trace, rng)
    result = (engine.peek_row(g(quad_base)) > 0.5).astype(np.uint8)
    return Maj3Result(result=result,
                      clobbered_rows=tuple(g(quad_base + i) for i in range(4)),
                      trace=tuple(trace))
