"""Command interpreter and analog core.

Executes command traces against per-cell voltages and per-stripe sense-amp
state. Amp array k compares its top terminal (bitlines of subarray k) against
its bottom terminal (subarray k-1); sensing latches top=1 iff the noisy top
voltage exceeds the bottom one, ties to 0. Timing rules:

- PRE whose following delay is shorter than t_decoder_reset leaves the
  decoder latches asserted, so the next ACT connects the union block from
  ``decoder.activation_sets`` without disconnecting anything.
- Rows joining while their stripe is still Sharing merge into the charge
  share; rows joining a Latched stripe are driven toward the latched value
  (deferred path) and may fail the drive, keeping their old charge.
- PRE while a stripe is Sharing and before sensing fires leaves the shared
  (fractional) voltage in the connected cells.

Cells participating in sensing are amplified continuously out of the shared
state and restore cleanly; only deferred rows draw restore failures, with the
logistic midpoint derated by how many rows the stripe is driving at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decoder import activation_sets
from .errors import NotActivatedError, TraceError
from .topology import BankTopology
from .variation import (ChipProfile, VariationSample, restore_failure_prob,
                        trial_sigma)

PHASE_PRECHARGED = 0
PHASE_SHARING = 1
PHASE_LATCHED = 2


@dataclass(frozen=True)
class Act:
    row: int                 # global row id
    delay: float = 0.0       # ns until the next command


@dataclass(frozen=True)
class Pre:
    delay: float = 0.0


@dataclass(frozen=True)
class Wr:
    pattern: int             # row-buffer bitmask, LSB = column 0
    delay: float = 0.0


@dataclass(frozen=True)
class Rd:
    row: int | None = None   # None: raw top-terminal read
    delay: float = 0.0


@dataclass(frozen=True)
class Idle:
    ns: float
    delay: float = 0.0


Command = Act | Pre | Wr | Rd | Idle


def bits_to_mask(bits) -> int:
    arr = np.asarray(bits, dtype=np.uint8)
    return int.from_bytes(np.packbits(arr, bitorder="little").tobytes(),
                          "little")


def mask_to_bits(mask: int, columns: int) -> np.ndarray:
    raw = mask.to_bytes((columns + 7) // 8, "little")
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8),
                         bitorder="little")[:columns]


def _fmt_ns(x: float) -> str:
    return f"{x:g}"


def format_trace(trace, rows_per_subarray: int) -> str:
    lines = []
    for cmd in trace:
        if isinstance(cmd, Act):
            s, r = divmod(cmd.row, rows_per_subarray)
            head = f"ACT {s}:{r}"
        elif isinstance(cmd, Pre):
            head = "PRE"
        elif isinstance(cmd, Wr):
            head = f"WR {cmd.pattern:x}"
        elif isinstance(cmd, Rd):
            if cmd.row is None:
                head = "RD"
            else:
                s, r = divmod(cmd.row, rows_per_subarray)
                head = f"RD {s}:{r}"
        elif isinstance(cmd, Idle):
            head = f"IDLE {_fmt_ns(cmd.ns)}"
        else:
            raise TraceError(f"unknown command {cmd!r}")
        lines.append(f"{head} # delay={_fmt_ns(cmd.delay)}")
    return "\n".join(lines) + "\n"


def parse_trace(text: str, rows_per_subarray: int) -> list[Command]:
    out: list[Command] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        body, _, suffix = line.partition("#")
        delay = 0.0
        suffix = suffix.strip()
        if suffix:
            if not suffix.startswith("delay="):
                raise TraceError(f"bad trace suffix: {raw!r}")
            delay = float(suffix[len("delay="):])
        tokens = body.split()
        op = tokens[0].upper()
        if op == "ACT":
            s, r = tokens[1].split(":")
            out.append(Act(int(s) * rows_per_subarray + int(r), delay))
        elif op == "PRE":
            out.append(Pre(delay))
        elif op == "WR":
            out.append(Wr(int(tokens[1], 16), delay))
        elif op == "RD":
            row = None
            if len(tokens) > 1:
                s, r = tokens[1].split(":")
                row = int(s) * rows_per_subarray + int(r)
            out.append(Rd(row, delay))
        elif op == "IDLE":
            out.append(Idle(float(tokens[1]), delay))
        else:
            raise TraceError(f"unknown command {op!r}")
    return out


def validate_trace(trace, topology: BankTopology, profile: ChipProfile) -> None:
    if not trace:
        raise TraceError("empty trace")
    for cmd in trace:
        if cmd.delay < 0:
            raise TraceError("negative inter-command delay")
        if isinstance(cmd, Act) and not 0 <= cmd.row < topology.num_rows:
            raise TraceError(f"ACT row {cmd.row} out of range")
        if isinstance(cmd, Rd) and cmd.row is not None \
                and not 0 <= cmd.row < topology.num_rows:
            raise TraceError(f"RD row {cmd.row} out of range")
        if isinstance(cmd, Idle) and cmd.ns < 0:
            raise TraceError("negative idle duration")
        if isinstance(cmd, Wr) and not 0 <= cmd.pattern < (1 << topology.columns):
            raise TraceError("WR pattern wider than the row buffer")
    last = trace[-1]
    if not isinstance(last, Pre) or last.delay < profile.timing.trp_nominal:
        raise TraceError("trace must end with PRE followed by idle >= tRP")


def _unit_sample(topology: BankTopology) -> VariationSample:
    shape_amp = (topology.num_amp_arrays, topology.columns)
    shape_cells = (topology.num_subarrays, topology.rows_per_subarray,
                   topology.columns)
    return VariationSample(amp_offset=np.zeros(shape_amp),
                           amp_strength=np.ones(shape_amp),
                           cell_weight=np.ones(shape_cells))


class Engine:
    """Owns one bank's state; confine an instance to one worker at a time."""

    def __init__(self, topology: BankTopology, profile: ChipProfile,
                 sample: VariationSample | None = None,
                 temperature: float = 50.0):
        profile.check_rows(topology)
        self.topology = topology
        self.profile = profile
        self.sample = sample if sample is not None else _unit_sample(topology)
        self.temperature = temperature
        self._sigma_trial = trial_sigma(profile.noise, temperature)

        t = topology
        self.cell_v = np.zeros(
            (t.num_subarrays, t.rows_per_subarray, t.columns))
        self.dist_factor = t.distance_factor_grid()
        self.w_eff = self.sample.cell_weight * (
            1.0 - profile.noise.distance_beta * self.dist_factor)
        self._slices = [t.col_slice_of_amp(k) for k in range(t.num_amp_arrays)]
        self._cols_of = [t.columns_of_amp(k) for k in range(t.num_amp_arrays)]
        self._half = t.columns // 2

        amps = t.num_amp_arrays
        self.amp_phase = np.zeros(amps, dtype=np.int8)
        self.v_top = np.full((amps, t.columns), 0.5)
        self.v_bot = np.full((amps, t.columns), 0.5)
        self.last_sense: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        self._reset_episode()

    # ---- direct state access (host backdoor for setup and judgment) ------

    def poke_row(self, row: int, values) -> None:
        s, r = self.topology.split_row(row)
        self.cell_v[s, r, :] = np.asarray(values, dtype=np.float64) \
            .clip(0.0, 1.0)

    def peek_row(self, row: int) -> np.ndarray:
        s, r = self.topology.split_row(row)
        return self.cell_v[s, r, :].copy()

    @property
    def active_rows(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for g in self._connected:
            s, r = self.topology.split_row(g)
            out.setdefault(s, []).append(r)
        return out

    @property
    def elapsed_since_last_act(self) -> float:
        return self._t - self._last_act_time if self._last_act_time >= 0 else np.inf

    # ---- trace execution ---------------------------------------------------

    def execute(self, trace, rng: np.random.Generator) -> list[np.ndarray]:
        validate_trace(trace, self.topology, self.profile)
        reads: list[np.ndarray] = []
        for cmd in trace:
            if isinstance(cmd, Act):
                self._do_act(cmd.row, rng)
            elif isinstance(cmd, Pre):
                self._do_pre(cmd.delay, rng)
            elif isinstance(cmd, Wr):
                self._do_wr(cmd.pattern)
            elif isinstance(cmd, Rd):
                reads.append(self._do_rd(cmd.row))
            # Idle contributes only time
            dt = cmd.ns if isinstance(cmd, Idle) else 0.0
            self._advance(dt + cmd.delay, rng)
        return reads

    def write_row(self, row: int, bits, rng: np.random.Generator) -> None:
        # Equivalent to ACT + WR + full PRE: the write driver overdrives the
        # latch, so the sense outcome never reaches the cells and the row ends
        # at exactly the written bits at any noise level. Modeled directly.
        if self._connected:
            raise TraceError("write_row needs an idle bank")
        if not 0 <= row < self.topology.num_rows:
            raise TraceError(f"row {row} out of range")
        self.poke_row(row, np.asarray(bits, dtype=np.float64))

    def read_row(self, row: int, rng: np.random.Generator) -> np.ndarray:
        tm = self.profile.timing
        return self.execute([Act(row, tm.t_latch), Rd(row),
                             Pre(tm.trp_nominal)], rng)[0]

    # ---- internals ---------------------------------------------------------

    def _reset_episode(self) -> None:
        self._connected: dict[int, float] = {}
        self._share_start = np.full(self.topology.num_amp_arrays, np.inf)
        self._sense_time = np.full(self.topology.num_amp_arrays, np.inf)
        self._top_rows: dict[int, list[int]] = {}
        self._bot_rows: dict[int, list[int]] = {}
        self._deferred: dict[int, list[tuple[int, float]]] = {}
        self._first_act_row = -1
        self._last_act_row = -1
        self._last_act_time = -1.0
        self._decoder_held = False
        self._t = 0.0

    def _do_act(self, row: int, rng: np.random.Generator) -> None:
        if not self._connected:
            self._first_act_row = row
            self._connect({row})
        elif self._decoder_held:
            sets = activation_sets(self.topology, self.profile,
                                   self._first_act_row, row)
            sub_f = self._first_act_row // self.topology.rows_per_subarray
            sub_l = row // self.topology.rows_per_subarray
            new = {sub_f * self.topology.rows_per_subarray + a
                   for a in sets.rows_f}
            new |= {sub_l * self.topology.rows_per_subarray + b
                    for b in sets.rows_l}
            self._connect(new - set(self._connected))
            self._decoder_held = False
        else:
            raise TraceError(
                "ACT while rows are connected needs a short PRE first")
        self._last_act_row = row
        self._last_act_time = self._t

    def _connect(self, rows: set[int]) -> None:
        t = self.topology
        touched = set()
        for g in sorted(rows):
            s, r = t.split_row(g)
            self._connected[g] = self._t
            for amp in (s, s + 1):
                phase = self.amp_phase[amp]
                if phase == PHASE_LATCHED:
                    self._deferred.setdefault(amp, []).append((g, self._t))
                    continue
                side = self._top_rows if amp == s else self._bot_rows
                side.setdefault(amp, []).append(g)
                if phase == PHASE_PRECHARGED:
                    self.amp_phase[amp] = PHASE_SHARING
                    self._share_start[amp] = self._t
                touched.add(amp)
        # rows arriving on one ACT merge at once; the weighted mean is
        # associative, so one reshare per stripe gives the same voltages
        for amp in sorted(touched):
            self._reshare(amp)

    def _row_index(self, rows) -> tuple[np.ndarray, np.ndarray]:
        g = np.asarray(rows, dtype=np.int64)
        return np.divmod(g, self.topology.rows_per_subarray)

    def _reshare(self, amp: int) -> None:
        """Recompute both terminal voltages of a Sharing stripe."""
        sl = self._slices[amp]
        cols = self._cols_of[amp]
        for rows, v_term in ((self._top_rows.get(amp), self.v_top),
                             (self._bot_rows.get(amp), self.v_bot)):
            if not rows:
                continue  # empty side keeps its prior (precharge) voltage
            if len(rows) == 1:
                # the bitline takes the lone cell's voltage unchanged
                s, r = self.topology.split_row(rows[0])
                v_term[amp, sl] = self.cell_v[s, r, sl]
                continue
            s, r = self._row_index(rows)
            volts = self.cell_v[s[:, None], r[:, None], cols]
            weights = self.w_eff[s[:, None], r[:, None], cols]
            shared = (weights * volts).sum(axis=0) / weights.sum(axis=0)
            v_term[amp, sl] = shared
            # cells equalize with the bitline
            self.cell_v[s[:, None], r[:, None], cols] = shared

    def _advance(self, dt: float, rng: np.random.Generator) -> None:
        deadline = self._t + dt
        while True:
            due = [(self._share_start[k] + self.profile.timing.t_latch, k)
                   for k in range(self.topology.num_amp_arrays)
                   if self.amp_phase[k] == PHASE_SHARING
                   and self._share_start[k] + self.profile.timing.t_latch
                   <= deadline]
            if not due:
                break
            ts, k = min(due)
            self._fire_sense(k, ts, rng)
        self._t = deadline

    def _side_bitline(self, sub: int) -> np.ndarray:
        """Current bitline voltage per column of one subarray; NaN when idle."""
        out = np.full(self.topology.columns, np.nan)
        above, below = sub, sub + 1
        if self.amp_phase[above] != PHASE_PRECHARGED:
            sl = self._slices[above]
            out[sl] = self.v_top[above, sl]
        if self.amp_phase[below] != PHASE_PRECHARGED:
            sl = self._slices[below]
            out[sl] = self.v_bot[below, sl]
        return out

    @staticmethod
    def _threshold(vals: np.ndarray) -> np.ndarray:
        """0/1 per entry, NaN where idle or exactly at the midpoint."""
        out = np.where(vals > 0.5, 1.0, 0.0)
        out[np.isnan(vals) | (vals == 0.5)] = np.nan
        return out

    def _coupling_sigma(self, amp: int, cols: np.ndarray) -> np.ndarray:
        """Data-dependent sensing jitter from adjacent-bitline coupling.

        Each horizontally adjacent bitline (they belong to the neighboring
        stripes) whose thresholded voltage disagrees with this column's adds
        kappa/4 worth of noise; idle and half-VDD neighbors are neutral.
        """
        kappa = self.profile.noise.coupling_kappa
        if kappa == 0.0:
            return np.zeros(cols.size)
        disagreement = np.zeros(cols.size)
        for sub in self.topology.subarrays_of_amp(amp):
            vals = self._threshold(self._side_bitline(sub))
            own = vals[cols]
            padded = np.concatenate(([np.nan], vals, [np.nan]))
            for nbr in (padded[cols], padded[cols + 2]):   # cols -1, +1
                live = ~np.isnan(own) & ~np.isnan(nbr)
                disagreement[live] += (own[live] != nbr[live])
        return kappa * disagreement / 4.0

    def _fire_sense(self, amp: int, ts: float, rng: np.random.Generator) -> None:
        sl = self._slices[amp]
        cols = np.arange(sl.start, self.topology.columns, sl.step)
        v_t = self.v_top[amp, sl].copy()
        v_b = self.v_bot[amp, sl].copy()
        noise = self.profile.noise
        draw = rng.normal(0.0, 1.0, cols.size) * self._sigma_trial
        jitter = rng.normal(0.0, 1.0, cols.size) * self._coupling_sigma(amp, cols)
        # amps resolve worst far from the half-VDD precharge point: dynamic
        # noise grows with the pre-sense common-mode voltage
        scale = 1.0 + noise.cm_sensitivity * (v_t + v_b) / 2.0
        lhs = (v_t + self.sample.amp_offset[amp, sl] + noise.sense_bias
               + (draw + jitter) * scale)
        top = (lhs > v_b).astype(np.float64)
        ties = lhs == v_b
        if ties.any() and self._bot_rows.get(amp) and not self._top_rows.get(amp):
            # metastable amp collapses against the connected cells: when only
            # the bottom terminal holds rows, a tie discharges them (top=1);
            # in every other case ties latch top=0
            top[ties] = 1.0
        self.v_top[amp, sl] = top
        self.v_bot[amp, sl] = 1.0 - top
        self.amp_phase[amp] = PHASE_LATCHED
        self._sense_time[amp] = ts
        self.last_sense[amp] = (cols, v_t, v_b)

    def _do_pre(self, following_delay: float, rng: np.random.Generator) -> None:
        if not self._connected:
            return
        tm = self.profile.timing
        if (following_delay < tm.t_decoder_reset
                and self.profile.supports_sequential_neighbor_activation):
            self._decoder_held = True   # latches survive; nothing deasserts
            return
        self._full_precharge(rng)

    def _full_precharge(self, rng: np.random.Generator) -> None:
        tm = self.profile.timing
        noise = self.profile.noise
        for amp in range(self.topology.num_amp_arrays):
            if self.amp_phase[amp] == PHASE_PRECHARGED:
                continue
            sl = self._slices[amp]
            cols = self._cols_of[amp]
            if self.amp_phase[amp] == PHASE_LATCHED:
                # amplified rows finish their restore (no failure draw);
                # a full tRAS after ACT means tRAS - t_latch of drive time
                frac = min((self._t - self._sense_time[amp])
                           / (tm.tras_nominal - tm.t_latch), 1.0)
                for rows, v_term in ((self._top_rows.get(amp), self.v_top),
                                     (self._bot_rows.get(amp), self.v_bot)):
                    if not rows:
                        continue
                    target = v_term[amp, sl]
                    if len(rows) == 1:
                        s, r = self.topology.split_row(rows[0])
                        cur = self.cell_v[s, r, sl]
                        self.cell_v[s, r, sl] = cur + (target - cur) * frac
                        continue
                    if frac >= 1.0:
                        s, r = self._row_index(rows)
                        self.cell_v[s[:, None], r[:, None], cols] = target
                        continue
                    s, r = self._row_index(rows)
                    cur = self.cell_v[s[:, None], r[:, None], cols]
                    self.cell_v[s[:, None], r[:, None], cols] = \
                        cur + (target - cur) * frac
                # deferred rows fight an already-settled latch
                pending = self._deferred.get(amp, [])
                if len(pending) == 1:
                    g, t0 = pending[0]
                    s, r = self.topology.split_row(g)
                    target = (self.v_top if s == amp else self.v_bot)[amp, sl]
                    p_fail = restore_failure_prob(
                        noise, 1, self.dist_factor[s, r, sl],
                        self.sample.amp_strength[amp, sl])
                    fail = rng.random(cols.size) < p_fail
                    dfrac = min((self._t - t0) / tm.tras_nominal, 1.0)
                    cur = self.cell_v[s, r, sl]
                    driven = cur + (target - cur) * dfrac
                    self.cell_v[s, r, sl] = np.where(fail, cur, driven)
                elif pending:
                    k_rows = len(pending)
                    s, r = self._row_index([g for g, _t0 in pending])
                    target = np.where((s == amp)[:, None],
                                      self.v_top[amp, sl], self.v_bot[amp, sl])
                    p_fail = restore_failure_prob(
                        noise, k_rows, self.dist_factor[s[:, None], r[:, None], cols],
                        self.sample.amp_strength[amp, sl])
                    fail = rng.random((k_rows, cols.size)) < p_fail
                    dfrac = np.minimum(
                        (self._t - np.array([t0 for _g, t0 in pending]))
                        / tm.tras_nominal, 1.0)
                    cur = self.cell_v[s[:, None], r[:, None], cols]
                    driven = cur + (target - cur) * dfrac[:, None]
                    self.cell_v[s[:, None], r[:, None], cols] = \
                        np.where(fail, cur, driven)
            elif noise.sigma_frac > 0.0:
                # Sharing pre-sense (Frac): cells keep the shared voltage,
                # but cutting the restore mid-flight leaves a per-cell wobble
                for rows in (self._top_rows.get(amp), self._bot_rows.get(amp)):
                    if not rows:
                        continue
                    s, r = self._row_index(rows)
                    cur = self.cell_v[s[:, None], r[:, None], cols]
                    wob = rng.normal(0.0, noise.sigma_frac, cur.shape)
                    self.cell_v[s[:, None], r[:, None], cols] = \
                        np.clip(cur + wob, 0.0, 1.0)
            self.amp_phase[amp] = PHASE_PRECHARGED
            self.v_top[amp, sl] = 0.5
            self.v_bot[amp, sl] = 0.5
        self._reset_episode()

    def _latched_amps_of(self, row: int) -> tuple[int, int]:
        s, _ = self.topology.split_row(row)
        for amp in (s, s + 1):
            if self.amp_phase[amp] != PHASE_LATCHED:
                raise NotActivatedError(
                    f"amp array {amp} is not latched for row {row}")
        return s, s + 1

    def _do_wr(self, pattern: int) -> None:
        if self._last_act_row < 0:
            raise NotActivatedError("WR before any ACT")
        s, _ = self._latched_amps_of(self._last_act_row)
        bits = mask_to_bits(pattern, self.topology.columns).astype(np.float64)
        for amp in (s, s + 1):
            sl = self._slices[amp]
            if amp == s:      # addressed row sits on the top terminal
                self.v_top[amp, sl] = bits[sl]
                self.v_bot[amp, sl] = 1.0 - bits[sl]
            else:
                self.v_bot[amp, sl] = bits[sl]
                self.v_top[amp, sl] = 1.0 - bits[sl]
            # overdrive: every connected row takes its terminal immediately
            for rows, v_term in ((self._top_rows.get(amp, []), self.v_top),
                                 (self._bot_rows.get(amp, []), self.v_bot)):
                for g in rows:
                    rs, rr = self.topology.split_row(g)
                    self.cell_v[rs, rr, sl] = v_term[amp, sl]
            moved = self._deferred.pop(amp, [])
            for g, _t0 in moved:
                rs, rr = self.topology.split_row(g)
                side = self._top_rows if rs == amp else self._bot_rows
                v_term = self.v_top if rs == amp else self.v_bot
                self.cell_v[rs, rr, sl] = v_term[amp, sl]
                side.setdefault(amp, []).append(g)

    def _do_rd(self, row: int | None) -> np.ndarray:
        anchor = self._last_act_row if row is None else row
        if anchor < 0:
            raise NotActivatedError("RD before any ACT")
        s, _ = self._latched_amps_of(anchor)
        out = np.empty(self.topology.columns, dtype=np.float64)
        for amp in (s, s + 1):
            sl = self._slices[amp]
            if row is None:
                out[sl] = self.v_top[amp, sl]
            else:   # cell-side terminal of the addressed row
                out[sl] = (self.v_top if amp == s else self.v_bot)[amp, sl]
        return (out > 0.5).astype(np.uint8)
