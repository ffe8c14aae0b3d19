"""Physical organization of one DRAM bank.

Layout conventions used throughout the package:

- A bank holds ``num_subarrays`` subarrays stacked vertically, with a sense-amp
  stripe between each adjacent pair and one at each bank edge: amp array ``k``
  sits between subarray ``k-1`` and subarray ``k``, so subarray ``s`` is served
  by amp ``s`` (above) and amp ``s+1`` (below).
- Open bitline: one bitline pair runs through an amp stripe into both
  neighboring subarrays, so amp ``k`` serves the same column set on both sides,
  namely the columns with ``(c + k) % 2 == 1``. For an even-indexed subarray
  this puts even columns on the below stripe and odd columns on the above
  stripe; odd-indexed subarrays are mirrored (the alternation is forced by the
  shared stripes).
- Physical row position 0 is the row nearest the below stripe, position
  ``rows_per_subarray - 1`` the row nearest the above stripe. ``row_order``
  maps logical in-subarray addresses to physical positions; all subarrays share
  one permutation.
- Rows are usually referred to by a global id ``subarray * rows_per_subarray +
  in_subarray_address``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidConfigError, NotAdjacentError


class Region(Enum):
    CLOSE = "Close"
    MIDDLE = "Middle"
    FAR = "Far"


@dataclass(frozen=True)
class TopologyConfig:
    num_subarrays: int = 2
    rows_per_subarray: int = 512
    columns: int = 1024
    scramble_seed: int | None = None


@dataclass(frozen=True, eq=False)
class BankTopology:
    num_subarrays: int
    rows_per_subarray: int
    columns: int
    row_order: np.ndarray   # logical in-subarray address -> physical position
    phys_to_addr: np.ndarray  # inverse permutation

    @property
    def num_amp_arrays(self) -> int:
        return self.num_subarrays + 1

    @property
    def num_rows(self) -> int:
        return self.num_subarrays * self.rows_per_subarray

    @property
    def row_bits(self) -> int:
        return int(self.rows_per_subarray).bit_length() - 1

    # ---- row addressing -------------------------------------------------

    def split_row(self, global_row: int) -> tuple[int, int]:
        if not 0 <= global_row < self.num_rows:
            raise InvalidConfigError(f"row {global_row} out of range")
        return divmod(global_row, self.rows_per_subarray)

    def global_row(self, subarray: int, row: int) -> int:
        if not 0 <= subarray < self.num_subarrays:
            raise InvalidConfigError(f"subarray {subarray} out of range")
        if not 0 <= row < self.rows_per_subarray:
            raise InvalidConfigError(f"row address {row} out of range")
        return subarray * self.rows_per_subarray + row

    # ---- column / amp geometry -------------------------------------------

    def serving_amp(self, subarray: int, column: int) -> int:
        """Amp array that owns the bitline of (subarray, column)."""
        if (column + subarray) % 2 == 1:
            return subarray        # above stripe
        return subarray + 1        # below stripe

    def columns_of_amp(self, amp: int) -> np.ndarray:
        if not 0 <= amp < self.num_amp_arrays:
            raise InvalidConfigError(f"amp array {amp} out of range")
        return np.arange((amp + 1) % 2, self.columns, 2)

    def col_slice_of_amp(self, amp: int) -> slice:
        return slice((amp + 1) % 2, self.columns, 2)

    def amp_between(self, pair: tuple[int, int]) -> int:
        lo, hi = sorted(pair)
        if hi - lo != 1 or lo < 0 or hi >= self.num_subarrays:
            raise NotAdjacentError(f"subarrays {pair} are not adjacent")
        return hi

    def shared_columns(self, pair: tuple[int, int]) -> np.ndarray:
        """Columns on which the amp stripe between `pair` serves both sides."""
        return self.columns_of_amp(self.amp_between(pair))

    def subarrays_of_amp(self, amp: int) -> tuple[int, ...]:
        sides = []
        if amp - 1 >= 0:
            sides.append(amp - 1)
        if amp < self.num_subarrays:
            sides.append(amp)
        return tuple(sides)

    # ---- physical row geometry -------------------------------------------

    def physical_position(self, row: int) -> int:
        return int(self.row_order[row])

    def physical_neighbors(self, row: int) -> tuple[int, ...]:
        """Logical addresses of the rows at physical positions +/-1."""
        pos = self.physical_position(row)
        out = []
        if pos - 1 >= 0:
            out.append(int(self.phys_to_addr[pos - 1]))
        if pos + 1 < self.rows_per_subarray:
            out.append(int(self.phys_to_addr[pos + 1]))
        return tuple(out)

    def distance_to_amp(self, subarray: int, row: int, amp: int) -> int:
        """Row steps between the row and the given stripe (0 = adjacent)."""
        if amp not in (subarray, subarray + 1):
            raise InvalidConfigError(
                f"amp {amp} does not serve subarray {subarray}")
        pos = self.physical_position(row)
        if amp == subarray + 1:   # below stripe
            return pos
        return self.rows_per_subarray - 1 - pos

    def region_sizes(self) -> tuple[int, int, int]:
        # thirds by physical position; remainder assigned Close-first
        base, rem = divmod(self.rows_per_subarray, 3)
        return (base + (1 if rem > 0 else 0),
                base + (1 if rem > 1 else 0),
                base)

    def region_of(self, subarray: int, row: int, amp: int) -> Region:
        d = self.distance_to_amp(subarray, row, amp)
        close, middle, _ = self.region_sizes()
        if d < close:
            return Region.CLOSE
        if d < close + middle:
            return Region.MIDDLE
        return Region.FAR

    def distance_factor(self, subarray: int, row: int, column: int) -> float:
        """Normalized distance of a cell to its own serving stripe, in [0,1]."""
        amp = self.serving_amp(subarray, column)
        return self.distance_to_amp(subarray, row, amp) / (self.rows_per_subarray - 1)

    def distance_factor_grid(self) -> np.ndarray:
        """distance_factor for every cell as a [subarrays, rows, cols] array."""
        s_count, r_count, c_count = (self.num_subarrays, self.rows_per_subarray,
                                     self.columns)
        pos = self.row_order.astype(np.float64)            # [R]
        cols = np.arange(c_count)
        grid = np.empty((s_count, r_count, c_count), dtype=np.float64)
        for s in range(s_count):
            below = (cols + s) % 2 == 0                    # served by amp s+1
            dist = np.where(below[None, :], pos[:, None],
                            (r_count - 1) - pos[:, None])
            grid[s] = dist / (r_count - 1)
        return grid


def build_topology(config: TopologyConfig) -> BankTopology:
    r = config.rows_per_subarray
    if r < 8 or (r & (r - 1)) != 0:
        raise InvalidConfigError(
            f"rows_per_subarray must be a power of two >= 8, got {r}")
    if config.num_subarrays < 2:
        raise InvalidConfigError(
            f"num_subarrays must be >= 2, got {config.num_subarrays}")
    if config.columns < 2 or config.columns % 2 != 0:
        raise InvalidConfigError(
            f"columns must be even and >= 2, got {config.columns}")

    if config.scramble_seed is None:
        order = np.arange(r, dtype=np.int64)
    else:
        rng = np.random.default_rng(config.scramble_seed)
        order = rng.permutation(r).astype(np.int64)
    inverse = np.empty_like(order)
    inverse[order] = np.arange(r, dtype=np.int64)
    return BankTopology(
        num_subarrays=config.num_subarrays,
        rows_per_subarray=r,
        columns=config.columns,
        row_order=order,
        phys_to_addr=inverse,
    )
