"""Hierarchical row-decoder model for timing-violating ACT-PRE-ACT pairs.

The trailing-ones rule below is a model invention kept behind this module so
it can be swapped: it yields exactly the observed {N:N, N:2N} pattern family
with N capped at 2**max_log2_n. A short PRE fails to deassert the first
activation's decoder latches, so the second ACT enables the union of two
address-matched row blocks.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import NotAdjacentError
from .topology import BankTopology
from .variation import ChipProfile


class PatternKind(Enum):
    NN = "N:N"
    N2N = "N:2N"
    SINGLE = "single"
    NONE = "none"


@dataclass(frozen=True)
class ActivationSet:
    rows_f: frozenset[int]   # in-subarray addresses, first ACT's subarray
    rows_l: frozenset[int]   # in-subarray addresses, last ACT's subarray
    kind: PatternKind

    @property
    def label(self) -> str:
        if self.kind in (PatternKind.SINGLE, PatternKind.NONE):
            return self.kind.value
        return f"{len(self.rows_f)}:{len(self.rows_l)}"


def trailing_ones(x: int) -> int:
    count = 0
    while x & 1:
        x >>= 1
        count += 1
    return count


def _match_block(addr: int, z: int) -> frozenset[int]:
    """All addresses agreeing with addr on bits [z, L)."""
    base = addr & ~((1 << z) - 1)
    return frozenset(range(base, base + (1 << z)))


def activation_sets(topology: BankTopology, profile: ChipProfile,
                    r_f: int, r_l: int) -> ActivationSet:
    """Rows activated in each subarray by ACT r_f, short PRE, ACT r_l.

    r_f and r_l are global row ids in the same or adjacent subarrays.
    Same-subarray pairs never widen to N:2N: both latch sets live in one
    decoder, so the second match uses the same bit range as the first.
    """
    profile.check_rows(topology)
    sub_f, a = topology.split_row(r_f)
    sub_l, b = topology.split_row(r_l)
    if abs(sub_f - sub_l) > 1:
        raise NotAdjacentError(
            f"subarrays {sub_f} and {sub_l} are neither equal nor adjacent")

    if profile.supports_simultaneous_neighbor_activation:
        z = min(trailing_ones(a ^ b), profile.max_log2_n)
        rows_f = _match_block(a, z)
        if (sub_f != sub_l and (a >> z) & 1
                and profile.supports_n2n_pattern):
            return ActivationSet(rows_f, _match_block(b, z + 1),
                                 PatternKind.N2N)
        return ActivationSet(rows_f, _match_block(b, z), PatternKind.NN)

    if profile.supports_sequential_neighbor_activation:
        return ActivationSet(frozenset({a}), frozenset({b}),
                             PatternKind.SINGLE)

    # first activation is abandoned outright
    return ActivationSet(frozenset(), frozenset({b}), PatternKind.NONE)


def pattern_coverage(topology: BankTopology,
                     profile: ChipProfile) -> dict[str, float]:
    """Fraction of (r_f, r_l) address pairs per activation-pattern label.

    Closed form over uniform in-subarray address pairs of an adjacent
    subarray pair; the test suite cross-checks it against brute-force
    enumeration of activation_sets.
    """
    profile.check_rows(topology)
    if not profile.supports_simultaneous_neighbor_activation:
        if profile.supports_sequential_neighbor_activation:
            return {PatternKind.SINGLE.value: 1.0}
        return {PatternKind.NONE.value: 1.0}

    max_z = profile.max_log2_n
    out: dict[str, float] = {}
    for z in range(max_z + 1):
        # a XOR b has exactly z trailing ones, except the top bucket
        # collects everything at or beyond the cap
        p_z = 2.0 ** -(z + 1) if z < max_z else 2.0 ** -max_z
        n = 1 << z
        if profile.supports_n2n_pattern:
            out[f"{n}:{n}"] = p_z / 2.0
            out[f"{n}:{2 * n}"] = p_z / 2.0
        else:
            out[f"{n}:{n}"] = p_z
    return out


def coverage_sort_key(label: str) -> tuple:
    if ":" in label:
        lhs, rhs = label.split(":")
        return (0, int(lhs), int(rhs))
    return (1, label, "")
