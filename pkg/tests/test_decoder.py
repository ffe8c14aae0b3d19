from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pudsim.decoder import (PatternKind, activation_sets, pattern_coverage,
                            trailing_ones)
from pudsim.errors import NotAdjacentError
from pudsim.topology import TopologyConfig, build_topology
from pudsim.variation import get_profile, override_profile


def topo64(subarrays=2):
    return build_topology(TopologyConfig(num_subarrays=subarrays,
                                         rows_per_subarray=64, columns=4))


IDEAL = get_profile("ideal")
SEQ_ONLY = get_profile("vendorB-like")
NO_CAP = get_profile("vendorC-like")
NO_N2N = override_profile(IDEAL, supports_n2n_pattern=False)


def sets_for(profile, a, b, topo=None):
    t = topo or topo64()
    return activation_sets(t, profile, t.global_row(0, a), t.global_row(1, b))


def test_trailing_ones():
    assert [trailing_ones(x) for x in (0b0, 0b1, 0b10, 0b11, 0b0111, 0b1011)] \
        == [0, 1, 0, 2, 3, 2]


def test_equal_even_addresses_give_1_to_1():
    s = sets_for(IDEAL, 0, 0)
    assert s.kind is PatternKind.NN
    assert (s.rows_f, s.rows_l) == (frozenset({0}), frozenset({0}))
    assert s.label == "1:1"


def test_widened_match_example():
    # d = 0b011, z = 2, bit2(a) = 1 -> 4 source rows, 8 destination rows
    s = sets_for(IDEAL, 0b000111, 0b000100)
    assert s.kind is PatternKind.N2N
    assert s.rows_f == frozenset({4, 5, 6, 7})
    assert s.rows_l == frozenset(range(8))
    assert s.label == "4:8"


def test_matched_pattern_example():
    # d = 0b011, z = 2, bit2(a) = 0 -> 4:4
    s = sets_for(IDEAL, 0b000010, 0b000001)
    assert s.kind is PatternKind.NN
    assert s.rows_f == frozenset(range(4))
    assert s.rows_l == frozenset(range(4))


def test_block_size_cap():
    t = build_topology(TopologyConfig(num_subarrays=2, rows_per_subarray=64,
                                      columns=4))
    prof = override_profile(IDEAL, max_log2_n=2)
    s = activation_sets(t, prof, t.global_row(0, 0b011111),
                        t.global_row(1, 0b000000))
    assert len(s.rows_f) == 4   # z capped at 2 despite 5 trailing ones


def test_n2n_needs_capability():
    s = sets_for(NO_N2N, 0b000111, 0b000100)
    assert s.kind is PatternKind.NN
    assert len(s.rows_f) == len(s.rows_l) == 4


def test_same_subarray_never_widens():
    t = topo64()
    for a, b in ((0b111, 0b100), (0b1, 0b0), (0b1111, 0b0000)):
        s = activation_sets(t, IDEAL, t.global_row(1, a), t.global_row(1, b))
        assert s.kind is not PatternKind.N2N
        assert len(s.rows_f) == len(s.rows_l)


def test_sequential_only_chains_single_rows():
    s = sets_for(SEQ_ONLY, 7, 4)
    assert s.kind is PatternKind.SINGLE
    assert (s.rows_f, s.rows_l) == (frozenset({7}), frozenset({4}))
    assert s.label == "single"


def test_no_capability_abandons_first_row():
    s = sets_for(NO_CAP, 7, 4)
    assert s.kind is PatternKind.NONE
    assert (s.rows_f, s.rows_l) == (frozenset(), frozenset({4}))


def test_non_adjacent_rejected():
    t = topo64(subarrays=3)
    with pytest.raises(NotAdjacentError):
        activation_sets(t, IDEAL, t.global_row(0, 0), t.global_row(2, 0))


@settings(max_examples=200)
@given(a=st.integers(0, 63), b=st.integers(0, 63))
def test_activation_set_shape_properties(a, b):
    s = sets_for(IDEAL, a, b)
    nf, nl = len(s.rows_f), len(s.rows_l)
    assert nf & (nf - 1) == 0 and nf <= 2 ** IDEAL.max_log2_n
    assert nl in (nf, 2 * nf)
    assert a in s.rows_f
    assert b in s.rows_l
    # blocks are aligned address ranges
    assert s.rows_f == frozenset(range(min(s.rows_f), min(s.rows_f) + nf))
    assert s.rows_l == frozenset(range(min(s.rows_l), min(s.rows_l) + nl))


# ---- coverage ---------------------------------------------------------------

def test_coverage_sums_to_one():
    for prof in (IDEAL, SEQ_ONLY, NO_CAP, NO_N2N):
        cov = pattern_coverage(topo64(), prof)
        assert sum(cov.values()) == 1.0


def test_coverage_frozen_value():
    cov = pattern_coverage(topo64(), IDEAL)   # L=6, max_log2_n=4, N:2N on
    assert cov["1:1"] == 0.25


def test_coverage_degenerate_profiles():
    assert pattern_coverage(topo64(), SEQ_ONLY) == {"single": 1.0}
    assert pattern_coverage(topo64(), NO_CAP) == {"none": 1.0}


@pytest.mark.parametrize("profile", [IDEAL, NO_N2N,
                                     override_profile(IDEAL, max_log2_n=2)])
def test_coverage_matches_brute_force_exactly(profile):
    """The closed form must agree with enumerating all (a, b) pairs."""
    t = topo64()
    r = t.rows_per_subarray
    counts = Counter()
    for a in range(r):
        for b in range(r):
            s = activation_sets(t, profile, t.global_row(0, a),
                                t.global_row(1, b))
            counts[s.label] += 1
    brute = {label: Fraction(n, r * r) for label, n in counts.items()}
    analytic = pattern_coverage(t, profile)
    assert set(brute) == set(analytic)
    for label, frac in brute.items():
        assert Fraction(analytic[label]) == frac, label
