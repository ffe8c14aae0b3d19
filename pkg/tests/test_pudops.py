import itertools

import numpy as np
import pytest

from pudsim.decoder import PatternKind
from pudsim.engine import Act, Engine, Idle, Pre
from pudsim.errors import (CapabilityError, InvalidConfigError,
                           NotAdjacentError)
from pudsim.pudops import (LogicKind, Maj3Result, build_copy_trace,
                           build_frac_trace, build_nary_trace,
                           frac_store_half, majority3, nary_logic, not_op,
                           plan_nary, plan_not, rowclone)
from pudsim.topology import TopologyConfig, build_topology
from pudsim.variation import (NoiseParams, TimingThresholds, get_profile,
                              override_profile, sample_chip)

TIMING = TimingThresholds()
IDEAL4 = override_profile(get_profile("ideal"), max_log2_n=2)


def make(rows=16, cols=8, subarrays=2):
    return build_topology(TopologyConfig(num_subarrays=subarrays,
                                         rows_per_subarray=rows,
                                         columns=cols))


def rng():
    return np.random.default_rng(1)


# ---- trace builders -----------------------------------------------------------

def test_copy_trace_shape():
    t = build_copy_trace(TIMING, 2, 18)
    assert t == [Act(2, 35.0), Pre(1.0), Act(18, 0.0), Idle(35.0), Pre(13.5)]


def test_nary_trace_timing():
    t = build_nary_trace(TIMING, 0, 16)
    assert isinstance(t[0], Act) and isinstance(t[2], Act)
    # every row joins before sensing fires
    assert t[0].delay + t[1].delay < TIMING.t_latch
    # and the idle leaves a full restore window after the sense
    assert t[0].delay + t[1].delay + t[3].ns >= TIMING.t_latch + \
        (TIMING.tras_nominal - TIMING.t_latch)


def test_frac_trace_precharges_before_sense():
    t = build_frac_trace(TIMING, 2, 3)
    assert t[0].delay + t[1].delay + t[2].delay < TIMING.t_latch
    assert t[-1].delay >= TIMING.trp_nominal


# ---- not_op ---------------------------------------------------------------------

def test_not_basic_both_polarities():
    topo = make()
    for value in (0, 1):
        eng = Engine(topo, IDEAL4)
        dst = topo.global_row(1, 2)
        eng.poke_row(2, np.full(8, value))
        res = not_op(eng, 2, dst, rng())
        assert res.destination_rows == (dst,)
        got = eng.peek_row(dst)[res.valid_columns]
        assert np.all(got == 1.0 - value)


def test_not_random_pattern_oracle():
    topo = make(cols=64)
    eng = Engine(topo, IDEAL4)
    r = rng()
    bits = r.integers(0, 2, 64).astype(np.uint8)
    dst = topo.global_row(1, 4)
    eng.write_row(4, bits, r)
    res = not_op(eng, 4, dst, r)
    got = (eng.peek_row(dst) > 0.5).astype(np.uint8)
    assert np.array_equal(got[res.valid_columns],
                          (1 - bits)[res.valid_columns])


def test_not_rejects_same_subarray_and_far_pairs():
    topo = make(subarrays=3)
    eng = Engine(topo, IDEAL4)
    with pytest.raises(NotAdjacentError):
        not_op(eng, 2, 3, rng())
    with pytest.raises(NotAdjacentError):
        not_op(eng, 2, topo.global_row(2, 2), rng())


def test_not_requires_chaining():
    eng = Engine(make(), override_profile(get_profile("vendorC-like"),
                                          max_log2_n=2))
    with pytest.raises(CapabilityError):
        not_op(eng, 2, eng.topology.global_row(1, 2), rng())


def test_not_reports_widened_destinations():
    topo = make()
    eng = Engine(topo, IDEAL4)
    eng.poke_row(5, np.ones(8))
    res = not_op(eng, 5, topo.global_row(1, 5), rng())
    assert res.destination_rows == (topo.global_row(1, 4),
                                    topo.global_row(1, 5))
    for g in res.destination_rows:
        assert np.all(eng.peek_row(g)[res.valid_columns] == 0.0)


# ---- rowclone -------------------------------------------------------------------

def test_rowclone_pattern():
    topo = make()
    eng = Engine(topo, IDEAL4)
    bits = np.unpackbits(np.array([0xA5], dtype=np.uint8), bitorder="little")
    eng.write_row(4, bits, rng())
    res = rowclone(eng, 4, 5, rng())
    assert np.array_equal((eng.peek_row(5) > 0.5).astype(np.uint8), bits)
    assert res.collateral_rows == ()
    assert len(res.valid_columns) == topo.columns


def test_rowclone_cross_subarray_rejected():
    eng = Engine(make(), IDEAL4)
    with pytest.raises(InvalidConfigError):
        rowclone(eng, 2, eng.topology.global_row(1, 2), rng())


def test_rowclone_reports_collateral_block():
    topo = make()
    eng = Engine(topo, IDEAL4)
    eng.poke_row(8, np.ones(8))
    res = rowclone(eng, 8, 11, rng())   # XOR = 0b11 -> 4-row block
    assert res.collateral_rows == (9, 10)
    for g in (9, 10, 11):
        assert np.all(eng.peek_row(g) == 1.0)


def test_rowclone_ideal_always_succeeds():
    topo = make()
    eng = Engine(topo, IDEAL4)
    r = rng()
    for _ in range(100):
        bits = r.integers(0, 2, 8).astype(np.uint8)
        eng.write_row(6, bits, r)
        rowclone(eng, 6, 7, r)
        assert np.array_equal((eng.peek_row(7) > 0.5).astype(np.uint8), bits)


# ---- frac_store_half --------------------------------------------------------------

def test_frac_leaves_exact_half():
    eng = Engine(make(), IDEAL4)
    res = frac_store_half(eng, 6, rng())
    assert res.partner_row == 7
    assert np.all(eng.peek_row(6) == 0.5)
    assert np.all(eng.peek_row(7) == 0.5)


def test_frac_weighted_cells():
    topo = make()
    sample = sample_chip(IDEAL4, 0, topo)
    sample.cell_weight[0, 7, :] = 3.0    # partner three times heavier
    eng = Engine(topo, IDEAL4, sample=sample)
    frac_store_half(eng, 6, rng())
    assert np.all(eng.peek_row(6) == 0.25)


def test_frac_then_activation_drains_to_zero():
    eng = Engine(make(), IDEAL4)
    frac_store_half(eng, 6, rng())
    eng.execute([Act(6, TIMING.tras_nominal), Pre(TIMING.trp_nominal)], rng())
    assert np.all(eng.peek_row(6) == 0.0)


def test_frac_requires_chaining():
    eng = Engine(make(), override_profile(get_profile("vendorC-like"),
                                          max_log2_n=2))
    with pytest.raises(CapabilityError):
        frac_store_half(eng, 6, rng())


# ---- planning ---------------------------------------------------------------------

def test_plan_not_patterns():
    topo = make(rows=64)
    prof = get_profile("ideal")
    nn = plan_not(topo, prof, (0, 1), 4, PatternKind.NN)
    assert (len(nn.rows_ref), len(nn.rows_compute)) == (4, 4)
    n2n = plan_not(topo, prof, (0, 1), 4, PatternKind.N2N)
    assert (len(n2n.rows_ref), len(n2n.rows_compute)) == (2, 4)
    with pytest.raises(InvalidConfigError):
        plan_not(topo, prof, (0, 1), 3)
    with pytest.raises(NotAdjacentError):
        plan_not(topo, prof, (0, 0), 2)


def test_plan_respects_min_base():
    topo = make(rows=64)
    prof = get_profile("ideal")
    spec = plan_not(topo, prof, (0, 1), 4, PatternKind.NN, min_base=13)
    assert spec.r_f == 16
    spec2 = plan_nary(topo, prof, (0, 1), LogicKind.AND, 8, min_base=20)
    assert spec2.r_f == 32


def test_plan_capability_gates():
    topo = make(rows=64)
    with pytest.raises(CapabilityError):
        plan_not(topo, get_profile("vendorB-like"), (0, 1), 4)   # multi-row
    with pytest.raises(CapabilityError):
        plan_not(topo, override_profile(get_profile("ideal"),
                                        supports_n2n_pattern=False),
                 (0, 1), 4, PatternKind.N2N)
    with pytest.raises(CapabilityError):
        plan_nary(topo, get_profile("ideal"), (0, 1), LogicKind.AND, 64)
    with pytest.raises(InvalidConfigError):
        plan_nary(topo, get_profile("ideal"), (0, 1), LogicKind.AND, 1)


def test_plan_single_destination_on_sequential_chip():
    topo = make(rows=64)
    spec = plan_not(topo, get_profile("vendorB-like"), (0, 1), 1)
    assert spec.n == 1 and spec.rows_compute == (0,)


# ---- nary logic -------------------------------------------------------------------

def input_matrix(n, columns):
    """Column c of the matrix encodes input combination (c // 2)."""
    combos = np.arange(columns) // 2
    return np.stack([(combos >> j) & 1 for j in range(n)]).astype(np.uint8)


ORACLES = {
    LogicKind.AND: lambda m: m.all(axis=0).astype(np.uint8),
    LogicKind.OR: lambda m: m.any(axis=0).astype(np.uint8),
    LogicKind.NAND: lambda m: 1 - m.all(axis=0).astype(np.uint8),
    LogicKind.NOR: lambda m: 1 - m.any(axis=0).astype(np.uint8),
}


@pytest.mark.parametrize("kind", list(LogicKind))
@pytest.mark.parametrize("n", [2, 4])
def test_nary_exhaustive_truth_tables(kind, n):
    cols = 2 ** (n + 1)     # every combination twice (both parities)
    topo = make(rows=16, cols=cols)
    eng = Engine(topo, IDEAL4)
    spec = plan_nary(topo, IDEAL4, (0, 1), kind, n)
    inputs = input_matrix(n, cols)
    out = nary_logic(eng, spec, inputs, rng())
    want = ORACLES[kind](inputs)
    vc = spec.valid_columns
    assert np.array_equal(out.result[vc], want[vc])
    assert np.array_equal(out.complement[vc], 1 - want[vc])


@pytest.mark.parametrize("n", [2, 4])
def test_nary_margins_analytic(n):
    cols = 2 ** (n + 1)
    topo = make(rows=16, cols=cols)
    inputs = input_matrix(n, cols)
    k = inputs.sum(axis=0)
    for kind, ref in ((LogicKind.AND, n - 0.5), (LogicKind.OR, 0.5)):
        eng = Engine(topo, IDEAL4)
        spec = plan_nary(topo, IDEAL4, (0, 1), kind, n)
        out = nary_logic(eng, spec, inputs, rng())
        want = np.abs(k[out.sense_columns] - ref) / n
        assert np.max(np.abs(out.margins - want)) < 1e-12


def test_nary_result_complement_invariant_under_noise():
    topo = make(rows=64, cols=16)
    prof = get_profile("vendorA-like")
    sample = sample_chip(prof, 3, topo)
    eng = Engine(topo, prof, sample=sample)
    spec = plan_nary(topo, prof, (0, 1), LogicKind.AND, 4)
    r = rng()
    for _ in range(20):
        inputs = r.integers(0, 2, (4, 16)).astype(np.uint8)
        out = nary_logic(eng, spec, inputs, r)
        vc = spec.valid_columns
        assert np.array_equal(out.result[vc] ^ out.complement[vc],
                              np.ones(len(vc), dtype=np.uint8))


def test_reference_needs_the_fractional_row():
    # all-1 reference instead of (N-0.5)/N makes AND(all-ones) tie and fail
    topo = make(rows=16, cols=8)
    eng = Engine(topo, IDEAL4)
    spec = plan_nary(topo, IDEAL4, (0, 1), LogicKind.AND, 2)
    r = rng()
    for addr in spec.rows_ref:
        eng.write_row(topo.global_row(0, addr), np.ones(8, dtype=np.uint8), r)
    for addr in spec.rows_compute:
        eng.write_row(topo.global_row(1, addr), np.ones(8, dtype=np.uint8), r)
    eng.execute(list(spec.trace), r)
    got = eng.peek_row(topo.global_row(1, spec.rows_compute[0]))
    assert np.all(got[spec.valid_columns] == 0.0)


def test_nary_requires_merge_capability():
    topo = make(rows=64)
    spec = plan_nary(topo, get_profile("ideal"), (0, 1), LogicKind.AND, 2)
    eng = Engine(topo, override_profile(get_profile("vendorB-like"),
                                        max_log2_n=4))
    with pytest.raises(CapabilityError):
        nary_logic(eng, spec, np.zeros((2, 8), dtype=np.uint8), rng())


# ---- majority3 --------------------------------------------------------------------

def test_majority3_all_combinations():
    topo = make(rows=16, cols=16)
    eng = Engine(topo, IDEAL4)
    r = rng()
    combos = np.arange(16) // 2
    ins = np.stack([(combos >> j) & 1 for j in range(3)]).astype(np.uint8)
    for j in range(3):
        eng.write_row(topo.global_row(0, 4 + j), ins[j], r)
    res = majority3(eng, 0, 4, r)
    want = (ins.sum(axis=0) >= 2).astype(np.uint8)
    assert np.array_equal(res.result, want)
    assert res.clobbered_rows == (4, 5, 6, 7)
    # destructive: every quad row now holds the result
    for g in res.clobbered_rows:
        assert np.array_equal((eng.peek_row(g) > 0.5).astype(np.uint8), want)


def test_majority3_validation():
    eng = Engine(make(), IDEAL4)
    with pytest.raises(InvalidConfigError):
        majority3(eng, 0, 5, rng())       # misaligned
    with pytest.raises(InvalidConfigError):
        majority3(eng, 0, 16, rng())      # out of range
    eng_b = Engine(make(), override_profile(get_profile("vendorB-like"),
                                            max_log2_n=2))
    with pytest.raises(CapabilityError):
        majority3(eng_b, 0, 4, rng())


# ---- functional completeness -------------------------------------------------------

class GateRunner:
    """Host-side composition of pudsim ops; one engine run per gate."""

    def __init__(self):
        self.topo = make(rows=16, cols=8)
        self.rng = np.random.default_rng(5)
        self.spec = plan_nary(self.topo, IDEAL4, (0, 1), LogicKind.NAND, 2)

    def NOT(self, v):
        eng = Engine(self.topo, IDEAL4)
        eng.write_row(2, v, self.rng)
        res = not_op(eng, 2, self.topo.global_row(1, 2), self.rng)
        return (eng.peek_row(res.destination_rows[0]) > 0.5).astype(np.uint8)

    def NAND(self, u, v):
        eng = Engine(self.topo, IDEAL4)
        return nary_logic(eng, self.spec, np.stack([u, v]), self.rng).result

    def AND(self, u, v):
        return self.NOT(self.NAND(u, v))

    def OR(self, u, v):
        return self.NAND(self.NOT(u), self.NOT(v))


def test_all_sixteen_two_input_functions_compose():
    g = GateRunner()
    x = np.array([0, 0, 1, 1, 0, 0, 1, 1], dtype=np.uint8)
    y = np.array([0, 1, 0, 1, 0, 1, 0, 1], dtype=np.uint8)
    shared = g.topo.shared_columns((0, 1))
    lits = {(0, 0): (g.NOT(x), g.NOT(y)), (0, 1): (g.NOT(x), y),
            (1, 0): (x, g.NOT(y)), (1, 1): (x, y)}
    for table in range(16):
        terms = [g.AND(*lits[(xv, yv)])
                 for i, (xv, yv) in enumerate(itertools.product((0, 1),
                                                                repeat=2))
                 if table >> i & 1]
        if terms:
            out = terms[0]
            for t in terms[1:]:
                out = g.OR(out, t)
        else:
            out = g.AND(x, g.NOT(x))   # constant false, still via ops
        want = np.array([table >> ((xv << 1) | yv) & 1
                         for xv, yv in zip(x, y)], dtype=np.uint8)
        assert np.array_equal(out[shared], want[shared]), f"table {table}"
