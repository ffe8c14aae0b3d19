import { describe, expect, it } from 'vitest';
import { boxStats, groupRows, mean } from '../src/stats.js';

/**
 * Reference quartiles, written independently of src/stats.ts with explicit
 * index arithmetic: Tukey hinges (medians of the halves), min/max whiskers.
 */
function refBox(values: number[]) {
    const s = [...values].sort((a, b) => a - b);
    const n = s.length;
    const mid = (lo: number, len: number) =>
        len % 2 === 1 ? s[lo + (len - 1) / 2] : (s[lo + len / 2 - 1] + s[lo + len / 2]) / 2;
    const half = Math.floor(n / 2);
    return {
        min: s[0],
        q1: n === 1 ? s[0] : mid(0, half),
        median: mid(0, n),
        q3: n === 1 ? s[0] : mid(n - half, half),
        max: s[n - 1],
    };
}

// deterministic PRNG so the randomized comparison is reproducible
function lcg(seed: number): () => number {
    let state = seed >>> 0;
    return () => {
        state = (state * 1664525 + 1013904223) >>> 0;
        return state / 2 ** 32;
    };
}

describe('boxStats', () => {
    it('matches hand-computed hinges on even counts', () => {
        expect(boxStats([4, 1, 3, 2])).toEqual({
            count: 4, min: 1, q1: 1.5, median: 2.5, q3: 3.5, max: 4,
        });
    });

    it('matches hand-computed hinges on odd counts', () => {
        expect(boxStats([5, 3, 1, 4, 2])).toEqual({
            count: 5, min: 1, q1: 1.5, median: 3, q3: 4.5, max: 5,
        });
    });

    it('collapses a single value', () => {
        expect(boxStats([7])).toEqual({
            count: 1, min: 7, q1: 7, median: 7, q3: 7, max: 7,
        });
    });

    it('handles two values', () => {
        expect(boxStats([3, 1])).toEqual({
            count: 2, min: 1, q1: 1, median: 2, q3: 3, max: 3,
        });
    });

    it('rejects an empty group', () => {
        expect(() => boxStats([])).toThrow(RangeError);
    });

    it('equals the independent reference on random inputs, exactly', () => {
        const rand = lcg(0x5eed);
        for (let trial = 0; trial < 200; trial++) {
            const n = 1 + Math.floor(rand() * 40);
            const values = Array.from({ length: n }, () => Math.round(rand() * 1e6) / 1e6);
            const got = boxStats(values);
            const want = refBox(values);
            expect(got.min).toBe(want.min);
            expect(got.q1).toBe(want.q1);
            expect(got.median).toBe(want.median);
            expect(got.q3).toBe(want.q3);
            expect(got.max).toBe(want.max);
        }
    });

    it('does not reorder the caller array', () => {
        const values = [3, 1, 2];
        boxStats(values);
        expect(values).toEqual([3, 1, 2]);
    });
});

describe('groupRows', () => {
    it('buckets rows and sorts groups deterministically', () => {
        const rows = [
            { kind: 'OR', n: '2', v: 'a' },
            { kind: 'AND', n: '4', v: 'b' },
            { kind: 'AND', n: '2', v: 'c' },
            { kind: 'AND', n: '2', v: 'd' },
        ];
        const grouped = groupRows(rows, ['kind', 'n']);
        expect([...grouped.values()].map((g) => g.map((r) => r.v))).toEqual([
            ['c', 'd'], ['b'], ['a'],
        ]);
        const reversed = groupRows([...rows].reverse(), ['kind', 'n']);
        expect([...reversed.keys()]).toEqual([...grouped.keys()]);
    });
});

describe('mean', () => {
    it('averages', () => {
        expect(mean([0.25, 0.75])).toBe(0.5);
    });
});
