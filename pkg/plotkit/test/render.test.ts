import { mkdtempSync, readFileSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import * as path from 'node:path';
import { fileURLToPath } from 'node:url';
import { beforeAll, describe, expect, it } from 'vitest';
import { SchemaMismatchError } from '../src/errors.js';
import { render } from '../src/render.js';
import { PlotSpec } from '../src/spec.js';

const FIXTURES = fileURLToPath(new URL('./fixtures', import.meta.url));
const LOGIC_CSV = path.join(FIXTURES, 'logic_small.csv');
const REGIONS_CSV = path.join(FIXTURES, 'regions.csv');

let outDir: string;
beforeAll(() => {
    outDir = mkdtempSync(path.join(tmpdir(), 'plotkit-'));
});

/** Plain-text CSV reader, independent of the papaparse path under test. */
function rawRows(csvPath: string): Record<string, string>[] {
    const lines = readFileSync(csvPath, 'utf8').trim().split('\n');
    const header = lines[0].split(',');
    return lines.slice(1).map((line) => {
        const cells = line.split(',');
        const row: Record<string, string> = {};
        header.forEach((name, i) => (row[name] = cells[i]));
        return row;
    });
}

/** Independent Tukey-hinge quartiles (explicit index arithmetic). */
function refBox(values: number[]) {
    const s = [...values].sort((a, b) => a - b);
    const n = s.length;
    const mid = (lo: number, len: number) =>
        len % 2 === 1 ? s[lo + (len - 1) / 2] : (s[lo + len / 2 - 1] + s[lo + len / 2]) / 2;
    const half = Math.floor(n / 2);
    return {
        count: n,
        min: s[0],
        q1: n === 1 ? s[0] : mid(0, half),
        median: mid(0, n),
        q3: n === 1 ? s[0] : mid(n - half, half),
        max: s[n - 1],
    };
}

describe('box figure', () => {
    const spec: PlotSpec = {
        input: LOGIC_CSV,
        figure: 'box',
        group_by: ['n'],
        hue: 'kind',
        output: '',
    };

    it('renders one box per (n, kind) with exact quartiles in stats.json', () => {
        const out = render({ ...spec, output: path.join(outDir, 'logic.svg') });
        const svg = readFileSync(out.image, 'utf8');
        expect(svg).toContain('<svg');
        expect(svg.match(/class="box"/g)).toHaveLength(8); // 2 n values x 4 kinds

        const stats = JSON.parse(readFileSync(out.stats, 'utf8'));
        expect(stats.figure).toBe('box');
        expect(stats.groups).toHaveLength(8);

        const rows = rawRows(LOGIC_CSV);
        for (const group of stats.groups) {
            const bucket = rows.filter(
                (r) => r.n === group.key.n && r.kind === group.key.kind
            );
            const want = refBox(bucket.map((r) => Number(r.success_rate)));
            expect(group.count).toBe(want.count);
            expect(group.min).toBe(want.min);
            expect(group.q1).toBe(want.q1);
            expect(group.median).toBe(want.median);
            expect(group.q3).toBe(want.q3);
            expect(group.max).toBe(want.max);
        }
    });

    it('is deterministic and leaves the input untouched', () => {
        const before = readFileSync(LOGIC_CSV);
        const a = render({ ...spec, output: path.join(outDir, 'rep_a.svg') });
        const b = render({ ...spec, output: path.join(outDir, 'rep_b.svg') });
        expect(readFileSync(a.stats, 'utf8')).toBe(readFileSync(b.stats, 'utf8'));
        expect(readFileSync(a.image, 'utf8')).toBe(readFileSync(b.image, 'utf8'));
        expect(readFileSync(LOGIC_CSV).equals(before)).toBe(true);
    });

    it('groups the whole file when group_by is empty', () => {
        const out = render({
            input: LOGIC_CSV, figure: 'box', group_by: [],
            output: path.join(outDir, 'flat.svg'),
        });
        const stats = JSON.parse(readFileSync(out.stats, 'utf8'));
        expect(stats.groups).toHaveLength(1);
        expect(stats.groups[0].count).toBe(rawRows(LOGIC_CSV).length);
    });
});

describe('heatmap figure', () => {
    it('renders the 3x3 region grid with exact means and null gaps', () => {
        const out = render({
            input: REGIONS_CSV, figure: 'heatmap', group_by: [],
            output: path.join(outDir, 'regions.svg'),
        });
        const svg = readFileSync(out.image, 'utf8');
        expect(svg.match(/class="cell"/g)).toHaveLength(9);

        const stats = JSON.parse(readFileSync(out.stats, 'utf8'));
        expect(stats.regions).toEqual(['Close', 'Middle', 'Far']);

        const rows = rawRows(REGIONS_CSV);
        const names = ['Close', 'Middle', 'Far'];
        for (let r = 0; r < 3; r++) {
            for (let c = 0; c < 3; c++) {
                const bucket = rows.filter(
                    (row) => row.region_f === names[r] && row.region_l === names[c]
                );
                if (bucket.length === 0) {
                    expect(stats.cells[r][c]).toBeNull();
                    expect(stats.counts[r][c]).toBe(0);
                } else {
                    let total = 0;
                    for (const row of bucket) total += Number(row.success_rate);
                    expect(stats.cells[r][c]).toBe(total / bucket.length);
                    expect(stats.counts[r][c]).toBe(bucket.length);
                }
            }
        }
        // the fixture exercises both populated and empty cells
        expect(stats.cells.flat().filter((v: number | null) => v === null).length)
            .toBeGreaterThan(0);
        expect(stats.cells.flat().filter((v: number | null) => v !== null).length)
            .toBeGreaterThan(0);
    });
});

describe('schema mismatches', () => {
    it('rejects a CSV without success_rate', () => {
        const bad = path.join(outDir, 'no_rate.csv');
        writeFileSync(bad, 'kind,n\nAND,2\n');
        expect(() =>
            render({ input: bad, figure: 'box', group_by: [], output: path.join(outDir, 'x.svg') })
        ).toThrow(SchemaMismatchError);
    });

    it('rejects a group_by column that is not in the file', () => {
        expect(() =>
            render({
                input: LOGIC_CSV, figure: 'box', group_by: ['voltage'],
                output: path.join(outDir, 'x.svg'),
            })
        ).toThrow(SchemaMismatchError);
    });

    it('rejects a heatmap over a CSV without region columns', () => {
        const bad = path.join(outDir, 'no_regions.csv');
        writeFileSync(bad, 'success_rate\n0.5\n');
        expect(() =>
            render({ input: bad, figure: 'heatmap', group_by: [], output: path.join(outDir, 'x.svg') })
        ).toThrow(SchemaMismatchError);
    });

    it('rejects non-numeric success rates', () => {
        const bad = path.join(outDir, 'words.csv');
        writeFileSync(bad, 'success_rate\ngood\n');
        expect(() =>
            render({ input: bad, figure: 'box', group_by: [], output: path.join(outDir, 'x.svg') })
        ).toThrow(SchemaMismatchError);
    });

    it('rejects an empty CSV', () => {
        const bad = path.join(outDir, 'empty.csv');
        writeFileSync(bad, '');
        expect(() =>
            render({ input: bad, figure: 'box', group_by: [], output: path.join(outDir, 'x.svg') })
        ).toThrow(SchemaMismatchError);
    });
});
