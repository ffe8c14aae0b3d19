import { writeFileSync } from 'node:fs';
import * as path from 'node:path';
import { loadCsv, numericCell, requireColumns } from './csv.js';
import { IoFailureError, SchemaMismatchError } from './errors.js';
import { PlotSpec } from './spec.js';
import { boxStats, groupRows, mean } from './stats.js';
import { BoxEntry, REGIONS, renderBoxSvg, renderHeatmapSvg } from './svg.js';

const VALUE_COLUMN = 'success_rate';

export interface RenderResult {
    image: string;
    stats: string;
}

function statsPathFor(imagePath: string): string {
    const ext = path.extname(imagePath);
    const stem = ext ? imagePath.slice(0, -ext.length) : imagePath;
    return stem + '.stats.json';
}

function buildBox(spec: PlotSpec, rows: Record<string, string>[]) {
    const keys = [...spec.group_by];
    if (spec.hue && !keys.includes(spec.hue)) keys.push(spec.hue);
    const groups = keys.length ? groupRows(rows, keys) : new Map([['', rows]]);

    const hueValues = spec.hue
        ? [...new Set(rows.map((r) => r[spec.hue as string]))].sort()
        : [];

    const entries: BoxEntry[] = [];
    const statGroups: object[] = [];
    for (const bucket of groups.values()) {
        const first = bucket[0];
        const stats = boxStats(bucket.map((r) => numericCell(r, VALUE_COLUMN)));
        entries.push({
            group: spec.group_by.map((k) => first[k]),
            hue: spec.hue ? first[spec.hue] : null,
            stats,
        });
        const key: Record<string, string> = {};
        for (const k of keys) key[k] = first[k];
        statGroups.push({ key, ...stats });
    }
    return {
        svg: renderBoxSvg(entries, hueValues),
        stats: { figure: 'box', value: VALUE_COLUMN, groups: statGroups },
    };
}

function buildHeatmap(rows: Record<string, string>[]) {
    const cells: (number | null)[][] = REGIONS.map(() => [null, null, null]);
    const counts: number[][] = REGIONS.map(() => [0, 0, 0]);
    const byRegion = groupRows(rows, ['region_f', 'region_l']);
    for (const bucket of byRegion.values()) {
        const r = REGIONS.indexOf(bucket[0].region_f as (typeof REGIONS)[number]);
        const c = REGIONS.indexOf(bucket[0].region_l as (typeof REGIONS)[number]);
        if (r < 0 || c < 0) {
            throw new SchemaMismatchError(
                `unknown region pair (${bucket[0].region_f}, ${bucket[0].region_l})`
            );
        }
        cells[r][c] = mean(bucket.map((row) => numericCell(row, VALUE_COLUMN)));
        counts[r][c] = bucket.length;
    }
    return {
        svg: renderHeatmapSvg(cells),
        stats: { figure: 'heatmap', value: VALUE_COLUMN, regions: [...REGIONS], cells, counts },
    };
}

/**
 * Render the figure described by `spec`: writes the SVG image plus a
 * sibling `.stats.json` carrying the exact numbers that were drawn, so
 * plots can be diffed and regression-tested without parsing SVG.
 * The input CSV is never modified.
 */
export function render(spec: PlotSpec): RenderResult {
    const table = loadCsv(spec.input);
    const needed = [VALUE_COLUMN, ...spec.group_by];
    if (spec.hue) needed.push(spec.hue);
    if (spec.figure === 'heatmap') needed.push('region_f', 'region_l');
    requireColumns(table, needed, spec.input);

    const built = spec.figure === 'box' ? buildBox(spec, table.rows) : buildHeatmap(table.rows);

    const statsPath = statsPathFor(spec.output);
    try {
        writeFileSync(spec.output, built.svg);
        writeFileSync(statsPath, JSON.stringify(built.stats, null, 2) + '\n');
    } catch (err) {
        throw new IoFailureError(`cannot write ${spec.output}: ${err}`);
    }
    return { image: spec.output, stats: statsPath };
}
