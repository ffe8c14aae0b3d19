import { BoxStats } from './stats.js';

export const REGIONS = ['Close', 'Middle', 'Far'] as const;

const PALETTE = ['#4878a8', '#e49444', '#5ba053', '#c44e52', '#8172b3', '#937860'];

const FONT = 'font-family="sans-serif" font-size="11"';

function esc(text: string): string {
    return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;')
        .replace(/"/g, '&quot;');
}

export interface BoxEntry {
    group: string[];      // group_by cell values, display order
    hue: string | null;
    stats: BoxStats;
}

interface Scale {
    lo: number;
    hi: number;
    plotTop: number;
    plotBottom: number;
}

function yPixel(value: number, s: Scale): number {
    const t = (value - s.lo) / (s.hi - s.lo);
    return s.plotBottom - t * (s.plotBottom - s.plotTop);
}

function yAxis(parts: string[], s: Scale, left: number): void {
    parts.push(`<line x1="${left}" y1="${s.plotTop}" x2="${left}" y2="${s.plotBottom}" stroke="black"/>`);
    for (let i = 0; i <= 5; i++) {
        const v = s.lo + ((s.hi - s.lo) * i) / 5;
        const y = yPixel(v, s).toFixed(2);
        parts.push(`<line x1="${left - 4}" y1="${y}" x2="${left}" y2="${y}" stroke="black"/>`);
        parts.push(`<text x="${left - 7}" y="${y}" ${FONT} text-anchor="end" dominant-baseline="middle">${v.toFixed(2)}</text>`);
    }
}

/**
 * Grouped box-and-whisker figure. One x slot per group_by combination;
 * hue values sit side by side inside the slot and get legend swatches.
 * Whiskers span the full min..max range.
 */
export function renderBoxSvg(entries: BoxEntry[], hueValues: string[]): string {
    const groups: string[] = [];
    for (const e of entries) {
        const label = e.group.join('/') || 'all';
        if (!groups.includes(label)) groups.push(label);
    }
    const perSlot = Math.max(1, hueValues.length);
    const boxW = 26;
    const slotW = perSlot * (boxW + 8) + 26;
    const left = 62;
    const width = left + groups.length * slotW + (hueValues.length ? 110 : 20);
    const height = 360;
    const s: Scale = { lo: 0, hi: 1, plotTop: 20, plotBottom: height - 46 };

    let lo = Infinity;
    let hi = -Infinity;
    for (const e of entries) {
        lo = Math.min(lo, e.stats.min);
        hi = Math.max(hi, e.stats.max);
    }
    const pad = hi > lo ? (hi - lo) * 0.06 : 0.05;
    s.lo = lo - pad;
    s.hi = hi + pad;

    const parts: string[] = [];
    parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}">`);
    parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
    yAxis(parts, s, left);

    for (const e of entries) {
        const label = e.group.join('/') || 'all';
        const slot = groups.indexOf(label);
        const hueIdx = e.hue === null ? 0 : hueValues.indexOf(e.hue);
        const color = PALETTE[hueIdx % PALETTE.length];
        const x = left + slot * slotW + 16 + hueIdx * (boxW + 8);
        const cx = (x + boxW / 2).toFixed(2);
        const st = e.stats;
        const [yMin, yQ1, yMed, yQ3, yMax] =
            [st.min, st.q1, st.median, st.q3, st.max].map((v) => yPixel(v, s).toFixed(2));
        parts.push(`<line x1="${cx}" y1="${yMin}" x2="${cx}" y2="${yMax}" stroke="black"/>`);
        for (const cap of [yMin, yMax]) {
            parts.push(`<line x1="${(x + 5).toFixed(2)}" y1="${cap}" x2="${(x + boxW - 5).toFixed(2)}" y2="${cap}" stroke="black"/>`);
        }
        parts.push(`<rect x="${x}" y="${yQ3}" width="${boxW}" height="${(Number(yQ1) - Number(yQ3)).toFixed(2)}" fill="${color}" stroke="black" class="box"/>`);
        parts.push(`<line x1="${x}" y1="${yMed}" x2="${x + boxW}" y2="${yMed}" stroke="black" stroke-width="2"/>`);
    }

    groups.forEach((label, i) => {
        const x = (left + i * slotW + slotW / 2).toFixed(2);
        parts.push(`<text x="${x}" y="${height - 26}" ${FONT} text-anchor="middle">${esc(label)}</text>`);
    });

    hueValues.forEach((value, i) => {
        const x = left + groups.length * slotW + 16;
        const y = 30 + i * 18;
        parts.push(`<rect x="${x}" y="${y - 9}" width="12" height="12" fill="${PALETTE[i % PALETTE.length]}" stroke="black"/>`);
        parts.push(`<text x="${x + 17}" y="${y}" ${FONT} dominant-baseline="middle">${esc(value)}</text>`);
    });

    parts.push('</svg>');
    return parts.join('\n') + '\n';
}

function rampColor(value: number): string {
    // white -> deep blue over [0, 1]
    const t = Math.min(1, Math.max(0, value));
    const ch = (a: number, b: number) => Math.round(a + (b - a) * t);
    return `rgb(${ch(255, 33)},${ch(255, 102)},${ch(255, 172)})`;
}

/**
 * 3x3 heatmap of mean success per (source region, destination region).
 * Cells with no data render gray with a dash.
 */
export function renderHeatmapSvg(cells: (number | null)[][]): string {
    const cell = 92;
    const left = 70;
    const top = 42;
    const width = left + 3 * cell + 24;
    const height = top + 3 * cell + 56;
    const parts: string[] = [];
    parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}">`);
    parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
    parts.push(`<text x="${left + 1.5 * cell}" y="18" ${FONT} text-anchor="middle">destination row region</text>`);

    for (let r = 0; r < 3; r++) {
        for (let c = 0; c < 3; c++) {
            const x = left + c * cell;
            const y = top + r * cell;
            const value = cells[r][c];
            const fill = value === null ? '#dddddd' : rampColor(value);
            parts.push(`<rect x="${x}" y="${y}" width="${cell}" height="${cell}" fill="${fill}" stroke="white" class="cell"/>`);
            const label = value === null ? '&#8211;' : value.toFixed(3);
            const dark = value !== null && value > 0.55;
            parts.push(`<text x="${x + cell / 2}" y="${y + cell / 2}" ${FONT} text-anchor="middle" dominant-baseline="middle" fill="${dark ? 'white' : 'black'}">${label}</text>`);
        }
    }

    REGIONS.forEach((name, i) => {
        parts.push(`<text x="${left + i * cell + cell / 2}" y="${top + 3 * cell + 18}" ${FONT} text-anchor="middle">${name}</text>`);
        parts.push(`<text x="${left - 8}" y="${top + i * cell + cell / 2}" ${FONT} text-anchor="end" dominant-baseline="middle">${name}</text>`);
    });
    parts.push(`<text x="${left + 1.5 * cell}" y="${height - 12}" ${FONT} text-anchor="middle">source row region: left; destination region: bottom</text>`);
    parts.push('</svg>');
    return parts.join('\n') + '\n';
}
