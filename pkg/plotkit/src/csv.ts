import { readFileSync } from 'node:fs';
import Papa from 'papaparse';
import { IoFailureError, SchemaMismatchError } from './errors.js';

export interface Table {
    columns: string[];
    rows: Record<string, string>[];
}

export function loadCsv(path: string): Table {
    let text: string;
    try {
        text = readFileSync(path, 'utf8');
    } catch (err) {
        throw new IoFailureError(`cannot read ${path}: ${err}`);
    }
    const parsed = Papa.parse<Record<string, string>>(text.trim(), {
        header: true,
        skipEmptyLines: true,
    });
    if (parsed.errors.length > 0) {
        const first = parsed.errors[0];
        throw new SchemaMismatchError(
            `${path} is not a well-formed CSV: ${first.message} (row ${first.row})`
        );
    }
    const columns = parsed.meta.fields ?? [];
    if (columns.length === 0 || parsed.data.length === 0) {
        throw new SchemaMismatchError(`${path} has no data rows`);
    }
    return { columns, rows: parsed.data };
}

export function requireColumns(table: Table, needed: string[], path: string): void {
    for (const col of needed) {
        if (!table.columns.includes(col)) {
            throw new SchemaMismatchError(
                `${path} lacks column "${col}" (has: ${table.columns.join(', ')})`
            );
        }
    }
}

/** Parse a cell that must hold a number. */
export function numericCell(row: Record<string, string>, col: string): number {
    const value = Number(row[col]);
    if (!Number.isFinite(value)) {
        throw new SchemaMismatchError(`non-numeric value "${row[col]}" in column "${col}"`);
    }
    return value;
}
