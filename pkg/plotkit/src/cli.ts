#!/usr/bin/env node
import { readFileSync } from 'node:fs';
import { pathToFileURL } from 'node:url';
import { IoFailureError, SchemaMismatchError } from './errors.js';
import { render } from './render.js';
import { PlotSpecSchema } from './spec.js';

export function main(argv: string[]): number {
    if (argv.length !== 1) {
        console.error('usage: plot <spec.json>');
        return 2;
    }
    const specPath = argv[0];

    let raw: string;
    try {
        raw = readFileSync(specPath, 'utf8');
    } catch (err) {
        console.error(`error: cannot read ${specPath}: ${err}`);
        return 4;
    }

    let spec;
    try {
        spec = PlotSpecSchema.parse(JSON.parse(raw));
    } catch (err) {
        console.error(`error: ${specPath} is not a valid plot spec: ${err}`);
        return 2;
    }

    try {
        const out = render(spec);
        console.log(`wrote ${out.image}`);
        console.log(`wrote ${out.stats}`);
        return 0;
    } catch (err) {
        if (err instanceof SchemaMismatchError) {
            console.error(`error: ${err.message}`);
            return 2;
        }
        if (err instanceof IoFailureError) {
            console.error(`error: ${err.message}`);
            return 4;
        }
        throw err;
    }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
    process.exit(main(process.argv.slice(2)));
}
