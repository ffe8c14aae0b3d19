export { loadCsv, requireColumns, type Table } from './csv.js';
export { IoFailureError, SchemaMismatchError } from './errors.js';
export { render, type RenderResult } from './render.js';
export { PlotSpecSchema, type PlotSpec } from './spec.js';
export { boxStats, groupRows, mean, type BoxStats } from './stats.js';
export { REGIONS, renderBoxSvg, renderHeatmapSvg } from './svg.js';
