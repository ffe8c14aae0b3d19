import { z } from 'zod';

/**
 * A plot job: one input CSV, one figure, one output image.
 *
 * Unknown keys are rejected so a typo (e.g. "group-by") fails loudly
 * instead of silently rendering an ungrouped figure.
 */
export const PlotSpecSchema = z
    .object({
        input: z.string().min(1),
        figure: z.enum(['box', 'heatmap']),
        group_by: z.array(z.string()).default([]),
        hue: z.string().optional(),
        output: z.string().min(1),
    })
    .strict();

export type PlotSpec = z.infer<typeof PlotSpecSchema>;
