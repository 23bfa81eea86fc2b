// Wire contract shared bit-exactly with the engine's interaction module.

import { z } from "zod";

export const ManipulationKind = z.enum([
  "ClickSelect",
  "LassoSelect",
  "BoxSelect",
  "FreeDraw",
]);
export type ManipulationKind = z.infer<typeof ManipulationKind>;

export const ElementRefSchema = z
  .object({
    tag: z.string(),
    datum: z.record(z.string(), z.unknown()),
  })
  .strict();

export const BoxSchema = z
  .object({
    x1: z.union([z.number(), z.string()]),
    x2: z.union([z.number(), z.string()]),
    y1: z.union([z.number(), z.string()]),
    y2: z.union([z.number(), z.string()]),
    fx: z.number().min(0).max(1),
    fy: z.number().min(0).max(1),
  })
  .strict();

export const DrawingSchema = z
  .object({
    strokes: z.array(z.array(z.tuple([z.number(), z.number()]))),
    screenshotPngBase64: z.string(),
  })
  .strict();

export const ManipulationSchema = z
  .object({
    id: z.number().int().nonnegative(),
    kind: ManipulationKind,
    elements: z.array(ElementRefSchema).optional(),
    box: BoxSchema.optional(),
    drawing: DrawingSchema.optional(),
  })
  .strict()
  .superRefine((value, ctx) => {
    const expected: Record<string, "elements" | "box" | "drawing"> = {
      ClickSelect: "elements",
      LassoSelect: "elements",
      BoxSelect: "box",
      FreeDraw: "drawing",
    };
    const required = expected[value.kind];
    for (const field of ["elements", "box", "drawing"] as const) {
      const present = value[field] !== undefined;
      if (present !== (field === required)) {
        ctx.addIssue({
          code: "custom",
          message: `${value.kind} must populate exactly ${required}`,
        });
        return;
      }
    }
  });

export type WireManipulation = z.infer<typeof ManipulationSchema>;

export function validateManipulation(payload: unknown): WireManipulation {
  return ManipulationSchema.parse(payload);
}

// Server document shapes the client consumes (subset it relies on).

export interface DescriptorDoc {
  manipulationId: number;
  kind: ManipulationKind;
  text: string;
  referencedData: Record<string, unknown>[];
  inferredIntent: string | null;
}

export interface TriggerDoc {
  text: string;
  span: [number, number];
  cardinality: number;
}

export interface IntentLinkDoc {
  trigger: TriggerDoc;
  descriptorIds: number[];
  rule: "Order" | "Content" | "Flexible";
  partial: boolean;
}

export interface ArtifactDoc {
  rawResponse: string;
  explanation: string;
  extractedCode: string;
  processedCode: string;
  validation: {
    hasRootGlobal: boolean;
    hasViewportGlobals: boolean;
    returnsGlobalScales: boolean;
  };
  failure: { kind: string; detail: string } | null;
  warnings: string[];
}

export interface SessionEntryDoc {
  index: number;
  nlInput: string;
  manipulations: WireManipulation[];
  descriptors: DescriptorDoc[];
  linkResult: { links: IntentLinkDoc[]; unmatchedDescriptorIds: number[] };
  artifact: ArtifactDoc;
  modelId: string;
  createdAt: string;
  warnings: string[];
  thumbnailPngBase64: string | null;
}

export interface SessionDoc {
  id: string;
  datasetId: string;
  modelId: string;
  activeEntryIndex: number | null;
  entries: SessionEntryDoc[];
}

export interface AttributeDoc {
  name: string;
  kind: "quantitative" | "temporal" | "nominal" | "ordinal";
  valueRange: unknown[];
  nullable: boolean;
  distinctCount: number | null;
}

export interface DatasetPageDoc {
  id: string;
  name: string;
  rowCount: number;
  attributes: AttributeDoc[];
  page: number;
  pageSize: number;
  rows: Record<string, unknown>[];
}
