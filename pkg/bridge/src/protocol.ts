/**
 * Segmentation wire protocol: 4-byte big-endian length prefix followed
 * by UTF-8 JSON, over TCP or stdio. One request per frame.
 */

import { z } from "zod";

export const SyntheticImage = z.object({
  width: z.number().int().positive(),
  height: z.number().int().positive(),
  left_rle: z.array(z.number().int().nonnegative()),
  right_rle: z.array(z.number().int().nonnegative()),
});

export const Prompt = z.object({
  view: z.enum(["L", "R"]),
  u: z.number(),
  v: z.number(),
});

export const Request = z.object({
  frame_id: z.number().int(),
  synthetic: SyntheticImage.optional(),
  left_png_b64: z.string().optional(),
  right_png_b64: z.string().optional(),
  prompts: z.array(Prompt).default([]),
});

export const TargetEntry = z.object({
  left_mask_rle: z.array(z.number().int().nonnegative()),
  right_mask_rle: z.array(z.number().int().nonnegative()),
  confidence: z.number().min(0).max(1),
});

export const Response = z.object({
  frame_id: z.number().int(),
  targets: z.array(TargetEntry).optional(),
  error: z.string().optional(),
});

export type RequestT = z.infer<typeof Request>;
export type ResponseT = z.infer<typeof Response>;

export function encodeMessage(payload: unknown): Buffer {
  const body = Buffer.from(JSON.stringify(payload), "utf8");
  const header = Buffer.alloc(4);
  header.writeUInt32BE(body.length, 0);
  return Buffer.concat([header, body]);
}

/** Incremental decoder for length-prefixed JSON streams. */
export class MessageDecoder {
  private buffer = Buffer.alloc(0);

  push(chunk: Buffer): unknown[] {
    this.buffer = Buffer.concat([this.buffer, chunk]);
    const messages: unknown[] = [];
    for (;;) {
      if (this.buffer.length < 4) break;
      const length = this.buffer.readUInt32BE(0);
      if (this.buffer.length < 4 + length) break;
      const body = this.buffer.subarray(4, 4 + length);
      this.buffer = this.buffer.subarray(4 + length);
      messages.push(JSON.parse(body.toString("utf8")));
    }
    return messages;
  }
}
