import { describe, expect, it } from "vitest";

import { Request } from "../src/protocol.js";
import { rleDecode, rleEncode } from "../src/rle.js";
import { labelComponents, segmentFrame } from "../src/segmenter.js";

const W = 64;
const H = 48;

function blank(): Uint8Array {
  return new Uint8Array(W * H);
}

function drawRect(bits: Uint8Array, u0: number, v0: number, u1: number, v1: number): void {
  for (let v = v0; v <= v1; v++) {
    for (let u = u0; u <= u1; u++) bits[v * W + u] = 1;
  }
}

function frame(left: Uint8Array, right: Uint8Array, prompts: unknown[] = []) {
  return Request.parse({
    frame_id: 0,
    synthetic: {
      width: W,
      height: H,
      left_rle: rleEncode(left),
      right_rle: rleEncode(right),
    },
    prompts,
  });
}

describe("labelComponents", () => {
  it("labels two separated squares distinctly", () => {
    const bits = blank();
    drawRect(bits, 2, 2, 6, 6);
    drawRect(bits, 20, 10, 25, 15);
    const { labels, count } = labelComponents(bits, W, H);
    expect(count).toBe(2);
    expect(labels[3 * W + 3]).not.toBe(labels[12 * W + 22]);
  });

  it("uses 4-connectivity (diagonals split)", () => {
    const bits = blank();
    bits[0] = 1;
    bits[W + 1] = 1;
    expect(labelComponents(bits, W, H).count).toBe(2);
  });
});

describe("segmentFrame", () => {
  it("returns the bright square containing the prompt", () => {
    const left = blank();
    const right = blank();
    drawRect(left, 30, 20, 39, 29);
    drawRect(right, 24, 20, 33, 29); // shifted by disparity 6
    const out = segmentFrame(frame(left, right, [{ view: "L", u: 34, v: 24 }]));
    expect(out).toHaveLength(1);
    expect(out[0].confidence).toBe(1.0);
    const mask = rleDecode(out[0].left_mask_rle, W, H);
    expect(mask).toEqual(left);
    const rmask = rleDecode(out[0].right_mask_rle, W, H);
    expect(rmask).toEqual(right);
  });

  it("prompt on background yields no targets", () => {
    const left = blank();
    const right = blank();
    drawRect(left, 30, 20, 39, 29);
    drawRect(right, 24, 20, 33, 29);
    const out = segmentFrame(frame(left, right, [{ view: "L", u: 5, v: 5 }]));
    expect(out).toHaveLength(0);
  });

  it("segments everything when no prompts are given", () => {
    const left = blank();
    const right = blank();
    drawRect(left, 10, 10, 15, 15);
    drawRect(left, 40, 30, 47, 37);
    drawRect(right, 6, 10, 11, 15);
    drawRect(right, 36, 30, 43, 37);
    const out = segmentFrame(frame(left, right));
    expect(out).toHaveLength(2);
  });

  it("pairs left and right components by row alignment", () => {
    const left = blank();
    const right = blank();
    // two targets at separate rows; right view shifted horizontally
    drawRect(left, 10, 5, 19, 12);
    drawRect(left, 30, 30, 39, 40);
    drawRect(right, 4, 5, 13, 12);
    drawRect(right, 22, 30, 31, 40);
    const out = segmentFrame(
      frame(left, right, [
        { view: "L", u: 14, v: 8 },
        { view: "R", u: 8, v: 8 },
        { view: "L", u: 34, v: 35 },
        { view: "R", u: 26, v: 35 },
      ])
    );
    expect(out).toHaveLength(2);
    const first = rleDecode(out[0].left_mask_rle, W, H);
    expect(first[8 * W + 14]).toBe(1); // top target listed first (sorted by center)
    const firstRight = rleDecode(out[0].right_mask_rle, W, H);
    expect(firstRight[8 * W + 8]).toBe(1);
  });

  it("is deterministic", () => {
    const left = blank();
    const right = blank();
    drawRect(left, 10, 10, 20, 20);
    drawRect(right, 5, 10, 15, 20);
    const a = segmentFrame(frame(left, right));
    const b = segmentFrame(frame(left, right));
    expect(a).toEqual(b);
  });
});
