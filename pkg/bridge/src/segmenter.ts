/**
 * Deterministic mock segmenter.
 *
 * Thresholds the luminance image, labels 4-connected foreground
 * components, returns the component containing each prompt (or every
 * component when no prompts are given), and pairs left/right components
 * greedily by vertical box-center proximity, which is the correct cue
 * in rectified stereo imagery.
 */

import { rleDecode, rleEncode } from "./rle.js";
import type { RequestT } from "./protocol.js";

export const LUMINANCE_THRESHOLD = 128;

interface Component {
  mask: Uint8Array;
  uMin: number;
  uMax: number;
  vMin: number;
  vMax: number;
}

function centerU(c: Component): number {
  return (c.uMin + c.uMax) / 2;
}

function centerV(c: Component): number {
  return (c.vMin + c.vMax) / 2;
}

/** Two-pass-free BFS labelling; images are binary already. */
export function labelComponents(
  fg: Uint8Array,
  width: number,
  height: number
): { labels: Int32Array; count: number } {
  const labels = new Int32Array(fg.length);
  let next = 0;
  const queue = new Int32Array(fg.length);
  for (let start = 0; start < fg.length; start++) {
    if (!fg[start] || labels[start] !== 0) continue;
    next += 1;
    let head = 0;
    let tail = 0;
    queue[tail++] = start;
    labels[start] = next;
    while (head < tail) {
      const idx = queue[head++];
      const u = idx % width;
      const v = (idx - u) / width;
      if (u > 0 && fg[idx - 1] && labels[idx - 1] === 0) {
        labels[idx - 1] = next;
        queue[tail++] = idx - 1;
      }
      if (u + 1 < width && fg[idx + 1] && labels[idx + 1] === 0) {
        labels[idx + 1] = next;
        queue[tail++] = idx + 1;
      }
      if (v > 0 && fg[idx - width] && labels[idx - width] === 0) {
        labels[idx - width] = next;
        queue[tail++] = idx - width;
      }
      if (v + 1 < height && fg[idx + width] && labels[idx + width] === 0) {
        labels[idx + width] = next;
        queue[tail++] = idx + width;
      }
    }
  }
  return { labels, count: next };
}

function componentMask(
  labels: Int32Array,
  label: number,
  width: number,
  height: number
): Component {
  const mask = new Uint8Array(labels.length);
  let uMin = width;
  let uMax = -1;
  let vMin = height;
  let vMax = -1;
  for (let i = 0; i < labels.length; i++) {
    if (labels[i] !== label) continue;
    mask[i] = 1;
    const u = i % width;
    const v = (i - u) / width;
    if (u < uMin) uMin = u;
    if (u > uMax) uMax = u;
    if (v < vMin) vMin = v;
    if (v > vMax) vMax = v;
  }
  return { mask, uMin, uMax, vMin, vMax };
}

export function thresholdLuminance(image: Uint8Array): Uint8Array {
  const fg = new Uint8Array(image.length);
  for (let i = 0; i < image.length; i++) {
    // binary synthetic images carry 0/1; grayscale carries 0..255
    fg[i] = image[i] === 1 || image[i] >= LUMINANCE_THRESHOLD ? 1 : 0;
  }
  return fg;
}

export interface SegmentedTarget {
  left_mask_rle: number[];
  right_mask_rle: number[];
  confidence: number;
}

export function segmentFrame(request: RequestT): SegmentedTarget[] {
  if (!request.synthetic) {
    throw new Error("mock mode requires the synthetic image block");
  }
  const { width, height, left_rle, right_rle } = request.synthetic;
  const views = {
    L: labelComponents(thresholdLuminance(rleDecode(left_rle, width, height)), width, height),
    R: labelComponents(thresholdLuminance(rleDecode(right_rle, width, height)), width, height),
  };

  // a view that received no prompts falls back to all of its components,
  // so a single-view prompt can still be paired across the stereo views
  const picked: Record<"L" | "R", Set<number>> = { L: new Set(), R: new Set() };
  for (const prompt of request.prompts) {
    const u = Math.round(prompt.u);
    const v = Math.round(prompt.v);
    if (u < 0 || u >= width || v < 0 || v >= height) continue;
    const label = views[prompt.view].labels[v * width + u];
    if (label > 0) picked[prompt.view].add(label);
  }
  for (const view of ["L", "R"] as const) {
    const hasViewPrompts = request.prompts.some((p) => p.view === view);
    if (!hasViewPrompts) {
      for (let label = 1; label <= views[view].count; label++) picked[view].add(label);
    }
  }

  const lefts = [...picked.L]
    .sort((a, b) => a - b)
    .map((label) => componentMask(views.L.labels, label, width, height))
    .sort((a, b) => centerU(a) - centerU(b) || centerV(a) - centerV(b));
  const rights = [...picked.R]
    .sort((a, b) => a - b)
    .map((label) => componentMask(views.R.labels, label, width, height));

  // rectified pairing: rows must align (|dv| primary) and disparity
  // u_left - u_right must be non-negative (smallest wins as tiebreak)
  const used = new Set<number>();
  const out: SegmentedTarget[] = [];
  for (const left of lefts) {
    let bestIdx = -1;
    let bestKey: [number, number] = [Infinity, Infinity];
    for (let j = 0; j < rights.length; j++) {
      if (used.has(j)) continue;
      const du = centerU(left) - centerU(rights[j]);
      if (du < 0) continue;
      const key: [number, number] = [Math.abs(centerV(rights[j]) - centerV(left)), du];
      if (key[0] < bestKey[0] || (key[0] === bestKey[0] && key[1] < bestKey[1])) {
        bestKey = key;
        bestIdx = j;
      }
    }
    if (bestIdx < 0) continue;
    used.add(bestIdx);
    out.push({
      left_mask_rle: rleEncode(left.mask),
      right_mask_rle: rleEncode(rights[bestIdx].mask),
      confidence: 1.0,
    });
  }
  return out;
}
