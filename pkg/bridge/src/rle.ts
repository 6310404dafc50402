/**
 * Run-length encoding of binary masks.
 *
 * Row-major scan, alternating background/foreground run lengths,
 * starting with background; runs sum to width * height. Lossless.
 */

export function rleEncode(bits: Uint8Array): number[] {
  if (bits.length === 0) return [];
  const runs: number[] = [];
  let current = 0; // background first
  let run = 0;
  for (let i = 0; i < bits.length; i++) {
    const v = bits[i] ? 1 : 0;
    if (v === current) {
      run++;
    } else {
      runs.push(run);
      current = v;
      run = 1;
    }
  }
  runs.push(run);
  return runs;
}

export function rleDecode(runs: number[], width: number, height: number): Uint8Array {
  const total = runs.reduce((a, b) => a + b, 0);
  if (total !== width * height) {
    throw new Error(`RLE sums to ${total}, expected ${width * height}`);
  }
  const bits = new Uint8Array(total);
  let pos = 0;
  let value = 0;
  for (const run of runs) {
    if (run < 0 || !Number.isInteger(run)) {
      throw new Error(`bad run length ${run}`);
    }
    if (value) bits.fill(1, pos, pos + run);
    pos += run;
    value ^= 1;
  }
  return bits;
}
