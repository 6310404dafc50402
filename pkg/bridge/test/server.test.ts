import { afterAll, beforeAll, describe, expect, it } from "vitest";
import net from "node:net";

import { MessageDecoder, Response, encodeMessage } from "../src/protocol.js";
import { rleEncode } from "../src/rle.js";
import { serveTcp } from "../src/server.js";

const PORT = 47231;

function request(frameId: number) {
  const bits = new Uint8Array(16 * 8);
  for (let v = 2; v <= 5; v++) for (let u = 4; u <= 9; u++) bits[v * 16 + u] = 1;
  return {
    frame_id: frameId,
    synthetic: {
      width: 16,
      height: 8,
      left_rle: rleEncode(bits),
      right_rle: rleEncode(bits),
    },
    prompts: [],
  };
}

describe("tcp server", () => {
  let server: net.Server;

  beforeAll(() => {
    server = serveTcp(PORT);
  });

  afterAll(() => {
    server.close();
  });

  it("answers sequential requests on one connection", async () => {
    const responses = await new Promise<unknown[]>((resolve, reject) => {
      const socket = net.createConnection(PORT, "127.0.0.1");
      const decoder = new MessageDecoder();
      const got: unknown[] = [];
      socket.on("error", reject);
      socket.on("data", (chunk) => {
        got.push(...decoder.push(chunk));
        if (got.length === 1) {
          socket.write(encodeMessage(request(2)));
        }
        if (got.length === 2) {
          socket.end();
          resolve(got);
        }
      });
      socket.write(encodeMessage(request(1)));
    });
    const parsed = responses.map((r) => Response.parse(r));
    expect(parsed.map((p) => p.frame_id)).toEqual([1, 2]);
    expect(parsed.every((p) => p.targets && p.targets.length === 1)).toBe(true);
  });
});
