/**
 * Segmentation bridge server.
 *
 * Speaks the length-prefixed JSON protocol over stdio (--stdio) or TCP
 * (--port N). The mock model answers every request deterministically;
 * malformed requests produce an error response carrying the frame id
 * (or -1 when even that is unreadable) and never kill the stream.
 *
 * A real promptable-segmentation model can be mounted behind the same
 * protocol by replacing segmentFrame; the mock needs no weights and is
 * what the conformance suite runs against.
 */

import net from "node:net";
import process from "node:process";

import { MessageDecoder, Request, encodeMessage, type ResponseT } from "./protocol.js";
import { segmentFrame } from "./segmenter.js";

export function handleMessage(raw: unknown): ResponseT {
  const parsed = Request.safeParse(raw);
  if (!parsed.success) {
    const frameId =
      typeof raw === "object" && raw !== null && Number.isInteger((raw as any).frame_id)
        ? (raw as any).frame_id
        : -1;
    return { frame_id: frameId, error: parsed.error.issues[0]?.message ?? "bad request" };
  }
  try {
    return { frame_id: parsed.data.frame_id, targets: segmentFrame(parsed.data) };
  } catch (err) {
    return { frame_id: parsed.data.frame_id, error: String(err) };
  }
}

function attach(readable: NodeJS.ReadableStream, write: (buf: Buffer) => void): void {
  const decoder = new MessageDecoder();
  readable.on("data", (chunk: Buffer) => {
    let messages: unknown[];
    try {
      messages = decoder.push(chunk);
    } catch (err) {
      write(encodeMessage({ frame_id: -1, error: `framing: ${String(err)}` }));
      return;
    }
    for (const msg of messages) {
      write(encodeMessage(handleMessage(msg)));
    }
  });
}

export function serveStdio(): void {
  attach(process.stdin, (buf) => process.stdout.write(buf));
}

export function serveTcp(port: number, host = "127.0.0.1"): net.Server {
  const server = net.createServer((socket) => {
    attach(socket, (buf) => socket.write(buf));
    socket.on("error", () => socket.destroy());
  });
  server.listen(port, host, () => {
    // eslint-disable-next-line no-console
    console.error(`bridge listening on ${host}:${port}`);
  });
  return server;
}

function main(): void {
  const args = process.argv.slice(2);
  if (args.includes("--stdio")) {
    serveStdio();
    return;
  }
  const portIdx = args.indexOf("--port");
  if (portIdx >= 0 && args[portIdx + 1]) {
    serveTcp(Number(args[portIdx + 1]));
    return;
  }
  console.error("usage: server.js --stdio | --port <n>");
  process.exit(2);
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("server.js") || entry.endsWith("server.ts")) {
  main();
}
