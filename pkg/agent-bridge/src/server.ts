// TCP wiring: one live session per run; extra connections are refused while
// a session is active; the server stops after a session shuts down.

import net from "node:net";

import type { BridgeSession } from "./session.js";

export interface ServeOptions {
  host: string;
  port: number;
  makeSession: () => BridgeSession;
  onListen?: (address: net.AddressInfo) => void;
}

export function serveAgent(opts: ServeOptions): Promise<void> {
  return new Promise((resolve, reject) => {
    let active: net.Socket | null = null;
    const server = net.createServer((socket) => {
      if (active) {
        socket.destroy();
        return;
      }
      active = socket;
      const session = opts.makeSession();
      let buffer = "";
      let ending = false;
      socket.setEncoding("utf-8");
      socket.on("data", (chunk: string) => {
        buffer += chunk;
        let nl: number;
        while (!ending && (nl = buffer.indexOf("\n")) >= 0) {
          const line = buffer.slice(0, nl);
          buffer = buffer.slice(nl + 1);
          const result = session.handleLine(line);
          if (!result) {
            continue;
          }
          socket.write(result.reply);
          if (result.close) {
            ending = true;
            socket.end();
            server.close(() => resolve());
          }
        }
      });
      socket.on("error", () => socket.destroy());
      socket.on("close", () => {
        active = null;
        if (!ending) {
          // peer vanished mid-session: stop serving rather than accept a
          // second run against a half-trained agent
          server.close(() => resolve());
        }
      });
    });
    server.on("error", reject);
    server.listen(opts.port, opts.host, () => {
      opts.onListen?.(server.address() as net.AddressInfo);
    });
  });
}
