/**
 * Live round trip against the real hub and a real hosted device:
 * grasp toggle -> status {active:true} lands at the hub (observed as the
 * aggregate snapshot) within 1 s; the rendered dome color matches the
 * snapshot channels exactly; a dropped socket reconnects and restores an
 * identical view from the next snapshot.
 */

import { ChildProcess, spawn } from "node:child_process";
import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { controlMsg } from "../src/protocol.js";
import {
  applyMessage,
  colorToHex,
  initialView,
  onConnectionChange,
  renderModel,
  takeActions,
  UiSessionView,
} from "../src/state.js";
import { HubSocket } from "../src/socket.js";

const DEVICE = "ana";
const COLOR = "200,10,10";

let hub: ChildProcess;
let device: ChildProcess;
let wsUrl: string;

function waitFor(predicate: () => boolean, timeoutMs: number, what: string): Promise<void> {
  const started = Date.now();
  return new Promise((resolve, reject) => {
    const poll = setInterval(() => {
      if (predicate()) {
        clearInterval(poll);
        resolve();
      } else if (Date.now() - started > timeoutMs) {
        clearInterval(poll);
        reject(new Error(`timed out waiting for ${what}`));
      }
    }, 10);
  });
}

beforeAll(async () => {
  hub = spawn("python3", ["-u", "-m", "disimo.cli", "hub", "--port", "0", "--ws-port", "0"], {
    stdio: ["ignore", "pipe", "inherit"],
  });
  const banner = await new Promise<string>((resolve, reject) => {
    let buffer = "";
    hub.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/tcp 127\.0\.0\.1:(\d+) ws (\d+)/);
      if (match) resolve(buffer);
    });
    hub.on("exit", (code) => reject(new Error(`hub exited early (${code})`)));
    setTimeout(() => reject(new Error("hub never announced its ports")), 15000);
  });
  const match = banner.match(/tcp 127\.0\.0\.1:(\d+) ws (\d+)/)!;
  const tcpPort = match[1];
  wsUrl = `ws://127.0.0.1:${match[2]}`;

  device = spawn(
    "python3",
    [
      "-u", "-m", "disimo.cli", "device",
      "--hub", `127.0.0.1:${tcpPort}`,
      "--id", DEVICE,
      "--color", COLOR,
      "--source", "synth:hr=70,breath=0.4,seed=3",
      "--tick-hz", "4",
    ],
    { stdio: ["ignore", "inherit", "inherit"] },
  );
}, 30000);

afterAll(() => {
  device?.kill();
  hub?.kill();
});

describe("UI round trip", () => {
  it("grasp reaches the hub within 1 s and the dome matches the snapshot", async () => {
    let view: UiSessionView = initialView(DEVICE);
    const socket = new HubSocket({
      url: wsUrl,
      deviceId: DEVICE,
      onMessage: (msg) => {
        view = applyMessage(view, msg, Date.now() / 1000);
      },
      onState: (state) => {
        view = onConnectionChange(view, state);
      },
      webSocketImpl: WebSocket as unknown as typeof globalThis.WebSocket,
    });
    socket.connect();

    try {
      // The hosted device must be registered before the UI can steer it.
      await waitFor(() => view.snapshot?.members === 1, 15000, "device registration");

      const graspSent = Date.now();
      socket.send(controlMsg(DEVICE, "grasp"));
      await waitFor(() => view.snapshot?.active === 1, 5000, "active snapshot");
      expect(Date.now() - graspSent).toBeLessThan(1000);

      await waitFor(() => view.mode === "active", 5000, "report feed");
      const [actions] = takeActions(view);
      expect(actions.some((a) => a.action === "StartAudio")).toBe(true);

      // Rendered dome color equals the snapshot channels exactly.
      expect(view.snapshot!.color).toEqual([200, 10, 10]);
      expect(renderModel(view).domeColor).toBe(colorToHex(view.snapshot!.color));
      expect(renderModel(view).domeColor).toBe("#c80a0a");

      // Drop the transport out from under the client; it must reconnect and
      // rebuild the identical view from the next snapshot.
      const before = renderModel(view);
      (socket as unknown as { ws: WebSocket }).ws.close();
      await waitFor(() => view.connection === "reconnecting", 5000, "drop detection");
      expect(view.snapshot).toBeNull();
      await waitFor(() => view.snapshot !== null, 15000, "post-reconnect snapshot");
      expect(renderModel(view)).toEqual(before);
    } finally {
      socket.close();
    }
  }, 60000);
});
