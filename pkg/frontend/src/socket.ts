/**
 * Reconnecting WebSocket transport to the hub.
 *
 * Sends JSON control messages, surfaces parsed hub messages via callback,
 * and retries with exponential backoff (0.5 s doubling to 15 s) after a
 * drop.  On every (re)connect it re-sends `watch` for the device so the
 * report feed resumes; the view itself is rebuilt by the next snapshot.
 */

import { asIncoming, ControlMsg, controlMsg, IncomingMsg } from "./protocol.js";
import { ConnectionState } from "./state.js";

export interface HubSocketOptions {
  url: string;
  deviceId: string;
  onMessage: (msg: IncomingMsg) => void;
  onState: (state: ConnectionState) => void;
  /** Injectable for tests (node's `ws`); defaults to the browser WebSocket. */
  webSocketImpl?: typeof WebSocket;
}

const BACKOFF_BASE_MS = 500;
const BACKOFF_MAX_MS = 15_000;
const OPEN = 1; // WebSocket.OPEN, without assuming a global WebSocket

export class HubSocket {
  private ws: WebSocket | null = null;
  private attempts = 0;
  private closing = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(private readonly options: HubSocketOptions) {}

  connect(): void {
    this.closing = false;
    this.open();
  }

  close(): void {
    this.closing = true;
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.ws?.close();
    this.ws = null;
    this.options.onState("disconnected");
  }

  send(msg: ControlMsg): void {
    if (this.ws?.readyState === OPEN) {
      this.ws.send(JSON.stringify(msg));
    }
  }

  private open(): void {
    const Impl = this.options.webSocketImpl ?? WebSocket;
    const ws = new Impl(this.options.url);
    this.ws = ws;

    ws.onopen = () => {
      this.attempts = 0;
      this.options.onState("connected");
      ws.send(JSON.stringify(controlMsg(this.options.deviceId, "watch")));
    };

    ws.onmessage = (event: MessageEvent) => {
      for (const line of String(event.data).split("\n")) {
        if (!line.trim()) continue;
        let parsed: unknown;
        try {
          parsed = JSON.parse(line);
        } catch {
          console.error("unparseable hub message:", line);
          continue;
        }
        const msg = asIncoming(parsed);
        if (msg === null) {
          console.warn("ignoring unknown hub message:", parsed);
        } else if (msg.type === "error") {
          console.error(`hub error ${msg.code}: ${msg.msg}`);
        } else {
          this.options.onMessage(msg);
        }
      }
    };

    ws.onclose = () => {
      this.ws = null;
      if (!this.closing) this.scheduleReconnect();
    };

    ws.onerror = () => {
      // onclose follows; reconnect is handled there
    };
  }

  private scheduleReconnect(): void {
    this.options.onState("reconnecting");
    const delay = Math.min(BACKOFF_BASE_MS * 2 ** this.attempts, BACKOFF_MAX_MS);
    this.attempts += 1;
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      this.open();
    }, delay);
  }
}
