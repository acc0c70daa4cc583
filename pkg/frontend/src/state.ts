/**
 * The session view model and its pure reducer.
 *
 * Everything rendered comes from here, and every field is rebuilt from the
 * wire: the light always equals the latest received snapshot (no client-side
 * recomputation of aggregates), and the local device mode tracks the report
 * feed.  After a reconnect, the next snapshot/report pair restores an
 * identical view.
 */

import { ActionRecord, DeviceMode, IncomingMsg, Rgb, SnapshotMsg } from "./protocol.js";

export type ConnectionState = "connecting" | "connected" | "reconnecting" | "disconnected";

export const PACE_MIN_BPM = 4;
export const PACE_MAX_BPM = 24;
export const DEFAULT_PACE_BPM = 7.5;

export interface UiSessionView {
  deviceId: string;
  connection: ConnectionState;
  snapshot: SnapshotMsg | null;
  mode: DeviceMode;
  paceBpm: number;
  /** True while an invite pulse should be visible (decays via render clock). */
  inviteAt: number | null;
  /** Actions from the most recent report, for one-shot cues (audio, pulse). */
  pendingActions: ActionRecord[];
}

export function initialView(deviceId: string): UiSessionView {
  return {
    deviceId,
    connection: "connecting",
    snapshot: null,
    mode: "idle",
    paceBpm: DEFAULT_PACE_BPM,
    inviteAt: null,
    pendingActions: [],
  };
}

export function isGrasped(view: UiSessionView): boolean {
  return view.mode === "active" || view.mode === "coherent";
}

export function fanRunning(view: UiSessionView): boolean {
  return view.mode === "coherent";
}

export function onConnectionChange(
  view: UiSessionView,
  connection: ConnectionState,
): UiSessionView {
  if (connection === view.connection) return view;
  // Aggregates are server truth: drop them while the socket is down so the
  // next snapshot rebuilds the identical view.
  if (connection !== "connected") {
    return { ...view, connection, snapshot: null, pendingActions: [] };
  }
  return { ...view, connection };
}

export function applyMessage(view: UiSessionView, msg: IncomingMsg, now = 0): UiSessionView {
  switch (msg.type) {
    case "snapshot":
      return { ...view, snapshot: msg };
    case "invite":
      return { ...view, inviteAt: now };
    case "report":
      if (msg.device !== view.deviceId) return view;
      return {
        ...view,
        mode: msg.mode,
        pendingActions: view.pendingActions.concat(msg.actions),
      };
    case "error":
      return view; // surfaced via console by the socket layer
  }
}

/** Hand the queued one-shot actions to the caller and clear them. */
export function takeActions(view: UiSessionView): [ActionRecord[], UiSessionView] {
  if (view.pendingActions.length === 0) return [[], view];
  return [view.pendingActions, { ...view, pendingActions: [] }];
}

export function setPace(view: UiSessionView, paceBpm: number): UiSessionView {
  const clamped = Math.min(PACE_MAX_BPM, Math.max(PACE_MIN_BPM, paceBpm));
  return { ...view, paceBpm: clamped };
}

// --- render model -------------------------------------------------------------

export interface RenderModel {
  domeColor: string;
  glow: number;
  particlesActive: boolean;
  invitePulse: boolean;
  statusLine: string;
}

export function colorToHex([r, g, b]: Rgb): string {
  const hex = (c: number) => c.toString(16).padStart(2, "0");
  return `#${hex(r)}${hex(g)}${hex(b)}`;
}

const INVITE_PULSE_S = 6;

/** Project the view onto what the canvas paints; pure, render-clocked. */
export function renderModel(view: UiSessionView, now = 0): RenderModel {
  const snap = view.snapshot;
  const domeColor = snap ? colorToHex(snap.color) : "#000000";
  const glow = snap ? snap.brightness : 0;
  const invitePulse =
    view.inviteAt !== null && view.mode === "idle" && now - view.inviteAt < INVITE_PULSE_S;
  const members = snap ? `${snap.active}/${snap.members} active` : "no session";
  return {
    domeColor,
    glow,
    particlesActive: fanRunning(view),
    invitePulse,
    statusLine: `${view.connection} · ${view.mode} · ${members}`,
  };
}
