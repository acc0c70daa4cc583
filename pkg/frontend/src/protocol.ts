/**
 * Wire protocol types, mirroring the hub's JSON schema (one object per
 * WebSocket text frame; same payloads as the newline-delimited TCP form).
 *
 * The snapshot deliberately carries only aggregates: mixed color, the
 * coherent-to-active brightness ratio, and two counts.  A device's own
 * mode/action feed arrives as `report` messages, sent only to connections
 * that watch that device.
 */

export type Rgb = [number, number, number];

export type DeviceMode = "idle" | "reminding" | "snoozed" | "active" | "coherent";

export interface SnapshotMsg {
  type: "snapshot";
  color: Rgb;
  brightness: number;
  active: number;
  members: number;
}

export interface InviteMsg {
  type: "invite";
}

export interface ErrorMsg {
  type: "error";
  code: string;
  msg: string;
}

export interface ActionRecord {
  t: number;
  action: string;
  [field: string]: unknown;
}

export interface ReportMsg {
  type: "report";
  device: string;
  t: number;
  mode: DeviceMode;
  actions: ActionRecord[];
}

export type IncomingMsg = SnapshotMsg | InviteMsg | ErrorMsg | ReportMsg;

export type ControlOp = "grasp" | "release" | "set_pace" | "watch" | "set_color";

export interface ControlMsg {
  type: "control";
  device: string;
  op: ControlOp;
  value?: number | Rgb;
}

export function controlMsg(device: string, op: ControlOp, value?: number | Rgb): ControlMsg {
  return value === undefined ? { type: "control", device, op } : { type: "control", device, op, value };
}

function isRgb(value: unknown): value is Rgb {
  return (
    Array.isArray(value) &&
    value.length === 3 &&
    value.every((c) => typeof c === "number" && Number.isInteger(c) && c >= 0 && c <= 255)
  );
}

/** Narrow a parsed JSON value to a known hub message; null for anything else. */
export function asIncoming(raw: unknown): IncomingMsg | null {
  if (typeof raw !== "object" || raw === null) return null;
  const msg = raw as Record<string, unknown>;
  switch (msg.type) {
    case "snapshot":
      if (
        isRgb(msg.color) &&
        typeof msg.brightness === "number" &&
        typeof msg.active === "number" &&
        typeof msg.members === "number"
      ) {
        return msg as unknown as SnapshotMsg;
      }
      return null;
    case "invite":
      return { type: "invite" };
    case "error":
      if (typeof msg.code === "string" && typeof msg.msg === "string") {
        return msg as unknown as ErrorMsg;
      }
      return null;
    case "report":
      if (
        typeof msg.device === "string" &&
        typeof msg.t === "number" &&
        typeof msg.mode === "string" &&
        Array.isArray(msg.actions)
      ) {
        return msg as unknown as ReportMsg;
      }
      return null;
    default:
      return null;
  }
}
