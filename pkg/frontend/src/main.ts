/**
 * Wiring: query params pick the hub and device, controls send `control`
 * messages, and a render loop paints whatever the latest view says.
 *
 *   index.html?hub=ws://127.0.0.1:7476&device=ana
 *
 * The hub must already run a hosted device under that id; this client only
 * steers it (grasp / pace / color) and renders the shared feedback.
 */

import { GuidePlayer } from "./audio.js";
import { FlutterField } from "./particles.js";
import { controlMsg, Rgb } from "./protocol.js";
import { paint } from "./render.js";
import { HubSocket } from "./socket.js";
import {
  applyMessage,
  initialView,
  isGrasped,
  onConnectionChange,
  renderModel,
  setPace,
  takeActions,
  UiSessionView,
} from "./state.js";

const params = new URLSearchParams(location.search);
const hubUrl = params.get("hub") ?? "ws://127.0.0.1:7476";
const deviceId = params.get("device") ?? "ana";

let view: UiSessionView = initialView(deviceId);
const field = new FlutterField();
const player = new GuidePlayer();

const socket = new HubSocket({
  url: hubUrl,
  deviceId,
  onMessage: (msg) => {
    view = applyMessage(view, msg, performance.now() / 1000);
  },
  onState: (state) => {
    view = onConnectionChange(view, state);
  },
});
socket.connect();

// --- controls ------------------------------------------------------------------

const graspButton = document.getElementById("grasp") as HTMLButtonElement;
const paceSlider = document.getElementById("pace") as HTMLInputElement;
const paceLabel = document.getElementById("pace-label") as HTMLElement;
const colorInput = document.getElementById("color") as HTMLInputElement;
const statusLine = document.getElementById("status") as HTMLElement;

graspButton.addEventListener("click", async () => {
  await player.prepare(); // inside the user gesture, for autoplay policy
  socket.send(controlMsg(deviceId, isGrasped(view) ? "release" : "grasp"));
});

paceSlider.addEventListener("input", () => {
  view = setPace(view, Number(paceSlider.value));
  paceLabel.textContent = `${view.paceBpm.toFixed(1)} breaths/min`;
});
paceSlider.addEventListener("change", () => {
  socket.send(controlMsg(deviceId, "set_pace", view.paceBpm));
});

colorInput.addEventListener("change", () => {
  const hex = colorInput.value;
  const rgb: Rgb = [
    parseInt(hex.slice(1, 3), 16),
    parseInt(hex.slice(3, 5), 16),
    parseInt(hex.slice(5, 7), 16),
  ];
  socket.send(controlMsg(deviceId, "set_color", rgb));
});

// --- render loop ----------------------------------------------------------------

const canvas = document.getElementById("dome") as HTMLCanvasElement;
let lastFrame = performance.now() / 1000;

function frame(): void {
  const now = performance.now() / 1000;
  const dt = Math.min(0.05, now - lastFrame);
  lastFrame = now;

  const [actions, nextView] = takeActions(view);
  view = nextView;
  for (const record of actions) {
    if (record.action === "StartAudio") player.start();
    else if (record.action === "FadeAudio") player.fadeOut(Number(record.fade_s ?? 2));
    else if (record.action === "StopAudio") player.stop();
  }

  const model = renderModel(view, now);
  field.step(dt, model.particlesActive);
  paint(canvas, model, field, now);

  graspButton.textContent = isGrasped(view) ? "release" : "grasp";
  statusLine.textContent = model.statusLine;

  requestAnimationFrame(frame);
}

requestAnimationFrame(frame);
