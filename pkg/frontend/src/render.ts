/**
 * Canvas painting: the dome glow (snapshot color at snapshot brightness),
 * the flutter chamber, and the soft invite pulse.
 */

import { FlutterField } from "./particles.js";
import { RenderModel } from "./state.js";

export function paint(
  canvas: HTMLCanvasElement,
  model: RenderModel,
  field: FlutterField,
  now: number,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);

  const cx = width / 2;
  const cy = height * 0.56;
  const radius = Math.min(width, height) * 0.36;

  // Dome glow: the mixed session color at the coherence-ratio brightness.
  const glow = ctx.createRadialGradient(cx, cy, radius * 0.15, cx, cy, radius);
  glow.addColorStop(0, withAlpha(model.domeColor, 0.25 + 0.75 * model.glow));
  glow.addColorStop(1, withAlpha(model.domeColor, 0.05 * model.glow));
  ctx.fillStyle = glow;
  ctx.beginPath();
  ctx.arc(cx, cy, radius, 0, Math.PI * 2);
  ctx.fill();

  ctx.strokeStyle = "rgba(255,255,255,0.25)";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.arc(cx, cy, radius, Math.PI, 2 * Math.PI);
  ctx.stroke();

  if (model.invitePulse) {
    const phase = (now % 2) / 2;
    ctx.strokeStyle = `rgba(255,255,255,${0.5 * (1 - phase)})`;
    ctx.lineWidth = 3;
    ctx.beginPath();
    ctx.arc(cx, cy, radius * (1.02 + 0.25 * phase), 0, Math.PI * 2);
    ctx.stroke();
  }

  // Particles live inside the dome; they fly only while the fan runs.
  ctx.save();
  ctx.beginPath();
  ctx.arc(cx, cy, radius * 0.96, 0, Math.PI * 2);
  ctx.clip();
  ctx.fillStyle = "rgba(255, 250, 235, 0.9)";
  for (const p of field.particles) {
    const px = cx + (p.x - 0.5) * radius * 1.8;
    const py = cy + (p.y - 0.5) * radius * 1.8;
    ctx.beginPath();
    ctx.arc(px, py, 3, 0, Math.PI * 2);
    ctx.fill();
  }
  ctx.restore();
}

function withAlpha(hex: string, alpha: number): string {
  const r = parseInt(hex.slice(1, 3), 16);
  const g = parseInt(hex.slice(3, 5), 16);
  const b = parseInt(hex.slice(5, 7), 16);
  return `rgba(${r},${g},${b},${alpha.toFixed(3)})`;
}
