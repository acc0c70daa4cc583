/**
 * Breathing-guide playback.
 *
 * The guide is the same 4-cycle pattern the devices play: pink noise shaped
 * by a raised-cosine inhale/exhale with a silent pause (3 1/3 s in,
 * 3 1/3 s out, 1 1/3 s pause; 7.5 breaths/min).  Playback prefers the
 * bundled `guide.wav` asset (written at build time by the synth-guide CLI)
 * and falls back to synthesizing the identical pattern in the client.
 */

export const T_IN = 10 / 3;
export const T_OUT = 10 / 3;
export const T_PAUSE = 4 / 3;
export const CYCLE_S = T_IN + T_OUT + T_PAUSE;
export const GUIDE_CYCLES = 4;
export const PEAK_GAIN = 0.3;
export const FADE_S = 2;

/** Raised-cosine guide amplitude in [0, 1] at time t (seconds, any t >= 0). */
export function envelopeGain(t: number): number {
  const tau = ((t % CYCLE_S) + CYCLE_S) % CYCLE_S;
  if (tau < T_IN) return 0.5 * (1 - Math.cos((Math.PI * tau) / T_IN));
  if (tau < T_IN + T_OUT) return 0.5 * (1 + Math.cos((Math.PI * (tau - T_IN)) / T_OUT));
  return 0;
}

/** Voss-McCartney pink noise (16 rows), seeded and deterministic. */
export function pinkNoise(n: number, rng: () => number) {
  const rows = new Float64Array(16).map(() => rng() * 2 - 1);
  const out = new Float32Array(n);
  let total = rows.reduce((a, b) => a + b, 0);
  for (let i = 0; i < n; i++) {
    const counter = i + 1;
    const k = Math.log2(counter & -counter); // trailing zeros
    if (k < 16) {
      total -= rows[k];
      rows[k] = rng() * 2 - 1;
      total += rows[k];
    }
    out[i] = total / 16;
  }
  return out;
}

/** Client-side fallback: the full guide clip as mono samples. */
export function synthesizeGuide(sampleRate: number, rng: () => number) {
  const n = Math.round(GUIDE_CYCLES * CYCLE_S * sampleRate);
  const noise = pinkNoise(n, rng);
  const out = new Float32Array(n);
  for (let i = 0; i < n; i++) {
    out[i] = PEAK_GAIN * envelopeGain(i / sampleRate) * noise[i];
  }
  return out;
}

/** Thin AudioContext wrapper; one guide plays at a time. */
export class GuidePlayer {
  private ctx: AudioContext | null = null;
  private buffer: AudioBuffer | null = null;
  private source: AudioBufferSourceNode | null = null;
  private gain: GainNode | null = null;

  /** Must be called from a user gesture (autoplay policy). */
  async prepare(assetUrl = "./guide.wav"): Promise<void> {
    if (this.ctx === null) this.ctx = new AudioContext();
    if (this.buffer !== null) return;
    try {
      const response = await fetch(assetUrl);
      if (!response.ok) throw new Error(`${response.status}`);
      this.buffer = await this.ctx.decodeAudioData(await response.arrayBuffer());
    } catch {
      const rate = this.ctx.sampleRate;
      const samples = synthesizeGuide(rate, Math.random);
      this.buffer = this.ctx.createBuffer(1, samples.length, rate);
      this.buffer.copyToChannel(samples, 0);
    }
  }

  start(): void {
    if (this.ctx === null || this.buffer === null) return;
    this.stop();
    this.gain = this.ctx.createGain();
    this.gain.connect(this.ctx.destination);
    this.source = this.ctx.createBufferSource();
    this.source.buffer = this.buffer;
    this.source.connect(this.gain);
    this.source.start();
  }

  /** Ramp the playing guide down, as the device does when grasped. */
  fadeOut(seconds = FADE_S): void {
    if (this.ctx === null || this.gain === null) return;
    const now = this.ctx.currentTime;
    this.gain.gain.setValueAtTime(this.gain.gain.value, now);
    this.gain.gain.linearRampToValueAtTime(0, now + seconds);
    this.source?.stop(now + seconds);
    this.source = null;
    this.gain = null;
  }

  stop(): void {
    this.source?.stop();
    this.source = null;
    this.gain = null;
  }
}
