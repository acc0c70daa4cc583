/**
 * The flutter chamber: light particles that fly while the fan runs and
 * settle back onto the floor within ~2 s once it stops.
 *
 * Pure simulation (no canvas calls) so the settle contract is testable;
 * rendering reads positions only.  Deterministic via a seeded PRNG.
 */

export interface Particle {
  x: number;
  y: number;
  vx: number;
  vy: number;
}

/** mulberry32: tiny seeded PRNG, plenty for visuals. */
export function makeRng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

const GRAVITY = 2.4; // units/s^2, in a 1x1 chamber
const AIR_DRAG = 0.995;
const SETTLE_FALL = 0.8; // terminal fall speed once the fan stops, units/s
const LIFT = 7.0;
const TURBULENCE = 5.0;
const FLOOR = 0.98;

export class FlutterField {
  readonly particles: Particle[] = [];
  private readonly rng: () => number;

  constructor(count = 42, seed = 1) {
    this.rng = makeRng(seed);
    for (let i = 0; i < count; i++) {
      this.particles.push({
        x: 0.1 + 0.8 * this.rng(),
        y: FLOOR,
        vx: 0,
        vy: 0,
      });
    }
  }

  /** Advance by dt seconds; `airflow` is whether the fan is on. */
  step(dt: number, airflow: boolean): void {
    for (const p of this.particles) {
      if (airflow) {
        p.vx += (this.rng() - 0.5) * TURBULENCE * dt;
        p.vy += (this.rng() - 0.35) * -LIFT * dt; // biased upward
        p.vy += GRAVITY * dt * 0.4;
        p.vx *= AIR_DRAG;
        p.vy *= AIR_DRAG;
      } else {
        // Drift down at a capped speed so everything lands well inside 2 s.
        const decay = Math.exp(-8 * dt);
        p.vx *= decay;
        p.vy = Math.min(p.vy * decay + 3 * GRAVITY * dt, SETTLE_FALL);
      }
      p.x += p.vx * dt;
      p.y += p.vy * dt;
      if (p.x < 0.02 || p.x > 0.98) {
        p.x = Math.min(0.98, Math.max(0.02, p.x));
        p.vx *= -0.6;
      }
      if (p.y < 0.05) {
        p.y = 0.05;
        p.vy *= -0.5;
      }
      if (p.y > FLOOR) {
        p.y = FLOOR;
        p.vy = airflow ? p.vy * -0.6 : 0;
      }
    }
  }

  meanSpeed(): number {
    const total = this.particles.reduce(
      (sum, p) => sum + Math.hypot(p.vx, p.vy),
      0,
    );
    return total / this.particles.length;
  }

  settled(): boolean {
    return (
      this.meanSpeed() < 0.05 &&
      this.particles.every((p) => p.y > FLOOR - 0.08)
    );
  }
}
