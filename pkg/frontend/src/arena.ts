// Canvas renderer: meters -> pixels, robot glyph with heading, markers,
// obstacles, and append-only trajectory trails.

import type { Arena, Pose } from "./api.js";

export interface RenderState {
  arena: Arena;
  robot: Pose;
  targetMarker: number | null; // highlighted locally, never sent per command
  trails: Pose[][];
  ghost?: Pose[]; // trajectory currently being animated
}

export class ArenaRenderer {
  private ctx: CanvasRenderingContext2D;
  lastRobotPx: [number, number] = [0, 0];

  constructor(private canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
  }

  /** pixels per meter for the current canvas size */
  scale(arena: Arena): number {
    return Math.min(this.canvas.width, this.canvas.height) / (2 * arena.half_extent);
  }

  toPixels(arena: Arena, x: number, y: number): [number, number] {
    const s = this.scale(arena);
    // world origin at canvas center, +y up
    return [this.canvas.width / 2 + x * s, this.canvas.height / 2 - y * s];
  }

  draw(state: RenderState): void {
    const { ctx, canvas } = this;
    const a = state.arena;
    ctx.clearRect(0, 0, canvas.width, canvas.height);

    ctx.fillStyle = "#10151d";
    ctx.fillRect(0, 0, canvas.width, canvas.height);

    // grid every meter
    const s = this.scale(a);
    ctx.strokeStyle = "rgba(255,255,255,0.06)";
    ctx.lineWidth = 1;
    for (let m = -Math.floor(a.half_extent); m <= a.half_extent; m++) {
      const [gx] = this.toPixels(a, m, 0);
      const [, gy] = this.toPixels(a, 0, m);
      ctx.beginPath();
      ctx.moveTo(gx, 0);
      ctx.lineTo(gx, canvas.height);
      ctx.stroke();
      ctx.beginPath();
      ctx.moveTo(0, gy);
      ctx.lineTo(canvas.width, gy);
      ctx.stroke();
    }

    // obstacles: display only
    ctx.fillStyle = "rgba(120,130,150,0.25)";
    for (const [ox, oy, r] of state.arena.obstacles) {
      const [px, py] = this.toPixels(a, ox, oy);
      ctx.beginPath();
      ctx.arc(px, py, r * s, 0, 2 * Math.PI);
      ctx.fill();
    }

    // trails
    ctx.lineWidth = 2;
    for (const trail of state.trails) {
      ctx.strokeStyle = "rgba(52,152,219,0.55)";
      ctx.beginPath();
      trail.forEach(([x, y], i) => {
        const [px, py] = this.toPixels(a, x, y);
        if (i === 0) ctx.moveTo(px, py);
        else ctx.lineTo(px, py);
      });
      ctx.stroke();
    }
    if (state.ghost) {
      ctx.strokeStyle = "rgba(46,204,113,0.8)";
      ctx.setLineDash([4, 4]);
      ctx.beginPath();
      state.ghost.forEach(([x, y], i) => {
        const [px, py] = this.toPixels(a, x, y);
        if (i === 0) ctx.moveTo(px, py);
        else ctx.lineTo(px, py);
      });
      ctx.stroke();
      ctx.setLineDash([]);
    }

    // markers, target highlighted
    state.arena.markers.forEach(([mx, my], i) => {
      const [px, py] = this.toPixels(a, mx, my);
      ctx.beginPath();
      ctx.arc(px, py, i === state.targetMarker ? 9 : 6, 0, 2 * Math.PI);
      ctx.fillStyle = i === state.targetMarker ? "#f1c40f" : "#e74c3c";
      ctx.fill();
      if (i === state.targetMarker) {
        ctx.strokeStyle = "#f1c40f";
        ctx.beginPath();
        ctx.arc(px, py, 1.0 * s, 0, 2 * Math.PI); // the 1 m goal radius
        ctx.stroke();
      }
    });

    // robot glyph: triangle pointing along the heading
    const [rx, ry, rth] = state.robot;
    const [px, py] = this.toPixels(a, rx, ry);
    this.lastRobotPx = [px, py];
    const len = 0.45 * s;
    ctx.fillStyle = "#2ecc71";
    ctx.beginPath();
    ctx.moveTo(px + len * Math.cos(rth) * 1.2, py - len * Math.sin(rth) * 1.2);
    ctx.lineTo(px + len * Math.cos(rth + 2.5), py - len * Math.sin(rth + 2.5));
    ctx.lineTo(px + len * Math.cos(rth - 2.5), py - len * Math.sin(rth - 2.5));
    ctx.closePath();
    ctx.fill();
  }

  /** nearest marker to a canvas click, or null if none within grabbing range */
  markerAt(arena: Arena, clickX: number, clickY: number): number | null {
    let best: number | null = null;
    let bestDist = 14; // px grab radius
    arena.markers.forEach(([mx, my], i) => {
      const [px, py] = this.toPixels(arena, mx, my);
      const d = Math.hypot(px - clickX, py - clickY);
      if (d < bestDist) {
        best = i;
        bestDist = d;
      }
    });
    return best;
  }
}

/** Cumulative arc length of a pose path, in meters. */
export function pathLength(poses: Pose[]): number {
  let total = 0;
  for (let i = 1; i < poses.length; i++) {
    total += Math.hypot(poses[i][0] - poses[i - 1][0], poses[i][1] - poses[i - 1][1]);
  }
  return total;
}

/**
 * Pose along the path at arc-length fraction u in [0, 1], interpolating
 * position linearly and heading along the shortest angular arc. Pure, so the
 * animation is unit-testable without a clock.
 */
export function poseAlong(poses: Pose[], u: number): Pose {
  if (poses.length === 0) throw new Error("empty path");
  if (poses.length === 1 || u <= 0) return poses[0];
  if (u >= 1) return poses[poses.length - 1];
  const total = pathLength(poses);
  if (total === 0) {
    // in-place rotation: interpolate by index
    const t = u * (poses.length - 1);
    const i = Math.min(Math.floor(t), poses.length - 2);
    return lerpPose(poses[i], poses[i + 1], t - i);
  }
  let target = u * total;
  for (let i = 1; i < poses.length; i++) {
    const seg = Math.hypot(poses[i][0] - poses[i - 1][0], poses[i][1] - poses[i - 1][1]);
    if (seg >= target || i === poses.length - 1) {
      return lerpPose(poses[i - 1], poses[i], seg === 0 ? 1 : target / seg);
    }
    target -= seg;
  }
  return poses[poses.length - 1];
}

function lerpPose(a: Pose, b: Pose, w: number): Pose {
  let dth = b[2] - a[2];
  while (dth > Math.PI) dth -= 2 * Math.PI;
  while (dth <= -Math.PI) dth += 2 * Math.PI;
  return [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1]), a[2] + w * dth];
}
