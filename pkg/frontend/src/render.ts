// Scene rendering against a minimal 2D-context interface so tests can
// record draw calls instead of needing a real canvas.

import { Camera, toScreen } from "./camera.js";
import type { StateFrame } from "./protocol.js";

export interface Ctx2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  globalAlpha: number;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  stroke(): void;
  fill(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fillText(text: string, x: number, y: number): void;
}

export interface WorldGrid {
  width: number;
  height: number;
  resolution: number;
  cells: boolean[][]; // [iy][ix], iy 0 at smallest y
}

export const COLORS = {
  background: "#11151c",
  occupied: "#3a4152",
  robot: "#64d2ff",
  scan: "#ffd166",
  path: "#4cc38a",
  goal: "#f26d6d",
  roiSafe: "rgba(76, 195, 138, 0.35)",
  roiUnsafe: "rgba(242, 109, 109, 0.55)",
  banner: "#f2f2f2",
  recording: "#ff5252",
};

export const FOOTPRINT = { length: 0.5, width: 0.43 };

export function renderWorld(ctx: Ctx2D, cam: Camera, world: WorldGrid, canvasW: number): void {
  ctx.fillStyle = COLORS.background;
  ctx.fillRect(0, 0, canvasW, cam.canvasH);
  ctx.fillStyle = COLORS.occupied;
  const cell = world.resolution * cam.scale;
  for (let iy = 0; iy < world.height; iy++) {
    for (let ix = 0; ix < world.width; ix++) {
      if (!world.cells[iy][ix]) continue;
      const [sx, sy] = toScreen(cam, ix * world.resolution, (iy + 1) * world.resolution);
      ctx.fillRect(sx, sy, cell + 0.5, cell + 0.5);
    }
  }
}

function polyline(ctx: Ctx2D, cam: Camera, pts: number[][], close = false): void {
  ctx.beginPath();
  pts.forEach(([x, y], i) => {
    const [sx, sy] = toScreen(cam, x, y);
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
  if (close) ctx.closePath();
}

export function renderFrame(ctx: Ctx2D, cam: Camera, frame: StateFrame): void {
  const [x, y, th] = frame.pose;

  // safety region under everything else
  if (frame.verdict && frame.verdict.roi.length > 2) {
    ctx.fillStyle = frame.verdict.safe ? COLORS.roiSafe : COLORS.roiUnsafe;
    polyline(ctx, cam, frame.verdict.roi, true);
    ctx.fill();
  }

  // global path
  if (frame.path.length > 1) {
    ctx.strokeStyle = COLORS.path;
    ctx.lineWidth = 2;
    polyline(ctx, cam, frame.path);
    ctx.stroke();
  }

  // scan points (polar, beams evenly spaced over the full turn)
  ctx.fillStyle = COLORS.scan;
  const n = frame.scan.length;
  for (let i = 0; i < n; i++) {
    const r = frame.scan[i];
    if (r >= 19.999) continue;
    const a = th - Math.PI + (i * 2 * Math.PI) / Math.max(n - 1, 1);
    const [sx, sy] = toScreen(cam, x + r * Math.cos(a), y + r * Math.sin(a));
    ctx.fillRect(sx - 1, sy - 1, 2, 2);
  }

  // robot footprint rectangle
  const hl = FOOTPRINT.length / 2;
  const hw = FOOTPRINT.width / 2;
  const c = Math.cos(th);
  const s = Math.sin(th);
  const corners = [
    [x + c * hl - s * hw, y + s * hl + c * hw],
    [x + c * hl + s * hw, y + s * hl - c * hw],
    [x - c * hl + s * hw, y - s * hl - c * hw],
    [x - c * hl - s * hw, y - s * hl + c * hw],
  ];
  ctx.strokeStyle = COLORS.robot;
  ctx.lineWidth = 2;
  polyline(ctx, cam, corners, true);
  ctx.stroke();
  // heading tick
  ctx.beginPath();
  const [cx0, cy0] = toScreen(cam, x, y);
  const [cx1, cy1] = toScreen(cam, x + c * hl, y + s * hl);
  ctx.moveTo(cx0, cy0);
  ctx.lineTo(cx1, cy1);
  ctx.stroke();

  // local goal marker
  if (frame.goal) {
    ctx.strokeStyle = COLORS.goal;
    ctx.lineWidth = 2;
    polyline(ctx, cam, [[x, y], frame.goal]);
    ctx.stroke();
    const [gx, gy] = toScreen(cam, frame.goal[0], frame.goal[1]);
    ctx.beginPath();
    ctx.arc(gx, gy, 5, 0, 2 * Math.PI);
    ctx.stroke();
  }

  // recording indicator
  if (frame.recording) {
    ctx.fillStyle = COLORS.recording;
    ctx.beginPath();
    ctx.arc(18, 18, 8, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillText("REC", 32, 23);
  }

  // outcome banner
  if (frame.outcome) {
    ctx.fillStyle = COLORS.banner;
    ctx.font = "24px sans-serif";
    ctx.fillText(`${frame.outcome.toUpperCase()} — press R to reset`, 40, 48);
  }
}

export function renderErrorBanner(ctx: Ctx2D, message: string): void {
  ctx.fillStyle = COLORS.banner;
  ctx.font = "16px sans-serif";
  ctx.fillText(`frame error: ${message}`, 20, 20);
}
