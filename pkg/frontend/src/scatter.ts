/** Canvas scatter renderer: immediate-mode redraws, fine for a few
 * thousand points. */

import type { EmbeddingPoint } from './types.js';

export interface PlacedPoint {
  point: EmbeddingPoint;
  px: number;
  py: number;
}

const MARGIN = 18;
const RADIUS = 3.5;

export function computeLayout(
  points: EmbeddingPoint[],
  width: number,
  height: number,
): PlacedPoint[] {
  if (points.length === 0) return [];
  let minX = Infinity;
  let maxX = -Infinity;
  let minY = Infinity;
  let maxY = -Infinity;
  for (const p of points) {
    minX = Math.min(minX, p.x);
    maxX = Math.max(maxX, p.x);
    minY = Math.min(minY, p.y);
    maxY = Math.max(maxY, p.y);
  }
  const spanX = maxX - minX || 1;
  const spanY = maxY - minY || 1;
  const scale = Math.min((width - 2 * MARGIN) / spanX, (height - 2 * MARGIN) / spanY);
  const offsetX = (width - spanX * scale) / 2;
  const offsetY = (height - spanY * scale) / 2;
  return points.map((point) => ({
    point,
    px: offsetX + (point.x - minX) * scale,
    // canvas y grows downward; flip so larger y is up
    py: height - (offsetY + (point.y - minY) * scale),
  }));
}

export function drawScatter(
  canvas: HTMLCanvasElement,
  placed: PlacedPoint[],
  colorFor: (p: EmbeddingPoint) => string,
  highlightId: string | null = null,
): void {
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (const { point, px, py } of placed) {
    ctx.beginPath();
    ctx.arc(px, py, point.id === highlightId ? RADIUS + 2 : RADIUS, 0, 2 * Math.PI);
    ctx.fillStyle = colorFor(point);
    ctx.globalAlpha = 0.85;
    ctx.fill();
  }
  ctx.globalAlpha = 1.0;
}

/** Nearest placed point within a small pick radius, for hover tooltips. */
export function pickPoint(
  placed: PlacedPoint[],
  x: number,
  y: number,
  radius = 6,
): PlacedPoint | null {
  let best: PlacedPoint | null = null;
  let bestD2 = radius * radius;
  for (const entry of placed) {
    const d2 = (entry.px - x) ** 2 + (entry.py - y) ** 2;
    if (d2 <= bestD2) {
      best = entry;
      bestD2 = d2;
    }
  }
  return best;
}
