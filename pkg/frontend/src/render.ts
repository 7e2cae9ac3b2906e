// Canvas scene drawing. Works against a structural subset of the 2D
// context so tests can record draw calls without a DOM. Candidate and
// accepted lines are stroked in the color the server assigned; the name is
// matched case-insensitively and never recomputed here.

import type { UiState } from './state.js';
import { visibleNodes } from './state.js';
import type { ViewTransform } from './transform.js';
import { worldToScreen } from './transform.js';

export interface Canvas2D {
  lineWidth: number;
  strokeStyle: string;
  fillStyle: string;
  font: string;
  globalAlpha: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
  save(): void;
  restore(): void;
  drawImage?(image: unknown, dx: number, dy: number, dw: number, dh: number): void;
}

export const TRAFFIC_COLORS: Record<string, string> = {
  green: '#1a9641',
  yellow: '#e0a80c',
  red: '#d7191c',
};
export const FALLBACK_COLOR = '#888888';
export const BACKGROUND = '#10151b';
export const EDGE_COLOR = '#5c6f82';
export const NODE_FILL = '#dce6f0';
export const NODE_STROKE = '#10151b';
export const SELECTED_FILL = '#37a0f4';
export const SUGGESTED_STROKE = '#37a0f4';
export const LABEL_COLOR = '#ffffff';

export const EDGE_WIDTH = 1.5;
export const ACCEPTED_WIDTH = 3;
export const CANDIDATE_WIDTH = 4;
export const BRANCH_WIDTH = 2;
export const NODE_RADIUS = 3.5;   // px
export const SELECTED_RADIUS = 6; // px

export function trafficColor(name: string): string {
  return TRAFFIC_COLORS[name.toLowerCase()] ?? FALLBACK_COLOR;
}

export interface SceneImage {
  source: unknown;       // CanvasImageSource at runtime
  west: number;          // world bounds of the raster
  north: number;
  east: number;
  south: number;
}

function strokePath(ctx: Canvas2D, t: ViewTransform, coords: number[][]): void {
  if (coords.length < 2) return;
  ctx.beginPath();
  const [x0, y0] = worldToScreen(t, coords[0]);
  ctx.moveTo(x0, y0);
  for (let i = 1; i < coords.length; i++) {
    const [x, y] = worldToScreen(t, coords[i]);
    ctx.lineTo(x, y);
  }
  ctx.stroke();
}

function circle(ctx: Canvas2D, x: number, y: number, r: number): void {
  ctx.beginPath();
  ctx.arc(x, y, r, 0, Math.PI * 2);
}

export function drawScene(
  ctx: Canvas2D,
  width: number,
  height: number,
  t: ViewTransform,
  state: UiState,
  image?: SceneImage | null,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = BACKGROUND;
  ctx.fillRect(0, 0, width, height);

  if (image && state.layers.image && ctx.drawImage) {
    const [dx, dy] = worldToScreen(t, [image.west, image.north]);
    const [ex, ey] = worldToScreen(t, [image.east, image.south]);
    ctx.drawImage(image.source, dx, dy, ex - dx, ey - dy);
  }

  if (state.layers.network) {
    ctx.strokeStyle = EDGE_COLOR;
    ctx.lineWidth = EDGE_WIDTH;
    for (const edge of state.edges) {
      strokePath(ctx, t, edge.coords);
    }
  }

  if (state.layers.accepted) {
    ctx.lineWidth = ACCEPTED_WIDTH;
    for (const line of state.accepted) {
      ctx.strokeStyle = trafficColor(line.color);
      strokePath(ctx, t, line.coords);
    }
  }

  if (state.layers.candidate && state.candidate !== null) {
    const color = trafficColor(state.candidate.color);
    ctx.strokeStyle = color;
    ctx.lineWidth = BRANCH_WIDTH;
    for (const part of state.candidate.branch_parts) {
      strokePath(ctx, t, part);
    }
    ctx.lineWidth = CANDIDATE_WIDTH;
    strokePath(ctx, t, state.candidate.geometry.coordinates);
  }

  if (state.layers.nodes) {
    const nodes = visibleNodes(state, t);
    for (const node of nodes) {
      const [sx, sy] = worldToScreen(t, [node.x, node.y]);
      const order = state.selection.indexOf(node.id);
      if (order >= 0) {
        ctx.fillStyle = SELECTED_FILL;
        circle(ctx, sx, sy, SELECTED_RADIUS);
        ctx.fill();
        ctx.fillStyle = LABEL_COLOR;
        ctx.font = '11px system-ui, sans-serif';
        ctx.fillText(String(order + 1), sx + SELECTED_RADIUS + 2, sy - SELECTED_RADIUS);
      } else {
        ctx.fillStyle = NODE_FILL;
        circle(ctx, sx, sy, NODE_RADIUS);
        ctx.fill();
        if (node.id === state.suggestedNextNode) {
          ctx.strokeStyle = SUGGESTED_STROKE;
          ctx.lineWidth = 2;
          circle(ctx, sx, sy, SELECTED_RADIUS);
          ctx.stroke();
        }
      }
    }
  }
}
