// World to screen mapping. World coordinates are meters with the y axis
// pointing up (map convention); screen coordinates are canvas pixels with
// the y axis pointing down. The transform stores the world position of the
// screen origin plus a single isotropic scale, so it is always invertible
// as long as the scale stays positive, which zoomAt enforces by clamping.

export const MIN_SCALE = 1e-4; // px per meter
export const MAX_SCALE = 1e6;

export interface ViewTransform {
  originX: number; // world x at screen (0, 0)
  originY: number; // world y at screen (0, 0)
  scale: number;   // screen px per world meter
}

export interface WorldBounds {
  minX: number;
  minY: number;
  maxX: number;
  maxY: number;
}

export function worldToScreen(t: ViewTransform, world: readonly number[]): [number, number] {
  return [(world[0] - t.originX) * t.scale, (t.originY - world[1]) * t.scale];
}

export function screenToWorld(t: ViewTransform, screen: readonly number[]): [number, number] {
  return [t.originX + screen[0] / t.scale, t.originY - screen[1] / t.scale];
}

// Drag the content by (dxPx, dyPx) screen pixels.
export function pan(t: ViewTransform, dxPx: number, dyPx: number): ViewTransform {
  return {
    originX: t.originX - dxPx / t.scale,
    originY: t.originY + dyPx / t.scale,
    scale: t.scale,
  };
}

// Rescale by `factor` keeping the world point under `screen` fixed.
export function zoomAt(t: ViewTransform, screen: readonly number[], factor: number): ViewTransform {
  const scale = Math.min(MAX_SCALE, Math.max(MIN_SCALE, t.scale * factor));
  const [wx, wy] = screenToWorld(t, screen);
  return {
    originX: wx - screen[0] / scale,
    originY: wy + screen[1] / scale,
    scale,
  };
}

export function fitBounds(
  bounds: WorldBounds,
  widthPx: number,
  heightPx: number,
  padPx = 20,
): ViewTransform {
  const spanX = Math.max(bounds.maxX - bounds.minX, 1e-9);
  const spanY = Math.max(bounds.maxY - bounds.minY, 1e-9);
  const usableW = Math.max(widthPx - 2 * padPx, 1);
  const usableH = Math.max(heightPx - 2 * padPx, 1);
  const scale = Math.min(MAX_SCALE, Math.max(MIN_SCALE, Math.min(usableW / spanX, usableH / spanY)));
  const centerX = (bounds.minX + bounds.maxX) / 2;
  const centerY = (bounds.minY + bounds.maxY) / 2;
  return {
    originX: centerX - widthPx / 2 / scale,
    originY: centerY + heightPx / 2 / scale,
    scale,
  };
}

export function boundsOfPoints(points: Iterable<readonly number[]>): WorldBounds | null {
  let minX = Infinity;
  let minY = Infinity;
  let maxX = -Infinity;
  let maxY = -Infinity;
  for (const [x, y] of points) {
    if (x < minX) minX = x;
    if (y < minY) minY = y;
    if (x > maxX) maxX = x;
    if (y > maxY) maxY = y;
  }
  if (minX > maxX) return null;
  return { minX, minY, maxX, maxY };
}
