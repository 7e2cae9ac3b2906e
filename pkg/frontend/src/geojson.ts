// Minimal GeoJSON shapes used on the wire. Coordinates are [x, y] in
// world meters (the service works in world-file coordinates, not lon/lat).

export interface PointGeometry {
  type: 'Point';
  coordinates: number[];
}

export interface LineStringGeometry {
  type: 'LineString';
  coordinates: number[][];
}

export type Geometry = PointGeometry | LineStringGeometry;

export interface Feature {
  type: 'Feature';
  geometry: Geometry;
  properties: Record<string, unknown> | null;
}

export interface FeatureCollection {
  type: 'FeatureCollection';
  features: Feature[];
}

export function isPoint(g: Geometry): g is PointGeometry {
  return g.type === 'Point';
}

export function isLineString(g: Geometry): g is LineStringGeometry {
  return g.type === 'LineString';
}
