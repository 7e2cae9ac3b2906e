// Full delineation loop against a live service (spawned by the global
// setup). The seeded network has a straight pair at y=0 that routes as a
// direct line, a pair at y=10 joined only through a long hook so its path
// is strongly sinuous, and an unreachable island. The UI must render each
// candidate in exactly the color the server assigned, move accepted lines
// to the accepted layer, and export exactly those features.

import { beforeAll, describe, expect, inject, it } from 'vitest';
import { ApiClient } from '../src/api.js';
import type { FeatureCollection } from '../src/geojson.js';
import { isPoint } from '../src/geojson.js';
import { CANDIDATE_WIDTH, drawScene, trafficColor } from '../src/render.js';
import { DelineationStore } from '../src/state.js';
import type { NetworkNode } from '../src/state.js';
import { boundsOfPoints, fitBounds, worldToScreen } from '../src/transform.js';
import type { ViewTransform } from '../src/transform.js';
import { FakeContext, strokes } from './fake-context.js';

const WIDTH = 800;
const HEIGHT = 600;

const baseUrl = inject('baseUrl');
const uiSessionId = inject('uiSessionId');
const idleSessionId = inject('idleSessionId');

const api = new ApiClient(baseUrl);
const store = new DelineationStore(api, { pollIntervalMs: 100 });
let view: ViewTransform;

function nodeAt(x: number, y: number): NetworkNode {
  const node = store.state.nodes.find(
    (n) => Math.abs(n.x - x) < 1e-9 && Math.abs(n.y - y) < 1e-9);
  if (node === undefined) throw new Error(`no node at (${x}, ${y})`);
  return node;
}

async function clickNode(x: number, y: number): Promise<void> {
  const node = nodeAt(x, y);
  await store.clickAt(worldToScreen(view, [node.x, node.y]), view);
}

function renderedCandidateColor(): string | undefined {
  const ctx = new FakeContext();
  drawScene(ctx, WIDTH, HEIGHT, view, store.state);
  return strokes(ctx).find((s) => s.width === CANDIDATE_WIDTH)?.style;
}

beforeAll(async () => {
  await store.load(uiSessionId);
  const bounds = boundsOfPoints(store.state.nodes.map((n) => [n.x, n.y]));
  if (bounds === null) throw new Error('empty network');
  view = fitBounds(bounds, WIDTH, HEIGHT);
});

describe('session load', () => {
  it('reaches ready with every network node rendered as a marker', async () => {
    expect(store.state.phase).toBe('ready');
    const doc = await api.getNetwork(uiSessionId);
    const pointCount = doc.features.filter((f) => isPoint(f.geometry)).length;
    expect(store.state.nodes.length).toBe(pointCount);
    expect(pointCount).toBeGreaterThan(0);
    // the fitted view keeps all nodes pickable
    const ctx = new FakeContext();
    drawScene(ctx, WIDTH, HEIGHT, view, store.state);
    expect(ctx.ops.filter((o) => o.op === 'arc').length).toBe(pointCount);
  });

  it('flags an unknown session id', async () => {
    const other = new DelineationStore(new ApiClient(baseUrl));
    await other.load('deadbeefdeadbeefdeadbeefdeadbeef');
    expect(other.state.phase).toBe('error');
    expect(other.state.banner).toBeTruthy();
  });
});

describe('delineation loop', () => {
  it('routes the straight pair and renders it in the server color (green)', async () => {
    await clickNode(0, 0);
    await clickNode(10, 0);
    const cand = store.state.candidate;
    expect(cand).not.toBeNull();
    expect(cand!.color.toLowerCase()).toBe('green');
    expect(cand!.sinuosity).toBeGreaterThan(0.999);
    expect(renderedCandidateColor()).toBe(trafficColor(cand!.color));
  });

  it('accept moves the line to the accepted layer and seeds the next pick', async () => {
    const geometry = store.state.candidate!.geometry.coordinates;
    await store.acceptCandidate();
    expect(store.state.candidate).toBeNull();
    expect(store.state.accepted.length).toBe(1);
    expect(store.state.accepted[0].coords).toEqual(geometry);
    expect(store.state.suggestedNextNode).not.toBeNull();
    expect(store.state.selection).toEqual([store.state.suggestedNextNode]);
  });

  it('routes the detour pair and renders it in the server color (red)', async () => {
    store.clearSelection();
    await clickNode(0, 10);
    await clickNode(2, 10);
    const cand = store.state.candidate;
    expect(cand).not.toBeNull();
    expect(cand!.color.toLowerCase()).toBe('red');
    expect(cand!.sinuosity).toBeLessThan(1 / 3);
    expect(renderedCandidateColor()).toBe(trafficColor(cand!.color));
    await store.acceptCandidate();
    expect(store.state.accepted.length).toBe(2);
  });

  it('toasts "no path" for the island and keeps the session usable', async () => {
    store.clearSelection();
    await clickNode(0, 0);
    await clickNode(100, 100);
    expect(store.state.toast).toContain('no path');
    expect(store.state.candidate).toBeNull();
    expect(store.state.selection).toEqual([nodeAt(0, 0).id]);
    store.clearSelection();
  });

  it('exports exactly the accepted features', async () => {
    const doc = (await store.exportBoundaries()) as FeatureCollection;
    expect(doc.type).toBe('FeatureCollection');
    expect(doc.features.length).toBe(store.state.accepted.length);
    const exported = doc.features.map((f) => ({
      coords: (f.geometry as { coordinates: number[][] }).coordinates,
      color: String(f.properties?.['color']),
    }));
    const held = store.state.accepted.map((a) => ({ coords: a.coords, color: a.color }));
    expect(exported).toEqual(held);
    expect(exported.map((e) => e.color.toLowerCase())).toEqual(['green', 'red']);
  });

  it('leaves the untouched session empty (sessions are independent)', async () => {
    const summary = await api.getSession(idleSessionId);
    expect(summary.status).toBe('ready');
    expect(summary.accepted_count).toBe(0);
    const doc = await api.getBoundaries(idleSessionId);
    expect(doc.features.length).toBe(0);
  });
});
