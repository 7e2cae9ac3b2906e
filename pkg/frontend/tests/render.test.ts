import { describe, expect, it } from 'vitest';
import type { CandidateJson } from '../src/api.js';
import {
  ACCEPTED_WIDTH, CANDIDATE_WIDTH, drawScene, EDGE_COLOR, FALLBACK_COLOR,
  TRAFFIC_COLORS, trafficColor,
} from '../src/render.js';
import type { UiState } from '../src/state.js';
import type { ViewTransform } from '../src/transform.js';
import { FakeContext, strokes } from './fake-context.js';

const VIEW: ViewTransform = { originX: 0, originY: 0, scale: 10 };

function candidate(color: string): CandidateJson {
  return {
    geometry: { type: 'LineString', coordinates: [[0, 0], [10, 0]] },
    terminals: ['n1', 'n2'],
    sinuosity: 1,
    color,
    simplified: false,
    branch_parts: [],
  };
}

function baseState(overrides: Partial<UiState> = {}): UiState {
  return {
    sessionId: 's1',
    phase: 'ready',
    banner: null,
    toast: null,
    busy: false,
    nodes: [
      { id: 'n1', x: 0, y: 0 },
      { id: 'n2', x: 10, y: 0 },
    ],
    edges: [
      { id: 'e1', nodeA: 'n1', nodeB: 'n2', coords: [[0, 0], [10, 0]], lengthM: 10 },
    ],
    selection: [],
    suggestedNextNode: null,
    candidate: null,
    accepted: [],
    layers: { image: true, network: true, nodes: true, candidate: true, accepted: true },
    ...overrides,
  };
}

describe('trafficColor', () => {
  it('matches the server name case-insensitively', () => {
    expect(trafficColor('green')).toBe(TRAFFIC_COLORS.green);
    expect(trafficColor('GREEN')).toBe(TRAFFIC_COLORS.green);
    expect(trafficColor('Red')).toBe(TRAFFIC_COLORS.red);
    expect(trafficColor('Yellow')).toBe(TRAFFIC_COLORS.yellow);
  });

  it('falls back to neutral for unknown names', () => {
    expect(trafficColor('chartreuse')).toBe(FALLBACK_COLOR);
  });
});

describe('drawScene', () => {
  it('strokes the candidate in the server color regardless of casing', () => {
    const ctx = new FakeContext();
    drawScene(ctx, 800, 600, VIEW, baseState({ candidate: candidate('GReeN') }));
    const candidateStroke = strokes(ctx).find((s) => s.width === CANDIDATE_WIDTH);
    expect(candidateStroke?.style).toBe(TRAFFIC_COLORS.green);
  });

  it('strokes accepted lines in their stored colors', () => {
    const ctx = new FakeContext();
    drawScene(ctx, 800, 600, VIEW, baseState({
      accepted: [
        { order: 0, coords: [[0, 0], [10, 0]], color: 'green', sinuosity: 1, simplified: false },
        { order: 1, coords: [[0, 1], [10, 1]], color: 'red', sinuosity: 0.1, simplified: false },
      ],
    }));
    const styles = strokes(ctx).filter((s) => s.width === ACCEPTED_WIDTH).map((s) => s.style);
    expect(styles).toEqual([TRAFFIC_COLORS.green, TRAFFIC_COLORS.red]);
  });

  it('draws network edges in the neutral edge color', () => {
    const ctx = new FakeContext();
    drawScene(ctx, 800, 600, VIEW, baseState());
    expect(strokes(ctx).some((s) => s.style === EDGE_COLOR)).toBe(true);
  });

  it('numbers selected nodes in click order', () => {
    const ctx = new FakeContext();
    drawScene(ctx, 800, 600, VIEW, baseState({ selection: ['n2', 'n1'] }));
    const labels = ctx.ops.filter((o) => o.op === 'fillText');
    const byText = new Map(labels.map((l) => [l.text, l]));
    // n2 picked first, so it carries label 1 at its screen position x=100
    expect(byText.get('1')?.x).toBeGreaterThan(90);
    expect(byText.get('2')?.x).toBeLessThan(20);
  });

  it('skips hidden layers', () => {
    const ctx = new FakeContext();
    const state = baseState({ candidate: candidate('green') });
    state.layers = { image: true, network: false, nodes: false, candidate: false, accepted: false };
    drawScene(ctx, 800, 600, VIEW, state);
    expect(strokes(ctx).length).toBe(0);
    expect(ctx.ops.filter((o) => o.op === 'arc').length).toBe(0);
  });

  it('hides plain nodes when zoomed out far', () => {
    const ctx = new FakeContext();
    const zoomedOut: ViewTransform = { originX: 0, originY: 0, scale: 0.5 };
    drawScene(ctx, 800, 600, zoomedOut, baseState());
    expect(ctx.ops.filter((o) => o.op === 'arc').length).toBe(0);
  });

  it('places the image overlay by its world bounds', () => {
    const ctx = new FakeContext();
    const image = { source: {}, west: 0, north: 10, east: 10, south: 0 };
    drawScene(ctx, 800, 600, VIEW, baseState(), image);
    const op = ctx.ops.find((o) => o.op === 'drawImage');
    // west/north corner at (0,-100), 100 px square
    expect(op?.rect).toEqual([0, -100, 100, 100]);
  });

  it('works without drawImage support', () => {
    const ctx = new FakeContext();
    (ctx as { drawImage?: unknown }).drawImage = undefined;
    const image = { source: {}, west: 0, north: 10, east: 10, south: 0 };
    expect(() => drawScene(ctx, 800, 600, VIEW, baseState(), image)).not.toThrow();
  });

  it('draws branch parts thinner than the main candidate line', () => {
    const ctx = new FakeContext();
    const cand = candidate('yellow');
    cand.branch_parts = [[[5, 0], [5, 3]]];
    drawScene(ctx, 800, 600, VIEW, baseState({ candidate: cand }));
    const widths = strokes(ctx)
      .filter((s) => s.style === TRAFFIC_COLORS.yellow)
      .map((s) => s.width);
    expect(widths).toContain(CANDIDATE_WIDTH);
    expect(widths.some((w) => w !== undefined && w < CANDIDATE_WIDTH)).toBe(true);
  });
});
