// UI state machine for one delineation session. Pure logic, no DOM: the
// canvas layer subscribes and redraws, tests drive it directly.
//
// The store never classifies a line itself. Candidate and accepted colors
// are stored exactly as the server sent them; rendering maps them to CSS
// case-insensitively.

import { ApiError } from './api.js';
import type { CandidateJson, ServiceClient, SessionSummary } from './api.js';
import type { FeatureCollection } from './geojson.js';
import { isLineString, isPoint } from './geojson.js';
import type { ViewTransform } from './transform.js';
import { worldToScreen } from './transform.js';

export const PICK_RADIUS_PX = 8;     // screen px around a click
export const NODE_MIN_SCALE = 2;     // px per meter; plain nodes hide when zoomed out further
const POLL_INTERVAL_MS = 1000;

export interface NetworkNode {
  id: string;
  x: number;
  y: number;
}

export interface NetworkEdge {
  id: string;
  nodeA: string;
  nodeB: string;
  coords: number[][];
  lengthM: number;
}

export interface AcceptedLine {
  order: number;
  coords: number[][];
  color: string;
  sinuosity: number;
  simplified: boolean;
}

export type SessionPhase = 'idle' | 'loading' | 'processing' | 'ready' | 'failed' | 'error';

export interface LayerVisibility {
  image: boolean;
  network: boolean;
  nodes: boolean;
  candidate: boolean;
  accepted: boolean;
}

export interface UiState {
  sessionId: string | null;
  phase: SessionPhase;
  banner: string | null;  // persistent error message
  toast: string | null;   // transient notice, cleared on the next action
  busy: boolean;
  nodes: NetworkNode[];
  edges: NetworkEdge[];
  selection: string[];    // node ids in click order
  suggestedNextNode: string | null;
  candidate: CandidateJson | null;
  accepted: AcceptedLine[];
  layers: LayerVisibility;
}

export interface StoreOptions {
  pickRadiusPx?: number;
  nodeMinScale?: number;
  pollIntervalMs?: number;
  sleep?: (ms: number) => Promise<void>;
}

export function parseNetwork(fc: FeatureCollection): { nodes: NetworkNode[]; edges: NetworkEdge[] } {
  const nodes: NetworkNode[] = [];
  const edges: NetworkEdge[] = [];
  for (const feature of fc.features) {
    const props = feature.properties ?? {};
    if (isPoint(feature.geometry) && typeof props['node_id'] === 'string') {
      nodes.push({
        id: props['node_id'],
        x: feature.geometry.coordinates[0],
        y: feature.geometry.coordinates[1],
      });
    } else if (isLineString(feature.geometry) && typeof props['edge_id'] === 'string') {
      edges.push({
        id: props['edge_id'],
        nodeA: String(props['node_a']),
        nodeB: String(props['node_b']),
        coords: feature.geometry.coordinates,
        lengthM: Number(props['length_m'] ?? 0),
      });
    }
  }
  return { nodes, edges };
}

export function parseBoundaries(fc: FeatureCollection): AcceptedLine[] {
  const lines: AcceptedLine[] = [];
  for (const feature of fc.features) {
    if (!isLineString(feature.geometry)) continue;
    const props = feature.properties ?? {};
    lines.push({
      order: Number(props['accepted_order'] ?? lines.length),
      coords: feature.geometry.coordinates,
      color: String(props['color'] ?? ''),
      sinuosity: Number(props['sinuosity'] ?? NaN),
      simplified: Boolean(props['simplified']),
    });
  }
  lines.sort((a, b) => a.order - b.order);
  return lines;
}

// Zoom-dependent declutter: when zoomed out past NODE_MIN_SCALE only the
// nodes the user is working with (selected or suggested) stay visible.
// Picking uses the same list, so a hidden node can never be clicked.
export function visibleNodes(state: UiState, t: ViewTransform, minScale = NODE_MIN_SCALE): NetworkNode[] {
  if (!state.layers.nodes) return [];
  if (t.scale >= minScale) return state.nodes;
  return state.nodes.filter(
    (n) => state.selection.includes(n.id) || n.id === state.suggestedNextNode,
  );
}

export function pickNode(
  nodes: NetworkNode[],
  t: ViewTransform,
  screenPt: readonly number[],
  radiusPx: number,
): NetworkNode | null {
  let best: NetworkNode | null = null;
  let bestD = radiusPx;
  for (const node of nodes) {
    const [sx, sy] = worldToScreen(t, [node.x, node.y]);
    const d = Math.hypot(sx - screenPt[0], sy - screenPt[1]);
    if (d <= bestD) {
      best = node;
      bestD = d;
    }
  }
  return best;
}

function defaultSleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export class DelineationStore {
  readonly state: UiState;
  private readonly api: ServiceClient;
  private readonly pickRadiusPx: number;
  private readonly nodeMinScale: number;
  private readonly pollIntervalMs: number;
  private readonly sleep: (ms: number) => Promise<void>;
  private readonly listeners = new Set<(state: UiState) => void>();

  constructor(api: ServiceClient, opts: StoreOptions = {}) {
    this.api = api;
    this.pickRadiusPx = opts.pickRadiusPx ?? PICK_RADIUS_PX;
    this.nodeMinScale = opts.nodeMinScale ?? NODE_MIN_SCALE;
    this.pollIntervalMs = opts.pollIntervalMs ?? POLL_INTERVAL_MS;
    this.sleep = opts.sleep ?? defaultSleep;
    this.state = {
      sessionId: null,
      phase: 'idle',
      banner: null,
      toast: null,
      busy: false,
      nodes: [],
      edges: [],
      selection: [],
      suggestedNextNode: null,
      candidate: null,
      accepted: [],
      layers: { image: true, network: true, nodes: true, candidate: true, accepted: true },
    };
  }

  subscribe(listener: (state: UiState) => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private fail(message: string): void {
    this.state.banner = message;
    this.state.phase = 'error';
    this.emit();
  }

  async load(sessionId: string): Promise<void> {
    const s = this.state;
    s.sessionId = sessionId;
    s.phase = 'loading';
    s.banner = null;
    s.toast = null;
    s.selection = [];
    s.candidate = null;
    s.nodes = [];
    s.edges = [];
    s.accepted = [];
    this.emit();

    let summary: SessionSummary;
    try {
      summary = await this.api.getSession(sessionId);
      while (summary.status === 'processing') {
        s.phase = 'processing';
        this.emit();
        await this.sleep(this.pollIntervalMs);
        summary = await this.api.getSession(sessionId);
      }
    } catch (err) {
      this.fail(errorText(err));
      return;
    }
    if (summary.status === 'failed') {
      s.phase = 'failed';
      s.banner = summary.error ?? 'session failed';
      this.emit();
      return;
    }
    try {
      const [network, boundaries] = await Promise.all([
        this.api.getNetwork(sessionId),
        this.api.getBoundaries(sessionId),
      ]);
      const parsed = parseNetwork(network);
      s.nodes = parsed.nodes;
      s.edges = parsed.edges;
      s.accepted = parseBoundaries(boundaries);
    } catch (err) {
      this.fail(errorText(err));
      return;
    }
    s.suggestedNextNode = summary.suggested_next_node ?? null;
    s.phase = 'ready';
    this.emit();
  }

  // Click handling: nearest visible node within the pick radius is appended
  // to the selection; from the second node on, each pick refreshes the
  // candidate path through every selected node.
  async clickAt(screenPt: readonly number[], t: ViewTransform): Promise<void> {
    const s = this.state;
    if (s.phase !== 'ready' || s.busy) return;
    const pickable = visibleNodes(s, t, this.nodeMinScale);
    const hit = pickNode(pickable, t, screenPt, this.pickRadiusPx);
    if (hit === null || s.selection.includes(hit.id)) return;
    s.selection.push(hit.id);
    s.toast = null;
    this.emit();
    if (s.selection.length >= 2) {
      await this.requestCandidate();
    }
  }

  clearSelection(): void {
    this.state.selection = [];
    this.state.toast = null;
    this.emit();
  }

  toggleLayer(name: keyof LayerVisibility): void {
    this.state.layers[name] = !this.state.layers[name];
    this.emit();
  }

  private async requestCandidate(): Promise<void> {
    const s = this.state;
    if (s.sessionId === null) return;
    s.busy = true;
    this.emit();
    try {
      s.candidate = await this.api.postCandidate(
        s.sessionId, s.selection.slice(), s.candidate !== null);
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        s.selection.pop();
        s.toast = 'no path between the selected nodes';
      } else if (err instanceof ApiError && err.status === 409) {
        // another candidate exists server side; resync and retry once
        await this.refreshSummary();
        try {
          s.candidate = await this.api.postCandidate(s.sessionId, s.selection.slice(), true);
        } catch (retryErr) {
          s.banner = errorText(retryErr);
        }
      } else {
        s.banner = errorText(err);
      }
    } finally {
      s.busy = false;
      this.emit();
    }
  }

  async acceptCandidate(): Promise<void> {
    const s = this.state;
    if (s.sessionId === null || s.candidate === null) return;
    s.busy = true;
    this.emit();
    try {
      const result = await this.api.acceptCandidate(s.sessionId);
      const boundaries = await this.api.getBoundaries(s.sessionId);
      s.accepted = parseBoundaries(boundaries);
      s.candidate = null;
      s.suggestedNextNode = result.suggested_next_node;
      // keep the last terminal selected so the next pick continues the run
      s.selection = result.suggested_next_node === null ? [] : [result.suggested_next_node];
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        await this.refreshSummary();
        s.candidate = null;
      } else {
        s.banner = errorText(err);
      }
    } finally {
      s.busy = false;
      this.emit();
    }
  }

  async simplifyCandidate(toleranceM: number): Promise<void> {
    await this.mutateCandidate(() => this.api.simplifyCandidate(this.state.sessionId!, toleranceM));
  }

  async replaceCandidateGeometry(coordinates: number[][]): Promise<void> {
    await this.mutateCandidate(
      () => this.api.replaceCandidateGeometry(this.state.sessionId!, coordinates));
  }

  private async mutateCandidate(call: () => Promise<CandidateJson>): Promise<void> {
    const s = this.state;
    if (s.sessionId === null || s.candidate === null) return;
    s.busy = true;
    this.emit();
    try {
      s.candidate = await call();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        await this.refreshSummary();
        s.candidate = null;
      } else {
        s.banner = errorText(err);
      }
    } finally {
      s.busy = false;
      this.emit();
    }
  }

  async deleteCandidate(): Promise<void> {
    const s = this.state;
    if (s.sessionId === null || s.candidate === null) return;
    s.busy = true;
    this.emit();
    try {
      await this.api.deleteCandidate(s.sessionId);
    } catch (err) {
      if (!(err instanceof ApiError && err.status === 409)) {
        s.banner = errorText(err);
      }
    } finally {
      s.candidate = null;
      s.selection = [];
      s.busy = false;
      this.emit();
    }
  }

  async exportBoundaries(): Promise<FeatureCollection | null> {
    const s = this.state;
    if (s.sessionId === null) return null;
    try {
      return await this.api.getBoundaries(s.sessionId);
    } catch (err) {
      s.banner = errorText(err);
      this.emit();
      return null;
    }
  }

  private async refreshSummary(): Promise<void> {
    const s = this.state;
    if (s.sessionId === null) return;
    try {
      const summary = await this.api.getSession(s.sessionId);
      s.suggestedNextNode = summary.suggested_next_node ?? null;
      if (summary.accepted_count !== undefined &&
          summary.accepted_count !== s.accepted.length) {
        s.accepted = parseBoundaries(await this.api.getBoundaries(s.sessionId));
      }
    } catch (err) {
      s.banner = errorText(err);
    }
  }
}

function errorText(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  if (err instanceof Error) return err.message;
  return String(err);
}
