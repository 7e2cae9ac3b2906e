// HTTP client for the delineation service. Every method resolves with the
// parsed JSON body or rejects with an ApiError carrying the HTTP status and
// the server's detail message.

import type { FeatureCollection, LineStringGeometry } from './geojson.js';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface SessionSummary {
  session_id: string;
  status: 'processing' | 'ready' | 'failed';
  error: string | null;
  created: string;
  updated: string;
  accepted_count?: number;
  suggested_next_node?: string | null;
  has_candidate?: boolean;
}

export interface CandidateJson {
  geometry: LineStringGeometry;
  terminals: string[];
  sinuosity: number;
  color: string;
  simplified: boolean;
  branch_parts: number[][][];
}

export interface AcceptResult {
  accepted_count: number;
  added: number;
  suggested_next_node: string | null;
}

export interface CreateSessionResult {
  session_id: string;
  status: string;
  status_url: string;
}

export interface CreateSessionRequest {
  image: string;
  worldfile?: string;
  params?: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
    this.name = 'ApiError';
  }
}

// The surface the UI state machine depends on; ApiClient is the live
// implementation, tests substitute scripted fakes.
export interface ServiceClient {
  getSession(id: string): Promise<SessionSummary>;
  getNetwork(id: string): Promise<FeatureCollection>;
  postCandidate(id: string, nodeIds: string[], replace: boolean): Promise<CandidateJson>;
  simplifyCandidate(id: string, toleranceM: number): Promise<CandidateJson>;
  replaceCandidateGeometry(id: string, coordinates: number[][]): Promise<CandidateJson>;
  acceptCandidate(id: string): Promise<AcceptResult>;
  deleteCandidate(id: string): Promise<void>;
  getBoundaries(id: string): Promise<FeatureCollection>;
}

export class ApiClient implements ServiceClient {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, '');
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { 'content-type': 'application/json' };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchFn(this.baseUrl + path, init);
    const text = await res.text();
    let doc: unknown = null;
    if (text) {
      try {
        doc = JSON.parse(text);
      } catch {
        doc = null;
      }
    }
    if (!res.ok) {
      const detail = (doc as { detail?: unknown } | null)?.detail;
      throw new ApiError(res.status, detail !== undefined ? String(detail) : `HTTP ${res.status}`);
    }
    return doc as T;
  }

  health(): Promise<{ status: string }> {
    return this.request('GET', '/health');
  }

  createSession(req: CreateSessionRequest): Promise<CreateSessionResult> {
    return this.request('POST', '/sessions', req);
  }

  getSession(id: string): Promise<SessionSummary> {
    return this.request('GET', `/sessions/${encodeURIComponent(id)}`);
  }

  getNetwork(id: string): Promise<FeatureCollection> {
    return this.request('GET', `/sessions/${encodeURIComponent(id)}/network`);
  }

  postCandidate(id: string, nodeIds: string[], replace: boolean): Promise<CandidateJson> {
    return this.request('POST', `/sessions/${encodeURIComponent(id)}/candidate`, {
      node_ids: nodeIds,
      replace,
    });
  }

  simplifyCandidate(id: string, toleranceM: number): Promise<CandidateJson> {
    return this.request('POST', `/sessions/${encodeURIComponent(id)}/candidate/simplify`, {
      tolerance_m: toleranceM,
    });
  }

  replaceCandidateGeometry(id: string, coordinates: number[][]): Promise<CandidateJson> {
    return this.request('PUT', `/sessions/${encodeURIComponent(id)}/candidate/geometry`, {
      geometry: { type: 'LineString', coordinates },
    });
  }

  acceptCandidate(id: string): Promise<AcceptResult> {
    return this.request('POST', `/sessions/${encodeURIComponent(id)}/candidate/accept`);
  }

  deleteCandidate(id: string): Promise<void> {
    return this.request('DELETE', `/sessions/${encodeURIComponent(id)}/candidate`);
  }

  getBoundaries(id: string): Promise<FeatureCollection> {
    return this.request('GET', `/sessions/${encodeURIComponent(id)}/boundaries`);
  }
}
