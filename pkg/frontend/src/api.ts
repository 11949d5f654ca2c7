// Typed client for the segmentation service. Every payload carries a "v"
// version field; errors come back as JSON {"error": ...} with a non-2xx
// status and surface here as ApiError.

import type { SeedPayload } from "./scribble";

export interface SessionInfo {
  v: number;
  session: string;
  width: number;
  height: number;
  superpixels: number;
  boundaries: Array<{ id: number; polygon: Array<[number, number]> }>;
}

export interface SeedCounts {
  v: number;
  foreground_superpixels: number;
  background_superpixels: number;
}

export interface EnergyReport {
  l1: number;
  l2: number;
  l1plus: number;
}

export interface SolveResponse {
  v: number;
  labels: number[];
  binary: number[];
  energy: EnergyReport;
  solver: string;
  threshold: number;
}

export interface SuperpixelIds {
  v: number;
  width: number;
  height: number;
  count: number;
  ids: number[];
}

export interface SessionStats {
  v: number;
  factorizations: number;
  solves: number;
  seed_edits: number;
  superpixels: number;
  nodes: number;
  edges: number;
  age_seconds: number;
}

export const METHODS = ["compact_lp", "conv_lp", "qp", "gc"] as const;
export type Method = (typeof METHODS)[number];

export class ApiError extends Error {
  constructor(public readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.base + path, init);
    if (!resp.ok) {
      let message = `${resp.status} on ${path}`;
      try {
        const doc = (await resp.json()) as { error?: string };
        if (doc.error) message = doc.error;
      } catch {
        // non-JSON error body; keep the generic message
      }
      throw new ApiError(resp.status, message);
    }
    return (await resp.json()) as T;
  }

  createSession(image: BodyInit, superpixels?: number): Promise<SessionInfo> {
    const query = superpixels ? `?superpixels=${superpixels}` : "";
    return this.request<SessionInfo>(`/sessions${query}`, {
      method: "POST",
      body: image,
    });
  }

  putSeeds(sid: string, payload: SeedPayload): Promise<SeedCounts> {
    return this.request<SeedCounts>(`/sessions/${encodeURIComponent(sid)}/seeds`, {
      method: "PUT",
      body: JSON.stringify(payload),
    });
  }

  solve(sid: string, method: Method, threshold: number): Promise<SolveResponse> {
    return this.request<SolveResponse>(`/sessions/${encodeURIComponent(sid)}/solve`, {
      method: "POST",
      body: JSON.stringify({ v: 1, method, threshold }),
    });
  }

  superpixels(sid: string): Promise<SuperpixelIds> {
    return this.request<SuperpixelIds>(
      `/sessions/${encodeURIComponent(sid)}/superpixels`,
    );
  }

  stats(sid: string): Promise<SessionStats> {
    return this.request<SessionStats>(`/sessions/${encodeURIComponent(sid)}/stats`);
  }

  labelsPngUrl(sid: string, method: Method, view: "continuous" | "binary",
               threshold?: number): string {
    const t = threshold === undefined ? "" : `&threshold=${threshold}`;
    return `${this.base}/sessions/${encodeURIComponent(sid)}/labels` +
      `?method=${method}&view=${view}${t}`;
  }
}

interface QueuedJob {
  run: () => Promise<unknown>;
  resolve: (value: unknown) => void;
  reject: (err: unknown) => void;
}

/**
 * At most one job in flight; a newer submission replaces any job still
 * waiting, whose promise then resolves with undefined. This is the solve
 * button's policy: rapid clicks do not pile up requests, only the latest
 * state gets solved.
 */
export class SolveQueue {
  private inflight = false;
  private pending: QueuedJob | null = null;

  submit<T>(run: () => Promise<T>): Promise<T | undefined> {
    return new Promise<T | undefined>((resolve, reject) => {
      if (this.pending) {
        this.pending.resolve(undefined);
      }
      this.pending = {
        run,
        resolve: resolve as (value: unknown) => void,
        reject,
      };
      this.drain();
    });
  }

  get busy(): boolean {
    return this.inflight;
  }

  private drain(): void {
    if (this.inflight || !this.pending) return;
    const job = this.pending;
    this.pending = null;
    this.inflight = true;
    job.run()
      .then(job.resolve, job.reject)
      .finally(() => {
        this.inflight = false;
        this.drain();
      });
  }
}
