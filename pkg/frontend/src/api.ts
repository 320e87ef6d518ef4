/**
 * Typed client for the record query service.
 *
 * Only consumer of the network: GET /records and GET /dictionaries. Filter
 * changes cancel any in-flight request so the latest query always wins.
 */

import { SearchState, toApiParams } from "./state.js";

export interface ApiRecord {
  drug: string;
  sensitivity: string;
  matrix: string;
  test: string;
  type: string;
  tolerance: string;
  mrl: string;
  species: string;
  manufacturer: string;
  url: string;
  below_tolerance: boolean | null;
}

export interface RecordsResponse {
  rows: ApiRecord[];
  total: number;
  applied_filters: Record<string, string | boolean | null>;
}

export interface Dictionaries {
  drugs: string[];
  tests: string[];
  matrices: string[];
}

export class ApiError extends Error {
  constructor(message: string, public readonly status: number | null, public readonly fields: string[] = []) {
    super(message);
  }
}

async function getJson<T>(url: string, signal?: AbortSignal): Promise<T> {
  let resp: Response;
  try {
    resp = await fetch(url, { signal });
  } catch (err) {
    if (err instanceof DOMException && err.name === "AbortError") throw err;
    throw new ApiError("service unreachable", null);
  }
  if (resp.status === 400) {
    const body = await resp.json().catch(() => ({}));
    throw new ApiError("invalid query", 400, body.fields ?? []);
  }
  if (!resp.ok) throw new ApiError(`HTTP ${resp.status}`, resp.status);
  return (await resp.json()) as T;
}

export class RecordsClient {
  private inflight: AbortController | null = null;

  constructor(private readonly base: string = "") {}

  /** Latest-wins: starting a new search aborts the previous request. */
  async search(state: SearchState): Promise<RecordsResponse> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    const url = `${this.base}/records?${toApiParams(state).toString()}`;
    try {
      return await getJson<RecordsResponse>(url, controller.signal);
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }

  dictionaries(): Promise<Dictionaries> {
    return getJson<Dictionaries>(`${this.base}/dictionaries`);
  }
}
