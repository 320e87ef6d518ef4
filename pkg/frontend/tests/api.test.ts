import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiError, RecordsClient } from "../src/api.js";
import { emptyState } from "../src/state.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("RecordsClient", () => {
  it("builds the /records URL from the search state", async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ rows: [], total: 0, applied_filters: {} }));
    vi.stubGlobal("fetch", fetchMock);
    const client = new RecordsClient("http://api");
    await client.search({ ...emptyState(), drug: "Amoxicillin", matrix: "Milk" });
    const url = new URL(fetchMock.mock.calls[0][0] as string);
    expect(url.pathname).toBe("/records");
    expect(url.searchParams.get("drug")).toBe("Amoxicillin");
    expect(url.searchParams.get("matrix")).toBe("Milk");
    expect(url.searchParams.get("limit")).toBe("25");
  });

  it("cancels the in-flight request when a new search starts", async () => {
    const settled: string[] = [];
    const fetchMock = vi.fn(
      (input: RequestInfo | URL, init?: RequestInit) =>
        new Promise<Response>((resolve, reject) => {
          const url = String(input);
          init?.signal?.addEventListener("abort", () => {
            settled.push(`aborted:${url}`);
            reject(new DOMException("aborted", "AbortError"));
          });
          if (url.includes("second")) {
            resolve(jsonResponse({ rows: [], total: 7, applied_filters: {} }));
          }
        })
    );
    vi.stubGlobal("fetch", fetchMock);
    const client = new RecordsClient("http://api");
    const first = client.search({ ...emptyState(), drug: "first" });
    const second = client.search({ ...emptyState(), drug: "second" });
    await expect(first).rejects.toHaveProperty("name", "AbortError");
    await expect(second).resolves.toHaveProperty("total", 7);
    expect(settled).toHaveLength(1);
    expect(settled[0]).toContain("first");
  });

  it("maps 400 responses to field errors", async () => {
    vi.stubGlobal("fetch", vi.fn(async () =>
      jsonResponse({ error: "invalid query parameter", fields: ["limit"] }, 400)
    ));
    const client = new RecordsClient("http://api");
    const err = await client.search(emptyState()).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(400);
    expect(err.fields).toEqual(["limit"]);
  });

  it("maps network failures to a retryable unreachable error", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => {
      throw new TypeError("fetch failed");
    }));
    const client = new RecordsClient("http://api");
    const err = await client.search(emptyState()).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBeNull();
  });
});
