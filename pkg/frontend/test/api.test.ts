import { afterEach, describe, expect, it, vi } from "vitest";

import {
  ApiError,
  EmbedClient,
  SupersededError,
  fetchAllPoints,
  fetchSchema,
} from "../src/api";
import type { EmbeddedPoint } from "../src/api";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function makePoints(n: number): EmbeddedPoint[] {
  return Array.from({ length: n }, (_, i) => ({
    row: i,
    x: i * 0.5,
    y: -i,
    cluster: i % 3,
  }));
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("fetchAllPoints", () => {
  it("walks every page and preserves row order", async () => {
    const all = makePoints(120);
    const pageSize = 50;
    const calls: string[] = [];
    vi.stubGlobal(
      "fetch",
      vi.fn(async (url: string) => {
        calls.push(url);
        const page = Number(new URL(url, "http://x").searchParams.get("page"));
        const start = page * pageSize;
        return jsonResponse({
          total: all.length,
          page,
          page_size: pageSize,
          pages: Math.ceil(all.length / pageSize),
          points: all.slice(start, start + pageSize),
        });
      }),
    );

    const points = await fetchAllPoints();
    expect(points).toHaveLength(120);
    expect(points.map((p) => p.row)).toEqual(all.map((p) => p.row));
    expect(calls).toHaveLength(3);
  });

  it("handles an empty cohort", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () =>
        jsonResponse({ total: 0, page: 0, page_size: 50, pages: 1, points: [] }),
      ),
    );
    expect(await fetchAllPoints()).toEqual([]);
  });

  it("propagates a service error as ApiError", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () => jsonResponse({ code: "no-artifact", detail: "no artifact is loaded" }, 503)),
    );
    const err = await fetchAllPoints().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(503);
    expect(err.code).toBe("no-artifact");
  });
});

describe("error mapping", () => {
  it("keeps code, detail and fields from a 422 body", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () =>
        jsonResponse(
          { code: "unknown-field", detail: "unknown fields: bogus", fields: ["bogus"] },
          422,
        ),
      ),
    );
    const err = await fetchSchema().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.code).toBe("unknown-field");
    expect(err.fields).toEqual(["bogus"]);
    expect(err.message).toContain("bogus");
  });

  it("falls back to a generic error for a non-json body", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () => new Response("boom", { status: 500 })),
    );
    const err = await fetchSchema().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.code).toBe("http-error");
    expect(err.status).toBe(500);
  });

  it("maps a rejected fetch to a network ApiError", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () => {
        throw new TypeError("fetch failed");
      }),
    );
    const err = await fetchSchema().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(0);
    expect(err.code).toBe("network");
  });
});

describe("EmbedClient", () => {
  function manualFetch() {
    // resolves only when released, and honors the abort signal like real fetch
    const pending: { release: () => void }[] = [];
    const fn = vi.fn((url: string, init?: RequestInit) => {
      void url;
      return new Promise<Response>((resolve, reject) => {
        init?.signal?.addEventListener("abort", () =>
          reject(new DOMException("The operation was aborted.", "AbortError")),
        );
        pending.push({
          release: () =>
            resolve(
              jsonResponse({
                x: 1,
                y: 2,
                cluster: 0,
                responsibilities: [1],
                profile: null,
                warnings: [],
                echo: JSON.parse(String(init?.body ?? "null")),
              }),
            ),
        });
      });
    });
    return { fn, pending };
  }

  it("aborts the in-flight request when a newer one arrives", async () => {
    const { fn, pending } = manualFetch();
    vi.stubGlobal("fetch", fn);
    const client = new EmbedClient();

    const first = client.submit({ age: 1 });
    const second = client.submit({ age: 2 });
    expect(pending).toHaveLength(2);
    pending.forEach((p) => p.release());

    await expect(first).rejects.toBeInstanceOf(SupersededError);
    const result = (await second) as { echo?: { age: number } };
    expect(result.echo?.age).toBe(2);
  });

  it("submits normally again after the winner settles", async () => {
    const { fn, pending } = manualFetch();
    vi.stubGlobal("fetch", fn);
    const client = new EmbedClient();

    const first = client.submit({ age: 1 });
    pending[0].release();
    await first;

    const second = client.submit({ age: 3 });
    pending[1].release();
    const result = (await second) as { echo?: { age: number } };
    expect(result.echo?.age).toBe(3);
  });

  it("turns a 422 into an ApiError with field names", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () =>
        jsonResponse(
          { code: "type-error", detail: "age: expected a number, got str", fields: ["age"] },
          422,
        ),
      ),
    );
    const err = await new EmbedClient().submit({ age: "x" }).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(422);
    expect(err.fields).toEqual(["age"]);
  });

  it("maps a dead server to a network ApiError, not Superseded", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () => {
        throw new TypeError("fetch failed");
      }),
    );
    const err = await new EmbedClient().submit({ age: 1 }).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.code).toBe("network");
  });
});
