import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, SolveQueue } from "../src/api";

interface Call {
  url: string;
  init?: RequestInit;
}

function stubClient(status: number, body: unknown): { client: ApiClient; calls: Call[] } {
  const calls: Call[] = [];
  const client = new ApiClient("http://svc:1234/", async (url, init) => {
    calls.push({ url, init });
    return new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });
  });
  return { client, calls };
}

describe("ApiClient", () => {
  it("builds the session URL and posts the image body", async () => {
    const { client, calls } = stubClient(201, {
      v: 1, session: "abc", width: 8, height: 8, superpixels: 4, boundaries: [],
    });
    const info = await client.createSession(new Uint8Array([1, 2, 3]), 40);
    expect(info.session).toBe("abc");
    expect(calls[0].url).toBe("http://svc:1234/sessions?superpixels=40");
    expect(calls[0].init?.method).toBe("POST");
  });

  it("sends versioned solve requests", async () => {
    const { client, calls } = stubClient(200, {
      v: 1, labels: [1, 0], binary: [1, 0],
      energy: { l1: 0, l2: 0, l1plus: 0 }, solver: "qp", threshold: 0.3,
    });
    const doc = await client.solve("abc", "qp", 0.3);
    expect(doc.solver).toBe("qp");
    expect(calls[0].url).toBe("http://svc:1234/sessions/abc/solve");
    expect(JSON.parse(String(calls[0].init?.body)))
      .toEqual({ v: 1, method: "qp", threshold: 0.3 });
  });

  it("surfaces service errors with status and message", async () => {
    const { client } = stubClient(404, { v: 1, error: "unknown session 'abc'" });
    const err = await client.stats("abc").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(404);
    expect(err.message).toBe("unknown session 'abc'");
  });

  it("falls back to a generic message on non-JSON error bodies", async () => {
    const client = new ApiClient(
      "http://svc:1234",
      async () => new Response("boom", { status: 500 }),
    );
    const err = await client.superpixels("abc").catch((e) => e);
    expect(err.status).toBe(500);
    expect(err.message).toContain("500");
  });

  it("builds label PNG URLs", () => {
    const client = new ApiClient("http://svc:1234");
    expect(client.labelsPngUrl("s", "gc", "binary", 0.3)).toBe(
      "http://svc:1234/sessions/s/labels?method=gc&view=binary&threshold=0.3",
    );
    expect(client.labelsPngUrl("s", "qp", "continuous")).toBe(
      "http://svc:1234/sessions/s/labels?method=qp&view=continuous",
    );
  });
});

describe("SolveQueue", () => {
  function deferred<T>() {
    let resolve!: (value: T) => void;
    const promise = new Promise<T>((res) => { resolve = res; });
    return { promise, resolve };
  }

  it("replaces a queued job when a newer one arrives", async () => {
    const queue = new SolveQueue();
    const gate = deferred<string>();
    const ran: string[] = [];
    const job = (name: string, result: Promise<string>) => () => {
      ran.push(name);
      return result;
    };
    const first = queue.submit(job("first", gate.promise));
    const second = queue.submit(job("second", Promise.resolve("second")));
    const third = queue.submit(job("third", Promise.resolve("third")));
    expect(queue.busy).toBe(true);
    await expect(second).resolves.toBeUndefined();   // replaced before running
    gate.resolve("first");
    await expect(first).resolves.toBe("first");
    await expect(third).resolves.toBe("third");
    expect(ran).toEqual(["first", "third"]);
    expect(queue.busy).toBe(false);
  });

  it("propagates job failures to the right caller", async () => {
    const queue = new SolveQueue();
    const bad = queue.submit(() => Promise.reject(new Error("nope")));
    await expect(bad).rejects.toThrow("nope");
    await expect(queue.submit(() => Promise.resolve(7))).resolves.toBe(7);
  });
});
