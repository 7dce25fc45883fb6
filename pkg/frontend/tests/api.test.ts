/**
 * Contract tests: the client's field lists must match the service's
 * machine-readable payload schema exactly, so every number the UI can
 * show is traceable to a documented payload field.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it, vi, afterEach } from "vitest";

import {
  ApiClient,
  ApiError,
  EVAL_STATS_FIELDS,
  FLAGS_FIELDS,
  POST_EDIT_FIELDS,
  QUEUE_NEXT_FIELDS,
  SANITY_FLAG_FIELDS,
  STATS_FIELDS,
  TASK_FIELDS,
} from "../src/api.js";

const here = dirname(fileURLToPath(import.meta.url));
const schemaPath = join(here, "..", "..", "src", "pedal", "schemas", "api_schema.json");
const schema = JSON.parse(readFileSync(schemaPath, "utf-8"));

const endpointProps = (name: string): string[] =>
  Object.keys(schema.endpoints[name].properties).sort();

const definitionProps = (name: string): string[] =>
  Object.keys(schema.definitions[name].properties).sort();

describe("payload contracts against the schema file", () => {
  it("task fields match", () => {
    expect([...TASK_FIELDS].sort()).toEqual(definitionProps("task"));
  });

  it("queue/next fields match", () => {
    expect([...QUEUE_NEXT_FIELDS].sort()).toEqual(endpointProps("queue_next"));
  });

  it("post-edit fields match", () => {
    expect([...POST_EDIT_FIELDS].sort()).toEqual(endpointProps("post_edit"));
  });

  it("stats fields match", () => {
    expect([...STATS_FIELDS].sort()).toEqual(endpointProps("stats"));
  });

  it("eval-stats fields match", () => {
    expect([...EVAL_STATS_FIELDS].sort()).toEqual(definitionProps("eval_stats"));
  });

  it("sanity-flag fields match", () => {
    expect([...SANITY_FLAG_FIELDS].sort()).toEqual(definitionProps("sanity_flag"));
  });

  it("flags fields match", () => {
    expect([...FLAGS_FIELDS].sort()).toEqual(endpointProps("flags"));
  });
});

describe("client request behavior", () => {
  afterEach(() => vi.unstubAllGlobals());

  it("raises ApiError with the status and detail", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () =>
        new Response(JSON.stringify({ detail: "no active session" }), { status: 409 }),
      ),
    );
    const client = new ApiClient("http://x");
    await expect(client.stats()).rejects.toMatchObject({
      status: 409,
      message: "no active session",
    });
    await expect(client.stats()).rejects.toBeInstanceOf(ApiError);
  });

  it("sends the bearer token when configured", async () => {
    const spy = vi.fn(async () => new Response("{}", { status: 200 }));
    vi.stubGlobal("fetch", spy);
    await new ApiClient("http://x", "sesam").stats();
    const [, init] = spy.mock.calls[0] as unknown as [string, RequestInit];
    expect((init.headers as Record<string, string>)["Authorization"]).toBe("Bearer sesam");
  });

  it("posts the edited text and editor id", async () => {
    const spy = vi.fn(async () => new Response("{}", { status: 200 }));
    vi.stubGlobal("fetch", spy);
    await new ApiClient("http://x").submitPostEdit(7, "neuer text", "kim");
    const [url, init] = spy.mock.calls[0] as unknown as [string, RequestInit];
    expect(url).toBe("http://x/segments/7/postedit");
    expect(JSON.parse(init.body as string)).toEqual({
      edited_text: "neuer text",
      editor_id: "kim",
    });
  });
});
