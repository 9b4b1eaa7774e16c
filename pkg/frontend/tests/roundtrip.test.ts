// @vitest-environment node
//
// End-to-end round trip against the real annotation service: spans drawn
// through the label model, submitted over HTTP, exported, and re-imported
// must equal the expert annotation of the worked example.

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ServiceClient } from "../src/api";
import { SpanPayload, applySelection, fromSpans, toSpans } from "../src/labels";
import { Kind } from "../src/palette";
import { tokenize } from "../src/tokens";

const TEXT =
  "We also collect contact information that you provide if you upload, " +
  "sync or import this information (such as an address book) from a device.";

function spanOf(phrase: string, kind: Kind): SpanPayload {
  const start = TEXT.indexOf(phrase);
  if (start < 0) throw new Error(`phrase not found: ${phrase}`);
  return { start, end: start + phrase.length, kind };
}

const EXPERT_SPANS: SpanPayload[] = [
  spanOf("We", "recipient"),
  spanOf("contact information", "attribute"),
  spanOf("you", "sender"),
  spanOf(
    "if you upload, sync or import this information (such as an address book) from a device",
    "tp",
  ),
];

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;

function excerptDef(eid: string, screeningIndex: number | null) {
  const def: Record<string, unknown> = {
    excerpt_id: eid,
    text: TEXT,
    is_screening: screeningIndex !== null,
    screening_index: screeningIndex,
  };
  if (screeningIndex !== null) {
    def.gold = {
      annotator_id: "expert",
      excerpt_id: eid,
      spans: EXPERT_SPANS,
      submitted_at: null,
    };
  }
  return def;
}

const TASK = {
  task_id: "t1",
  instructions_text: "Highlight each flow parameter.",
  excerpts: [
    excerptDef("s1", 1),
    excerptDef("s2", 2),
    excerptDef("s3", 3),
    excerptDef("w1", null),
  ],
  screening_ids: ["s1", "s2", "s3"],
  work_ids: ["w1"],
  excerpts_per_worker: 1,
  seed: 1,
};

let server: ChildProcess;
let storeDir: string;

async function waitForServer(): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt++) {
    try {
      const response = await fetch(`${BASE}/tasks/none/export`);
      if (response.status === 404) return;
    } catch {
      // not listening yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error("annotation service did not start");
}

beforeAll(async () => {
  storeDir = mkdtempSync(join(tmpdir(), "ci-ui-test-"));
  server = spawn(
    "python3",
    ["-m", "cipolicy.cli", "serve", "--store", join(storeDir, "store.jsonl"),
     "--port", String(PORT)],
    { stdio: "ignore" },
  );
  await waitForServer();
});

afterAll(() => {
  server?.kill();
  rmSync(storeDir, { recursive: true, force: true });
});

describe("UI round trip through the service", () => {
  it("reproduces the expert annotation after submit, export, re-import", async () => {
    const client = new ServiceClient(BASE);
    await client.createTask(TASK);
    const session = await client.openSession("t1");
    const token = session.session_token;

    // draw the expert spans token by token, as the UI does
    const tokens = tokenize(TEXT);
    let drawn = new Map();
    const asLabels = fromSpans(EXPERT_SPANS, tokens);
    for (const [index, kind] of asLabels) {
      drawn = applySelection(drawn, index, index, kind);
    }
    const payload = toSpans(drawn, tokens);

    for (;;) {
      const item = await client.nextItem(token);
      if (item.done) break;
      const result = await client.submit(token, item.excerpt_id!, payload);
      expect(result.status).toBe("accepted");
    }

    const exported = await client.exportTask("t1");
    const work = exported.responses.filter((r) => r.excerpt_id === "w1");
    expect(work).toHaveLength(1);

    // the submitted spans equal the expert standoff annotation
    const sort = (spans: SpanPayload[]) =>
      [...spans].sort((a, b) => a.start - b.start);
    expect(sort(work[0].spans)).toEqual(sort(EXPERT_SPANS));
    expect(sort(exported.gold.s1.spans)).toEqual(sort(EXPERT_SPANS));

    // re-importing and re-exporting the labels is a fixed point
    const reimported = fromSpans(work[0].spans, tokens);
    expect(reimported).toEqual(drawn);
    expect(toSpans(reimported, tokens)).toEqual(payload);
  });

  it("renders the screening-failure outcome for a below-threshold worker", async () => {
    const client = new ServiceClient(BASE);
    const session = await client.openSession("t1");
    const token = session.session_token;
    let last = null as { status: string } | null;
    for (const eid of ["s1", "s2", "s3"]) {
      last = await client.submit(token, eid, []);
    }
    expect(last!.status).toBe("screening_failed");
    await expect(client.nextItem(token)).rejects.toMatchObject({
      code: "screening_failed",
      status: 409,
    });
  });
});
