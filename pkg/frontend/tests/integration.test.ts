/**
 * End-to-end against the real server: two editor clients on one chart
 * converge after quiescence, manual label placement survives re-layout,
 * and analysis results match the backend's golden values.
 */

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import WebSocket from "ws";

import { EditorClient, SocketFactory } from "../src/client.js";

const nodeSocketFactory: SocketFactory = (url, handlers) => {
  const ws = new WebSocket(url);
  ws.on("open", () => handlers.onOpen());
  ws.on("message", (data) => handlers.onMessage(data.toString()));
  ws.on("close", () => handlers.onClose());
  ws.on("error", () => undefined);
  return {
    send: (data: string) => ws.send(data),
    close: () => ws.close(),
  };
};

async function until<T>(probe: () => T | null | undefined | false, what: string,
                        timeoutMs = 15000): Promise<T> {
  const start = Date.now();
  for (;;) {
    const value = probe();
    if (value) return value;
    if (Date.now() - start > timeoutMs) throw new Error(`timed out waiting for ${what}`);
    await new Promise((r) => setTimeout(r, 40));
  }
}

let server: ChildProcess;
let port: number;
let url: string;

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "pchart-it-"));
  for (const name of ["toggle", "coin", "counter_bad"]) {
    const doc = readFileSync(join(__dirname, "fixtures", `${name}_chart.json`));
    writeFileSync(join(dir, `${name}.pchart`), doc);
  }
  port = 8400 + Math.floor(Math.random() * 400);
  url = `ws://127.0.0.1:${port}/ws`;
  server = spawn("python3", ["-m", "pchart.cli", "serve", dir, "--port", String(port)], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  for (let i = 0; i < 300; i++) {
    try {
      const r = await fetch(`http://127.0.0.1:${port}/charts`);
      if (r.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 50));
  }
  throw new Error("server did not come up");
}, 30000);

afterAll(() => {
  server?.kill();
});

function connect(chartId: string): EditorClient {
  const client = new EditorClient(url, chartId, nodeSocketFactory);
  client.connect();
  return client;
}

describe("multi-view synchronization", () => {
  it("two clients converge to identical display lists after an edit", async () => {
    const a = connect("toggle");
    const b = connect("toggle");
    await until(() => a.state.displayList && b.state.displayList, "initial state");

    a.dispatchEdit({ action: "AddState", parent: 0, kind: "basic", name: "Extra" });
    await until(
      () =>
        JSON.stringify(a.state.chart).includes("Extra") &&
        JSON.stringify(b.state.chart).includes("Extra"),
      "broadcast to both clients",
    );
    await until(() => a.state.lastSeq >= 4 && b.state.lastSeq >= 4, "quiescence");
    expect(a.state.displayList).toEqual(b.state.displayList);
    expect(a.state.chart).toEqual(b.state.chart);
    a.close();
    b.close();
  }, 30000);

  it("manual label drag persists across automatic re-layout", async () => {
    const a = connect("toggle");
    const b = connect("toggle");
    await until(() => a.state.displayList && b.state.displayList, "initial state");

    const manual = [420, 6, 30, 14];
    a.dispatchEdit({ action: "MoveLabelManual", connectionId: "3:0", rect: manual });
    const findLabel = (c: EditorClient) =>
      c.state.displayList?.items.find(
        (i) => i.kind === "text" && i.role === "label" && i.id === "lbl-3:0",
      ) as { rect: number[] } | undefined;
    await until(() => {
      const l = findLabel(b);
      return l && l.rect[0] === manual[0] ? l : false;
    }, "manual rect broadcast");

    // a later geometry edit triggers automatic placement for other labels,
    // but never moves the manual one
    const onBox = (a.state.displayList!.items.find(
      (i) => i.kind === "box" && (i as { stateId?: number }).stateId === 2,
    ) as { rect: number[] });
    const moved = [onBox.rect[0], onBox.rect[1] + 6, onBox.rect[2], onBox.rect[3]];
    a.dispatchEdit({ action: "MoveState", id: 2, box: moved });
    await until(() => {
      const box = b.state.displayList?.items.find(
        (i) => i.kind === "box" && (i as { stateId?: number }).stateId === 2,
      ) as { rect: number[] } | undefined;
      return box && box.rect[1] === moved[1] ? box : false;
    }, "move broadcast");
    const after = findLabel(b)!;
    expect(after.rect.slice(0, 2)).toEqual([420, 6]);
    a.close();
    b.close();
  }, 30000);
});

describe("analysis panel values", () => {
  it("compile shows the two guarded commands", async () => {
    const a = connect("toggle");
    await until(() => a.state.displayList, "initial state");
    a.requestAnalysis("compile");
    const result = await until(
      () => (a.state.analysis?.kind === "compile" ? a.state.analysis : false),
      "compile result",
    );
    expect(result.intermediate).toContain("[E, prio 1] r_root = 0 -> (r_root := 1)");
    expect(result.intermediate).toContain("[E, prio 1] r_root = 1 -> (r_root := 0)");
    a.close();
  }, 30000);

  it("query Pmax Goal on coin is 0.5", async () => {
    const a = connect("coin");
    await until(() => a.state.displayList, "initial state");
    a.requestAnalysis("query", { queryKind: "Pmax", target: "Goal" });
    const result = await until(
      () => (a.state.analysis?.kind === "query" ? a.state.analysis : false),
      "query result",
    );
    expect(result.result?.value).toBeCloseTo(0.5, 9);
    a.close();
  }, 30000);

  it("check on counter_bad reports the seeded violation", async () => {
    const a = connect("counter_bad");
    await until(() => a.state.displayList, "initial state");
    a.requestAnalysis("check");
    const result = await until(
      () => (a.state.analysis?.kind === "check" ? a.state.analysis : false),
      "check result",
    );
    expect(result.violations).toHaveLength(1);
    expect(result.violations![0].invariant).toBe("x <= 3");
    expect(result.violations![0].pre).toEqual({ r_root: 0, x: 3 });
    a.close();
  }, 30000);

  it("rejected edits surface as error banners and leave geometry alone", async () => {
    const a = connect("toggle");
    await until(() => a.state.displayList, "initial state");
    const before = a.state.displayList;
    a.dispatchEdit({ action: "EditLabel", id: 3, label: "E [x<" });
    await until(() => a.state.lastError, "error reply");
    expect(a.state.lastError).toContain("rejected");
    expect(a.state.displayList).toEqual(before);
    a.close();
  }, 30000);
});
