import axe from "axe-core";
import { describe, expect, it } from "vitest";

import { App } from "../src/app.js";
import type { ApiClient } from "../src/api.js";
import { loadQuestionRow, loadTables } from "./fixtures.js";

const api: ApiClient = {
  createSession: async () => ({ session_id: "sess-test" }),
  getStatus: async () => ({
    session_id: "sess-test", status: "ready", rows_completed: 14, rows_total: 14,
  }),
  getTables: async () => ({ ready: true as const, tables: loadTables() }),
  askQuestion: async () => loadQuestionRow(),
};

async function runAxe() {
  const results = await axe.run(document.body, {
    rules: {
      // needs a layout engine; not meaningful under jsdom
      "color-contrast": { enabled: false },
    },
  });
  return results;
}

describe("accessibility audit", () => {
  it("reviewing view has zero critical violations", async () => {
    document.body.innerHTML = "<main id='app'></main>";
    const app = new App(document.getElementById("app")!, api, { pollIntervalMs: 1 });
    await app.startSession("sess-test");

    const results = await runAxe();
    const critical = results.violations.filter((v) => v.impact === "critical");
    expect(critical.map((v) => `${v.id}: ${v.nodes.length} nodes`)).toEqual([]);
    // also fail loudly on anything serious to keep the bar high
    const serious = results.violations.filter((v) => v.impact === "serious");
    expect(serious.map((v) => `${v.id}: ${v.nodes.length} nodes`)).toEqual([]);
  }, 30_000);

  it("composing view has zero critical violations", async () => {
    document.body.innerHTML = "<main id='app'></main>";
    const app = new App(document.getElementById("app")!, api, { pollIntervalMs: 1 });
    app.start();

    const results = await runAxe();
    const critical = results.violations.filter((v) => v.impact === "critical");
    expect(critical.map((v) => `${v.id}: ${v.nodes.length} nodes`)).toEqual([]);
  }, 30_000);
});
