import { beforeEach, describe, expect, it } from "vitest";

import { ApiError, type ApiClient, type ImageInput, type ProgressJson } from "../src/api.js";
import { App } from "../src/app.js";
import { STATUS_REGION_ID } from "../src/announce.js";
import { loadQuestionRow, loadTables } from "./fixtures.js";

function tick(ms = 5): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

class FakeApi implements ApiClient {
  createCalls: { prompt: string; images: ImageInput[] }[] = [];
  askCalls: { text: string; hostTable: string }[] = [];
  pendingPolls = 2;
  askError: ApiError | null = null;

  async createSession(prompt: string, images: ImageInput[]) {
    this.createCalls.push({ prompt, images });
    return { session_id: "sess-test" };
  }

  async getStatus(sessionId: string): Promise<ProgressJson> {
    return { session_id: sessionId, status: "extracting", rows_completed: 0, rows_total: 14 };
  }

  async getTables(sessionId: string) {
    if (this.pendingPolls > 0) {
      this.pendingPolls -= 1;
      const progress: ProgressJson = {
        session_id: sessionId,
        status: "extracting",
        rows_completed: 14 - this.pendingPolls * 7,
        rows_total: 14,
      };
      return { ready: false as const, progress };
    }
    return { ready: true as const, tables: loadTables() };
  }

  async askQuestion(_sessionId: string, text: string, hostTable: string) {
    if (this.askError) throw this.askError;
    this.askCalls.push({ text, hostTable });
    return loadQuestionRow();
  }
}

function makeApp(api: ApiClient) {
  document.body.innerHTML = "<main id='app'></main>";
  const root = document.getElementById("app")!;
  return new App(root, api, { pollIntervalMs: 1, maxPollIntervalMs: 2 });
}

async function reviewingApp(api = new FakeApi()) {
  const app = makeApp(api);
  api.pendingPolls = 0;
  await app.startSession("sess-test");
  await tick();
  return { app, api };
}

describe("composing", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("shows field errors and sends nothing when inputs are invalid", async () => {
    const api = new FakeApi();
    const app = makeApp(api);
    app.start();
    const form = document.querySelector("form")!;
    form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
    await tick();
    expect(api.createCalls.length).toBe(0);
    const promptError = document.getElementById("prompt-input-error")!;
    expect(promptError.hidden).toBe(false);
    const input = document.getElementById("prompt-input")!;
    expect(input.getAttribute("aria-invalid")).toBe("true");
  });

  it("posts prompt and image refs, then enters processing", async () => {
    const api = new FakeApi();
    const app = makeApp(api);
    app.start();
    (document.getElementById("prompt-input") as HTMLTextAreaElement).value = "A young chef";
    (document.getElementById("paths-input") as HTMLTextAreaElement).value =
      "img1.png\nhttps://example.test/img2.png\n";
    const form = document.querySelector("form")!;
    form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
    await tick(25);
    expect(api.createCalls.length).toBe(1);
    expect(api.createCalls[0].images).toEqual([
      { path: "img1.png" },
      { url: "https://example.test/img2.png" },
    ]);
    expect(app.state.phase).toBe("reviewing");
  });
});

describe("processing", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("announces row progress politely and finishes on the summary heading", async () => {
    const api = new FakeApi();
    api.pendingPolls = 2;
    const app = makeApp(api);
    const promise = app.startSession("sess-test");
    await tick(2);
    const progressLine = document.getElementById("progress-line");
    expect(progressLine?.textContent).toMatch(/rows complete/);
    await promise;
    await tick();
    expect(app.state.phase).toBe("reviewing");
    expect(document.activeElement?.id).toBe("summary-title");
    const status = document.getElementById(STATUS_REGION_ID)!;
    expect(status.textContent).toBe("Results ready.");
  });
});

describe("asking questions", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("appends the answered row and moves focus to its summary cell", async () => {
    const { app, api } = await reviewingApp();
    const input = document.getElementById("question-input") as HTMLInputElement;
    input.value = "What color is the background?";
    await app.submitQuestion();
    await tick();

    expect(api.askCalls).toEqual([
      { text: "What color is the background?", hostTable: "content" },
    ]);
    const content = document.querySelector("section[data-table-key='content'] tbody")!;
    expect(content.lastElementChild!.textContent).toContain("What color is the background?");
    expect(document.activeElement!.textContent).toContain("Image 2 is black");
    expect(app.state.focused?.column).toBe(1);
    expect(input.value).toBe("");
    const status = document.getElementById(STATUS_REGION_ID)!;
    expect(status.textContent).toContain("Image 2 is black");
  });

  it("rejects empty questions inline without a request", async () => {
    const { app, api } = await reviewingApp();
    const input = document.getElementById("question-input") as HTMLInputElement;
    input.value = "   ";
    await app.submitQuestion();
    expect(api.askCalls.length).toBe(0);
    expect(document.getElementById("question-input-error")!.hidden).toBe(false);
  });

  it("keeps the question and shows a notice on 409", async () => {
    const api = new FakeApi();
    api.askError = new ApiError("conflict", 409, {
      detail: { error: "SessionNotReady", status: "extracting" },
    });
    const { app } = await reviewingApp(api);
    const input = document.getElementById("question-input") as HTMLInputElement;
    input.value = "Is it done yet?";
    await app.submitQuestion();
    expect(input.value).toBe("Is it done yet?");
    expect(app.state.pendingQuestion).toBe("Is it done yet?");
    expect(document.getElementById("question-notice")!.textContent).toMatch(/still processing/i);
  });

  it("question input is a regular tab stop", async () => {
    await reviewingApp();
    const input = document.getElementById("question-input")!;
    expect(input.getAttribute("tabindex")).toBeNull();
    (input as HTMLInputElement).focus();
    expect(document.activeElement).toBe(input);
  });
});
