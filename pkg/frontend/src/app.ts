// View state machine: compose a session, watch it process, review the
// tables and ask follow-up questions.

import type { ApiClient, ImageInput, TableSetJson } from "./api.js";
import { ApiError } from "./api.js";
import { announcePolite, ensureLiveRegions } from "./announce.js";
import { TableView, type CellAddress } from "./tableView.js";

export type Phase = "composing" | "processing" | "reviewing";

export interface ViewState {
  sessionId: string | null;
  phase: Phase;
  focused: CellAddress | null;
  pendingQuestion: string;
}

export interface AppOptions {
  pollIntervalMs?: number;
  pollBackoff?: number;
  maxPollIntervalMs?: number;
}

export class App {
  readonly state: ViewState = {
    sessionId: null,
    phase: "composing",
    focused: null,
    pendingQuestion: "",
  };

  private view: TableView | null = null;
  private lastAnnouncedProgress = -1;
  private readonly pollIntervalMs: number;
  private readonly pollBackoff: number;
  private readonly maxPollIntervalMs: number;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    options: AppOptions = {},
  ) {
    this.pollIntervalMs = options.pollIntervalMs ?? 500;
    this.pollBackoff = options.pollBackoff ?? 1.5;
    this.maxPollIntervalMs = options.maxPollIntervalMs ?? 5000;
    ensureLiveRegions(this.root.ownerDocument);
  }

  start(): void {
    this.renderComposing();
  }

  // -- composing -------------------------------------------------------------

  private renderComposing(): void {
    this.state.phase = "composing";
    this.root.textContent = "";

    const heading = document.createElement("h1");
    heading.textContent = "Describe image generation results";
    this.root.appendChild(heading);

    const form = document.createElement("form");
    form.noValidate = true;

    form.appendChild(this.labelled("prompt-input", "Prompt", () => {
      const input = document.createElement("textarea");
      input.id = "prompt-input";
      input.rows = 2;
      return input;
    }));

    form.appendChild(this.labelled("paths-input", "Image paths or URLs, one per line", () => {
      const input = document.createElement("textarea");
      input.id = "paths-input";
      input.rows = 4;
      return input;
    }));

    form.appendChild(this.labelled("files-input", "Or upload image files", () => {
      const input = document.createElement("input");
      input.id = "files-input";
      input.type = "file";
      input.multiple = true;
      input.accept = "image/png,image/jpeg,image/webp";
      return input;
    }));

    const submit = document.createElement("button");
    submit.type = "submit";
    submit.textContent = "Describe images";
    form.appendChild(submit);

    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.handleCompose(form);
    });
    this.root.appendChild(form);
  }

  private labelled(id: string, text: string, make: () => HTMLElement): HTMLElement {
    const wrapper = document.createElement("p");
    const label = document.createElement("label");
    label.htmlFor = id;
    label.textContent = text;
    wrapper.appendChild(label);
    const control = make();
    wrapper.appendChild(control);
    const error = document.createElement("span");
    error.id = `${id}-error`;
    error.className = "field-error";
    error.hidden = true;
    wrapper.appendChild(error);
    return wrapper;
  }

  private setFieldError(id: string, message: string | null): void {
    const control = this.root.querySelector<HTMLElement>(`#${id}`);
    const error = this.root.querySelector<HTMLElement>(`#${id}-error`);
    if (!control || !error) return;
    if (message) {
      error.textContent = message;
      error.hidden = false;
      control.setAttribute("aria-invalid", "true");
      control.setAttribute("aria-describedby", error.id);
    } else {
      error.textContent = "";
      error.hidden = true;
      control.removeAttribute("aria-invalid");
      control.removeAttribute("aria-describedby");
    }
  }

  private async handleCompose(form: HTMLFormElement): Promise<void> {
    const prompt = (form.querySelector("#prompt-input") as HTMLTextAreaElement).value;
    const pathsText = (form.querySelector("#paths-input") as HTMLTextAreaElement).value;
    const filesInput = form.querySelector("#files-input") as HTMLInputElement;

    const images: ImageInput[] = [];
    for (const line of pathsText.split("\n")) {
      const ref = line.trim();
      if (!ref) continue;
      images.push(ref.startsWith("http://") || ref.startsWith("https://") ? { url: ref } : { path: ref });
    }
    for (const file of Array.from(filesInput.files ?? [])) {
      images.push({ filename: file.name, content_base64: await fileToBase64(file) });
    }

    let valid = true;
    if (!prompt.trim()) {
      this.setFieldError("prompt-input", "Enter the prompt used to generate the images.");
      valid = false;
    } else {
      this.setFieldError("prompt-input", null);
    }
    if (images.length === 0) {
      this.setFieldError("paths-input", "Add at least one image (path, URL or upload).");
      valid = false;
    } else {
      this.setFieldError("paths-input", null);
    }
    if (!valid) return;

    try {
      const created = await this.api.createSession(prompt, images);
      await this.startSession(created.session_id);
    } catch (error) {
      const detail = error instanceof ApiError ? describeApiError(error) : String(error);
      this.setFieldError("prompt-input", detail);
    }
  }

  // -- processing --------------------------------------------------------------

  async startSession(sessionId: string): Promise<void> {
    this.state.sessionId = sessionId;
    this.state.phase = "processing";
    this.lastAnnouncedProgress = -1;

    this.root.textContent = "";
    const heading = document.createElement("h1");
    heading.textContent = "Processing images";
    this.root.appendChild(heading);
    const progress = document.createElement("p");
    progress.id = "progress-line";
    progress.textContent = "Starting…";
    this.root.appendChild(progress);

    let interval = this.pollIntervalMs;
    for (;;) {
      const result = await this.api.getTables(sessionId);
      if (result.ready) {
        this.renderReviewing(result.tables);
        return;
      }
      const { rows_completed: done, rows_total: total, status, error } = result.progress;
      if (status === "failed") {
        progress.textContent = `Processing failed: ${error ?? "unknown error"}`;
        return;
      }
      const line = total
        ? `${done} of ${total} rows complete`
        : `Working (${done} rows complete)`;
      progress.textContent = line;
      if (done !== this.lastAnnouncedProgress) {
        this.lastAnnouncedProgress = done;
        announcePolite(line, this.root.ownerDocument);
      }
      await sleep(interval);
      interval = Math.min(interval * this.pollBackoff, this.maxPollIntervalMs);
    }
  }

  // -- reviewing ---------------------------------------------------------------

  renderReviewing(tables: TableSetJson): void {
    this.state.phase = "reviewing";
    this.root.textContent = "";

    const heading = document.createElement("h1");
    heading.textContent = `Results for: ${tables.prompt}`;
    this.root.appendChild(heading);

    const tablesContainer = document.createElement("div");
    this.root.appendChild(tablesContainer);
    this.view = new TableView(tablesContainer, tables, (address) => {
      this.state.focused = address;
    });
    this.view.render();

    this.root.appendChild(this.buildQuestionForm());
    announcePolite("Results ready.", this.root.ownerDocument);
    this.view.focusSummaryHeading();
  }

  private buildQuestionForm(): HTMLElement {
    const form = document.createElement("form");
    form.className = "question-form";
    form.noValidate = true;
    form.setAttribute("aria-label", "Ask your own question");

    form.appendChild(this.labelled("question-input", "Ask a question about all images", () => {
      const input = document.createElement("input");
      input.id = "question-input";
      input.type = "text";
      return input;
    }));

    const hostWrapper = document.createElement("p");
    const hostLabel = document.createElement("label");
    hostLabel.htmlFor = "host-table";
    hostLabel.textContent = "Add the answer to table";
    hostWrapper.appendChild(hostLabel);
    const host = document.createElement("select");
    host.id = "host-table";
    for (const [value, text] of [
      ["content", "Visual content"],
      ["verification", "Prompt verification"],
      ["style", "Visual style & errors"],
    ]) {
      const option = document.createElement("option");
      option.value = value;
      option.textContent = text;
      host.appendChild(option);
    }
    hostWrapper.appendChild(host);
    form.appendChild(hostWrapper);

    const submit = document.createElement("button");
    submit.type = "submit";
    submit.textContent = "Ask";
    form.appendChild(submit);

    const notice = document.createElement("p");
    notice.id = "question-notice";
    notice.setAttribute("role", "status");
    form.appendChild(notice);

    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submitQuestion();
    });
    return form;
  }

  async submitQuestion(): Promise<void> {
    const input = this.root.querySelector<HTMLInputElement>("#question-input");
    const host = this.root.querySelector<HTMLSelectElement>("#host-table");
    const notice = this.root.querySelector<HTMLElement>("#question-notice");
    if (!input || !host || !this.state.sessionId || !this.view) return;

    const text = input.value;
    this.state.pendingQuestion = text;
    if (!text.trim()) {
      this.setFieldError("question-input", "Type a question first.");
      return;
    }
    this.setFieldError("question-input", null);

    try {
      const row = await this.api.askQuestion(this.state.sessionId, text, host.value);
      const address = this.view.appendQuestionRow(row);
      this.state.focused = address;
      this.state.pendingQuestion = "";
      input.value = "";
      if (notice) notice.textContent = "";
      announcePolite(
        `Answer added to the ${host.selectedOptions[0]?.textContent ?? host.value} table: ${row.summary?.text ?? ""}`,
        this.root.ownerDocument,
      );
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        // Still processing: tell the user, keep their question in the input.
        if (notice) notice.textContent = "Still processing the images; try again shortly.";
        return;
      }
      const detail = error instanceof ApiError ? describeApiError(error) : String(error);
      this.setFieldError("question-input", detail);
    }
  }
}

function describeApiError(error: ApiError): string {
  const body = error.body as { detail?: { error?: string; message?: string } } | null;
  const detail = body?.detail;
  if (detail?.message) return detail.message;
  if (detail?.error) return detail.error;
  return error.message;
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

function fileToBase64(file: File): Promise<string> {
  return new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onerror = () => reject(reader.error);
    reader.onload = () => {
      const url = String(reader.result);
      resolve(url.slice(url.indexOf(",") + 1)); // strip the data: prefix
    };
    reader.readAsDataURL(file);
  });
}
