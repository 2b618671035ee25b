import { beforeEach, describe, expect, it } from "vitest";

import { TableView } from "../src/tableView.js";
import { loadQuestionRow, loadTables } from "./fixtures.js";

function press(key: string): KeyboardEvent {
  return new KeyboardEvent("keydown", { key, bubbles: true, cancelable: true });
}

function renderView() {
  document.body.innerHTML = "<main id='app'></main>";
  const container = document.getElementById("app")!;
  const view = new TableView(container, loadTables());
  view.render();
  return { view, container };
}

describe("table rendering", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("renders the four tables in order, summary first", () => {
    const { container } = renderView();
    const keys = Array.from(container.querySelectorAll("section[data-table-key]")).map(
      (section) => (section as HTMLElement).dataset.tableKey,
    );
    expect(keys).toEqual(["summary", "verification", "content", "style"]);
  });

  it("uses native two-header table semantics", () => {
    const { container } = renderView();
    for (const table of container.querySelectorAll("table")) {
      expect(table.querySelectorAll("thead th[scope='col']").length).toBeGreaterThan(0);
      for (const tr of table.querySelectorAll("tbody tr")) {
        expect(tr.querySelectorAll("th[scope='row']").length).toBe(1);
      }
    }
  });

  it("provides a table-skip navigation landmark", () => {
    const { container } = renderView();
    const nav = container.querySelector("nav[aria-label='Tables']");
    expect(nav).not.toBeNull();
    expect(nav!.querySelectorAll("a").length).toBe(4);
  });

  it("re-renders the same JSON to an identical DOM structure", () => {
    const { container } = renderView();
    const first = container.innerHTML;
    const view2 = new TableView(container, loadTables());
    view2.render();
    expect(container.innerHTML).toBe(first);
  });
});

describe("keyboard navigation", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("reaches every cell with arrows and table-skip keys", () => {
    const { container } = renderView();
    const allCells = container.querySelectorAll("tbody th[scope='row'], tbody td");
    const visited = new Set<Element>();

    const first = container.querySelector<HTMLElement>("tbody th[scope='row']")!;
    first.focus();
    visited.add(first);

    const sections = container.querySelectorAll("section[data-table-key]");
    for (let s = 0; s < sections.length; s++) {
      // walk the current table row-major
      for (;;) {
        for (;;) {
          const before = document.activeElement!;
          before.dispatchEvent(press("ArrowRight"));
          const after = document.activeElement!;
          if (after === before) break;
          visited.add(after);
        }
        document.activeElement!.dispatchEvent(press("Home"));
        visited.add(document.activeElement!);
        const beforeDown = document.activeElement!;
        beforeDown.dispatchEvent(press("ArrowDown"));
        if (document.activeElement === beforeDown) break; // last row: stay put
        visited.add(document.activeElement!);
      }
      document.activeElement!.dispatchEvent(press("PageDown"));
      visited.add(document.activeElement!);
    }

    expect(visited.size).toBe(allCells.length);
  });

  it("ArrowDown skips to the next row in the same column", () => {
    const { view } = renderView();
    view.focusCell({ table: "verification", row: 0, column: 2 });
    document.activeElement!.dispatchEvent(press("ArrowDown"));
    expect(view.focused).toEqual({ table: "verification", row: 1, column: 2 });
  });

  it("PageDown jumps to the next table", () => {
    const { view } = renderView();
    view.focusCell({ table: "summary", row: 0, column: 0 });
    document.activeElement!.dispatchEvent(press("PageDown"));
    expect(view.focused?.table).toBe("verification");
  });

  it("never intercepts Tab, so focus is not trapped", () => {
    const { view } = renderView();
    view.focusCell({ table: "summary", row: 0, column: 1 });
    const event = press("Tab");
    document.activeElement!.dispatchEvent(event);
    expect(event.defaultPrevented).toBe(false);
  });

  it("keeps exactly one tab stop per page of cells (roving tabindex)", () => {
    const { view, container } = renderView();
    view.focusCell({ table: "content", row: 2, column: 1 });
    const stops = container.querySelectorAll(
      "tbody th[scope='row'][tabindex='0'], tbody td[tabindex='0']",
    );
    expect(stops.length).toBe(1);
  });
});

describe("appending a custom question row", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("appends at the bottom of the host table and focuses the summary cell", () => {
    const { view, container } = renderView();
    const row = loadQuestionRow();
    const address = view.appendQuestionRow(row);

    const content = container.querySelector("section[data-table-key='content'] tbody")!;
    const last = content.lastElementChild!;
    expect(last.querySelector("th[scope='row']")!.textContent).toBe(
      "What color is the background?",
    );
    expect(address).toEqual({ table: "content", row: content.children.length - 1, column: 1 });
    expect(document.activeElement!.textContent).toContain("Image 2 is black");
  });

  it("marks rows with unavailable answers", () => {
    const tables = loadTables();
    tables.tables[1].rows[0].cells[2] = "unavailable";
    document.body.innerHTML = "<main id='app'></main>";
    const view = new TableView(document.getElementById("app")!, tables);
    view.render();
    const header = document.querySelector(
      "section[data-table-key='verification'] tbody th[scope='row']",
    )!;
    expect(header.textContent).toContain("unavailable");
  });
});
