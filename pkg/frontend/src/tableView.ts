// Accessible rendering of the table set: native two-header tables, a
// table-skip nav, and roving-tabindex arrow navigation so a keyboard user
// can skip rows and tables instead of reading every cell.

import type { AnswerCellJson, QuestionRowJson, TableJson, TableSetJson } from "./api.js";

export interface CellAddress {
  table: string;
  row: number; // 0-based within the table body
  column: number; // 0 = row header, 1.. = data cells
}

const UNAVAILABLE = "unavailable";

export function displayCellText(cell: AnswerCellJson): string {
  if (cell.error) return UNAVAILABLE;
  const value = cell.value;
  if (typeof value === "string") return value;
  if (value.length === 0) return "none detected";
  if (Array.isArray(value[0])) {
    return (value as [string, number][]).map(([choice]) => choice).join(", ");
  }
  return (value as string[]).join(", ");
}

export class TableView {
  private focusedAddress: CellAddress | null = null;

  constructor(
    private readonly container: HTMLElement,
    private tables: TableSetJson,
    private readonly onFocusChange?: (address: CellAddress) => void,
  ) {}

  get focused(): CellAddress | null {
    return this.focusedAddress;
  }

  render(): void {
    this.container.textContent = "";
    this.container.appendChild(this.buildNav());
    for (const table of this.tables.tables) {
      if (table.rows.length === 0) continue;
      this.container.appendChild(this.buildSection(table));
    }
    const first = this.cellAt({ table: this.tables.tables[0].key, row: 0, column: 0 });
    if (first) first.tabIndex = 0;
  }

  focusSummaryHeading(): void {
    const heading = this.container.querySelector<HTMLElement>("#summary-title");
    heading?.focus();
  }

  focusCell(address: CellAddress): void {
    const cell = this.cellAt(address);
    if (!cell) return;
    for (const other of this.container.querySelectorAll<HTMLElement>("th[scope='row'], td")) {
      other.tabIndex = -1;
    }
    cell.tabIndex = 0;
    cell.focus();
    this.focusedAddress = address;
    this.onFocusChange?.(address);
  }

  /** Append a freshly answered custom row and move focus to its summary cell. */
  appendQuestionRow(row: QuestionRowJson): CellAddress {
    const hostKey = row.host_table ?? "content";
    const table = this.tables.tables.find((t) => t.key === hostKey);
    if (!table) throw new Error(`no table with key ${hostKey}`);
    const rowJson = {
      row_id: row.question.question_id,
      header: row.question.text,
      cells: [row.summary?.text ?? "", ...row.cells.map(displayCellText)],
    };
    table.rows.push(rowJson);

    const body = this.container.querySelector(`section[data-table-key='${hostKey}'] tbody`);
    if (!body) throw new Error(`table ${hostKey} is not rendered`);
    body.appendChild(this.buildRow(rowJson, table.rows.length - 1));

    const address = { table: hostKey, row: table.rows.length - 1, column: 1 };
    this.focusCell(address);
    return address;
  }

  // -- construction -------------------------------------------------------

  private buildNav(): HTMLElement {
    const nav = document.createElement("nav");
    nav.setAttribute("aria-label", "Tables");
    const list = document.createElement("ul");
    for (const table of this.tables.tables) {
      if (table.rows.length === 0) continue;
      const item = document.createElement("li");
      const link = document.createElement("a");
      link.href = `#${table.key}-title`;
      link.textContent = table.title;
      link.addEventListener("click", (event) => {
        event.preventDefault();
        this.focusCell({ table: table.key, row: 0, column: 0 });
      });
      item.appendChild(link);
      list.appendChild(item);
    }
    nav.appendChild(list);
    return nav;
  }

  private buildSection(table: TableJson): HTMLElement {
    const section = document.createElement("section");
    section.className = "pg-table";
    section.dataset.tableKey = table.key;
    section.setAttribute("aria-labelledby", `${table.key}-title`);

    const heading = document.createElement("h2");
    heading.id = `${table.key}-title`;
    heading.tabIndex = -1;
    heading.textContent = table.title;
    section.appendChild(heading);

    const element = document.createElement("table");
    element.setAttribute("aria-labelledby", `${table.key}-title`);

    const head = document.createElement("thead");
    const headRow = document.createElement("tr");
    for (const columnHeader of table.column_headers) {
      const th = document.createElement("th");
      th.scope = "col";
      th.textContent = columnHeader;
      headRow.appendChild(th);
    }
    head.appendChild(headRow);
    element.appendChild(head);

    const body = document.createElement("tbody");
    table.rows.forEach((row, index) => {
      body.appendChild(this.buildRow(row, index));
    });
    element.appendChild(body);

    element.addEventListener("keydown", (event) => this.handleKeydown(table.key, event));
    section.appendChild(element);
    return section;
  }

  private buildRow(
    row: { row_id: string; header: string; cells: string[] },
    rowIndex: number,
  ): HTMLElement {
    const tr = document.createElement("tr");
    tr.dataset.rowId = row.row_id;
    tr.dataset.rowIndex = String(rowIndex);

    const header = document.createElement("th");
    header.scope = "row";
    header.tabIndex = -1;
    header.textContent = row.header;
    if (row.cells.some((cell) => cell === UNAVAILABLE)) {
      const notice = document.createElement("span");
      notice.className = "sr-only";
      notice.textContent = " (some answers in this row are unavailable)";
      header.appendChild(notice);
    }
    tr.appendChild(header);

    row.cells.forEach((cell) => {
      const td = document.createElement("td");
      td.tabIndex = -1;
      td.textContent = cell;
      tr.appendChild(td);
    });
    return tr;
  }

  // -- navigation -----------------------------------------------------------

  private tableJson(key: string): TableJson | undefined {
    return this.tables.tables.find((t) => t.key === key);
  }

  private renderedTableKeys(): string[] {
    return this.tables.tables.filter((t) => t.rows.length > 0).map((t) => t.key);
  }

  private cellAt(address: CellAddress): HTMLElement | null {
    const rows = this.container.querySelectorAll(
      `section[data-table-key='${address.table}'] tbody tr`,
    );
    const row = rows[address.row];
    if (!row) return null;
    const cells = row.querySelectorAll<HTMLElement>("th[scope='row'], td");
    return cells[address.column] ?? null;
  }

  private clamp(address: CellAddress): CellAddress | null {
    const table = this.tableJson(address.table);
    if (!table || table.rows.length === 0) return null;
    const row = Math.max(0, Math.min(address.row, table.rows.length - 1));
    const columns = table.column_headers.length;
    const column = Math.max(0, Math.min(address.column, columns - 1));
    return { table: address.table, row, column };
  }

  private handleKeydown(tableKey: string, event: KeyboardEvent): void {
    const target = event.target as HTMLElement;
    if (!(target.matches("td") || target.matches("th[scope='row']"))) return;

    const tr = target.closest("tr");
    if (!tr) return;
    const rowIndex = Number(tr.dataset.rowIndex ?? "0");
    const cells = Array.from(tr.querySelectorAll<HTMLElement>("th[scope='row'], td"));
    const columnIndex = cells.indexOf(target);
    const current: CellAddress = { table: tableKey, row: rowIndex, column: columnIndex };

    let next: CellAddress | null = null;
    switch (event.key) {
      case "ArrowRight":
        next = this.clamp({ ...current, column: current.column + 1 });
        break;
      case "ArrowLeft":
        next = this.clamp({ ...current, column: current.column - 1 });
        break;
      case "ArrowDown": // skip to the next row, same column
        next = this.clamp({ ...current, row: current.row + 1 });
        break;
      case "ArrowUp":
        next = this.clamp({ ...current, row: current.row - 1 });
        break;
      case "Home":
        next = { ...current, column: 0 };
        break;
      case "End":
        next = this.clamp({ ...current, column: Number.MAX_SAFE_INTEGER });
        break;
      case "PageDown": // skip to the next table
        next = this.adjacentTable(tableKey, +1);
        break;
      case "PageUp":
        next = this.adjacentTable(tableKey, -1);
        break;
      default:
        return; // never intercept Tab or anything else
    }
    if (next) {
      event.preventDefault();
      this.focusCell(next);
    }
  }

  private adjacentTable(tableKey: string, direction: 1 | -1): CellAddress | null {
    const keys = this.renderedTableKeys();
    const index = keys.indexOf(tableKey) + direction;
    if (index < 0 || index >= keys.length) return null;
    return { table: keys[index], row: 0, column: 0 };
  }
}
