"""Accessible table assembly and rendering.

The four tables (summary, prompt verification, visual content, visual
style & errors) render to two-header HTML where every data cell is
programmatically tied to both its row header and its column header, plus a
lossless JSON projection, a linear utterance list mirroring screen-reader
reading order, and a markdown form for terminals.

All renderers are pure functions of the TableSet: identical input yields
byte-identical output.
"""

from __future__ import annotations

import html
import json
from dataclasses import dataclass
from html.parser import HTMLParser
from typing import Any

from .errors import IncompleteSessionError
from .extraction import StyleDefinition
from .model import (
    AnswerMatrix,
    CONTENT_CATEGORIES,
    DescriptionBundle,
    GenerationSession,
    QuestionKind,
    SessionStatus,
    STYLE_CATEGORIES,
)

TABLE_KEYS = ("summary", "verification", "content", "style")
TABLE_TITLES = {
    "summary": "Summary",
    "verification": "Prompt verification",
    "content": "Visual content",
    "style": "Visual style & errors",
}


@dataclass(frozen=True)
class TableRow:
    row_id: str
    header: str
    cells: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {"row_id": self.row_id, "header": self.header, "cells": list(self.cells)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TableRow":
        return cls(row_id=data["row_id"], header=data["header"], cells=tuple(data["cells"]))


@dataclass(frozen=True)
class Table:
    key: str
    title: str
    column_headers: tuple[str, ...]  # first entry labels the row-header column
    rows: tuple[TableRow, ...]

    def __post_init__(self):
        for row in self.rows:
            if len(row.cells) != len(self.column_headers) - 1:
                raise ValueError(
                    f"row {row.row_id!r} has {len(row.cells)} cells for "
                    f"{len(self.column_headers) - 1} data columns"
                )

    def to_dict(self) -> dict[str, Any]:
        return {
            "key": self.key,
            "title": self.title,
            "column_headers": list(self.column_headers),
            "rows": [row.to_dict() for row in self.rows],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Table":
        return cls(
            key=data["key"],
            title=data["title"],
            column_headers=tuple(data["column_headers"]),
            rows=tuple(TableRow.from_dict(row) for row in data["rows"]),
        )


@dataclass(frozen=True)
class TableSet:
    session_id: str
    prompt: str
    image_count: int
    tables: tuple[Table, ...]
    style_definitions: tuple[StyleDefinition, ...] = ()

    def table(self, key: str) -> Table:
        for table in self.tables:
            if table.key == key:
                return table
        raise KeyError(key)

    def to_dict(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "prompt": self.prompt,
            "image_count": self.image_count,
            "tables": [table.to_dict() for table in self.tables],
            "style_definitions": [d.to_dict() for d in self.style_definitions],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TableSet":
        return cls(
            session_id=data["session_id"],
            prompt=data["prompt"],
            image_count=int(data["image_count"]),
            tables=tuple(Table.from_dict(t) for t in data["tables"]),
            style_definitions=tuple(
                StyleDefinition.from_dict(d) for d in data.get("style_definitions", [])
            ),
        )


def build_tables(
    session: GenerationSession,
    matrix: AnswerMatrix,
    bundle: DescriptionBundle,
    style_definitions: tuple[StyleDefinition, ...] = (),
) -> TableSet:
    """Assemble the fixed-order table set from a ready session.

    Every matrix row lands in exactly one table; custom rows go to the
    bottom of the table they were asked from.
    """
    if session.status != SessionStatus.READY:
        raise IncompleteSessionError(f"session is {session.status.value}, not ready")
    for row in matrix.rows:
        if row.summary is None:
            raise IncompleteSessionError(f"row {row.question.question_id!r} has no summary")

    n = matrix.image_count
    qa_headers = ("Question", "Answer summary") + tuple(f"Image {i}" for i in range(1, n + 1))

    summary_rows = []
    if n >= 2:
        summary_rows.append(TableRow("similarities", "Similarities", (bundle.similarities,)))
        summary_rows.append(TableRow("differences", "Differences", (bundle.differences,)))
    for i, text in enumerate(bundle.per_image, start=1):
        summary_rows.append(TableRow(f"image-{i}-description", f"Image {i} description", (text,)))

    def qa_row(row) -> TableRow:
        cells = (row.summary.text,) + tuple(cell.display_text() for cell in row.cells)
        return TableRow(row.question.question_id, row.question.text, cells)

    verification_rows: list[TableRow] = []
    content_rows: list[TableRow] = []
    style_rows: list[TableRow] = []
    host_lists = {"verification": verification_rows, "content": content_rows, "style": style_rows}

    for row in matrix.rows:
        question = row.question
        if question.kind == QuestionKind.VERIFICATION:
            verification_rows.append(qa_row(row))
        elif question.kind == QuestionKind.GUIDELINE:
            if question.category in CONTENT_CATEGORIES:
                content_rows.append(qa_row(row))
            elif question.category in STYLE_CATEGORIES:
                style_rows.append(qa_row(row))
            else:
                raise ValueError(f"guideline row with unknown category {question.category!r}")
        elif question.kind == QuestionKind.CUSTOM:
            host = row.host_table or "content"
            if host not in host_lists:
                raise ValueError(f"custom row hosted on unknown table {host!r}")
            host_lists[host].append(qa_row(row))
        else:
            raise ValueError(f"matrix must not contain {question.kind.value} rows")

    tables = (
        Table("summary", TABLE_TITLES["summary"], ("Item", "Description"), tuple(summary_rows)),
        Table("verification", TABLE_TITLES["verification"], qa_headers, tuple(verification_rows)),
        Table("content", TABLE_TITLES["content"], qa_headers, tuple(content_rows)),
        Table("style", TABLE_TITLES["style"], qa_headers, tuple(style_rows)),
    )
    return TableSet(
        session_id=session.session_id,
        prompt=session.prompt,
        image_count=n,
        tables=tables,
        style_definitions=style_definitions,
    )


# --- renderers -----------------------------------------------------------------


def _render_table_html(table: Table) -> list[str]:
    t = table.key
    lines = [f'<section aria-labelledby="{t}-title">', f'<h2 id="{t}-title">{html.escape(table.title)}</h2>']
    lines.append("<table>")
    lines.append("<thead>")
    header_cells = []
    for j, header in enumerate(table.column_headers):
        header_cells.append(f'<th scope="col" id="{t}-col-{j}">{html.escape(header)}</th>')
    lines.append("<tr>" + "".join(header_cells) + "</tr>")
    lines.append("</thead>")
    lines.append("<tbody>")
    for row in table.rows:
        row_cells = [
            f'<th scope="row" id="{t}-row-{html.escape(row.row_id, quote=True)}" '
            f'headers="{t}-col-0">{html.escape(row.header)}</th>'
        ]
        for j, cell in enumerate(row.cells, start=1):
            row_cells.append(
                f'<td headers="{t}-row-{html.escape(row.row_id, quote=True)} {t}-col-{j}">'
                f"{html.escape(cell)}</td>"
            )
        lines.append("<tr>" + "".join(row_cells) + "</tr>")
    lines.append("</tbody>")
    lines.append("</table>")
    lines.append("</section>")
    return lines


def render_html(tableset: TableSet) -> str:
    """Self-contained two-header HTML document, no scripts required."""
    lines = [
        "<!DOCTYPE html>",
        '<html lang="en">',
        "<head>",
        '<meta charset="utf-8">',
        f"<title>Image results for: {html.escape(tableset.prompt)}</title>",
        "</head>",
        "<body>",
        "<main>",
        f"<h1>Prompt: {html.escape(tableset.prompt)}</h1>",
        f"<p>{tableset.image_count} candidate image{'s' if tableset.image_count != 1 else ''}.</p>",
    ]
    for table in tableset.tables:
        if not table.rows:
            continue
        lines.extend(_render_table_html(table))
    if tableset.style_definitions:
        lines.append('<section aria-labelledby="definitions-title">')
        lines.append('<h2 id="definitions-title">Style definitions</h2>')
        lines.append("<dl>")
        for definition in tableset.style_definitions:
            term = f"{definition.choice} ({definition.category})"
            lines.append(f"<dt>{html.escape(term)}</dt>")
            lines.append(f"<dd>{html.escape(definition.definition_text)}</dd>")
        lines.append("</dl>")
        lines.append("</section>")
    lines.extend(["</main>", "</body>", "</html>"])
    return "\n".join(lines) + "\n"


def render_json(tableset: TableSet) -> str:
    """Lossless projection with stable key order."""
    return json.dumps(tableset.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _utterance(row_header: str, column_header: str, cell: str) -> str:
    separator = "" if row_header.rstrip().endswith((".", "?", "!", ":")) else "."
    return f"{row_header}{separator} {column_header}: {cell}"


def linearize(tableset: TableSet) -> list[str]:
    """Row-major utterances per table, summary table first.

    One utterance per data cell, carrying both headers inline so each line
    stands alone when read aloud.
    """
    utterances = []
    for table in tableset.tables:
        for row in table.rows:
            for column_header, cell in zip(table.column_headers[1:], row.cells):
                utterances.append(_utterance(row.header, column_header, cell))
    return utterances


def render_linear(tableset: TableSet) -> str:
    return "\n".join(linearize(tableset)) + "\n"


def _markdown_escape(text: str) -> str:
    return text.replace("|", "\\|").replace("\n", " ")


def render_markdown(tableset: TableSet) -> str:
    """Markdown form for terminal consumption (not part of the service API)."""
    lines = [f"# Prompt: {_markdown_escape(tableset.prompt)}", ""]
    for table in tableset.tables:
        if not table.rows:
            continue
        lines.append(f"## {table.title}")
        lines.append("")
        lines.append("| " + " | ".join(_markdown_escape(h) for h in table.column_headers) + " |")
        lines.append("|" + " --- |" * len(table.column_headers))
        for row in table.rows:
            cells = [row.header, *row.cells]
            lines.append("| " + " | ".join(_markdown_escape(c) for c in cells) + " |")
        lines.append("")
    if tableset.style_definitions:
        lines.append("## Style definitions")
        lines.append("")
        for definition in tableset.style_definitions:
            lines.append(
                f"- **{_markdown_escape(definition.choice)}** ({definition.category}): "
                f"{_markdown_escape(definition.definition_text)}"
            )
        lines.append("")
    return "\n".join(lines)


# --- structural validation ------------------------------------------------------


class _TableAuditParser(HTMLParser):
    """Collects header ids per axis and the header associations of data cells."""

    def __init__(self):
        super().__init__()
        self.col_header_ids: set[str] = set()
        self.row_header_ids: set[str] = set()
        self.data_cells: list[dict[str, Any]] = []
        self._cell_depth = 0

    def handle_starttag(self, tag, attrs):
        attributes = dict(attrs)
        if tag == "th":
            scope = attributes.get("scope")
            header_id = attributes.get("id")
            if scope == "col" and header_id:
                self.col_header_ids.add(header_id)
            elif scope == "row" and header_id:
                self.row_header_ids.add(header_id)
        elif tag == "td":
            self.data_cells.append({"headers": attributes.get("headers", "").split()})


def audit_two_header_html(document: str) -> list[str]:
    """Check that every data cell is associated with both axis headers.

    Returns a list of violations; an empty list means the document passes.
    """
    parser = _TableAuditParser()
    parser.feed(document)
    violations = []
    for position, cell in enumerate(parser.data_cells):
        refs = cell["headers"]
        row_refs = [r for r in refs if r in parser.row_header_ids]
        col_refs = [r for r in refs if r in parser.col_header_ids]
        unknown = [r for r in refs if r not in parser.row_header_ids | parser.col_header_ids]
        if len(row_refs) != 1 or len(col_refs) != 1 or unknown:
            violations.append(
                f"data cell #{position} headers={refs!r} must reference exactly one "
                f"row header and one column header"
            )
    return violations
