#!/usr/bin/env python3
"""Export service-API-shaped JSON for the web UI tests.

Writes frontend/tests/fixtures/tables.json (tutorial table set, before any
custom question) and question_row.json (the appended custom-question row),
both exactly as the HTTP API would serve them.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from promptgrid.gateway import FixtureStore, GatewayMode, ModelGateway
from promptgrid.model import validate_session_input
from promptgrid.pipeline import Pipeline

OUT = REPO / "frontend" / "tests" / "fixtures"


def main() -> None:
    gateway = ModelGateway(GatewayMode.REPLAY, store=FixtureStore(REPO / "fixtures" / "store"))
    pipeline = Pipeline(gateway)
    refs = [str(REPO / "fixtures" / "images" / f"chef-{i}.png") for i in range(1, 5)]
    session = validate_session_input("A young chef is cooking dinner for his parents", refs)
    result = pipeline.run(session)

    OUT.mkdir(parents=True, exist_ok=True)
    tables = result.tables().to_dict()
    (OUT / "tables.json").write_text(
        json.dumps(tables, indent=2, ensure_ascii=False) + "\n", "utf-8"
    )

    _, row = pipeline.ask(result, "What color is the background?", host_table="content")
    (OUT / "question_row.json").write_text(
        json.dumps(row.to_dict(), indent=2, ensure_ascii=False) + "\n", "utf-8"
    )
    print(f"wrote {OUT / 'tables.json'} and {OUT / 'question_row.json'}")


if __name__ == "__main__":
    main()
