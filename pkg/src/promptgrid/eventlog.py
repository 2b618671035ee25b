"""Append-only per-session event log and state reconstruction.

Events carry full payloads (rows, summaries, bundles), so folding a log
reproduces the session's final state without re-running the pipeline.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Sequence

from .errors import CorruptLogError
from .model import (
    AnswerMatrix,
    DescriptionBundle,
    GenerationSession,
    MatrixRow,
    RowSummary,
    SessionStatus,
)
from .pipeline import PipelineResult
from .summarize import ImageEvidence

logger = logging.getLogger("promptgrid.events")

EVENT_KINDS = (
    "created",
    "pipeline_started",
    "row_completed",
    "summaries_completed",
    "question_asked",
    "tables_served",
    "failed",
)


@dataclass(frozen=True)
class SessionEvent:
    session_id: str
    seq: int
    kind: str
    payload: dict[str, Any]
    at: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "seq": self.seq,
            "kind": self.kind,
            "payload": self.payload,
            "at": self.at,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SessionEvent":
        return cls(
            session_id=data["session_id"],
            seq=int(data["seq"]),
            kind=data["kind"],
            payload=data["payload"],
            at=float(data["at"]),
        )


class EventStore:
    """One events.jsonl per session; appends are serialized and gapless."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._lock = threading.Lock()
        self._next_seq: dict[str, int] = {}

    def _session_dir(self, session_id: str) -> Path:
        return self.root / "sessions" / session_id

    def log_path(self, session_id: str) -> Path:
        return self._session_dir(session_id) / "events.jsonl"

    def append(self, session_id: str, kind: str, payload: dict[str, Any]) -> SessionEvent:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        with self._lock:
            seq = self._next_seq.get(session_id)
            if seq is None:
                seq = len(self.read(session_id, missing_ok=True)) + 1
            event = SessionEvent(
                session_id=session_id, seq=seq, kind=kind, payload=payload, at=time.time()
            )
            path = self.log_path(session_id)
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event.to_dict(), ensure_ascii=False) + "\n")
            self._next_seq[session_id] = seq + 1
        logger.info(
            "%s",
            json.dumps(
                {"session_id": session_id, "seq": event.seq, "kind": kind},
                ensure_ascii=False,
            ),
        )
        return event

    def read(self, session_id: str, *, missing_ok: bool = False) -> list[SessionEvent]:
        path = self.log_path(session_id)
        if not path.exists():
            if missing_ok:
                return []
            raise CorruptLogError(f"no event log for session {session_id}")
        events = []
        with open(path, encoding="utf-8") as fh:
            for line_number, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    events.append(SessionEvent.from_dict(json.loads(line)))
                except (ValueError, KeyError) as exc:
                    raise CorruptLogError(
                        f"undecodable event at {path}:{line_number}: {exc}"
                    ) from exc
        return events

    def session_ids(self) -> list[str]:
        base = self.root / "sessions"
        if not base.exists():
            return []
        return sorted(p.name for p in base.iterdir() if (p / "events.jsonl").exists())


@dataclass(frozen=True)
class ReplayedSession:
    session: GenerationSession
    result: PipelineResult | None  # present once the log reaches ready
    error: str | None = None


def replay_session(events: Sequence[SessionEvent]) -> ReplayedSession:
    """Fold an event log back into the session's final state.

    Raises CorruptLogError on an empty log, a missing created event, a seq
    gap, or an unknown event kind.
    """
    if not events:
        raise CorruptLogError("empty event log")
    for position, event in enumerate(events, start=1):
        if event.seq != position:
            raise CorruptLogError(f"seq gap: expected {position}, found {event.seq}")
        if event.kind not in EVENT_KINDS:
            raise CorruptLogError(f"unknown event kind {event.kind!r}")
    if events[0].kind != "created":
        raise CorruptLogError("log does not start with a created event")

    try:
        session = GenerationSession.from_dict(events[0].payload["session"])
    except (KeyError, ValueError, TypeError) as exc:
        raise CorruptLogError(f"undecodable created payload: {exc}") from exc

    rows: list[MatrixRow] = []
    result: PipelineResult | None = None
    error: str | None = None

    for event in events[1:]:
        try:
            if event.kind == "pipeline_started":
                session = session.advance(SessionStatus.EXTRACTING)
            elif event.kind == "row_completed":
                rows.append(MatrixRow.from_dict(event.payload["row"]))
            elif event.kind == "summaries_completed":
                session = session.advance(SessionStatus.SUMMARIZING)
                session = session.with_captions(event.payload["captions"])
                summaries = {
                    entry["question_id"]: RowSummary.from_dict(entry["summary"])
                    for entry in event.payload["row_summaries"]
                }
                completed = tuple(
                    replace(row, summary=summaries[row.question.question_id]) for row in rows
                )
                session = session.advance(SessionStatus.READY)
                result = PipelineResult(
                    session=session,
                    matrix=AnswerMatrix(rows=completed, image_count=session.image_count),
                    bundle=DescriptionBundle.from_dict(event.payload["bundle"]),
                    evidences=tuple(
                        ImageEvidence.from_dict(e) for e in event.payload["evidences"]
                    ),
                    style_definitions=tuple(
                        _style_definition_from(d) for d in event.payload["style_definitions"]
                    ),
                )
            elif event.kind == "question_asked":
                if result is None:
                    raise CorruptLogError("question_asked before summaries_completed")
                row = MatrixRow.from_dict(event.payload["row"])
                result = replace(result, matrix=result.matrix.with_row(row))
            elif event.kind == "failed":
                session = session.advance(SessionStatus.FAILED)
                error = event.payload.get("error", "unknown failure")
                result = None
        except CorruptLogError:
            raise
        except (KeyError, ValueError, TypeError) as exc:
            raise CorruptLogError(f"undecodable {event.kind} payload: {exc}") from exc

    if result is not None:
        session = result.session
    return ReplayedSession(session=session, result=result, error=error)


def _style_definition_from(data: dict[str, Any]):
    from .extraction import StyleDefinition

    return StyleDefinition.from_dict(data)
