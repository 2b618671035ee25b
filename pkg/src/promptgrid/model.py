"""Core domain types: sessions, questions, answer cells, matrices, bundles.

Everything here is an immutable value object; pipeline stages produce new
versions instead of mutating. All types serialize to plain dicts with
snake_case keys so the API, CLI and persistence share one JSON shape.
"""

from __future__ import annotations

import enum
import hashlib
import json
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from .errors import (
    EmptyPromptError,
    ImageIndexOutOfRangeError,
    NoImagesError,
    TooManyImagesError,
    UnknownQuestionError,
    UnreadableImageError,
)

MAX_IMAGES = 8
SUMMARY_CHAR_LIMIT = 250


def canonical_json(payload: Any) -> str:
    """Canonical serialization: sorted keys, UTF-8, no insignificant whitespace."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest_payload(payload: Any) -> str:
    return sha256_hex(canonical_json(payload).encode("utf-8"))


class SessionStatus(str, enum.Enum):
    CREATED = "created"
    EXTRACTING = "extracting"
    SUMMARIZING = "summarizing"
    READY = "ready"
    FAILED = "failed"


# Forward-only transitions; FAILED is reachable from anywhere.
_STATUS_ORDER = [
    SessionStatus.CREATED,
    SessionStatus.EXTRACTING,
    SessionStatus.SUMMARIZING,
    SessionStatus.READY,
]


class QuestionKind(str, enum.Enum):
    VERIFICATION = "verification"
    GUIDELINE = "guideline"
    CAPTION_DETAIL = "caption_detail"
    CUSTOM = "custom"


class QuestionRoute(str, enum.Enum):
    VQA = "vqa"
    OBJECT_DETECTION = "object_detection"
    EMBEDDING_VOCAB = "embedding_vocab"


class Provenance(str, enum.Enum):
    VQA_BACKEND = "vqa_backend"
    DETECTION_BACKEND = "detection_backend"
    EMBEDDING_SCORING = "embedding_scoring"
    FIXTURE = "fixture"


class SummaryMode(str, enum.Enum):
    IDENTICAL_SHORTCUT = "identical_shortcut"
    MODEL_GENERATED = "model_generated"


# Categories whose answers come from embedding-vocabulary scoring; Objects
# goes through object detection, the rest through VQA.
EMBEDDING_CATEGORIES = ("Medium", "Lighting", "Perspective", "Errors")
DETECTION_CATEGORIES = ("Objects",)
GUIDELINE_CATEGORIES = (
    "Setting",
    "Subjects",
    "Objects",
    "Emotion",
    "Usage",
    "Medium",
    "Lighting",
    "Perspective",
    "Colors",
    "Errors",
)
CONTENT_CATEGORIES = ("Setting", "Subjects", "Objects", "Emotion", "Usage")
STYLE_CATEGORIES = ("Medium", "Lighting", "Perspective", "Colors", "Errors")


def route_for_category(category: str | None) -> QuestionRoute:
    if category in DETECTION_CATEGORIES:
        return QuestionRoute.OBJECT_DETECTION
    if category in EMBEDDING_CATEGORIES:
        return QuestionRoute.EMBEDDING_VOCAB
    return QuestionRoute.VQA


@dataclass(frozen=True)
class ImageCandidate:
    """One generated image candidate, identified by position and byte digest."""

    index: int  # 1-based position in the session
    source: str  # file path or URL
    content_hash: str
    caption: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "source": self.source,
            "content_hash": self.content_hash,
            "caption": self.caption,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ImageCandidate":
        return cls(
            index=int(data["index"]),
            source=data["source"],
            content_hash=data["content_hash"],
            caption=data.get("caption"),
        )


@dataclass(frozen=True)
class GenerationSession:
    session_id: str
    prompt: str
    images: tuple[ImageCandidate, ...]
    created_at: float
    status: SessionStatus = SessionStatus.CREATED

    @property
    def image_count(self) -> int:
        return len(self.images)

    def advance(self, status: SessionStatus) -> "GenerationSession":
        """Move the session forward; backwards transitions are bugs."""
        if status == SessionStatus.FAILED:
            return replace(self, status=status)
        if self.status == SessionStatus.FAILED:
            raise ValueError("failed sessions cannot advance")
        if _STATUS_ORDER.index(status) < _STATUS_ORDER.index(self.status):
            raise ValueError(f"cannot move status backwards: {self.status} -> {status}")
        return replace(self, status=status)

    def with_captions(self, captions: Sequence[str]) -> "GenerationSession":
        if len(captions) != len(self.images):
            raise ValueError("one caption per image required")
        images = tuple(replace(img, caption=cap) for img, cap in zip(self.images, captions))
        return replace(self, images=images)

    def to_dict(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "prompt": self.prompt,
            "images": [img.to_dict() for img in self.images],
            "created_at": self.created_at,
            "status": self.status.value,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "GenerationSession":
        return cls(
            session_id=data["session_id"],
            prompt=data["prompt"],
            images=tuple(ImageCandidate.from_dict(i) for i in data["images"]),
            created_at=float(data["created_at"]),
            status=SessionStatus(data["status"]),
        )


@dataclass(frozen=True)
class Question:
    question_id: str
    text: str
    kind: QuestionKind
    route: QuestionRoute
    category: str | None = None
    vocabulary_ref: str | None = None
    image_index: int | None = None  # caption-detail questions attach to one image

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("question text must be non-empty")
        if (self.route == QuestionRoute.EMBEDDING_VOCAB) != (self.vocabulary_ref is not None):
            raise ValueError("vocabulary_ref is required iff route is embedding_vocab")
        if self.kind in (QuestionKind.VERIFICATION, QuestionKind.CUSTOM, QuestionKind.CAPTION_DETAIL):
            if self.route != QuestionRoute.VQA:
                raise ValueError(f"{self.kind.value} questions always route to vqa")
        if self.kind == QuestionKind.GUIDELINE and self.route != route_for_category(self.category):
            raise ValueError(f"category {self.category!r} must route to {route_for_category(self.category).value}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "question_id": self.question_id,
            "text": self.text,
            "kind": self.kind.value,
            "route": self.route.value,
            "category": self.category,
            "vocabulary_ref": self.vocabulary_ref,
            "image_index": self.image_index,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Question":
        return cls(
            question_id=data["question_id"],
            text=data["text"],
            kind=QuestionKind(data["kind"]),
            route=QuestionRoute(data["route"]),
            category=data.get("category"),
            vocabulary_ref=data.get("vocabulary_ref"),
            image_index=data.get("image_index"),
        )


# Cell value by route: vqa -> str, object_detection -> tuple[str, ...],
# embedding_vocab -> tuple[(choice, score), ...].
@dataclass(frozen=True)
class AnswerCell:
    question_id: str
    image_index: int
    value: Any
    provenance: Provenance
    raw: Any = None
    error: str | None = None  # degraded cell marker; value is unusable when set

    def display_text(self) -> str:
        """Flat text for tables and summaries; scores are kept out of prose."""
        if self.error is not None:
            return "unavailable"
        if isinstance(self.value, str):
            return self.value
        items = list(self.value)
        if not items:
            return "none detected"
        if items and isinstance(items[0], (tuple, list)):
            return ", ".join(choice for choice, _score in items)
        return ", ".join(items)

    def to_dict(self) -> dict[str, Any]:
        value = self.value
        if isinstance(value, tuple):
            value = [list(v) if isinstance(v, tuple) else v for v in value]
        return {
            "question_id": self.question_id,
            "image_index": self.image_index,
            "value": value,
            "provenance": self.provenance.value,
            "raw": self.raw,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "AnswerCell":
        value = data["value"]
        if isinstance(value, list):
            if value and isinstance(value[0], list):
                value = tuple((str(c), float(s)) for c, s in value)
            else:
                value = tuple(str(v) for v in value)
        return cls(
            question_id=data["question_id"],
            image_index=int(data["image_index"]),
            value=value,
            provenance=Provenance(data["provenance"]),
            raw=data.get("raw"),
            error=data.get("error"),
        )


@dataclass(frozen=True)
class RowSummary:
    text: str
    mode: SummaryMode

    def __post_init__(self):
        if len(self.text) > SUMMARY_CHAR_LIMIT:
            raise ValueError(f"row summary exceeds {SUMMARY_CHAR_LIMIT} characters")

    def to_dict(self) -> dict[str, Any]:
        return {"text": self.text, "mode": self.mode.value}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RowSummary":
        return cls(text=data["text"], mode=SummaryMode(data["mode"]))


@dataclass(frozen=True)
class MatrixRow:
    question: Question
    summary: RowSummary | None
    cells: tuple[AnswerCell, ...]
    host_table: str | None = None  # custom rows remember which table they were asked from

    def to_dict(self) -> dict[str, Any]:
        return {
            "question": self.question.to_dict(),
            "summary": self.summary.to_dict() if self.summary else None,
            "cells": [c.to_dict() for c in self.cells],
            "host_table": self.host_table,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MatrixRow":
        summary = data.get("summary")
        return cls(
            question=Question.from_dict(data["question"]),
            summary=RowSummary.from_dict(summary) if summary else None,
            cells=tuple(AnswerCell.from_dict(c) for c in data["cells"]),
            host_table=data.get("host_table"),
        )


@dataclass(frozen=True)
class AnswerMatrix:
    rows: tuple[MatrixRow, ...]
    image_count: int

    def __post_init__(self):
        for row in self.rows:
            if len(row.cells) != self.image_count:
                raise ValueError(
                    f"row {row.question.question_id!r} has {len(row.cells)} cells, "
                    f"expected {self.image_count}"
                )

    def with_row(self, row: MatrixRow) -> "AnswerMatrix":
        return AnswerMatrix(rows=self.rows + (row,), image_count=self.image_count)

    def row_for(self, question_id: str) -> MatrixRow:
        for row in self.rows:
            if row.question.question_id == question_id:
                return row
        raise UnknownQuestionError(f"no row with question_id {question_id!r}")

    def to_dict(self) -> dict[str, Any]:
        return {"rows": [r.to_dict() for r in self.rows], "image_count": self.image_count}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "AnswerMatrix":
        return cls(
            rows=tuple(MatrixRow.from_dict(r) for r in data["rows"]),
            image_count=int(data["image_count"]),
        )


def cell_at(matrix: AnswerMatrix, question_id: str, image_index: int) -> AnswerCell:
    """Total lookup of the unique cell at (question, image)."""
    row = matrix.row_for(question_id)
    if not 1 <= image_index <= matrix.image_count:
        raise ImageIndexOutOfRangeError(
            f"image index {image_index} out of range 1..{matrix.image_count}"
        )
    return row.cells[image_index - 1]


@dataclass(frozen=True)
class DescriptionBundle:
    per_image: tuple[str, ...]
    similarities: str
    differences: str
    degraded: bool = False

    def __post_init__(self):
        for text in self.per_image:
            if len(text) > SUMMARY_CHAR_LIMIT:
                raise ValueError(f"per-image description exceeds {SUMMARY_CHAR_LIMIT} characters")

    def to_dict(self) -> dict[str, Any]:
        return {
            "per_image": list(self.per_image),
            "similarities": self.similarities,
            "differences": self.differences,
            "degraded": self.degraded,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "DescriptionBundle":
        return cls(
            per_image=tuple(data["per_image"]),
            similarities=data["similarities"],
            differences=data["differences"],
            degraded=bool(data.get("degraded", False)),
        )


# --- session input validation --------------------------------------------


def default_image_loader(ref: str) -> bytes:
    """Read image bytes from a file path or an http(s) URL."""
    if ref.startswith("http://") or ref.startswith("https://"):
        import requests

        try:
            resp = requests.get(ref, timeout=30)
            resp.raise_for_status()
        except Exception as exc:
            raise UnreadableImageError(ref, str(exc)) from exc
        return resp.content
    path = Path(ref)
    try:
        return path.read_bytes()
    except OSError as exc:
        raise UnreadableImageError(ref, str(exc)) from exc


def session_id_for(prompt: str, content_hashes: Iterable[str]) -> str:
    """Deterministic id derived from the inputs; replay runs get stable ids."""
    digest = digest_payload({"prompt": prompt, "images": list(content_hashes)})
    return f"sess-{digest[:12]}"


def validate_session_input(
    prompt: str,
    image_refs: Sequence[str],
    *,
    loader: Callable[[str], bytes] = default_image_loader,
    session_id: str | None = None,
    created_at: float | None = None,
) -> GenerationSession:
    """Check the raw inputs and build a session in status ``created``.

    Raises EmptyPromptError, NoImagesError, TooManyImagesError or
    UnreadableImageError; on success image candidates are indexed 1..N in
    input order and the prompt is trimmed.
    """
    trimmed = prompt.strip()
    if not trimmed:
        raise EmptyPromptError("prompt is blank")
    if not image_refs:
        raise NoImagesError("at least one image is required")
    if len(image_refs) > MAX_IMAGES:
        raise TooManyImagesError(f"{len(image_refs)} images given, maximum is {MAX_IMAGES}")

    candidates = []
    for position, ref in enumerate(image_refs, start=1):
        data = loader(ref)
        candidates.append(
            ImageCandidate(index=position, source=ref, content_hash=sha256_hex(data))
        )

    return GenerationSession(
        session_id=session_id or session_id_for(trimmed, (c.content_hash for c in candidates)),
        prompt=trimmed,
        images=tuple(candidates),
        created_at=created_at if created_at is not None else time.time(),
        status=SessionStatus.CREATED,
    )
