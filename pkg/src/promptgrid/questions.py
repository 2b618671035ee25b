"""Question production: prompt verification, the fixed guideline catalog,
per-image caption-detail questions, and user custom questions."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import (
    BackendError,
    EmptyQuestionError,
    FixtureMissError,
    GenerationFailedError,
    UnparseableListError,
)
from .gateway import ChatRequest, ModelGateway
from .model import (
    EMBEDDING_CATEGORIES,
    GUIDELINE_CATEGORIES,
    Question,
    QuestionKind,
    QuestionRoute,
    route_for_category,
)
from .prompts import (
    CAPTION_QUESTIONS_INSTRUCTION,
    SYSTEM_ROLE,
    VERIFICATION_QUESTIONS_INSTRUCTION,
)

MAX_CAPTION_QUESTIONS = 10

# "1. text", "1) text", "1: text", "(1) text", "1 - text", and bullet
# markers. Whitespace (or end of line) is required after the marker so
# years and decimals survive untouched.
_ITEM_PREFIXES = (
    re.compile(r"^\s*\(\d{1,3}\)(?:\s+|$)"),
    re.compile(r"^\s*\d{1,3}\s*[.):](?:\s+|$)"),
    re.compile(r"^\s*\d{1,3}\s+-(?:\s+|$)"),
    re.compile(r"^\s*[-–•*](?:\s+|$)"),
)


def _strip_item_prefix(line: str) -> str:
    """Remove list markers until none remain, so parsing is a fixpoint."""
    text = line.strip()
    while True:
        for pattern in _ITEM_PREFIXES:
            stripped = pattern.sub("", text, count=1)
            if stripped != text:
                text = stripped.strip()
                break
        else:
            return text


def parse_numbered_list(text: str) -> list[str]:
    """Parse a model-emitted list into clean items.

    Accepts "1.", "1)", "1 -" numbering and bullet markers, falling back to
    bare non-empty lines. Raises UnparseableListError when nothing survives.
    """
    items = []
    for line in text.splitlines():
        item = _strip_item_prefix(line)
        if item:
            items.append(item)
    if not items:
        raise UnparseableListError("no list items found in model output")
    return items


def _chat_list(gateway: ModelGateway, instruction: str, payload: str) -> list[str]:
    request = ChatRequest(system_role=SYSTEM_ROLE, user_content=f"{instruction}\n\n{payload}")
    try:
        response = gateway.chat_complete(request)
    except FixtureMissError:
        raise
    except BackendError as exc:
        raise GenerationFailedError(str(exc)) from exc
    return parse_numbered_list(response)


def generate_verification_questions(gateway: ModelGateway, prompt: str) -> list[Question]:
    """Ask the text backend for questions that verify each part of the prompt."""
    if not prompt.strip():
        raise ValueError("prompt must be non-empty")
    texts = _chat_list(gateway, VERIFICATION_QUESTIONS_INSTRUCTION, prompt)

    seen: set[str] = set()
    questions = []
    for text in texts:
        key = text.strip().lower()
        if key in seen:
            continue
        seen.add(key)
        questions.append(
            Question(
                question_id=f"verify-{len(questions) + 1}",
                text=text,
                kind=QuestionKind.VERIFICATION,
                route=QuestionRoute.VQA,
            )
        )
    return questions


def generate_caption_questions(
    gateway: ModelGateway, caption: str, image_index: int
) -> list[Question]:
    """Generate up to 10 image-specific questions from one image's caption."""
    texts = _chat_list(gateway, CAPTION_QUESTIONS_INSTRUCTION, f"Caption: {caption}")
    questions = []
    for text in texts[:MAX_CAPTION_QUESTIONS]:
        questions.append(
            Question(
                question_id=f"caption-{image_index}-{len(questions) + 1}",
                text=text,
                kind=QuestionKind.CAPTION_DETAIL,
                route=QuestionRoute.VQA,
                image_index=image_index,
            )
        )
    return questions


def make_custom_question(text: str, question_id: str = "custom-1") -> Question:
    trimmed = text.strip()
    if not trimmed:
        raise EmptyQuestionError("custom question is blank")
    if not trimmed.endswith("?"):
        trimmed += "?"
    return Question(
        question_id=question_id,
        text=trimmed,
        kind=QuestionKind.CUSTOM,
        route=QuestionRoute.VQA,
    )


# --- guideline catalog ------------------------------------------------------


@dataclass(frozen=True)
class GuidelineCatalog:
    """The fixed ten-question catalog covering content and style categories."""

    entries: tuple[tuple[str, str, QuestionRoute], ...]  # (category, text, route)

    def __post_init__(self):
        categories = [category for category, _, _ in self.entries]
        if categories != list(GUIDELINE_CATEGORIES):
            raise ValueError(
                f"guideline catalog must contain exactly {list(GUIDELINE_CATEGORIES)} in order, "
                f"got {categories}"
            )

    def questions(self) -> list[Question]:
        return [
            Question(
                question_id=f"guideline-{category.lower()}",
                text=text,
                kind=QuestionKind.GUIDELINE,
                route=route,
                category=category,
                vocabulary_ref=category.lower() if category in EMBEDDING_CATEGORIES else None,
            )
            for category, text, route in self.entries
        ]


def load_guideline_catalog(path: str | Path | None = None) -> GuidelineCatalog:
    """Load the catalog from a config file, defaulting to the packaged one."""
    if path is None:
        text = resources.files("promptgrid.data").joinpath("guideline_questions.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    data = json.loads(text)
    entries = tuple(
        (entry["category"], entry["text"], route_for_category(entry["category"]))
        for entry in data["entries"]
    )
    return GuidelineCatalog(entries=entries)


_DEFAULT_CATALOG: GuidelineCatalog | None = None


def guideline_questions() -> list[Question]:
    """The ten catalog questions with their answering routes."""
    global _DEFAULT_CATALOG
    if _DEFAULT_CATALOG is None:
        _DEFAULT_CATALOG = load_guideline_catalog()
    return _DEFAULT_CATALOG.questions()
