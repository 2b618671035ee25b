"""Cross-image synthesis: row summaries, per-image descriptions and the
similarities/differences comparison.

Backend failures never fail the session here; every operation has a
deterministic fallback built from the evidence it already holds.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Callable, Sequence

from .errors import BackendError, FixtureMissError
from .gateway import ChatRequest, ModelGateway
from .model import (
    AnswerCell,
    Question,
    RowSummary,
    SummaryMode,
    SUMMARY_CHAR_LIMIT,
)
from .prompts import (
    IMAGE_DESCRIPTION_INSTRUCTION,
    SYSTEM_ROLE,
    comparison_instruction,
    row_summary_instruction,
    shorten_instruction,
)

_SENTENCE_END = re.compile(r"[.!?](?=\s|$)")

# Cues that mark the start of the differences paragraph when the model
# returns a single block of text.
_DIFFERENCE_CUES = ("Image 1", "Differences", "However")


def enforce_length(
    text: str,
    limit: int = SUMMARY_CHAR_LIMIT,
    regenerate: Callable[[], str] | None = None,
) -> str:
    """Apply the character-limit policy.

    Over-long text gets one regeneration attempt (when a regenerator is
    supplied), then a cut at the last sentence boundary within the limit,
    then a hard truncation with an ellipsis.
    """
    if len(text) <= limit:
        return text
    if regenerate is not None:
        retried = regenerate()
        if len(retried) <= limit:
            return retried
        text = retried
    best_end = None
    for match in _SENTENCE_END.finditer(text):
        if match.end() <= limit:
            best_end = match.end()
        else:
            break
    if best_end is not None:
        return text[:best_end]
    return text[: limit - 1] + "…"


def _chat(gateway: ModelGateway, user_content: str) -> str:
    return gateway.chat_complete(
        ChatRequest(system_role=SYSTEM_ROLE, user_content=user_content)
    )


def _chat_with_limit(gateway: ModelGateway, user_content: str, limit: int) -> str:
    """Chat call wrapped in the length policy, regenerating once if too long."""
    text = _chat(gateway, user_content)
    return enforce_length(
        text,
        limit,
        regenerate=lambda: _chat(
            gateway, f"{user_content}\n\n{shorten_instruction(limit)}"
        ),
    )


def identical_answer(cells: Sequence[AnswerCell]) -> str | None:
    """The shared display value if every cell agrees (case-insensitive), else None.

    Error-marked cells never count as agreement.
    """
    if any(cell.error is not None for cell in cells):
        return None
    values = [cell.display_text().strip() for cell in cells]
    if len({value.lower() for value in values}) == 1:
        return values[0]
    return None


def identical_summary_text(value: str) -> str:
    return f"All images: {value}."


def enumerate_answers(cells: Sequence[AnswerCell]) -> str:
    return "; ".join(f"Image {cell.image_index}: {cell.display_text()}" for cell in cells)


def summarize_row(
    gateway: ModelGateway,
    question: Question,
    cells: Sequence[AnswerCell],
    *,
    image_count: int,
) -> RowSummary:
    """One-sentence synthesis of a question's per-image answers.

    Identical answers short-circuit to the "All images: X." template with no
    backend call; backend failures fall back to a deterministic enumeration.
    """
    if not cells:
        raise ValueError("summarize_row needs at least one cell")
    if any(cell.question_id != question.question_id for cell in cells):
        raise ValueError("cells belong to a different question")

    shared = identical_answer(cells)
    if shared is not None:
        return RowSummary(
            text=enforce_length(identical_summary_text(shared)),
            mode=SummaryMode.IDENTICAL_SHORTCUT,
        )

    lines = [f"Question: {question.text}"]
    lines += [f"Image {cell.image_index}: {cell.display_text()}" for cell in cells]
    user_content = f"{row_summary_instruction(image_count)}\n\n" + "\n".join(lines)
    try:
        text = _chat_with_limit(gateway, user_content, SUMMARY_CHAR_LIMIT)
    except FixtureMissError:
        raise
    except BackendError:
        text = enforce_length(enumerate_answers(cells))
    return RowSummary(text=text, mode=SummaryMode.MODEL_GENERATED)


# --- per-image evidence --------------------------------------------------------


@dataclass(frozen=True)
class ImageEvidence:
    """Everything the pipeline learned about one image, in a stable order."""

    image_index: int
    caption: str
    qa_pairs: tuple[tuple[str, str], ...]
    objects: tuple[str, ...]
    style_scores: tuple[tuple[str, tuple[str, ...]], ...]  # (category, top choices)

    def style_for(self, category: str) -> tuple[str, ...] | None:
        for name, choices in self.style_scores:
            if name == category:
                return choices
        return None

    def block(self) -> str:
        """Deterministic text block fed to the description backend."""
        lines = [f"Caption: {self.caption}"]
        for category, choices in self.style_scores:
            lines.append(f"{category}: {', '.join(choices) if choices else 'none detected'}")
        lines.append(f"Objects: {', '.join(self.objects) if self.objects else 'none detected'}")
        for question_text, answer in self.qa_pairs:
            lines.append(f"Q: {question_text} A: {answer}")
        return "\n".join(lines)

    def to_dict(self) -> dict[str, Any]:
        return {
            "image_index": self.image_index,
            "caption": self.caption,
            "qa_pairs": [list(pair) for pair in self.qa_pairs],
            "objects": list(self.objects),
            "style_scores": [[category, list(choices)] for category, choices in self.style_scores],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ImageEvidence":
        return cls(
            image_index=int(data["image_index"]),
            caption=data["caption"],
            qa_pairs=tuple((q, a) for q, a in data["qa_pairs"]),
            objects=tuple(data["objects"]),
            style_scores=tuple(
                (category, tuple(choices)) for category, choices in data["style_scores"]
            ),
        )


def compose_image_description(gateway: ModelGateway, evidence: ImageEvidence) -> str:
    """Build one image's description from its evidence, medium first."""
    user_content = f"{IMAGE_DESCRIPTION_INSTRUCTION}\n\n{evidence.block()}"
    try:
        return _chat_with_limit(gateway, user_content, SUMMARY_CHAR_LIMIT)
    except FixtureMissError:
        raise
    except BackendError:
        medium = evidence.style_for("Medium")
        if medium:
            return enforce_length(f"{medium[0]} image: {evidence.caption}")
        return enforce_length(evidence.caption)


# --- comparison -----------------------------------------------------------------


_PARAGRAPH_LABEL = re.compile(r"^\s*(similarities|differences)\s*[:\-]?\s*", re.IGNORECASE)


def _strip_label(paragraph: str) -> str:
    return _PARAGRAPH_LABEL.sub("", paragraph.strip(), count=1).strip()


def split_comparison(text: str) -> tuple[str, str, bool]:
    """Split model output into (similarities, differences, degraded).

    Two or more blank-line-separated blocks map to the two paragraphs. A
    single block is split at the first difference cue; if none is found the
    whole text lands in similarities and the result is flagged degraded.
    """
    blocks = [block.strip() for block in re.split(r"\n\s*\n", text) if block.strip()]
    if len(blocks) >= 2:
        return _strip_label(blocks[0]), _strip_label("\n\n".join(blocks[1:])), False
    block = blocks[0] if blocks else ""
    positions = [block.find(cue) for cue in _DIFFERENCE_CUES]
    positions = [p for p in positions if p > 0]
    if positions:
        cut = min(positions)
        return _strip_label(block[:cut]), _strip_label(block[cut:]), False
    return _strip_label(block), "", True


def comparison_fallback(row_summaries: Sequence[RowSummary]) -> tuple[str, str]:
    """Deterministic comparison from the row summaries alone."""
    same = [s.text for s in row_summaries if s.mode == SummaryMode.IDENTICAL_SHORTCUT]
    diff = [s.text for s in row_summaries if s.mode == SummaryMode.MODEL_GENERATED]
    similarities = " ".join(same) if same else "No similarities detected across images."
    differences = " ".join(diff) if diff else "No differences detected across images."
    return similarities, differences


def compose_comparison(
    gateway: ModelGateway,
    evidences: Sequence[ImageEvidence],
    row_summaries: Sequence[RowSummary],
    *,
    image_count: int,
) -> tuple[str, str, bool]:
    """Similarities and differences paragraphs across all images.

    Returns (similarities, differences, degraded). Callers skip this
    entirely for single-image sessions.
    """
    if image_count < 2:
        raise ValueError("comparison requires at least two images")
    sections = []
    for evidence in evidences:
        sections.append(f"Image {evidence.image_index}:\n{evidence.block()}")
    if row_summaries:
        sections.append("Row summaries:\n" + "\n".join(s.text for s in row_summaries))
    user_content = f"{comparison_instruction(image_count)}\n\n" + "\n\n".join(sections)
    try:
        text = _chat(gateway, user_content)
    except FixtureMissError:
        raise
    except BackendError:
        similarities, differences = comparison_fallback(row_summaries)
        return similarities, differences, False
    return split_comparison(text)
