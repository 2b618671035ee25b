"""End-to-end orchestration: prompt in, matrix + descriptions + tables out.

The pipeline fans individual model calls across a bounded pool but keeps
every output ordering fixed by construction, so a run against a fixture
set is fully deterministic.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Callable

from .errors import BackendError, FixtureMissError
from .extraction import (
    StyleDefiner,
    StyleDefinition,
    Vocabulary,
    append_custom_question,
    build_answer_matrix,
    load_vocabularies,
    next_custom_question_id,
)
from .gateway import ModelGateway, VqaRequest
from .model import (
    AnswerMatrix,
    DescriptionBundle,
    GenerationSession,
    MatrixRow,
    Provenance,
    QuestionKind,
    QuestionRoute,
    SessionStatus,
)
from .questions import (
    generate_caption_questions,
    generate_verification_questions,
    make_custom_question,
)
from .summarize import (
    ImageEvidence,
    compose_comparison,
    compose_image_description,
    summarize_row,
)
from .tables import TableSet, build_tables

logger = logging.getLogger(__name__)

# Style categories whose answer choices get one-sentence definitions.
DEFINED_STYLE_CATEGORIES = ("Medium", "Lighting", "Perspective")

EventCallback = Callable[[str, dict[str, Any]], None]


@dataclass(frozen=True)
class PipelineResult:
    """Everything derived from one session, ready for table building."""

    session: GenerationSession
    matrix: AnswerMatrix
    bundle: DescriptionBundle
    evidences: tuple[ImageEvidence, ...]
    style_definitions: tuple[StyleDefinition, ...]

    @property
    def degraded(self) -> bool:
        if self.bundle.degraded:
            return True
        return any(cell.error is not None for row in self.matrix.rows for cell in row.cells)

    def tables(self) -> TableSet:
        return build_tables(self.session, self.matrix, self.bundle, self.style_definitions)

    def to_dict(self) -> dict[str, Any]:
        return {
            "session": self.session.to_dict(),
            "matrix": self.matrix.to_dict(),
            "bundle": self.bundle.to_dict(),
            "evidences": [e.to_dict() for e in self.evidences],
            "style_definitions": [d.to_dict() for d in self.style_definitions],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PipelineResult":
        return cls(
            session=GenerationSession.from_dict(data["session"]),
            matrix=AnswerMatrix.from_dict(data["matrix"]),
            bundle=DescriptionBundle.from_dict(data["bundle"]),
            evidences=tuple(ImageEvidence.from_dict(e) for e in data["evidences"]),
            style_definitions=tuple(
                StyleDefinition.from_dict(d) for d in data["style_definitions"]
            ),
        )


class Pipeline:
    def __init__(
        self,
        gateway: ModelGateway,
        *,
        vocabularies: dict[str, Vocabulary] | None = None,
        detection_threshold: float = 0.3,
        parallelism: int = 8,
    ):
        self.gateway = gateway
        self.vocabularies = vocabularies or load_vocabularies()
        self.detection_threshold = detection_threshold
        self.parallelism = max(1, parallelism)

    def expected_row_count(self, verification_count: int) -> int:
        return verification_count + 10

    # -- full run ---------------------------------------------------------

    def run(self, session: GenerationSession, on_event: EventCallback | None = None) -> PipelineResult:
        """Execute the whole pipeline for a created session.

        Backend errors degrade individual cells where possible; errors that
        make the session unusable (e.g. fixture misses) propagate and the
        caller decides how to fail the session.
        """

        def emit(kind: str, payload: dict[str, Any]) -> None:
            if on_event is not None:
                on_event(kind, payload)

        emit("pipeline_started", {"session_id": session.session_id})
        session = session.advance(SessionStatus.EXTRACTING)

        verification = generate_verification_questions(self.gateway, session.prompt)

        with ThreadPoolExecutor(max_workers=self.parallelism) as pool:
            captions = list(pool.map(self.gateway.caption_image, session.images))
        session = session.with_captions(captions)

        caption_qa = self._caption_detail_answers(session)

        matrix = build_answer_matrix(
            self.gateway,
            session,
            verification,
            vocabularies=self.vocabularies,
            detection_threshold=self.detection_threshold,
            parallelism=self.parallelism,
            on_row_completed=lambda row: emit(
                "row_completed",
                {"session_id": session.session_id, "row": row.to_dict()},
            ),
        )

        session = session.advance(SessionStatus.SUMMARIZING)

        def summarize(row: MatrixRow) -> MatrixRow:
            summary = summarize_row(
                self.gateway, row.question, row.cells, image_count=session.image_count
            )
            return replace(row, summary=summary)

        with ThreadPoolExecutor(max_workers=self.parallelism) as pool:
            summarized = list(pool.map(summarize, matrix.rows))
        matrix = AnswerMatrix(rows=tuple(summarized), image_count=matrix.image_count)

        evidences = tuple(
            self._image_evidence(matrix, image.index, image.caption or "", caption_qa)
            for image in session.images
        )
        style_definitions = self._style_definitions(matrix)

        with ThreadPoolExecutor(max_workers=self.parallelism) as pool:
            per_image = tuple(
                pool.map(lambda e: compose_image_description(self.gateway, e), evidences)
            )

        if session.image_count >= 2:
            similarities, differences, degraded = compose_comparison(
                self.gateway,
                evidences,
                [row.summary for row in matrix.rows],
                image_count=session.image_count,
            )
        else:
            similarities, differences, degraded = "", "", False

        bundle = DescriptionBundle(
            per_image=per_image,
            similarities=similarities,
            differences=differences,
            degraded=degraded,
        )

        emit(
            "summaries_completed",
            {
                "session_id": session.session_id,
                "captions": list(captions),
                "row_summaries": [
                    {"question_id": row.question.question_id, "summary": row.summary.to_dict()}
                    for row in matrix.rows
                ],
                "bundle": bundle.to_dict(),
                "evidences": [e.to_dict() for e in evidences],
                "style_definitions": [d.to_dict() for d in style_definitions],
            },
        )

        session = session.advance(SessionStatus.READY)
        return PipelineResult(
            session=session,
            matrix=matrix,
            bundle=bundle,
            evidences=evidences,
            style_definitions=style_definitions,
        )

    # -- follow-up questions ------------------------------------------------

    def ask(
        self,
        result: PipelineResult,
        text: str,
        *,
        host_table: str = "content",
        on_event: EventCallback | None = None,
    ) -> tuple[PipelineResult, MatrixRow]:
        """Answer a user question across all images and append its row."""
        question = make_custom_question(text, next_custom_question_id(result.matrix))
        matrix, row = append_custom_question(
            self.gateway, result.matrix, question, result.session, host_table=host_table
        )
        summary = summarize_row(
            self.gateway, question, row.cells, image_count=result.session.image_count
        )
        row = replace(row, summary=summary)
        matrix = AnswerMatrix(rows=matrix.rows[:-1] + (row,), image_count=matrix.image_count)
        if on_event is not None:
            on_event(
                "question_asked",
                {
                    "session_id": result.session.session_id,
                    "row": row.to_dict(),
                    "host_table": host_table,
                },
            )
        return replace(result, matrix=matrix), row

    # -- internals ---------------------------------------------------------

    def _caption_detail_answers(
        self, session: GenerationSession
    ) -> dict[int, list[tuple[str, str]]]:
        """Generate per-image caption questions and answer them for that image only."""

        def for_image(image) -> list[tuple[str, str]]:
            questions = generate_caption_questions(self.gateway, image.caption or "", image.index)
            pairs = []
            for question in questions:
                try:
                    answer = self.gateway.vqa_answer(
                        VqaRequest(image=image, question=question.text)
                    )
                except FixtureMissError:
                    raise
                except BackendError as exc:
                    logger.warning("caption-detail answer failed: %s", exc)
                    continue
                pairs.append((question.text, answer))
            return pairs

        with ThreadPoolExecutor(max_workers=self.parallelism) as pool:
            answered = list(pool.map(for_image, session.images))
        return {image.index: pairs for image, pairs in zip(session.images, answered)}

    def _image_evidence(
        self,
        matrix: AnswerMatrix,
        image_index: int,
        caption: str,
        caption_qa: dict[int, list[tuple[str, str]]],
    ) -> ImageEvidence:
        qa_pairs: list[tuple[str, str]] = []
        objects: tuple[str, ...] = ()
        style_scores: list[tuple[str, tuple[str, ...]]] = []

        for row in matrix.rows:
            cell = row.cells[image_index - 1]
            if cell.error is not None:
                continue
            question = row.question
            if question.route == QuestionRoute.VQA and question.kind in (
                QuestionKind.VERIFICATION,
                QuestionKind.GUIDELINE,
            ):
                qa_pairs.append((question.text, cell.display_text()))
            elif question.route == QuestionRoute.OBJECT_DETECTION:
                objects = tuple(cell.value)
            elif question.route == QuestionRoute.EMBEDDING_VOCAB:
                choices = tuple(choice for choice, _score in cell.value)
                style_scores.append((question.category or "", choices))

        qa_pairs.extend(caption_qa.get(image_index, []))
        return ImageEvidence(
            image_index=image_index,
            caption=caption,
            qa_pairs=tuple(qa_pairs),
            objects=objects,
            style_scores=tuple(style_scores),
        )

    def _style_definitions(self, matrix: AnswerMatrix) -> tuple[StyleDefinition, ...]:
        definer = StyleDefiner(self.gateway)
        definitions = []
        seen: set[tuple[str, str]] = set()
        for row in matrix.rows:
            category = row.question.category
            if category not in DEFINED_STYLE_CATEGORIES:
                continue
            for cell in row.cells:
                if cell.error is not None or cell.provenance != Provenance.EMBEDDING_SCORING:
                    continue
                for choice, _score in cell.value:
                    key = (category, choice)
                    if key in seen:
                        continue
                    seen.add(key)
                    definition = definer.define(category, choice)
                    if definition is not None:
                        definitions.append(definition)
        return tuple(definitions)
