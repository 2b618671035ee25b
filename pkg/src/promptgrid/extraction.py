"""Answering engine: routes every question to VQA, object detection or
embedding-vocabulary scoring and assembles the answers into a matrix."""

from __future__ import annotations

import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable

from .errors import BackendError, FixtureMissError
from .gateway import ChatRequest, DetectionRequest, EmbeddingVector, ModelGateway
from .model import (
    AnswerCell,
    AnswerMatrix,
    GenerationSession,
    ImageCandidate,
    MatrixRow,
    Provenance,
    Question,
    QuestionKind,
    QuestionRoute,
)
from .prompts import SYSTEM_ROLE, style_definition_instruction
from .questions import guideline_questions

logger = logging.getLogger(__name__)

VOCABULARY_NAMES = ("medium", "lighting", "perspective", "errors")
DEFAULT_SCORE_THRESHOLD = 0.18
DEFAULT_TOP_K = 3


@dataclass(frozen=True)
class Vocabulary:
    """A fixed list of style answer choices scored against image embeddings."""

    name: str
    choices: tuple[str, ...]
    threshold: float = DEFAULT_SCORE_THRESHOLD
    top_k: int = DEFAULT_TOP_K
    template: str = "{}"  # text actually embedded for each choice

    def __post_init__(self):
        if not self.choices:
            raise ValueError("vocabulary needs at least one choice")
        if len(set(self.choices)) != len(self.choices):
            raise ValueError(f"vocabulary {self.name!r} has duplicate choices")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must be within (0, 1)")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")

    def choice_text(self, choice: str) -> str:
        return self.template.format(choice)


def load_vocabulary(path: str | Path) -> Vocabulary:
    data = json.loads(Path(path).read_text("utf-8"))
    return Vocabulary(
        name=data["name"],
        choices=tuple(data["choices"]),
        threshold=float(data.get("threshold", DEFAULT_SCORE_THRESHOLD)),
        top_k=int(data.get("top_k", DEFAULT_TOP_K)),
        template=data.get("template", "{}"),
    )


def load_vocabularies(directory: str | Path | None = None) -> dict[str, Vocabulary]:
    """Load the four style vocabularies, from a directory or the packaged defaults."""
    vocabularies = {}
    if directory is None:
        package = resources.files("promptgrid.data").joinpath("vocabularies")
        for name in VOCABULARY_NAMES:
            data = json.loads(package.joinpath(f"{name}.json").read_text("utf-8"))
            vocabularies[data["name"]] = Vocabulary(
                name=data["name"],
                choices=tuple(data["choices"]),
                threshold=float(data.get("threshold", DEFAULT_SCORE_THRESHOLD)),
                top_k=int(data.get("top_k", DEFAULT_TOP_K)),
                template=data.get("template", "{}"),
            )
        return vocabularies
    for path in sorted(Path(directory).glob("*.json")):
        vocab = load_vocabulary(path)
        vocabularies[vocab.name] = vocab
    return vocabularies


# --- scoring -----------------------------------------------------------------


def rank_choices(
    image_embedding: EmbeddingVector,
    choice_embeddings: Iterable[tuple[str, EmbeddingVector]],
    *,
    threshold: float,
    top_k: int,
) -> list[tuple[str, float]]:
    """Score choices by dot product with the image, filter, sort, truncate.

    Ties at equal score keep vocabulary order, so output is stable under
    permutation of the input pairs with equal scores.
    """
    scored = []
    for position, (choice, embedding) in enumerate(choice_embeddings):
        score = image_embedding.dot(embedding)
        if score >= threshold:
            scored.append((position, choice, score))
    scored.sort(key=lambda item: (-item[2], item[0]))
    return [(choice, score) for _, choice, score in scored[:top_k]]


def score_vocabulary(
    gateway: ModelGateway, image: ImageCandidate, vocab: Vocabulary
) -> list[tuple[str, float]]:
    """Rank a vocabulary's choices against one image.

    An empty result is not an error; it means no choice cleared the
    threshold and renders as "none detected".
    """
    image_embedding = gateway.embed_image(image)
    pairs = [(choice, gateway.embed_text(vocab.choice_text(choice))) for choice in vocab.choices]
    return rank_choices(image_embedding, pairs, threshold=vocab.threshold, top_k=vocab.top_k)


# --- object extraction ---------------------------------------------------------


def dedupe_detections(detections: Iterable[tuple[str, float]]) -> list[str]:
    """Collapse raw detections to unique labels ordered by best confidence.

    First occurrence wins the position among equal-confidence labels.
    """
    best: dict[str, float] = {}
    order: dict[str, int] = {}
    for position, (label, confidence) in enumerate(detections):
        if label not in best:
            best[label] = confidence
            order[label] = position
        elif confidence > best[label]:
            best[label] = confidence
    return sorted(best, key=lambda label: (-best[label], order[label]))


def extract_objects(
    gateway: ModelGateway, image: ImageCandidate, *, confidence_threshold: float = 0.3
) -> list[str]:
    detections = gateway.detect_objects(
        DetectionRequest(image=image, confidence_threshold=confidence_threshold)
    )
    return dedupe_detections(detections)


# --- style definitions -----------------------------------------------------------


class StyleDefiner:
    """Generates one-sentence definitions for style choices, cached per run.

    Definition failures degrade to "no definition": the table must never
    block on this extra.
    """

    def __init__(self, gateway: ModelGateway):
        self.gateway = gateway
        self._cache: dict[tuple[str, str], StyleDefinition | None] = {}
        self._lock = threading.Lock()

    def define(self, category: str, choice: str) -> "StyleDefinition | None":
        key = (category, choice)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        definition = self._generate(category, choice)
        with self._lock:
            self._cache.setdefault(key, definition)
            return self._cache[key]

    def _generate(self, category: str, choice: str) -> "StyleDefinition | None":
        request = ChatRequest(
            system_role=SYSTEM_ROLE,
            user_content=style_definition_instruction(category, choice),
        )
        try:
            text = self.gateway.chat_complete(request)
        except BackendError as exc:
            logger.warning("definition for %s/%s unavailable: %s", category, choice, exc)
            return None
        return StyleDefinition(category=category, choice=choice, definition_text=text.strip())


@dataclass(frozen=True)
class StyleDefinition:
    category: str
    choice: str
    definition_text: str

    def to_dict(self) -> dict:
        return {
            "category": self.category,
            "choice": self.choice,
            "definition_text": self.definition_text,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StyleDefinition":
        return cls(
            category=data["category"],
            choice=data["choice"],
            definition_text=data["definition_text"],
        )


# --- row answering -----------------------------------------------------------------


def _vqa_cell(gateway: ModelGateway, question: Question, image: ImageCandidate) -> AnswerCell:
    from .gateway import VqaRequest

    try:
        answer = gateway.vqa_answer(VqaRequest(image=image, question=question.text))
    except FixtureMissError:
        raise
    except BackendError as exc:
        return AnswerCell(
            question_id=question.question_id,
            image_index=image.index,
            value="",
            provenance=Provenance.VQA_BACKEND,
            error=str(exc),
        )
    return AnswerCell(
        question_id=question.question_id,
        image_index=image.index,
        value=answer,
        provenance=Provenance.VQA_BACKEND,
        raw=answer,
    )


def answer_vqa_row(
    gateway: ModelGateway, question: Question, session: GenerationSession
) -> list[AnswerCell]:
    """One VQA answer per image, in image order, with the anti-hallucination
    preamble applied. A failed cell carries an error marker instead of
    failing the session."""
    if question.route != QuestionRoute.VQA:
        raise ValueError(f"question {question.question_id!r} does not route to vqa")
    return [_vqa_cell(gateway, question, image) for image in session.images]


def _detection_cell(
    gateway: ModelGateway, question: Question, image: ImageCandidate, threshold: float
) -> AnswerCell:
    try:
        raw = gateway.detect_objects(
            DetectionRequest(image=image, confidence_threshold=threshold)
        )
    except FixtureMissError:
        raise
    except BackendError as exc:
        return AnswerCell(
            question_id=question.question_id,
            image_index=image.index,
            value=(),
            provenance=Provenance.DETECTION_BACKEND,
            error=str(exc),
        )
    return AnswerCell(
        question_id=question.question_id,
        image_index=image.index,
        value=tuple(dedupe_detections(raw)),
        provenance=Provenance.DETECTION_BACKEND,
        raw=[[label, conf] for label, conf in raw],
    )


def _embedding_cell(
    gateway: ModelGateway, question: Question, image: ImageCandidate, vocab: Vocabulary
) -> AnswerCell:
    try:
        ranked = score_vocabulary(gateway, image, vocab)
    except FixtureMissError:
        raise
    except BackendError as exc:
        return AnswerCell(
            question_id=question.question_id,
            image_index=image.index,
            value=(),
            provenance=Provenance.EMBEDDING_SCORING,
            error=str(exc),
        )
    return AnswerCell(
        question_id=question.question_id,
        image_index=image.index,
        value=tuple(ranked),
        provenance=Provenance.EMBEDDING_SCORING,
        raw=[[choice, score] for choice, score in ranked],
    )


def answer_question_row(
    gateway: ModelGateway,
    question: Question,
    session: GenerationSession,
    *,
    vocabularies: dict[str, Vocabulary] | None = None,
    detection_threshold: float = 0.3,
) -> list[AnswerCell]:
    """Answer one question for every image via the question's route."""
    if question.route == QuestionRoute.VQA:
        return answer_vqa_row(gateway, question, session)
    if question.route == QuestionRoute.OBJECT_DETECTION:
        return [
            _detection_cell(gateway, question, image, detection_threshold)
            for image in session.images
        ]
    vocabularies = vocabularies or load_vocabularies()
    vocab = vocabularies[question.vocabulary_ref]
    return [_embedding_cell(gateway, question, image, vocab) for image in session.images]


def build_answer_matrix(
    gateway: ModelGateway,
    session: GenerationSession,
    verification_questions: list[Question],
    *,
    vocabularies: dict[str, Vocabulary] | None = None,
    detection_threshold: float = 0.3,
    parallelism: int = 8,
    on_row_completed=None,
) -> AnswerMatrix:
    """Build the full matrix: verification rows then the guideline catalog.

    Rows fan out across a bounded pool but the returned order is fixed by
    the question list, so matrix construction is deterministic.
    """
    questions = list(verification_questions) + guideline_questions()
    vocabularies = vocabularies or load_vocabularies()

    def answer(question: Question) -> MatrixRow:
        cells = answer_question_row(
            gateway,
            question,
            session,
            vocabularies=vocabularies,
            detection_threshold=detection_threshold,
        )
        return MatrixRow(question=question, summary=None, cells=tuple(cells))

    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        rows = list(pool.map(answer, questions))

    for row in rows:
        if on_row_completed is not None:
            on_row_completed(row)
    return AnswerMatrix(rows=tuple(rows), image_count=session.image_count)


def append_custom_question(
    gateway: ModelGateway,
    matrix: AnswerMatrix,
    question: Question,
    session: GenerationSession,
    *,
    host_table: str = "content",
) -> tuple[AnswerMatrix, MatrixRow]:
    """Answer a custom question across all images and append it as a new row.

    Existing rows are untouched; asking the same text twice appends twice.
    """
    if question.kind != QuestionKind.CUSTOM:
        raise ValueError("only custom questions can be appended after the build")
    cells = answer_vqa_row(gateway, question, session)
    row = MatrixRow(question=question, summary=None, cells=tuple(cells), host_table=host_table)
    return matrix.with_row(row), row


def next_custom_question_id(matrix: AnswerMatrix) -> str:
    count = sum(1 for row in matrix.rows if row.question.kind == QuestionKind.CUSTOM)
    return f"custom-{count + 1}"
