"""Shared test utilities: corpus access and independent oracles."""

from __future__ import annotations

import json
from pathlib import Path

from promptgrid.gateway import FixtureStore, GatewayMode, ModelGateway
from promptgrid.model import (
    AnswerMatrix,
    QuestionKind,
    QuestionRoute,
    validate_session_input,
)
from promptgrid.pipeline import Pipeline, PipelineResult
from promptgrid.summarize import ImageEvidence

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES_DIR = REPO_ROOT / "fixtures"
STORE_DIR = FIXTURES_DIR / "store"
TESTS_DATA = Path(__file__).resolve().parent / "data"

TUTORIAL_PROMPT = "A young chef is cooking dinner for his parents"

# Filled by the acceptance criteria as they run; printed by a terminal
# summary hook in conftest so the lines survive pytest's output capture.
ACCEPTANCE_REPORT: dict[str, str] = {}


def corpus_sessions() -> list[dict]:
    manifest = json.loads((FIXTURES_DIR / "corpus.json").read_text("utf-8"))
    return manifest["sessions"]


def corpus_image_paths(spec: dict) -> list[str]:
    return [str(FIXTURES_DIR / rel) for rel in spec["images"]]


def replay_gateway() -> ModelGateway:
    return ModelGateway(GatewayMode.REPLAY, store=FixtureStore(STORE_DIR))


def run_corpus_session(spec: dict, gateway: ModelGateway | None = None) -> PipelineResult:
    """Run one manifest session end to end against the committed fixtures."""
    gateway = gateway or replay_gateway()
    pipeline = Pipeline(gateway)
    session = validate_session_input(spec["prompt"], corpus_image_paths(spec))
    result = pipeline.run(session)
    for custom in spec["custom_questions"]:
        result, _ = pipeline.ask(result, custom["text"], host_table=custom["host_table"])
    return result


# --- independent oracles -----------------------------------------------------


def brute_force_rank(
    image_vector: list[float],
    choices: list[str],
    choice_vectors: list[list[float]],
    threshold: float,
    top_k: int,
) -> list[tuple[str, float]]:
    """Reference scoring: every pairwise similarity, filter, sort, truncate.

    Written independently of the implementation: explicit accumulation loop,
    full sort of all pairs with vocabulary-order tie break.
    """
    scored = []
    for index in range(len(choices)):
        total = 0.0
        for a, b in zip(image_vector, choice_vectors[index]):
            total += a * b
        scored.append((index, total))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    kept = [(choices[i], s) for i, s in scored if s >= threshold]
    return kept[:top_k]


def answered_categories(matrix: AnswerMatrix, image_index: int) -> set[str]:
    answered = set()
    for row in matrix.rows:
        if row.question.kind != QuestionKind.GUIDELINE:
            continue
        if row.cells[image_index - 1].error is None:
            answered.add(row.question.category)
    return answered


def assert_evidence_covers(
    evidence: ImageEvidence, matrix: AnswerMatrix, image_index: int
) -> None:
    """Every answered guideline category must surface a datum in the evidence."""
    qa = set(evidence.qa_pairs)
    for row in matrix.rows:
        if row.question.kind != QuestionKind.GUIDELINE:
            continue
        cell = row.cells[image_index - 1]
        if cell.error is not None:
            continue
        category = row.question.category
        if row.question.route == QuestionRoute.VQA:
            assert (row.question.text, cell.display_text()) in qa, (
                f"image {image_index}: missing {category} answer in evidence"
            )
        elif row.question.route == QuestionRoute.OBJECT_DETECTION:
            assert evidence.objects == tuple(cell.value), (
                f"image {image_index}: objects evidence does not match the matrix"
            )
        else:
            expected = tuple(choice for choice, _ in cell.value)
            assert evidence.style_for(category) == expected, (
                f"image {image_index}: {category} scores missing from evidence"
            )
