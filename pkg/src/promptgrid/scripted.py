"""A deterministic in-process backend.

Used to author fixture sets (run it under a recording gateway and commit
the store) and to drive tests without any live endpoint. Answers come from
explicit tables keyed by image content hash and question text; anything
not scripted is synthesized deterministically from the request digest, so
whole-pipeline runs always succeed.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any

from .errors import BackendUnavailableError
from .extraction import Vocabulary
from .gateway import (
    CaptionRequest,
    ChatRequest,
    DetectionRequest,
    EmbeddingRequest,
    VqaRequest,
)
from .model import digest_payload
from .prompts import (
    CAPTION_QUESTIONS_INSTRUCTION,
    IMAGE_DESCRIPTION_INSTRUCTION,
    VERIFICATION_QUESTIONS_INSTRUCTION,
)

_STYLE_DEFINITION_RE = re.compile(
    r"Describe the definition and the usage of the following (?P<category>.+) "
    r"in one sentence: (?P<choice>.+)$"
)


def _basis_vector(dim: int, index: int) -> list[float]:
    vector = [0.0] * dim
    vector[index] = 1.0
    return vector


@dataclass
class EmbeddingPlan:
    """Synthetic embedding space where choice texts are basis vectors.

    Image vectors place each wanted score directly on the matching choice
    axis and absorb the remainder on a shared filler axis, so the dot
    product with a choice embedding recovers the planned score.
    """

    dim: int
    text_vectors: dict[str, list[float]]
    image_vectors: dict[str, list[float]]

    @classmethod
    def build(
        cls,
        vocabularies: dict[str, Vocabulary],
        image_scores: dict[str, dict[str, dict[str, float]]],
        *,
        dim: int = 64,
    ) -> "EmbeddingPlan":
        choice_axis: dict[str, int] = {}
        for name in sorted(vocabularies):
            for choice in vocabularies[name].choices:
                text = vocabularies[name].choice_text(choice)
                choice_axis.setdefault(text, len(choice_axis))
        filler = len(choice_axis)
        if filler >= dim:
            raise ValueError(f"dim {dim} too small for {filler} distinct choices")

        text_vectors = {text: _basis_vector(dim, axis) for text, axis in choice_axis.items()}
        image_vectors = {}
        for image_hash, per_vocab in image_scores.items():
            vector = [0.0] * dim
            weight = 0.0
            for vocab_name, scores in per_vocab.items():
                vocab = vocabularies[vocab_name]
                for choice, score in scores.items():
                    vector[choice_axis[vocab.choice_text(choice)]] = score
                    weight += score * score
            if weight > 1.0:
                raise ValueError(f"scores for image {image_hash} exceed unit norm")
            vector[filler] = math.sqrt(1.0 - weight)
            image_vectors[image_hash] = vector
        return cls(dim=dim, text_vectors=text_vectors, image_vectors=image_vectors)


def _pseudo_unit_vector(seed: str, dim: int) -> list[float]:
    """Deterministic direction derived from a digest; no RNG state involved."""
    values = []
    material = seed
    while len(values) < dim:
        material = digest_payload({"seed": material})
        for i in range(0, 32, 8):
            values.append(int(material[i : i + 8], 16) / 0xFFFFFFFF - 0.5)
            if len(values) == dim:
                break
    norm = math.sqrt(sum(v * v for v in values))
    return [v / norm for v in values]


@dataclass
class ScriptedBackend:
    """Fully deterministic stand-in for the five model capabilities."""

    verification_questions: dict[str, list[str]] = field(default_factory=dict)
    caption_questions: dict[str, list[str]] = field(default_factory=dict)
    row_summaries: dict[str, str] = field(default_factory=dict)
    image_descriptions: dict[str, str] = field(default_factory=dict)
    comparisons: dict[str, str] = field(default_factory=dict)  # keyed by "Image 1" caption
    style_definitions: dict[tuple[str, str], str] = field(default_factory=dict)
    chat_overrides: dict[str, str] = field(default_factory=dict)  # exact user_content match
    vqa_answers: dict[tuple[str, str], str] = field(default_factory=dict)  # (hash, question)
    captions: dict[str, str] = field(default_factory=dict)  # image hash -> caption
    detections: dict[str, list[tuple[str, float]]] = field(default_factory=dict)
    embedding_plan: EmbeddingPlan | None = None
    embedding_dim: int = 64
    strict: bool = False  # unknown requests raise instead of auto-answering
    calls: list[tuple[str, dict[str, Any]]] = field(default_factory=list)

    # -- capabilities -----------------------------------------------------

    def chat(self, request: ChatRequest) -> str:
        self._record("chat", request)
        content = request.user_content
        if content in self.chat_overrides:
            return self.chat_overrides[content]

        instruction, _, payload = content.partition("\n\n")
        if instruction == VERIFICATION_QUESTIONS_INSTRUCTION:
            questions = self.verification_questions.get(payload)
            if questions is None:
                questions = self._auto_questions(payload, 4)
            return "\n".join(f"{i}. {q}" for i, q in enumerate(questions, start=1))

        if instruction == CAPTION_QUESTIONS_INSTRUCTION:
            caption = payload.removeprefix("Caption: ")
            questions = self.caption_questions.get(caption)
            if questions is None:
                questions = self._auto_questions(caption, 10)
            return "\n".join(f"{i}. {q}" for i, q in enumerate(questions, start=1))

        if instruction.startswith("Below are the answers of"):
            question = self._payload_line(payload, "Question: ")
            if question in self.row_summaries:
                return self.row_summaries[question]
            return self._auto_row_summary(payload)

        if instruction == IMAGE_DESCRIPTION_INSTRUCTION:
            caption = self._payload_line(payload, "Caption: ")
            if caption in self.image_descriptions:
                return self.image_descriptions[caption]
            return self._auto(f"A generated image. {caption}", content)

        if instruction.startswith("Below is the information for"):
            first_caption = self._payload_line(payload, "Caption: ")
            if first_caption in self.comparisons:
                return self.comparisons[first_caption]
            token = digest_payload({"comparison": content})[:6]
            return self._auto(
                f"Similarities: The images share a common scene ({token}).\n\n"
                f"Differences: Each image varies in layout and palette ({token}).",
                "comparison",
            )

        match = _STYLE_DEFINITION_RE.search(content)
        if match:
            key = (match.group("category"), match.group("choice"))
            if key in self.style_definitions:
                return self.style_definitions[key]
            return self._auto(
                f"{match.group('choice').capitalize()} is a {match.group('category')} "
                f"option often used in generated imagery.",
                content,
            )

        return self._auto("Understood.", content)

    def vqa(self, request: VqaRequest) -> str:
        self._record("vqa", request)
        key = (request.image.content_hash, request.question)
        if key in self.vqa_answers:
            return self.vqa_answers[key]
        return self._auto(f"answer-{digest_payload(list(key))[:6]}", key)

    def caption(self, request: CaptionRequest) -> str:
        self._record("caption", request)
        image_hash = request.image.content_hash
        if image_hash in self.captions:
            return self.captions[image_hash]
        return self._auto(f"A generated scene ({image_hash[:6]}).", image_hash)

    def detect(self, request: DetectionRequest) -> list[tuple[str, float]]:
        self._record("detect", request)
        image_hash = request.image.content_hash
        if image_hash in self.detections:
            return list(self.detections[image_hash])
        if self.strict:
            raise BackendUnavailableError(f"no scripted detections for {image_hash}")
        return [
            (f"object-{image_hash[:4]}", 0.9),
            (f"shape-{image_hash[4:8]}", 0.45),
            (f"texture-{image_hash[8:12]}", 0.2),
        ]

    def embed(self, request: EmbeddingRequest) -> list[float]:
        self._record("embed", request)
        plan = self.embedding_plan
        if request.text is not None:
            if plan and request.text in plan.text_vectors:
                return list(plan.text_vectors[request.text])
            if self.strict:
                raise BackendUnavailableError(f"no scripted embedding for text {request.text!r}")
            return _pseudo_unit_vector(
                f"text:{request.model_space}:{request.text}",
                plan.dim if plan else self.embedding_dim,
            )
        image_hash = request.image.content_hash
        if plan and image_hash in plan.image_vectors:
            return list(plan.image_vectors[image_hash])
        if self.strict:
            raise BackendUnavailableError(f"no scripted embedding for image {image_hash}")
        return _pseudo_unit_vector(
            f"image:{request.model_space}:{image_hash}",
            plan.dim if plan else self.embedding_dim,
        )

    # -- helpers ----------------------------------------------------------

    def call_count(self, capability: str) -> int:
        return sum(1 for name, _ in self.calls if name == capability)

    def _record(self, capability: str, request) -> None:
        self.calls.append((capability, request.canonical()))

    def _auto(self, text: str, key: Any) -> str:
        if self.strict:
            raise BackendUnavailableError(f"no scripted response for {key!r}")
        return text

    def _auto_questions(self, seed: str, count: int) -> list[str]:
        if self.strict:
            raise BackendUnavailableError(f"no scripted questions for {seed!r}")
        token = digest_payload({"questions": seed})[:4]
        return [f"Is detail {token}-{i} visible in the image?" for i in range(1, count + 1)]

    def _auto_row_summary(self, payload: str) -> str:
        if self.strict:
            raise BackendUnavailableError("no scripted row summary")
        token = digest_payload({"summary": payload})[:6]
        return f"The images give differing answers to this question ({token})."

    @staticmethod
    def _payload_line(payload: str, prefix: str) -> str:
        for line in payload.splitlines():
            if line.startswith(prefix):
                return line[len(prefix):]
        return ""
