import json

import pytest
from hypothesis import given, strategies as st

from promptgrid.errors import (
    EmptyQuestionError,
    FixtureMissError,
    GenerationFailedError,
    UnparseableListError,
)
from promptgrid.gateway import GatewayMode, ModelGateway
from promptgrid.model import QuestionKind, QuestionRoute
from promptgrid.questions import (
    GuidelineCatalog,
    generate_caption_questions,
    generate_verification_questions,
    guideline_questions,
    load_guideline_catalog,
    make_custom_question,
    parse_numbered_list,
)
from promptgrid.scripted import ScriptedBackend

from helpers import TESTS_DATA, TUTORIAL_PROMPT


def live(backend):
    return ModelGateway(GatewayMode.LIVE, backend=backend)


class TestParseNumberedList:
    def test_committed_corpus(self):
        corpus = json.loads((TESTS_DATA / "numbered_list_corpus.json").read_text("utf-8"))
        assert len(corpus["cases"]) >= 30
        for case in corpus["cases"]:
            assert parse_numbered_list(case["input"]) == case["expected"], case["name"]

    def test_empty_input_unparseable(self):
        with pytest.raises(UnparseableListError):
            parse_numbered_list("")
        with pytest.raises(UnparseableListError):
            parse_numbered_list("\n\n  \n")

    @given(st.text(max_size=300))
    def test_idempotent_on_rejoined_output(self, text):
        try:
            once = parse_numbered_list(text)
        except UnparseableListError:
            return
        assert parse_numbered_list("\n".join(once)) == once


class TestVerificationQuestions:
    def test_tutorial_prompt_produces_numbered_questions(self):
        backend = ScriptedBackend(
            verification_questions={
                TUTORIAL_PROMPT: [
                    "Is there a chef in the image?",
                    "How old is the young chef?",
                    "Is the young chef cooking the food?",
                    "Are the parents present in the image?",
                ]
            }
        )
        questions = generate_verification_questions(live(backend), TUTORIAL_PROMPT)
        assert [q.text for q in questions] == [
            "Is there a chef in the image?",
            "How old is the young chef?",
            "Is the young chef cooking the food?",
            "Are the parents present in the image?",
        ]
        assert all(q.kind == QuestionKind.VERIFICATION for q in questions)
        assert all(q.route == QuestionRoute.VQA for q in questions)
        assert [q.question_id for q in questions] == [f"verify-{i}" for i in range(1, 5)]

    def test_case_insensitive_dedup(self):
        backend = ScriptedBackend(chat_overrides={})
        backend.verification_questions["p"] = ["A?", "a?", "B?"]
        questions = generate_verification_questions(live(backend), "p")
        assert [q.text for q in questions] == ["A?", "B?"]

    def test_backend_failure_becomes_generation_failed(self):
        backend = ScriptedBackend(strict=True)
        with pytest.raises(GenerationFailedError):
            generate_verification_questions(live(backend), "p")

    def test_fixture_miss_passes_through(self, tmp_path):
        from promptgrid.gateway import FixtureStore

        gateway = ModelGateway(GatewayMode.REPLAY, store=FixtureStore(tmp_path))
        with pytest.raises(FixtureMissError):
            generate_verification_questions(gateway, "p")


class TestCaptionQuestions:
    def test_capped_at_ten(self):
        backend = ScriptedBackend(
            caption_questions={"cap": [f"Q{i}?" for i in range(1, 13)]}
        )
        questions = generate_caption_questions(live(backend), "cap", image_index=2)
        assert len(questions) == 10
        assert all(q.image_index == 2 for q in questions)
        assert all(q.kind == QuestionKind.CAPTION_DETAIL for q in questions)

    def test_fewer_than_ten_tolerated(self):
        backend = ScriptedBackend(caption_questions={"cap": ["A?", "B?", "C?"]})
        assert len(generate_caption_questions(live(backend), "cap", image_index=1)) == 3


class TestCustomQuestions:
    def test_question_mark_appended(self):
        q = make_custom_question("What color is the background")
        assert q.text == "What color is the background?"
        assert q.kind == QuestionKind.CUSTOM
        assert q.route == QuestionRoute.VQA

    def test_existing_question_mark_unchanged(self):
        q = make_custom_question("Is the data showed falling or rising?")
        assert q.text == "Is the data showed falling or rising?"

    def test_blank_rejected(self):
        with pytest.raises(EmptyQuestionError):
            make_custom_question("   ")


class TestGuidelineCatalog:
    def test_ten_questions_in_fixed_order(self):
        questions = guideline_questions()
        assert len(questions) == 10
        assert [q.category for q in questions] == [
            "Setting", "Subjects", "Objects", "Emotion", "Usage",
            "Medium", "Lighting", "Perspective", "Colors", "Errors",
        ]

    def test_objects_row_routes_to_detection(self):
        entry = guideline_questions()[2]
        assert entry.category == "Objects"
        assert entry.text == "What are the objects in this image?"
        assert entry.route == QuestionRoute.OBJECT_DETECTION

    def test_routes_match_model_assignments(self):
        routes = {q.category: q.route for q in guideline_questions()}
        for category in ("Setting", "Subjects", "Emotion", "Usage", "Colors"):
            assert routes[category] == QuestionRoute.VQA
        for category in ("Medium", "Lighting", "Perspective", "Errors"):
            assert routes[category] == QuestionRoute.EMBEDDING_VOCAB

    def test_medium_question_text(self):
        medium = guideline_questions()[5]
        assert medium.text == "What is the medium of the image?"
        assert medium.vocabulary_ref == "medium"

    def test_catalog_is_constant(self):
        assert guideline_questions() == guideline_questions()

    def test_catalog_loadable_from_file(self, tmp_path):
        entries = [
            {"category": c, "text": f"What about {c.lower()}?"}
            for c in ("Setting", "Subjects", "Objects", "Emotion", "Usage",
                      "Medium", "Lighting", "Perspective", "Colors", "Errors")
        ]
        path = tmp_path / "catalog.json"
        path.write_text(json.dumps({"entries": entries}), "utf-8")
        catalog = load_guideline_catalog(path)
        assert catalog.questions()[0].text == "What about setting?"

    def test_wrong_category_order_rejected(self):
        with pytest.raises(ValueError):
            GuidelineCatalog(entries=(("Setting", "q", QuestionRoute.VQA),))
