"""Instruction templates sent to the text-generation backend.

The wording lives in ``data/prompt_templates.json`` so any change to it is
a one-file diff. Count placeholders are rendered as words ("four images")
because that is how the instructions are phrased for the canonical
four-candidate case.
"""

from __future__ import annotations

import json
from importlib import resources

_COUNT_WORDS = ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight"]


def _load_templates() -> dict[str, str]:
    text = resources.files("promptgrid.data").joinpath("prompt_templates.json").read_text("utf-8")
    return json.loads(text)


TEMPLATES = _load_templates()

SYSTEM_ROLE = TEMPLATES["system_role"]
VERIFICATION_QUESTIONS_INSTRUCTION = TEMPLATES["verification_questions"]
VQA_PREAMBLE = TEMPLATES["vqa_preamble"]
CAPTION_QUESTIONS_INSTRUCTION = TEMPLATES["caption_questions"]
IMAGE_DESCRIPTION_INSTRUCTION = TEMPLATES["image_description"]
DEFAULT_TEMPERATURE = 0.8


def count_word(n: int) -> str:
    return _COUNT_WORDS[n] if 0 <= n < len(_COUNT_WORDS) else str(n)


def row_summary_instruction(image_count: int) -> str:
    return TEMPLATES["row_summary"].format(count=count_word(image_count))


def comparison_instruction(image_count: int) -> str:
    return TEMPLATES["comparison"].format(count=count_word(image_count))


def style_definition_instruction(category: str, choice: str) -> str:
    return TEMPLATES["style_definition"].format(category=category, choice=choice)


def shorten_instruction(limit: int) -> str:
    return TEMPLATES["shorten_instruction"].format(limit=limit)
