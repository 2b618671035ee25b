#!/usr/bin/env python3
"""Build the committed fixture corpus.

Creates the corpus images, runs the full pipeline for each corpus session
against a scripted backend under a recording gateway, and leaves behind:

    fixtures/images/*.png       deterministic input images
    fixtures/store/*.json       one interaction record per request digest
    fixtures/corpus.json        manifest of sessions + custom questions

Re-run after changing prompts, templates or scripted content:
    python scripts/make_fixtures.py
"""

from __future__ import annotations

import json
import shutil
import struct
import sys
import zlib
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from promptgrid.extraction import load_vocabularies
from promptgrid.gateway import FixtureStore, GatewayMode, ModelGateway
from promptgrid.model import sha256_hex, validate_session_input
from promptgrid.pipeline import Pipeline
from promptgrid.scripted import EmbeddingPlan, ScriptedBackend

FIXTURES = REPO / "fixtures"

TUTORIAL_PROMPT = "A young chef is cooking dinner for his parents"

VERIFICATION_QUESTIONS = [
    "Is there a chef in the image?",
    "How old is the young chef?",
    "Is the young chef cooking the food?",
    "Are the parents present in the image?",
]

CAPTIONS = [
    "A father cooking with his two children in a kitchen.",
    "A young boy wearing a chef's hat preparing a salad in a modern kitchen.",
    "A family cooking together on a gas stove.",
    "A family preparing food in the kitchen with a window.",
]

# (question, answers for images 1..4) for verification, guideline-VQA and
# the custom follow-up question.
VQA_TABLE = [
    ("Is there a chef in the image?", ["Yes", "Yes", "Yes", "Yes"]),
    ("How old is the young chef?", ["Young kid", "Young kid", "Young kid", "Young man"]),
    ("Is the young chef cooking the food?", ["Yes", "Yes", "Yes", "Yes"]),
    ("Are the parents present in the image?", ["Yes", "No", "Yes", "Yes"]),
    ("What is the setting of the image?", ["Kitchen", "Kitchen", "Kitchen", "Kitchen"]),
    (
        "What are the subjects of the image?",
        [
            "Father and children",
            "Chef, kitchen, and vegetables",
            "Father, mother, and son",
            "Father, mother, and son",
        ],
    ),
    ("What is the emotion of the image?", ["Happy", "Happy", "Happy", "Happy"]),
    (
        "Where would this image likely be used?",
        ["On a website", "In a cookbook", "A children's cooking class", "On a website"],
    ),
    (
        "What are the main colors used in this image?",
        ["Brown, blue, yellow", "Black, white, red, green", "Blue and white", "Red, yellow, green"],
    ),
    ("What color is the background?", ["light brown", "black", "blue", "light brown"]),
]

CAPTION_QUESTIONS = {
    CAPTIONS[0]: [
        ("How many people are in the image?", "Three"),
        ("What is the father wearing?", "An apron"),
        ("How old do the children look?", "Young kids"),
        ("What are they cooking?", "A stew"),
        ("What appliances are visible in the kitchen?", "A stove"),
        ("What is on the counter?", "Cups and bowls"),
        ("Are the children helping with the cooking?", "Yes"),
        ("What time of day does it appear to be?", "Daytime"),
        ("What colors dominate the scene?", "Brown and blue"),
        ("Is the kitchen tidy or messy?", "Tidy"),
    ],
    CAPTIONS[1]: [
        ("What is the boy wearing?", "A chef's hat and apron"),
        ("How old does the boy look?", "About ten"),
        ("What ingredients are on the counter?", "Tomatoes and lettuce"),
        ("What utensil is the boy using?", "A knife"),
        ("Is anyone else in the kitchen?", "No"),
        ("What style is the kitchen?", "Modern"),
        ("What is the boy's expression?", "Happy"),
        ("Is there a window in the kitchen?", "No"),
        ("What is in the sink?", "Nothing"),
        ("What colors stand out?", "Black, white, red and green"),
    ],
    CAPTIONS[2]: [
        ("How many family members are cooking?", "Three"),
        ("What are they cooking?", "Sausages"),
        ("Who is standing at the stove?", "The son"),
        ("What cookware is on the stove?", "A pan"),
        ("What are the parents doing?", "Helping prepare food"),
        ("What is the style of the artwork?", "Flat vector art"),
        ("What colors are used?", "Blue and white"),
        ("Is the kitchen large or small?", "Small"),
        ("Are there plates set out?", "Yes"),
        ("What is the mood of the scene?", "Cheerful"),
    ],
    CAPTIONS[3]: [
        ("What is the view outside the window?", "A garden"),
        ("How many people are preparing food?", "Three"),
        ("What food are they preparing?", "A family dinner"),
        ("What is on the stove?", "A pot"),
        ("Is the window open or closed?", "Closed"),
        ("What sits on the windowsill?", "A flowerpot"),
        ("What time of day is it?", "Evening"),
        ("What is the young man doing?", "Stirring a pot"),
        ("What colors are prominent?", "Red, yellow and green"),
        ("Is the family smiling?", "Yes"),
    ],
}

ROW_SUMMARIES = {
    "How old is the young chef?": "Three images depict a young kid, while Image 4 depicts a young man.",
    "Are the parents present in the image?": "Three images show parents present in the image, while image 2 does not.",
    "What are the subjects of the image?": (
        "The images all feature people in a kitchen; image 2 focuses on a lone chef "
        "while the others include family members."
    ),
    "What are the objects in this image?": (
        "All images include a spoon; cookware and food items vary, from pots and "
        "aprons to tomatoes, cutlery and a flowerpot."
    ),
    "Where would this image likely be used?": (
        "Images 1 and 4 suit a website, image 2 a cookbook, and image 3 a children's cooking class."
    ),
    "What is the medium of the image?": (
        "Images 1 and 4 are cartoons or storybook illustrations, image 2 is a stock photo, "
        "and image 3 is vector art."
    ),
    "What is the perspective of this image?": (
        "Images 1, 3 and 4 are medium shots, while image 2 is a centered shot."
    ),
    "What are the main colors used in this image?": (
        "Color palettes differ: browns and blues in image 1; black, white, red and green "
        "in image 2; blue and white in image 3; and red, yellow and green in image 4."
    ),
    "What are the errors in this image?": (
        "Image 1 shows poorly drawn hands; no errors were detected in the other images."
    ),
    "What color is the background?": (
        "Image 1 and Image 4 are light brown, Image 2 is black and Image 3 is blue."
    ),
}

IMAGE_DESCRIPTIONS = {
    CAPTIONS[0]: (
        "In this cartoon, a father cooks with his two children in a warm kitchen. Pots, cups "
        "and aprons surround them and everyone looks happy. The main colors are brown, blue "
        "and yellow. It would fit well on a website."
    ),
    CAPTIONS[1]: (
        "In this stock photo, a young boy wears a chef's hat in a modern kitchen, preparing a "
        "salad with tomatoes and lettuce. He looks happy. The main colors are black, white, "
        "red and green. It would suit a cookbook."
    ),
    CAPTIONS[2]: (
        "In this vector art image, a family is cooking together in a well-lit kitchen. A young "
        "boy, his father and mother prepare sausages on a gas stove, all looking happy. The "
        "main colors are blue and white."
    ),
    CAPTIONS[3]: (
        "In this cartoon, parents and their son cook a meal in a kitchen with a wide window. "
        "A pot, plates and a flowerpot are visible and the mood is happy. The main colors are "
        "red, yellow and green."
    ),
}

COMPARISON = (
    "Similarities: All four images depict people cooking in a well-lit kitchen with happy "
    "expressions on their faces.\n\n"
    "Differences: Image 1 is a cartoon of a father and his children cooking. Image 2 shows a "
    "photo of a young boy preparing a salad. Image 3 is a vector art of a family preparing "
    "sausages. Image 4 is a cartoon of a family cooking a meal together in the kitchen with "
    "a window."
)

STYLE_DEFINITIONS = {
    ("Medium", "cartoon"): (
        "A cartoon is a simplified, often exaggerated drawing style used for playful or "
        "narrative imagery."
    ),
    ("Medium", "storybook illustration"): (
        "A storybook illustration is a warm, hand-drawn picture style used to accompany "
        "children's stories."
    ),
    ("Medium", "illustration"): (
        "An illustration is a drawn or painted rendering used to explain or decorate content."
    ),
    ("Medium", "stock photo"): (
        "A stock photo is a professionally shot photograph licensed for generic commercial use."
    ),
    ("Medium", "vector art"): (
        "Vector art is a crisp, flat graphic style built from geometric shapes that scales "
        "without losing quality."
    ),
    ("Lighting", "natural lighting"): (
        "Natural lighting uses daylight rather than artificial sources, giving scenes a soft, "
        "realistic look."
    ),
    ("Perspective", "medium shot"): (
        "A medium shot frames subjects from roughly the waist up, balancing detail and context."
    ),
    ("Perspective", "centered shot"): (
        "A centered shot places the subject in the middle of the frame for direct emphasis."
    ),
}

DETECTIONS = [
    [
        ["spoon", 0.92], ["pot", 0.88], ["apron", 0.83], ["cup", 0.61],
        ["tub", 0.45], ["bowl", 0.39], ["chair", 0.12],
    ],
    [
        ["spoon", 0.90], ["sink", 0.72], ["tomato", 0.66], ["lettuce", 0.58],
        ["hat", 0.49], ["bowl", 0.37], ["fork", 0.21],
    ],
    [
        ["spoon", 0.91], ["fork", 0.84], ["knife", 0.78], ["apple", 0.52],
        ["sausage", 0.47], ["plate", 0.35], ["napkin", 0.18],
    ],
    [
        ["spoon", 0.89], ["pot", 0.81], ["window", 0.74], ["flowerpot", 0.44],
        ["plate", 0.38], ["frog", 0.33], ["curtain", 0.15],
    ],
]

STYLE_SCORES = [
    {
        "medium": {"cartoon": 0.31, "storybook illustration": 0.27, "illustration": 0.24},
        "lighting": {"natural lighting": 0.30},
        "perspective": {"medium shot": 0.28},
        "errors": {"poorly drawn hands": 0.22},
    },
    {
        "medium": {"stock photo": 0.34},
        "lighting": {"natural lighting": 0.33},
        "perspective": {"centered shot": 0.30},
        "errors": {},
    },
    {
        "medium": {"vector art": 0.36},
        "lighting": {"natural lighting": 0.31},
        "perspective": {"medium shot": 0.27},
        "errors": {},
    },
    {
        "medium": {"cartoon": 0.32, "storybook illustration": 0.26, "illustration": 0.23},
        "lighting": {"natural lighting": 0.29},
        "perspective": {"medium shot": 0.26},
        "errors": {},
    },
]

EXTRA_SESSIONS = [
    {
        "name": "library",
        "prompt": "A robot reading a book in a library",
        "images": ["robot-1.png", "robot-2.png"],
        "custom_questions": [{"text": "Is the robot smiling?", "host_table": "verification"}],
    },
    {
        "name": "lighthouse",
        "prompt": "A lighthouse at dawn",
        "images": ["lone-1.png"],
        "custom_questions": [],
    },
]


def write_png(path: Path, rgb: tuple[int, int, int], size: int = 8) -> None:
    """Minimal solid-color PNG; byte-for-byte deterministic."""

    def chunk(kind: bytes, data: bytes) -> bytes:
        return (
            struct.pack(">I", len(data))
            + kind
            + data
            + struct.pack(">I", zlib.crc32(kind + data) & 0xFFFFFFFF)
        )

    header = struct.pack(">IIBBBBB", size, size, 8, 2, 0, 0, 0)
    scanlines = b"".join(b"\x00" + bytes(rgb) * size for _ in range(size))
    payload = (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", header)
        + chunk(b"IDAT", zlib.compress(scanlines, 9))
        + chunk(b"IEND", b"")
    )
    path.write_bytes(payload)


def build_backend(image_hashes: list[str]) -> ScriptedBackend:
    vocabularies = load_vocabularies()
    plan = EmbeddingPlan.build(
        vocabularies,
        {image_hashes[i]: STYLE_SCORES[i] for i in range(4)},
    )
    vqa_answers = {}
    for question, answers in VQA_TABLE:
        for image_hash, answer in zip(image_hashes, answers):
            vqa_answers[(image_hash, question)] = answer
    for caption, pairs in CAPTION_QUESTIONS.items():
        image_hash = image_hashes[CAPTIONS.index(caption)]
        for question, answer in pairs:
            vqa_answers[(image_hash, question)] = answer

    for text in ROW_SUMMARIES.values():
        assert len(text) <= 250, f"row summary too long: {text!r}"
    for text in IMAGE_DESCRIPTIONS.values():
        assert len(text) <= 250, f"description too long: {text!r}"

    return ScriptedBackend(
        verification_questions={TUTORIAL_PROMPT: VERIFICATION_QUESTIONS},
        caption_questions={c: [q for q, _ in pairs] for c, pairs in CAPTION_QUESTIONS.items()},
        row_summaries=ROW_SUMMARIES,
        image_descriptions=IMAGE_DESCRIPTIONS,
        comparisons={CAPTIONS[0]: COMPARISON},
        style_definitions=STYLE_DEFINITIONS,
        vqa_answers=vqa_answers,
        captions=dict(zip(image_hashes, CAPTIONS)),
        detections={image_hashes[i]: [tuple(d) for d in DETECTIONS[i]] for i in range(4)},
        embedding_plan=plan,
    )


def main() -> None:
    images_dir = FIXTURES / "images"
    store_dir = FIXTURES / "store"
    if store_dir.exists():
        shutil.rmtree(store_dir)
    images_dir.mkdir(parents=True, exist_ok=True)

    palette = {
        "chef-1.png": (200, 160, 90),
        "chef-2.png": (30, 30, 30),
        "chef-3.png": (70, 110, 200),
        "chef-4.png": (200, 80, 60),
        "robot-1.png": (120, 120, 140),
        "robot-2.png": (90, 140, 90),
        "lone-1.png": (240, 220, 180),
    }
    for name, rgb in palette.items():
        write_png(images_dir / name, rgb)

    tutorial_paths = [images_dir / f"chef-{i}.png" for i in range(1, 5)]
    image_hashes = [sha256_hex(p.read_bytes()) for p in tutorial_paths]

    backend = build_backend(image_hashes)
    gateway = ModelGateway(GatewayMode.RECORD, backend=backend, store=FixtureStore(store_dir))
    pipeline = Pipeline(gateway)

    manifest = {"sessions": []}

    sessions = [
        {
            "name": "tutorial",
            "prompt": TUTORIAL_PROMPT,
            "images": [f"chef-{i}.png" for i in range(1, 5)],
            "custom_questions": [
                {"text": "What color is the background?", "host_table": "content"}
            ],
        }
    ] + EXTRA_SESSIONS

    for spec in sessions:
        refs = [str(images_dir / name) for name in spec["images"]]
        session = validate_session_input(spec["prompt"], refs)
        result = pipeline.run(session)
        for custom in spec["custom_questions"]:
            result, _row = pipeline.ask(
                result, custom["text"], host_table=custom["host_table"]
            )
        manifest["sessions"].append(
            {
                "name": spec["name"],
                "prompt": spec["prompt"],
                "images": [f"images/{name}" for name in spec["images"]],
                "custom_questions": spec["custom_questions"],
            }
        )
        print(f"recorded session {spec['name']!r}: {len(result.matrix.rows)} rows")

    (FIXTURES / "corpus.json").write_text(
        json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", "utf-8"
    )
    print(f"fixture store: {len(FixtureStore(store_dir).digests())} records")


if __name__ == "__main__":
    main()
