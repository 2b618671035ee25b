"""Uniform clients for the five model capabilities, with record/replay.

Every request has a canonical JSON form (sorted keys, compact separators,
UTF-8) whose SHA-256 digest keys the fixture store. With a fixed fixture
set each gateway operation is a pure function of its request, which is what
makes the whole pipeline testable offline.

Detection fixtures store the *raw* detection list; the confidence threshold
is applied client-side so one record serves any threshold.
"""

from __future__ import annotations

import enum
import json
import math
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Protocol

from .errors import (
    BackendUnavailableError,
    FixtureMissError,
    InvalidThresholdError,
    MalformedResponseError,
)
from .model import ImageCandidate, canonical_json, default_image_loader, digest_payload
from .prompts import DEFAULT_TEMPERATURE, VQA_PREAMBLE

CAPABILITIES = ("chat", "vqa", "caption", "detect", "embed")


class GatewayMode(str, enum.Enum):
    LIVE = "live"
    RECORD = "record"
    REPLAY = "replay"


# --- request types --------------------------------------------------------


@dataclass(frozen=True)
class ChatRequest:
    system_role: str
    user_content: str
    temperature: float = DEFAULT_TEMPERATURE

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be within [0, 2]")

    def canonical(self) -> dict[str, Any]:
        return {
            "capability": "chat",
            "system_role": self.system_role,
            "temperature": self.temperature,
            "user_content": self.user_content,
        }


@dataclass(frozen=True)
class VqaRequest:
    image: ImageCandidate
    question: str
    preamble: str = VQA_PREAMBLE

    def canonical(self) -> dict[str, Any]:
        return {
            "capability": "vqa",
            "image_sha256": self.image.content_hash,
            "preamble": self.preamble,
            "question": self.question,
        }


@dataclass(frozen=True)
class CaptionRequest:
    image: ImageCandidate

    def canonical(self) -> dict[str, Any]:
        return {"capability": "caption", "image_sha256": self.image.content_hash}


@dataclass(frozen=True)
class DetectionRequest:
    image: ImageCandidate
    confidence_threshold: float = 0.3

    def __post_init__(self):
        if not 0.0 < self.confidence_threshold <= 1.0:
            raise InvalidThresholdError(
                f"confidence threshold {self.confidence_threshold} outside (0, 1]"
            )

    def canonical(self) -> dict[str, Any]:
        # Threshold intentionally left out: the record keeps the raw list.
        return {"capability": "detect", "image_sha256": self.image.content_hash}


@dataclass(frozen=True)
class EmbeddingRequest:
    """Embed either an image candidate or a text string in a named space."""

    model_space: str
    image: ImageCandidate | None = None
    text: str | None = None

    def __post_init__(self):
        if (self.image is None) == (self.text is None):
            raise ValueError("exactly one of image or text must be given")

    def canonical(self) -> dict[str, Any]:
        if self.image is not None:
            return {
                "capability": "embed",
                "image_sha256": self.image.content_hash,
                "kind": "image",
                "space": self.model_space,
            }
        return {
            "capability": "embed",
            "kind": "text",
            "space": self.model_space,
            "text": self.text,
        }


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    space: str

    def dot(self, other: "EmbeddingVector") -> float:
        from .errors import SpaceMismatchError

        if self.space != other.space:
            raise SpaceMismatchError(
                f"cannot compare embeddings across spaces {self.space!r} and {other.space!r}"
            )
        if len(self.values) != len(other.values):
            raise SpaceMismatchError(
                f"dimension mismatch in space {self.space!r}: "
                f"{len(self.values)} vs {len(other.values)}"
            )
        return sum(a * b for a, b in zip(self.values, other.values))


def request_digest(request: ChatRequest | VqaRequest | CaptionRequest | DetectionRequest | EmbeddingRequest) -> str:
    return digest_payload(request.canonical())


# --- fixture store ---------------------------------------------------------


class FixtureStore:
    """Directory of JSON interaction records, one file per request digest.

    Record layout: {"capability", "request", "response", "recorded_at"}.
    Records are small and human-editable so fixtures can be authored by hand.
    Writes are serialized; re-recording a digest is last-write-wins.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._lock = threading.Lock()

    def path_for(self, digest: str) -> Path:
        return self.root / f"{digest}.json"

    def get(self, digest: str) -> Any:
        path = self.path_for(digest)
        if not path.exists():
            raise FixtureMissError(digest)
        with open(path, encoding="utf-8") as fh:
            record = json.load(fh)
        return record["response"]

    def put(self, capability: str, request: dict[str, Any], response: Any) -> str:
        digest = digest_payload(request)
        record = {
            "capability": capability,
            "request_digest": digest,
            "request": request,  # kept alongside the digest for hand-editing
            "response": response,
            "recorded_at": time.time(),
        }
        with self._lock:
            self.root.mkdir(parents=True, exist_ok=True)
            path = self.path_for(digest)
            tmp = path.with_suffix(".json.tmp")
            tmp.write_text(json.dumps(record, indent=2, sort_keys=True, ensure_ascii=False) + "\n", "utf-8")
            tmp.replace(path)
        return digest

    def digests(self) -> list[str]:
        if not self.root.exists():
            return []
        return sorted(p.stem for p in self.root.glob("*.json"))


# --- backends ---------------------------------------------------------------


class Backend(Protocol):
    """Raw capability calls; responses are JSON-serializable payloads.

    chat/vqa/caption return text, detect returns the raw
    [[label, confidence], ...] list, embed returns a plain vector.
    """

    def chat(self, request: ChatRequest) -> str: ...

    def vqa(self, request: VqaRequest) -> str: ...

    def caption(self, request: CaptionRequest) -> str: ...

    def detect(self, request: DetectionRequest) -> list[tuple[str, float]]: ...

    def embed(self, request: EmbeddingRequest) -> list[float]: ...


@dataclass
class EndpointConfig:
    url: str
    credential: str | None = None


class LiveHttpBackend:
    """HTTP transport to configured model endpoints, one per capability.

    Each call POSTs the canonical request as JSON (plus base64 image bytes
    where the capability needs pixels) and expects a JSON object holding the
    capability's payload under "result". Transient transport errors are
    retried with exponential backoff before giving up.
    """

    def __init__(
        self,
        endpoints: dict[str, EndpointConfig],
        *,
        image_loader: Callable[[str], bytes] = default_image_loader,
        retries: int = 3,
        backoff_seconds: float = 0.5,
        timeout_seconds: float = 30.0,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.endpoints = endpoints
        self.image_loader = image_loader
        self.retries = retries
        self.backoff_seconds = backoff_seconds
        self.timeout_seconds = timeout_seconds
        self._sleep = sleep

    def _post(self, capability: str, payload: dict[str, Any]) -> Any:
        import requests

        endpoint = self.endpoints.get(capability)
        if endpoint is None:
            raise BackendUnavailableError(f"no endpoint configured for capability {capability!r}")
        headers = {"Content-Type": "application/json"}
        if endpoint.credential:
            headers["Authorization"] = f"Bearer {endpoint.credential}"

        last_error: Exception | None = None
        for attempt in range(self.retries):
            try:
                resp = requests.post(
                    endpoint.url, json=payload, headers=headers, timeout=self.timeout_seconds
                )
                resp.raise_for_status()
                body = resp.json()
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_error = exc
                if attempt + 1 < self.retries:
                    self._sleep(self.backoff_seconds * (2**attempt))
                continue
            except requests.HTTPError as exc:
                status = exc.response.status_code if exc.response is not None else 0
                if status >= 500 and attempt + 1 < self.retries:
                    last_error = exc
                    self._sleep(self.backoff_seconds * (2**attempt))
                    continue
                raise BackendUnavailableError(f"{capability} endpoint error: {exc}") from exc
            except ValueError as exc:
                raise MalformedResponseError(f"{capability} endpoint returned non-JSON body") from exc
            if "result" not in body:
                raise MalformedResponseError(f"{capability} response missing 'result'")
            return body["result"]
        raise BackendUnavailableError(
            f"{capability} endpoint unreachable after {self.retries} attempts: {last_error}"
        ) from last_error

    def _with_image_bytes(self, canonical: dict[str, Any], image: ImageCandidate) -> dict[str, Any]:
        import base64

        payload = dict(canonical)
        payload["image_base64"] = base64.b64encode(self.image_loader(image.source)).decode("ascii")
        return payload

    def chat(self, request: ChatRequest) -> str:
        return self._post("chat", request.canonical())

    def vqa(self, request: VqaRequest) -> str:
        return self._post("vqa", self._with_image_bytes(request.canonical(), request.image))

    def caption(self, request: CaptionRequest) -> str:
        return self._post("caption", self._with_image_bytes(request.canonical(), request.image))

    def detect(self, request: DetectionRequest) -> list[tuple[str, float]]:
        result = self._post("detect", self._with_image_bytes(request.canonical(), request.image))
        return [(str(label), float(conf)) for label, conf in result]

    def embed(self, request: EmbeddingRequest) -> list[float]:
        canonical = request.canonical()
        if request.image is not None:
            canonical = self._with_image_bytes(canonical, request.image)
        result = self._post("embed", canonical)
        return [float(v) for v in result]


# --- the gateway -------------------------------------------------------------


@dataclass
class GatewayStats:
    calls: dict[str, int] = field(default_factory=lambda: {c: 0 for c in CAPABILITIES})

    def bump(self, capability: str) -> None:
        self.calls[capability] = self.calls.get(capability, 0) + 1


class ModelGateway:
    """Mode-aware front door to the model capabilities.

    live: call the backend directly. record: call the backend and persist
    the interaction. replay: serve only recorded interactions, raising
    FixtureMissError for anything unknown.
    """

    def __init__(
        self,
        mode: GatewayMode | str = GatewayMode.REPLAY,
        *,
        backend: Backend | None = None,
        store: FixtureStore | None = None,
        model_space: str = "default",
    ):
        self.mode = GatewayMode(mode)
        self.backend = backend
        self.store = store
        self.model_space = model_space
        self.stats = GatewayStats()
        self._space_dims: dict[str, int] = {}
        self._dims_lock = threading.Lock()
        if self.mode in (GatewayMode.LIVE, GatewayMode.RECORD) and backend is None:
            raise ValueError(f"{self.mode.value} mode requires a backend")
        if self.mode in (GatewayMode.RECORD, GatewayMode.REPLAY) and store is None:
            raise ValueError(f"{self.mode.value} mode requires a fixture store")

    def _execute(self, capability: str, request) -> Any:
        self.stats.bump(capability)
        canonical = request.canonical()
        if self.mode == GatewayMode.REPLAY:
            return self.store.get(digest_payload(canonical))
        raw = getattr(self.backend, capability)(request)
        if self.mode == GatewayMode.RECORD:
            # Normalize to JSON-safe payloads so replay equals record exactly.
            raw = json.loads(canonical_json(raw))
            self.store.put(capability, canonical, raw)
        return raw

    @staticmethod
    def _require_text(capability: str, value: Any) -> str:
        if not isinstance(value, str) or not value.strip():
            raise MalformedResponseError(f"{capability} backend returned empty or non-text payload")
        return value

    def chat_complete(self, request: ChatRequest) -> str:
        return self._require_text("chat", self._execute("chat", request))

    def vqa_answer(self, request: VqaRequest) -> str:
        return self._require_text("vqa", self._execute("vqa", request))

    def caption_image(self, image: ImageCandidate) -> str:
        return self._require_text("caption", self._execute("caption", CaptionRequest(image)))

    def detect_objects(self, request: DetectionRequest) -> list[tuple[str, float]]:
        raw = self._execute("detect", request)
        try:
            detections = [(str(label).lower(), float(conf)) for label, conf in raw]
        except (TypeError, ValueError) as exc:
            raise MalformedResponseError("detect backend returned a malformed list") from exc
        return [d for d in detections if d[1] >= request.confidence_threshold]

    def embed(self, request: EmbeddingRequest) -> EmbeddingVector:
        raw = self._execute("embed", request)
        try:
            values = [float(v) for v in raw]
        except (TypeError, ValueError) as exc:
            raise MalformedResponseError("embed backend returned a malformed vector") from exc
        if not values:
            raise MalformedResponseError("embed backend returned an empty vector")
        norm = math.sqrt(sum(v * v for v in values))
        if norm == 0.0:
            raise MalformedResponseError("embed backend returned a zero vector")
        unit = tuple(v / norm for v in values)
        with self._dims_lock:
            expected = self._space_dims.setdefault(request.model_space, len(unit))
        if expected != len(unit):
            raise MalformedResponseError(
                f"embedding dimension changed within space {request.model_space!r}: "
                f"{expected} != {len(unit)}"
            )
        return EmbeddingVector(values=unit, space=request.model_space)

    def embed_image(self, image: ImageCandidate, space: str | None = None) -> EmbeddingVector:
        return self.embed(EmbeddingRequest(model_space=space or self.model_space, image=image))

    def embed_text(self, text: str, space: str | None = None) -> EmbeddingVector:
        return self.embed(EmbeddingRequest(model_space=space or self.model_space, text=text))
