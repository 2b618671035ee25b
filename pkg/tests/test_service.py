import base64
import json
import time

import pytest
from fastapi.testclient import TestClient

from promptgrid.config import AppConfig
from promptgrid.errors import CorruptLogError
from promptgrid.eventlog import EventStore, replay_session
from promptgrid.model import canonical_json
from promptgrid.service import create_app
from promptgrid.tables import audit_two_header_html

from helpers import FIXTURES_DIR, STORE_DIR, TUTORIAL_PROMPT, replay_gateway

TUTORIAL_IMAGES = [str(FIXTURES_DIR / "images" / f"chef-{i}.png") for i in range(1, 5)]


class SlowChatGateway:
    """Delegates to a replay gateway but slows chat down so tests can observe
    the running state."""

    def __init__(self, delay=0.25):
        self._inner = replay_gateway()
        self._delay = delay

    def __getattr__(self, name):
        return getattr(self._inner, name)

    def chat_complete(self, request):
        time.sleep(self._delay)
        return self._inner.chat_complete(request)


def make_app(tmp_path, *, gateway=None, upload_cap=None):
    config = AppConfig.load(
        None,
        storage_dir=str(tmp_path / "storage"),
        backend_mode="replay",
        fixtures_dir=str(STORE_DIR),
        upload_cap_bytes=upload_cap,
    )
    return create_app(config, gateway=gateway)


def create_tutorial_session(client):
    response = client.post(
        "/sessions",
        json={"prompt": TUTORIAL_PROMPT, "images": [{"path": p} for p in TUTORIAL_IMAGES]},
    )
    assert response.status_code == 201, response.text
    return response.json()["session_id"]


def wait_until_ready(client, session_id, timeout=20.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        response = client.get(f"/sessions/{session_id}/tables")
        if response.status_code == 200:
            return response
        assert response.status_code == 202, response.text
        time.sleep(0.02)
    pytest.fail("session never became ready")


class TestSessionLifecycle:
    def test_create_poll_ready(self, tmp_path):
        client = TestClient(make_app(tmp_path))
        session_id = create_tutorial_session(client)
        tables = wait_until_ready(client, session_id).json()
        assert [t["key"] for t in tables["tables"]] == [
            "summary", "verification", "content", "style",
        ]

    def test_running_session_returns_progress(self, tmp_path):
        client = TestClient(make_app(tmp_path, gateway=SlowChatGateway()))
        session_id = create_tutorial_session(client)
        response = client.get(f"/sessions/{session_id}/tables")
        assert response.status_code == 202
        body = response.json()
        assert body["status"] in ("created", "extracting", "summarizing")
        assert "rows_completed" in body and "rows_total" in body
        wait_until_ready(client, session_id)

    def test_html_format_is_two_header(self, tmp_path):
        client = TestClient(make_app(tmp_path))
        session_id = create_tutorial_session(client)
        wait_until_ready(client, session_id)
        response = client.get(f"/sessions/{session_id}/tables", params={"format": "html"})
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("text/html")
        assert audit_two_header_html(response.text) == []

    def test_linear_format(self, tmp_path):
        client = TestClient(make_app(tmp_path))
        session_id = create_tutorial_session(client)
        wait_until_ready(client, session_id)
        response = client.get(f"/sessions/{session_id}/tables", params={"format": "linear"})
        assert response.text.startswith("Similarities.")

    def test_base64_uploads_reach_ready(self, tmp_path):
        client = TestClient(make_app(tmp_path))
        images = [
            {
                "filename": f"chef-{i}.png",
                "content_base64": base64.b64encode(
                    (FIXTURES_DIR / "images" / f"chef-{i}.png").read_bytes()
                ).decode("ascii"),
            }
            for i in range(1, 5)
        ]
        response = client.post("/sessions", json={"prompt": TUTORIAL_PROMPT, "images": images})
        assert response.status_code == 201
        wait_until_ready(client, response.json()["session_id"])


class TestValidationErrors:
    def test_blank_prompt_400(self, tmp_path):
        client = TestClient(make_app(tmp_path))
        response = client.post(
            "/sessions", json={"prompt": "  ", "images": [{"path": TUTORIAL_IMAGES[0]}]}
        )
        assert response.status_code == 400
        assert response.json()["detail"]["error"] == "EmptyPrompt"

    def test_nine_images_400(self, tmp_path):
        client = TestClient(make_app(tmp_path))
        response = client.post(
            "/sessions",
            json={"prompt": "p", "images": [{"path": TUTORIAL_IMAGES[0]}] * 9},
        )
        assert response.status_code == 400
        assert response.json()["detail"]["error"] == "TooManyImages"

    def test_unknown_session_404(self, tmp_path):
        client = TestClient(make_app(tmp_path))
        assert client.get("/sessions/sess-nope/tables").status_code == 404

    def test_oversized_upload_413(self, tmp_path):
        client = TestClient(make_app(tmp_path, upload_cap=64))
        payload = base64.b64encode(b"x" * 1000).decode("ascii")
        response = client.post(
            "/sessions",
            json={"prompt": "p", "images": [{"filename": "big.png", "content_base64": payload}]},
        )
        assert response.status_code == 413

    def test_failed_pipeline_serves_500_with_detail(self, tmp_path):
        client = TestClient(make_app(tmp_path))
        odd = tmp_path / "unknown.png"
        odd.write_bytes(b"not in the fixture store")
        response = client.post(
            "/sessions", json={"prompt": "mystery", "images": [{"path": str(odd)}]}
        )
        assert response.status_code == 201
        session_id = response.json()["session_id"]
        deadline = time.time() + 10
        while time.time() < deadline:
            response = client.get(f"/sessions/{session_id}/tables")
            if response.status_code == 500:
                break
            assert response.status_code == 202
            time.sleep(0.02)
        assert response.status_code == 500
        assert "FixtureMiss" in response.json()["message"]


class TestQuestions:
    def test_ask_appends_row(self, tmp_path):
        client = TestClient(make_app(tmp_path))
        session_id = create_tutorial_session(client)
        wait_until_ready(client, session_id)
        response = client.post(
            f"/sessions/{session_id}/questions",
            json={"text": "What color is the background?", "host_table": "content"},
        )
        assert response.status_code == 200
        row = response.json()["row"]
        assert row["summary"]["text"] == (
            "Image 1 and Image 4 are light brown, Image 2 is black and Image 3 is blue."
        )
        assert [c["value"] for c in row["cells"]] == ["light brown", "black", "blue", "light brown"]
        tables = client.get(f"/sessions/{session_id}/tables").json()
        content = next(t for t in tables["tables"] if t["key"] == "content")
        assert content["rows"][-1]["header"] == "What color is the background?"

    def test_question_while_running_409(self, tmp_path):
        client = TestClient(make_app(tmp_path, gateway=SlowChatGateway()))
        session_id = create_tutorial_session(client)
        response = client.post(
            f"/sessions/{session_id}/questions", json={"text": "Anything?"}
        )
        assert response.status_code == 409
        wait_until_ready(client, session_id)

    def test_empty_question_400(self, tmp_path):
        client = TestClient(make_app(tmp_path))
        session_id = create_tutorial_session(client)
        wait_until_ready(client, session_id)
        response = client.post(f"/sessions/{session_id}/questions", json={"text": "  "})
        assert response.status_code == 400

    def test_same_question_twice_two_rows(self, tmp_path):
        client = TestClient(make_app(tmp_path))
        session_id = create_tutorial_session(client)
        wait_until_ready(client, session_id)
        for _ in range(2):
            assert (
                client.post(
                    f"/sessions/{session_id}/questions",
                    json={"text": "What color is the background?"},
                ).status_code
                == 200
            )
        tables = client.get(f"/sessions/{session_id}/tables").json()
        content = next(t for t in tables["tables"] if t["key"] == "content")
        customs = [r for r in content["rows"] if r["header"] == "What color is the background?"]
        assert len(customs) == 2


class TestEventLogReplay:
    def test_replay_reproduces_final_state(self, tmp_path):
        app = make_app(tmp_path)
        client = TestClient(app)
        session_id = create_tutorial_session(client)
        wait_until_ready(client, session_id)
        client.post(
            f"/sessions/{session_id}/questions",
            json={"text": "What color is the background?", "host_table": "content"},
        )
        service = app.state.service
        events = service.events.read(session_id)
        replayed = replay_session(events)
        live_result = service.runtime_for(session_id).result
        assert canonical_json(replayed.result.to_dict()) == canonical_json(live_result.to_dict())

    def test_seq_gap_rejected(self, tmp_path):
        app = make_app(tmp_path)
        client = TestClient(app)
        session_id = create_tutorial_session(client)
        wait_until_ready(client, session_id)
        events = app.state.service.events.read(session_id)
        with_gap = [e for e in events if e.seq != 2]
        with pytest.raises(CorruptLogError):
            replay_session(with_gap)

    def test_empty_log_rejected(self):
        with pytest.raises(CorruptLogError):
            replay_session([])

    def test_undecodable_line_rejected(self, tmp_path):
        store = EventStore(tmp_path)
        store.append("s1", "created", {"session": {}})
        path = store.log_path("s1")
        path.write_text(path.read_text("utf-8") + "{not json\n", "utf-8")
        with pytest.raises(CorruptLogError):
            store.read("s1")

    def test_events_are_gapless_and_ordered(self, tmp_path):
        app = make_app(tmp_path)
        client = TestClient(app)
        session_id = create_tutorial_session(client)
        wait_until_ready(client, session_id)
        body = client.get(f"/sessions/{session_id}/events").json()
        seqs = [e["seq"] for e in body["events"]]
        assert seqs == list(range(1, len(seqs) + 1))
        assert body["events"][0]["kind"] == "created"


class TestPersistence:
    def test_snapshot_reload_after_restart(self, tmp_path):
        app = make_app(tmp_path)
        client = TestClient(app)
        session_id = create_tutorial_session(client)
        first = wait_until_ready(client, session_id)

        fresh_client = TestClient(make_app(tmp_path))
        response = fresh_client.get(f"/sessions/{session_id}/tables")
        assert response.status_code == 200
        assert response.json() == first.json()

    def test_snapshot_written_to_disk(self, tmp_path):
        app = make_app(tmp_path)
        client = TestClient(app)
        session_id = create_tutorial_session(client)
        wait_until_ready(client, session_id)
        snapshot_path = tmp_path / "storage" / "sessions" / session_id / "snapshot.json"
        snapshot = json.loads(snapshot_path.read_text("utf-8"))
        assert snapshot["status"] == "ready"
        assert snapshot["result"]["session"]["session_id"] == session_id
