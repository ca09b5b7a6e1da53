"""HTTP gateway: session lifecycle, event stream, transcript persistence."""

import json

import pytest
from fastapi.testclient import TestClient

from stepchef.config import ServiceConfig, load_service_config
from stepchef.service import create_app
from stepchef.transcript import read_transcript, replay, replayable_view


@pytest.fixture
def client(tmp_path):
    config = ServiceConfig(transcript_dir=tmp_path / "transcripts")
    app = create_app(config)
    with TestClient(app) as c:
        c.transcript_dir = config.transcript_dir
        yield c


def create_session_id(client, domain="drink", **kwargs):
    response = client.post("/sessions", json={"domain": domain, **kwargs})
    assert response.status_code == 200
    return response.json()["session_id"]


def test_healthz(client):
    assert client.get("/healthz").json() == {"ok": True}


def test_full_session_over_http(client):
    sid = create_session_id(client)
    r = client.post(f"/sessions/{sid}/request", json={"text": "I want to order a boba milk."})
    assert r.json() == {"state": "executing"}
    state = client.get(f"/sessions/{sid}/state").json()
    assert [s["status"] for s in state["plan"]["steps"]] == ["active", "pending", "pending", "pending"]
    r = client.post(f"/sessions/{sid}/run")
    assert r.json() == {"state": "completed"}
    state = client.get(f"/sessions/{sid}/state").json()
    assert state["state"] == "completed"
    assert len(state["completed"]) == 4


def test_scene_endpoint(client):
    sid = create_session_id(client)
    scene = client.get(f"/sessions/{sid}/scene").json()
    assert any(e["label"] == "empty cup" for e in scene["entries"])
    assert "Objects in view:" in scene["rendered"]


def test_unknown_session_404(client):
    assert client.post("/sessions/nope/interrupt", json={"text": "x"}).status_code == 404
    assert client.get("/sessions/nope/state").status_code == 404


def test_malformed_body_400(client):
    sid = create_session_id(client)
    assert client.post(f"/sessions/{sid}/request", json={"txet": "oops"}).status_code == 400
    assert client.post("/sessions", json={"domain": 7}).status_code == 400


def test_terminal_session_409(client):
    sid = create_session_id(client)
    client.post(f"/sessions/{sid}/request", json={"text": "I want to order a boba milk."})
    client.post(f"/sessions/{sid}/run")
    r = client.post(f"/sessions/{sid}/request", json={"text": "another"})
    assert r.status_code == 409


def test_interrupt_on_idle_409(client):
    sid = create_session_id(client)
    assert client.post(f"/sessions/{sid}/interrupt", json={"text": "x"}).status_code == 409


def test_advance_on_idle_409(client):
    sid = create_session_id(client)
    assert client.post(f"/sessions/{sid}/advance").status_code == 409


def test_interrupt_latest_wins_single_replan(client):
    sid = create_session_id(client)
    client.post(f"/sessions/{sid}/request", json={"text": "Can I have a cup of strawberry milk?"})
    client.post(f"/sessions/{sid}/advance")
    client.post(f"/sessions/{sid}/interrupt", json={"text": "I want to add boba into the drink."})
    client.post(f"/sessions/{sid}/interrupt", json={"text": "Can I replace the strawberry with mango?"})
    client.post(f"/sessions/{sid}/run")
    events = [
        json.loads(line[len("data: "):])
        for line in client.get(f"/sessions/{sid}/events").text.splitlines()
        if line.startswith("data: ")
    ]
    replanned = [e for e in events if e["event_type"] == "replanned"]
    assert len(replanned) == 1
    assert replanned[0]["payload"]["request"] == "Can I replace the strawberry with mango?"
    assert replanned[0]["payload"]["superseded"] == ["I want to add boba into the drink."]


def test_event_stream_ends_with_completed(client):
    sid = create_session_id(client)
    client.post(f"/sessions/{sid}/request", json={"text": "I want to order a boba milk."})
    client.post(f"/sessions/{sid}/run")
    lines = [l for l in client.get(f"/sessions/{sid}/events").text.splitlines() if l.startswith("data: ")]
    events = [json.loads(l[len("data: "):]) for l in lines]
    assert events[-1]["event_type"] == "completed"
    kinds = [e["event_type"] for e in events]
    assert kinds[0] == "request"
    assert "plan" in kinds and "step_completed" in kinds


def test_every_state_change_has_a_preceding_event(client):
    sid = create_session_id(client)
    client.post(f"/sessions/{sid}/request", json={"text": "I want a matcha latte."})
    seen_states = []
    for _ in range(10):
        state = client.post(f"/sessions/{sid}/advance").json()["state"]
        seen_states.append(state)
        if state != "executing":
            break
    events = [
        json.loads(line[len("data: "):])
        for line in client.get(f"/sessions/{sid}/events").text.splitlines()
        if line.startswith("data: ")
    ]
    kinds = [e["event_type"] for e in events]
    assert "plan" in kinds  # executing was announced
    assert kinds[-1] == "completed"


def test_transcript_file_replays_to_live_state(client):
    sid = create_session_id(client)
    client.post(f"/sessions/{sid}/request", json={"text": "Can I get a strawberry boba milk?"})
    client.post(f"/sessions/{sid}/advance")
    client.post(f"/sessions/{sid}/interrupt", json={"text": "Sorry, can I reorder a strawberry milk?"})
    client.post(f"/sessions/{sid}/run")
    records = read_transcript(client.transcript_dir / f"{sid}.jsonl")
    timestamps = [r.timestamp for r in records]
    assert timestamps == sorted(timestamps) and len(set(timestamps)) == len(timestamps)
    live = client.get(f"/sessions/{sid}/state").json()
    assert replay(records) == replayable_view(live)


def test_dishwash_session_with_items(client):
    sid = create_session_id(client, domain="dishwash", items={"plate": 1})
    client.post(f"/sessions/{sid}/request", json={"text": "Wash one dirty plate with rose flavor."})
    r = client.post(f"/sessions/{sid}/run")
    assert r.json() == {"state": "completed"}


def test_unknown_domain_400(client):
    assert client.post("/sessions", json={"domain": "laundry"}).status_code == 400


def test_config_loading_and_missing_paths(tmp_path):
    good = tmp_path / "config.yaml"
    good.write_text(
        "listen: {host: 127.0.0.1, port: 9999}\n"
        f"transcript_dir: {tmp_path / 'tx'}\n"
        "provider: {kind: oracle}\n",
        encoding="utf-8",
    )
    config = load_service_config(good)
    assert config.port == 9999

    bad = tmp_path / "bad.yaml"
    bad.write_text("domains: {drink: {guidelines: /no/such/file.txt}}\n", encoding="utf-8")
    with pytest.raises(FileNotFoundError):
        load_service_config(bad)

    worse = tmp_path / "worse.yaml"
    worse.write_text("provider: {kind: remote}\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_service_config(worse)
