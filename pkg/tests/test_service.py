import json
import time
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from tacmine.config import ServiceConfig
from tacmine.io import dataset_to_doc
from tacmine.service import create_app
from tacmine.synth import SynthParams, generate

PARAMS = SynthParams(n_sequences=30, sequence_length=6, n_features=2,
                     n_tactics=3, values_per_feature=4, embed_fraction=0.2,
                     tactic_length=2, tactic_nonnull=3, seed=5)


@pytest.fixture()
def client(tmp_path):
    cfg = ServiceConfig(data_dir=str(tmp_path / "data"), max_iterations=6,
                        candidates_per_iteration=40, alpha=0.5, beta=1.0)
    with TestClient(create_app(cfg)) as c:
        yield c


def _wait(client, job_id, timeout=60.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        job = client.get(f"/jobs/{job_id}").json()
        if job["status"] != "running":
            assert job["status"] == "done", job
            return job["result"]
        time.sleep(0.02)
    raise AssertionError("job timed out")


def _upload(client):
    d, _, _ = generate(PARAMS)
    r = client.post("/datasets", json=dataset_to_doc(d))
    assert r.status_code == 201
    return r.json()["dataset_id"]


def _mined_session(client):
    dataset_id = _upload(client)
    r = client.post("/sessions", json={"dataset_id": dataset_id, "seed": 2})
    assert r.status_code == 202
    body = r.json()
    state = _wait(client, body["job_id"])
    assert state["mined"] and state["version"] == 1
    assert state["tactics"], "mining found nothing on the planted dataset"
    return body["session_id"], state


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json()["status"] == "ok"


def test_dataset_endpoints(client):
    dataset_id = _upload(client)
    listed = client.get("/datasets").json()["datasets"]
    assert any(e["dataset_id"] == dataset_id for e in listed)
    info = client.get(f"/datasets/{dataset_id}").json()
    assert info["n_rallies"] == 30
    assert [f["name"] for f in info["schema"]["features"]] == ["f1", "f2"]
    rally = client.get(f"/datasets/{dataset_id}/rallies/1").json()
    assert rally["id"] == 1 and len(rally["events"]) == 6
    assert client.get("/datasets/nope").status_code == 404
    assert client.get(f"/datasets/{dataset_id}/rallies/999").status_code == 404


def test_invalid_dataset_rejected(client):
    doc = {"schema": {"features": []}, "rallies": []}
    r = client.post("/datasets", json=doc)
    assert r.status_code == 422
    assert r.json()["code"] == "INVALID_DATASET"


def test_session_lifecycle(client):
    session_id, state = _mined_session(client)
    again = client.get(f"/sessions/{session_id}").json()
    assert again["version"] == state["version"]
    assert [t["id"] for t in again["tactics"]] == \
        [t["id"] for t in state["tactics"]]
    t0 = state["tactics"][0]
    assert set(t0) >= {"id", "events", "length", "freq", "win_rate",
                      "importance", "index_histogram"}
    assert client.get("/sessions/nope").status_code == 404
    r = client.post("/sessions", json={})
    assert r.status_code == 400
    assert r.json()["code"] == "VALIDATION"


def test_local_preview_apply_undo_and_persistence(client, tmp_path):
    session_id, state = _mined_session(client)
    victim = state["tactics"][0]["id"]
    r = client.post(f"/sessions/{session_id}/preview", json={
        "constraint": {"type": "DeleteTactic", "tactic_ids": [victim]}})
    assert r.status_code == 200
    body = r.json()
    diff = body["diff"]
    assert victim in diff["removed"]
    assert diff["base_version"] == 1

    r = client.post(f"/sessions/{session_id}/apply",
                    json={"preview_id": body["preview_id"]})
    assert r.status_code == 200
    after = r.json()
    assert after["version"] == 2
    assert victim not in [t["id"] for t in after["tactics"]]
    assert after["can_undo"]

    saved = Path(tmp_path / "data" / "sessions" / f"{session_id}.json")
    assert saved.exists()
    doc = json.loads(saved.read_text())
    assert doc["state_version"] == 2

    history = client.get(f"/sessions/{session_id}/history").json()["entries"]
    assert len(history) == 1
    assert history[0]["constraint"]["type"] == "DeleteTactic"

    r = client.post(f"/sessions/{session_id}/undo")
    assert r.status_code == 200
    undone = r.json()
    assert undone["undone"]["type"] == "DeleteTactic"
    assert undone["state"]["version"] == 3
    assert victim in [t["id"] for t in undone["state"]["tactics"]]
    assert json.loads(saved.read_text())["state_version"] == 3


def test_global_preview_runs_as_job(client):
    session_id, _ = _mined_session(client)
    r = client.post(f"/sessions/{session_id}/preview", json={
        "constraint": {"type": "LengthRange", "lo": 2, "hi": None}})
    assert r.status_code == 200
    body = _wait(client, r.json()["job_id"])
    assert body["diff"]["constraint"]["type"] == "LengthRange"
    r = client.post(f"/sessions/{session_id}/apply",
                    json={"preview_id": body["preview_id"]})
    assert r.status_code == 200
    state = r.json()
    assert state["version"] == 2
    assert {"type": "LengthRange", "lo": 2, "hi": None} in state["globals"]


def test_apply_rejects_stale_and_unknown_previews(client):
    session_id, state = _mined_session(client)
    ids = [t["id"] for t in state["tactics"]]
    stale = client.post(f"/sessions/{session_id}/preview", json={
        "constraint": {"type": "DeleteTactic", "tactic_ids": [ids[0]]}}).json()
    fresh = client.post(f"/sessions/{session_id}/preview", json={
        "constraint": {"type": "DeleteTactic", "tactic_ids": [ids[-1]]}}).json()
    ok = client.post(f"/sessions/{session_id}/apply",
                     json={"preview_id": fresh["preview_id"]})
    assert ok.status_code == 200
    # applying clears previews for the session, so the stale one is gone
    r = client.post(f"/sessions/{session_id}/apply",
                    json={"preview_id": stale["preview_id"]})
    assert r.status_code == 404
    r = client.post(f"/sessions/{session_id}/apply",
                    json={"preview_id": "pv-does-not-exist"})
    assert r.status_code == 404
    # a fresh preview applied against a mismatched client version is stale
    third = client.post(f"/sessions/{session_id}/preview", json={
        "constraint": {"type": "DeleteTactic", "tactic_ids": [ids[1]]}}).json()
    r = client.post(f"/sessions/{session_id}/apply",
                    json={"preview_id": third["preview_id"],
                          "base_version": 1})
    assert r.status_code == 409
    assert r.json()["code"] == "STALE_VERSION"


def test_suggest_local_and_global(client):
    session_id, state = _mined_session(client)
    victim = state["tactics"][0]["id"]
    r = client.post(f"/sessions/{session_id}/suggest",
                    json={"text": f"delete tactic {victim}"})
    assert r.status_code == 200
    body = r.json()
    assert body["parsed"]["constraint"] == {"type": "DeleteTactic",
                                           "tactic_ids": [victim]}
    assert body["parsed"]["confidence"] >= 0.6
    assert victim in body["diff"]["removed"]

    r = client.post(f"/sessions/{session_id}/suggest",
                    json={"text": "analyze the serving tactics"})
    assert r.status_code == 200
    body = r.json()
    assert body["parsed"]["constraint"] == {"type": "IndexRange",
                                           "lo": 1, "hi": 4}
    preview = _wait(client, body["job_id"])
    assert preview["diff"]["constraint"]["type"] == "IndexRange"


def test_suggest_error_codes(client):
    session_id, _ = _mined_session(client)
    r = client.post(f"/sessions/{session_id}/suggest",
                    json={"text": "paint the rallies purple"})
    assert r.status_code == 422
    body = r.json()
    assert body["code"] == "UNPARSED"
    assert len(body["nearest"]) == 3
    r = client.post(f"/sessions/{session_id}/suggest",
                    json={"text": "delete tactic 424242"})
    assert r.status_code == 400
    assert r.json()["code"] == "VALIDATION"


def test_selected_ids_resolve_in_suggest(client):
    session_id, state = _mined_session(client)
    ids = [t["id"] for t in state["tactics"]]
    if len(ids) < 2:
        pytest.skip("needs two mined tactics")
    r = client.post(f"/sessions/{session_id}/suggest",
                    json={"text": "merge the selected tactics",
                          "selected_ids": ids[:2]})
    assert r.status_code == 200
    assert r.json()["parsed"]["constraint"]["tactic_ids"] == ids[:2]


def test_projection_and_usages(client):
    session_id, state = _mined_session(client)
    proj = client.get(f"/sessions/{session_id}/projection").json()
    assert proj["channel"] == "freq"
    assert len(proj["points"]) == len(state["tactics"])
    for p in proj["points"]:
        assert 0.15 <= p["radius"] <= 1.0
        assert p["size"] >= 0
    by_imp = client.get(f"/sessions/{session_id}/projection",
                        params={"channel": "importance"}).json()
    assert by_imp["channel"] == "importance"

    tid = state["tactics"][0]["id"]
    usages = client.get(
        f"/sessions/{session_id}/tactics/{tid}/usages").json()["usages"]
    assert len(usages) == state["tactics"][0]["freq"]
    for u in usages:
        assert u["start"] >= 1
        assert u["focal_won"] == (u["winner"] == 0)
    assert client.get(
        f"/sessions/{session_id}/tactics/9999/usages").status_code == 404


def test_pin_endpoint(client):
    session_id, state = _mined_session(client)
    tid = state["tactics"][0]["id"]
    r = client.post(f"/sessions/{session_id}/pin", json={"tactic_id": tid})
    assert r.status_code == 200
    doc = next(t for t in r.json()["tactics"] if t["id"] == tid)
    assert doc["pinned"]
    r = client.post(f"/sessions/{session_id}/pin",
                    json={"tactic_id": tid, "pinned": False})
    doc = next(t for t in r.json()["tactics"] if t["id"] == tid)
    assert not doc["pinned"]
    assert client.post(f"/sessions/{session_id}/pin",
                       json={}).status_code == 400


def test_export_document(client):
    session_id, state = _mined_session(client)
    victim = state["tactics"][0]["id"]
    body = client.post(f"/sessions/{session_id}/preview", json={
        "constraint": {"type": "DeleteTactic", "tactic_ids": [victim]}}).json()
    client.post(f"/sessions/{session_id}/apply",
                json={"preview_id": body["preview_id"]})
    doc = client.get(f"/sessions/{session_id}/export").json()
    assert doc["format"] == "tacmine-session"
    assert doc["session_id"] == session_id
    assert doc["state_version"] == 2
    assert doc["tactics"]["format"] == "tacmine-tactic-set"
    assert len(doc["history"]) == 1
    assert doc["history"][0]["constraint"]["type"] == "DeleteTactic"
