import pytest
from fastapi.testclient import TestClient

from evoswim.server import create_app
from evoswim.session import SessionStore

SLOPES = {"slopes_dir_a": [1.0, 1.1, 0.9, 1.0, 1.0],
          "slopes_dir_b": [-0.2, -0.2, -0.2, -0.2, -0.2]}


@pytest.fixture()
def store(tmp_path):
    store = SessionStore(tmp_path / "journals")
    yield store
    store.close()


@pytest.fixture()
def client(store):
    return TestClient(create_app(store))


def create_session(client, **overrides):
    body = {"name": "lab run", "algorithm": "ga", "seed": 11, "max_generations": 2}
    body.update(overrides)
    response = client.post("/api/sessions", json=body)
    assert response.status_code == 201, response.text
    return response.json()


def measure_all(client, session_id, count=8):
    for i in range(count):
        response = client.put(
            f"/api/sessions/{session_id}/generations/current/robots/{i}/measurement",
            json={"speed": float(i)})
        assert response.status_code == 200, response.text


class TestCreate:
    def test_document_shape(self, client):
        doc = create_session(client)
        assert doc["status"] == "collecting"
        assert doc["current_generation"] == 0
        assert doc["population"] == 8
        assert len(doc["robots"]) == 8
        card = doc["robots"][0]
        assert len(card["parameters"]) == 8
        assert card["parameters"][0]["name"] == "laser_power"
        assert card["parameters"][0]["label"].endswith(" W")
        assert card["measured"] is False and card["speed"] is None
        assert doc["completed_generations"] == []

    def test_same_seed_same_generation(self, client):
        a = create_session(client)
        b = create_session(client)
        assert [r["genotype"] for r in a["robots"]] == [r["genotype"] for r in b["robots"]]

    def test_invalid_config_field_message(self, client):
        response = client.post("/api/sessions", json={
            "name": "x", "algorithm": "ga", "seed": 1,
            "config": {"selection": "tournament"}})
        assert response.status_code == 400
        error = response.json()["error"]
        assert error["code"] == "invalid_config"
        assert "selection" in error["message"]

    def test_unknown_algorithm(self, client):
        response = client.post("/api/sessions", json={
            "name": "x", "algorithm": "annealing", "seed": 1})
        assert response.status_code == 400

    def test_pso_session(self, client):
        doc = create_session(client, algorithm="pso",
                             config={"w": 0.0, "c1": 0.2, "c2": 1.4})
        assert doc["algorithm"] == "pso"
        assert doc["config"]["c2"] == 1.4


class TestListGet:
    def test_list_and_get(self, client):
        doc = create_session(client)
        listed = client.get("/api/sessions").json()
        assert [s["id"] for s in listed] == [doc["id"]]
        fetched = client.get(f"/api/sessions/{doc['id']}")
        assert fetched.status_code == 200
        assert fetched.json()["robots"] == doc["robots"]

    def test_unknown_session(self, client):
        assert client.get("/api/sessions/nope").status_code == 404


class TestMeasurement:
    def test_slopes_speed_computed_by_service(self, client):
        doc = create_session(client)
        response = client.put(
            f"/api/sessions/{doc['id']}/generations/current/robots/0/measurement",
            json=SLOPES)
        assert response.status_code == 200
        body = response.json()
        assert body["recorded"] == {"robot_index": 0, "speed": 1.0}
        assert body["robots"][0]["speed"] == 1.0
        assert body["robots"][0]["measured"] is True

    def test_duplicate_conflict_and_overwrite(self, client):
        doc = create_session(client)
        url = f"/api/sessions/{doc['id']}/generations/current/robots/0/measurement"
        assert client.put(url, json={"speed": 1.0}).status_code == 200
        conflict = client.put(url, json={"speed": 2.0})
        assert conflict.status_code == 409
        assert conflict.json()["error"]["code"] == "duplicate_measurement"
        ok = client.put(url + "?overwrite=true", json={"speed": 2.0})
        assert ok.status_code == 200
        assert ok.json()["robots"][0]["speed"] == 2.0

    def test_invalid_payloads(self, client):
        doc = create_session(client)
        url = f"/api/sessions/{doc['id']}/generations/current/robots/0/measurement"
        assert client.put(url, json={}).status_code == 400
        assert client.put(url, json={"speed": -1.0}).status_code == 400
        bad_index = client.put(
            f"/api/sessions/{doc['id']}/generations/current/robots/99/measurement",
            json={"speed": 1.0})
        assert bad_index.status_code == 404


class TestAdvance:
    def test_conflict_lists_missing(self, client):
        doc = create_session(client)
        measure_all(client, doc["id"], count=6)
        response = client.post(f"/api/sessions/{doc['id']}/advance")
        assert response.status_code == 409
        error = response.json()["error"]
        assert error["code"] == "incomplete_generation"
        assert error["missing"] == [6, 7]

    def test_advance_proposes_next(self, client):
        doc = create_session(client)
        measure_all(client, doc["id"])
        response = client.post(f"/api/sessions/{doc['id']}/advance")
        assert response.status_code == 200
        body = response.json()
        assert body["current_generation"] == 1
        assert body["completed_generations"] == [
            {"generation": 0, "best_speed": 7.0, "best_robot_index": 7}]
        assert all(not r["measured"] for r in body["robots"])

    def test_completion_and_repeat_conflict(self, client):
        doc = create_session(client, max_generations=1)
        measure_all(client, doc["id"])
        done = client.post(f"/api/sessions/{doc['id']}/advance")
        assert done.json()["status"] == "complete"
        again = client.post(f"/api/sessions/{doc['id']}/advance")
        assert again.status_code == 409
        assert again.json()["error"]["code"] == "state_conflict"


class TestExport:
    def test_csv_export(self, client):
        doc = create_session(client, max_generations=1)
        measure_all(client, doc["id"])
        client.post(f"/api/sessions/{doc['id']}/advance")
        response = client.get(f"/api/sessions/{doc['id']}/export?format=csv")
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("text/csv")
        lines = response.text.strip().split("\n")
        assert len(lines) == 9
        assert lines[0].startswith("generation,robot_index,laser_power")

    def test_unknown_format(self, client):
        doc = create_session(client)
        response = client.get(f"/api/sessions/{doc['id']}/export?format=xml")
        assert response.status_code == 400
        assert response.json()["error"]["code"] == "unknown_format"


class TestRestart:
    def test_sessions_survive_restart(self, tmp_path):
        journal_dir = tmp_path / "journals"
        store = SessionStore(journal_dir)
        client = TestClient(create_app(store))
        doc = create_session(client)
        measure_all(client, doc["id"])
        client.post(f"/api/sessions/{doc['id']}/advance")
        store.close()

        reopened = SessionStore(journal_dir)
        client2 = TestClient(create_app(reopened))
        listed = client2.get("/api/sessions").json()
        assert [s["id"] for s in listed] == [doc["id"]]
        state = client2.get(f"/api/sessions/{doc['id']}").json()
        assert state["current_generation"] == 1
        assert state["completed_generations"][0]["best_speed"] == 7.0
        reopened.close()


class TestStaticAssets:
    def test_console_served_when_configured(self, tmp_path, store):
        assets = tmp_path / "assets"
        assets.mkdir()
        (assets / "index.html").write_text("<html><body>console</body></html>")
        client = TestClient(create_app(store, assets_dir=assets))
        response = client.get("/")
        assert response.status_code == 200
        assert "console" in response.text
        # API still reachable alongside the mount
        assert client.get("/api/sessions").status_code == 200
