import pytest
from fastapi.testclient import TestClient

import movefem.service.app as service_app
from movefem.errors import DegenerateMeshError
from movefem.harness import RESULTS_HEADER


@pytest.fixture(scope="module")
def client():
    return TestClient(service_app.app, raise_server_exceptions=False)


def test_healthz(client):
    body = client.get("/healthz").json()
    assert body["status"] == "ok"


def test_problem_catalog(client):
    infos = client.get("/problems").json()
    names = {p["name"] for p in infos}
    assert names == {"conv1", "diff2", "burgers"}
    burgers = next(p for p in infos if p["name"] == "burgers")
    assert burgers["nonlinear"] and not burgers["has_exact"]
    assert burgers["t_final"] == 2.0


class TestSolveEndpoint:
    def test_basic_solve(self, client):
        resp = client.post(
            "/solve",
            json={"problem": "conv1", "n": 101, "m": 10, "motion": "char",
                  "transfer": "interp"},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["record"]["l2_final"] > 0.0
        assert body["results_csv"].startswith(RESULTS_HEADER)
        assert body["solution_csv"] is None

    def test_solution_payloads(self, client):
        resp = client.post(
            "/solve",
            json={"problem": "conv1", "n": 11, "m": 2, "include_solution": True,
                  "include_mesh": True},
        )
        body = resp.json()
        assert body["solution_csv"].startswith("t,x,u\n")
        assert body["mesh_csv"].startswith("node_index,t,x\n")

    def test_even_n_is_invalid_config(self, client):
        resp = client.post("/solve", json={"problem": "conv1", "n": 100, "m": 10})
        assert resp.status_code == 400
        assert resp.json()["detail"]["code"] == "invalid-config"

    def test_bad_eps_rejected_by_schema(self, client):
        resp = client.post(
            "/solve", json={"problem": "conv1", "n": 101, "m": 10, "eps": 1.5}
        )
        assert resp.status_code == 422

    def test_unknown_problem(self, client):
        resp = client.post("/solve", json={"problem": "poisson", "n": 101, "m": 10})
        assert resp.status_code == 400

    def test_numerical_failure_maps_to_500(self, client, monkeypatch):
        def boom(config):
            raise DegenerateMeshError("synthetic degeneracy")

        monkeypatch.setattr(service_app, "run_single", boom)
        resp = client.post("/solve", json={"problem": "conv1", "n": 101, "m": 10})
        assert resp.status_code == 500
        assert resp.json()["detail"]["code"] == "numerical-failure"


class TestTableEndpoint:
    def test_single_cell(self, client):
        resp = client.post(
            "/table",
            json={"problem": "diff2", "n_list": [41], "m_list": [5]},
        )
        assert resp.status_code == 200
        body = resp.json()
        row = body["rows"][0]
        assert row["ratio"] == pytest.approx(row["l2_moving"] / row["l2_static"], rel=1e-12)
        assert body["results_csv"].startswith(RESULTS_HEADER)
        assert body["grid_csv"].startswith("n,m,l2_moving")


class TestConvergenceEndpoint:
    def test_time_axis(self, client):
        resp = client.post(
            "/convergence", json={"problem": "diff2", "axis": "time"}
        )
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["errors"]) == 4
        assert body["slope"] >= 1.8
        assert "slope" in body["csv"]

    def test_burgers_rejected(self, client):
        resp = client.post(
            "/convergence", json={"problem": "burgers", "axis": "time"}
        )
        assert resp.status_code == 400


class TestBurgersEndpoint:
    def test_thick_shock_suite(self, client):
        resp = client.post("/burgers", json={"reynolds": 100.0, "n": 61, "m": 25})
        assert resp.status_code == 200
        body = resp.json()
        assert body["overshoot_moving"] < body["overshoot_static"]
        assert body["supg_delta"] == 0.1
        assert body["min_front_element"] < 0.5 * body["mean_element"]
        assert body["snapshots_csv"].startswith("scheme,t,x,u")
        assert body["mesh_csv"].startswith("node_index,t,x")
