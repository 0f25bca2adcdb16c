"""HTTP endpoints: correctness, error codes and CLI artifact parity."""
import json
import threading
import urllib.error
import urllib.request

import pytest

from fuzzyrules.checkpoint import load_checkpoint
from fuzzyrules.cli import main
from fuzzyrules.server import build_context, build_server


@pytest.fixture(scope="module")
def setup(tmp_path_factory):
    root = tmp_path_factory.mktemp("server")
    data = root / "data"
    run = root / "run"
    assert main(["synth", "--out", str(data), "--n-atoms", "4", "--n-impressions", "160",
                 "--candidates", "4", "--seed", "2", "--rule", "f0 ∧ ¬f1"]) == 0
    split_time = json.loads((data / "run_config.json").read_text())["split_time"]
    config = {
        "split_time": split_time,
        "network": {"hidden_layers": [4], "output_kind": "and"},
        "training": {"epochs": 3, "batch_size": 128, "seed": 0},
        "thresholds": [0.0, 0.5],
    }
    (root / "config.json").write_text(json.dumps(config))
    assert main(["train", "--data", str(data), "--config", str(root / "config.json"),
                 "--out", str(run)]) == 0

    ui = root / "ui"
    ui.mkdir()
    (ui / "index.html").write_text("<!doctype html><title>explorer</title>")
    (ui / "app.js").write_text("console.log('hi')")

    ckpt = load_checkpoint(run / "checkpoint.json")
    servers = []

    def start(**kwargs):
        context = build_context(ckpt, data, **kwargs)
        httpd = build_server(context, port=0)
        threading.Thread(target=httpd.serve_forever, daemon=True).start()
        servers.append(httpd)
        return f"http://127.0.0.1:{httpd.server_address[1]}"

    yield {
        "api": start(),
        "with_ui": start(ui_dir=ui),
        "data": data,
        "run": run,
        "ckpt": str(run / "checkpoint.json"),
    }
    for httpd in servers:
        httpd.shutdown()
        httpd.server_close()


def get(base, path):
    try:
        with urllib.request.urlopen(base + path, timeout=10) as resp:
            return resp.status, dict(resp.headers), resp.read()
    except urllib.error.HTTPError as err:
        return err.code, dict(err.headers), err.read()


def test_meta(setup):
    status, headers, body = get(setup["api"], "/api/meta")
    assert status == 200
    assert headers["Content-Type"].startswith("application/json")
    doc = json.loads(body)
    assert doc["n_atoms"] == len(doc["atoms"])
    assert doc["network"]["layer_sizes"][-1] == 1
    assert doc["thresholds"] == [0.0, 0.5]
    assert doc["n_impressions"] > 0
    assert doc["max_abs_output_weight"] > 0.0


def test_cors_and_options(setup):
    status, headers, _ = get(setup["api"], "/api/meta")
    assert headers["Access-Control-Allow-Origin"] == "*"
    req = urllib.request.Request(setup["api"] + "/api/rules", method="OPTIONS")
    with urllib.request.urlopen(req, timeout=10) as resp:
        assert resp.status == 204


def test_rules_matches_cli_extract(setup, tmp_path):
    for t, mode in (("0.5", "full"), ("0.25", "weighted")):
        out = tmp_path / f"rule-{t}-{mode}.json"
        assert main(["extract", "--checkpoint", setup["ckpt"], "--threshold", t,
                     "--mode", mode, "--out", str(out)]) == 0
        status, _, body = get(setup["api"], f"/api/rules?t={t}&mode={mode}")
        assert status == 200
        assert body == out.read_bytes()


def test_rules_rejects_bad_query(setup):
    assert get(setup["api"], "/api/rules")[0] == 400
    assert get(setup["api"], "/api/rules?t=abc")[0] == 400
    assert get(setup["api"], "/api/rules?t=1.5")[0] == 400
    assert get(setup["api"], "/api/rules?t=0.5&mode=bogus")[0] == 400


def test_metrics_row(setup):
    status, _, body = get(setup["api"], "/api/metrics?t=0.5")
    assert status == 200
    doc = json.loads(body)
    assert doc["threshold"] == 0.5
    assert "rc" in doc and "tau_b" in doc
    assert doc["stable"]["n_impressions"] == doc["expected"]["n_impressions"]
    assert get(setup["api"], "/api/metrics")[0] == 400


def test_sweep_matches_cli(setup, tmp_path):
    out = tmp_path / "sweep.json"
    assert main(["sweep", "--checkpoint", setup["ckpt"], "--data", str(setup["data"]),
                 "--out-json", str(out)]) == 0
    status, _, body = get(setup["api"], "/api/sweep")
    assert status == 200
    assert body == out.read_bytes()


def test_model_metrics_matches_cli_evaluate(setup, tmp_path):
    out = tmp_path / "metrics.json"
    assert main(["evaluate", "--checkpoint", setup["ckpt"], "--data", str(setup["data"]),
                 "--out", str(out)]) == 0
    status, _, body = get(setup["api"], "/api/model-metrics")
    assert status == 200
    assert body == out.read_bytes()


def test_unknown_path_404_without_ui(setup):
    status, _, body = get(setup["api"], "/nope")
    assert status == 404
    assert "error" in json.loads(body)


def test_static_ui(setup):
    status, headers, body = get(setup["with_ui"], "/")
    assert status == 200
    assert headers["Content-Type"].startswith("text/html")
    assert b"explorer" in body
    status, headers, body = get(setup["with_ui"], "/app.js")
    assert status == 200
    assert "javascript" in headers["Content-Type"]
    assert get(setup["with_ui"], "/missing.css")[0] == 404
    # API still wins over static files
    assert get(setup["with_ui"], "/api/meta")[0] == 200


def test_static_path_traversal_blocked(setup, tmp_path):
    secret = tmp_path / "secret.txt"
    secret.write_text("top secret")
    status, _, body = get(setup["with_ui"], "/../" + str(secret).lstrip("/"))
    assert status == 404
    assert b"top secret" not in body


def test_concurrent_requests(setup):
    results = []

    def hit():
        results.append(get(setup["api"], "/api/sweep")[2])

    threads = [threading.Thread(target=hit) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(results) == 8
    assert all(r == results[0] for r in results)
