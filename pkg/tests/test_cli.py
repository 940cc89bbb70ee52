import io
import json
import subprocess
import sys
from datetime import datetime, timezone

import pytest

from serpscope import fetch as fetch_mod
from serpscope.cli import run
from serpscope.classifier import deserialize_model
from serpscope.dataset_io import dataset_to_rows, read_csv, write_csv
from serpscope.errors import TransportError
from serpscope.fetch import FetchConfig, Fetcher
from serpscope.synthetic import generate


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture(scope="module")
def data_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "train.csv"
    path.write_bytes(write_csv(dataset_to_rows(generate(300, seed=5))))
    return path


def test_version():
    proc = subprocess.run([sys.executable, "-m", "serpscope.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "0.1.0" in proc.stdout and "google-2016@2016.03" in proc.stdout


def test_parse_matches_json_fixture(fixtures):
    code, out, _ = cli("parse", "--html", fixtures / "moon-shot.html", "--retrieved-at", "2016-03-15T00:00:00Z")
    assert code == 0
    assert out == (fixtures / "moon-shot.json").read_text()


def test_extract_emits_csv_row(fixtures):
    code, out, _ = cli("extract", "--query", "moon shot", "--serp", fixtures / "moon-shot.json", "--id", "q1")
    assert code == 0
    (row,) = read_csv(out)
    assert row.query_id == "q1" and row.label == "unlabeled"
    assert out.splitlines()[1] == "q1,1,0,1,0.0833,0.0000,275,0,0.6364,0.8478,2,unlabeled"


def test_classify_default_and_custom_model(fixtures, tmp_path):
    code, out, _ = cli("classify", "--query", "moon shot", "--serp", fixtures / "moon-shot.html")
    assert code == 0
    result = json.loads(out)
    assert set(result) == {"p_q", "g_q", "label"}
    assert result["label"] == "scholar" and result["p_q"] == pytest.approx(0.62587, abs=1e-5)

    model = tmp_path / "m.json"
    model.write_text(json.dumps({"name": "always-no", "intercept": -50, "coefficients": [0] * 10}))
    code, out, _ = cli("classify", "--query", "moon shot", "--serp", fixtures / "moon-shot.json", "--model", model)
    assert json.loads(out)["label"] == "non-scholar"


def test_train_writes_model_and_report(data_csv, tmp_path):
    out_model = tmp_path / "model.json"
    code, out, _ = cli("train", "--data", data_csv, "--out", out_model, "--ridge", "0.5")
    assert code == 0
    report = json.loads(out)
    assert report["converged"] and report["iterations"] >= 1
    model = deserialize_model(out_model.read_bytes())
    assert model.metadata["ridge"] == 0.5 and model.metadata["trained_on"] == 300


def test_evaluate_is_byte_identical_across_runs(data_csv):
    runs = [cli("evaluate", "--data", data_csv, "--k", "5", "--seed", "7") for _ in range(2)]
    assert runs[0][0] == 0
    assert runs[0][1] == runs[1][1]
    report = json.loads(runs[0][1])
    assert report["fold_count"] == 5 and "Weighted" not in runs[0][1]
    code, table, _ = cli("evaluate", "--data", data_csv, "--k", "5", "--table")
    assert "Weighted Avg." in table


def test_analyze(data_csv):
    code, out, _ = cli("analyze", "--data", data_csv)
    assert code == 0
    payload = json.loads(out)
    assert set(payload["features"]) == {f"f{i}" for i in range(1, 11)}
    assert payload["summary"]["scholar"]["count"] + payload["summary"]["non-scholar"]["count"] == 300


def test_fetch_offline_hit_and_miss(tmp_path, monkeypatch):
    monkeypatch.delenv("SERPSCOPE_CACHE", raising=False)
    cfg_path = tmp_path / "fetch.json"
    cfg_path.write_text(json.dumps({"cache_dir": str(tmp_path / "cache"), "mode": "offline"}))
    Fetcher(FetchConfig.load(cfg_path)).write_cache("moon shot", b"<html/>", datetime(2016, 3, 15, tzinfo=timezone.utc))

    code, out, _ = cli("fetch", "--query", "moon shot", "--config", cfg_path)
    assert code == 0 and json.loads(out)["from_cache"] is True
    code, _, err = cli("fetch", "--query", "unseen", "--config", cfg_path)
    assert code == 1 and "OfflineMiss" in err


def test_fetch_transport_error_exit_3(tmp_path, monkeypatch):
    monkeypatch.setenv("SERPSCOPE_CACHE", str(tmp_path))

    def refuse(url):
        raise TransportError("connection refused")

    monkeypatch.setattr(fetch_mod, "http_transport", refuse)
    code, out, err = cli("fetch", "--query", "q", "--mode", "network")
    assert code == 3 and out == "" and "connection refused" in err


@pytest.mark.parametrize(
    "argv",
    [[], ["bogus"], ["parse"], ["evaluate", "--data", "x.csv", "--k", "ten"], ["train", "--data", "x"]],
)
def test_usage_errors_exit_2(argv):
    code, out, _ = cli(*argv)
    assert code == 2 and out == ""


def test_data_errors_exit_1(tmp_path, fixtures):
    bad = tmp_path / "bad.csv"
    bad.write_text("nope\n")
    assert cli("evaluate", "--data", bad)[0] == 1
    assert cli("parse", "--html", tmp_path / "missing.html")[0] == 1
    empty = tmp_path / "empty.html"
    empty.write_text("")
    code, out, err = cli("parse", "--html", empty)
    assert code == 1 and out == "" and "EmptyDocument" in err
    unlabeled = tmp_path / "u.csv"
    unlabeled.write_text(cli("extract", "--query", "moon shot", "--serp", fixtures / "moon-shot.json")[1])
    assert cli("train", "--data", unlabeled, "--out", tmp_path / "m.json")[0] == 1


def test_installed_entry_point(fixtures):
    proc = subprocess.run(
        ["serpscope", "classify", "--query", "cheap bicycle", "--serp", str(fixtures / "cheap-bicycle.json")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0 and json.loads(proc.stdout)["label"] == "non-scholar"
