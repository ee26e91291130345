import json

import pytest

from followerscope.cli import main
from followerscope.scores import ScoredFollowers
from cli_pipeline import PLANTED_CASE, full_pipeline, run, snapshot, write_accounts


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    return full_pipeline(tmp_path_factory.mktemp("run"))


def test_planted_account_ranked_first(pipeline):
    lines = (pipeline / "rank.csv").read_text().splitlines()
    assert lines[0] == "position,account_id,value"
    assert lines[1].split(",")[1] == "acct0"
    assert len(lines) == 4


def test_synth_writes_full_grid(pipeline):
    cases = sorted((pipeline / "cases").iterdir())
    assert len(cases) == 55
    manifest = json.loads((pipeline / "cases" / PLANTED_CASE / "case.json").read_text())
    assert manifest["config_id"] == "t1_n50_s10" and manifest["n_injected"] == 50
    assert len(list((pipeline / "sim_cases").iterdir())) == 4


def test_score_outputs(pipeline):
    s = ScoredFollowers.read(pipeline / "scores_0_sh.csv")
    assert s.method == "sliding_histogram" and len(s) == 3050
    assert (pipeline / "scores_0_sh.csv").read_text().startswith("rank,follower_id,score\n")
    side = json.loads((pipeline / "scores_0_if.params.json").read_text())
    assert side["seed"] is not None and side["params"]["window"] == 51


def test_bench_table_rows(pipeline):
    rows = (pipeline / "bench.csv").read_text().splitlines()
    assert len(rows) == 1 + 2
    table = (pipeline / "bench.txt").read_text()
    assert "SlidingHistogram" in table and "ECOD" in table


def test_network_outputs(pipeline):
    assert (pipeline / "net" / "edges.csv").read_text().startswith("a,b,similarity,n_shared,pairwise_mean_anomaly\n")
    assert (pipeline / "net" / "communities.csv").exists() and (pipeline / "net" / "network.graphml").exists()


def test_rerun_byte_identical(pipeline, tmp_path):
    again = full_pipeline(tmp_path / "again")
    a, b = snapshot(pipeline), snapshot(again)
    assert sorted(a) == sorted(b)
    assert [k for k in a if a[k] != b[k]] == []


def test_error_json(tmp_path, capsys):
    assert main(["score", str(tmp_path / "missing.jsonl"), "--out", str(tmp_path / "s.csv")]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["code"] == "file_not_found" and set(err) == {"code", "message", "context"}


def test_parse_error_json(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"account_id": "a", "collected_at": "2020-01-01T00:00:00Z"}\n{not json\n')
    assert main(["ingest", str(bad)]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["code"] == "parse_error" and err["context"]["line"] == 2


def test_usage_error_json(capsys):
    assert main(["score"]) == 1
    assert json.loads(capsys.readouterr().err)["code"] == "usage"


def test_seed_env_fallback(tmp_path, monkeypatch):
    (acct,) = write_accounts(tmp_path, n_clean=1, n=1500)
    monkeypatch.setenv("SEED", "11")
    run("score", acct, "--method", "if", "--window", 51, "--out", tmp_path / "env.csv")
    monkeypatch.delenv("SEED")
    run("score", acct, "--method", "if", "--window", 51, "--seed", 11, "--out", tmp_path / "flag.csv")
    assert (tmp_path / "env.csv").read_bytes() == (tmp_path / "flag.csv").read_bytes()


def test_config_file(tmp_path, capsys):
    (acct,) = write_accounts(tmp_path, n_clean=1, n=1500)
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# score settings\nmethod = ecod\nwindow = 101\n")
    run("--config", cfg, "score", acct, "--out", tmp_path / "cfg.csv")
    assert json.loads((tmp_path / "cfg.params.json").read_text())["method"] == "ecod"
    assert json.loads((tmp_path / "cfg.params.json").read_text())["params"]["window"] == 101
    # explicit flags beat config values
    run("--config", cfg, "score", acct, "--window", 51, "--out", tmp_path / "flag.csv")
    assert json.loads((tmp_path / "flag.params.json").read_text())["params"]["window"] == 51
    cfg.write_text("colour = blue\n")
    assert main(["--config", str(cfg), "score", str(acct), "--out", str(tmp_path / "x.csv")]) == 1
    assert json.loads(capsys.readouterr().err)["code"] == "bad_config"
