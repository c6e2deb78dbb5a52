import hashlib
import json
import os
import subprocess
import sys

import pytest

from trollspread import __version__, cli

SUBCOMMAND_OUTPUTS = {
    "ingest-stats": ["stats.json", "ingest_report.json"],
    "build-graph": ["edges.csv", "graph.json"],
    "ideology": ["assignments.csv", "ideology.json"],
    "engagement": ["engagement.csv", "engagement.json"],
    "features": ["features.csv", "features.json", "features_imputed.csv"],
    "correlate": ["correlation_pearson.csv", "correlation_spearman.csv", "correlate.json"],
    "botstats": ["botstats.json", "histogram_overall.csv"],
    "train": ["train_model5.json", "roc_model5.csv"],
    "ladder": ["ladder.json", "roc.csv"],
    "pdp": ["pdp.csv", "pdp.json"],
}
FAST = ["--folds", "3", "--trees", "10"]
EXTRA = {"features": ["--impute"], "train": FAST, "ladder": FAST, "pdp": ["--trees", "10"], "ideology": ["--folds", "3"]}
SEEDED = {"ideology", "train", "ladder", "pdp"}


def _hashes(directory):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(directory.iterdir()) if p.is_file()}


def _args(command, data_dir, out, *extra):
    argv = [command, "--data-dir", str(data_dir), "--out", str(out), *EXTRA.get(command, []), *extra]
    if command in SEEDED:
        argv += ["--rng-seed", "1"]
    return argv


@pytest.mark.parametrize("command", sorted(SUBCOMMAND_OUTPUTS))
def test_subcommand_writes_outputs(command, small_synth, tmp_path):
    data, _ = small_synth
    before = _hashes(data)
    assert cli.run(_args(command, data, tmp_path)) == 0
    for name in SUBCOMMAND_OUTPUTS[command] + ["run.json"]:
        assert (tmp_path / name).is_file(), name
    run = json.loads((tmp_path / "run.json").read_text())
    assert run["command"] == command
    for name, digest in run["outputs"].items():
        assert hashlib.sha256((tmp_path / name).read_bytes()).hexdigest() == digest
    assert not [p for p in os.listdir(tmp_path) if p.startswith(".")]
    assert _hashes(data) == before


def test_synth_subcommand(tmp_path):
    assert cli.run(["synth", "--out", str(tmp_path), "--n-users", "200", "--n-trolls", "4", "--rng-seed", "2"]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config"]["n_users"] == 200
    run = json.loads((tmp_path / "run.json").read_text())
    assert set(run["outputs"]) >= {"tweets.jsonl", "manifest.json"}


def test_rerun_is_identical_apart_from_timing(small_synth, tmp_path):
    data, _ = small_synth
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.run(_args("train", data, a)) == 0
    assert cli.run(_args("train", data, b)) == 0
    ra = json.loads((a / "run.json").read_text())
    rb = json.loads((b / "run.json").read_text())
    for r in (ra, rb):
        for key in ("timings", "started_at"):
            r.pop(key)
        r["config"].pop("out")
    assert ra == rb
    assert _hashes(a)["train_model5.json"] == _hashes(b)["train_model5.json"]


def test_config_file_and_flag_precedence(small_synth, tmp_path):
    data, _ = small_synth
    conf = tmp_path / "run.conf"
    conf.write_text("# experiment settings\nfolds = 4\ntrees = 7\nrng-seed = 5\n")
    out = tmp_path / "o"
    assert cli.run(["train", "--config", str(conf), "--data-dir", str(data), "--out", str(out), "--trees", "9"]) == 0
    rep = json.loads((out / "train_model5.json").read_text())
    assert rep["config"]["folds"] == 4
    assert rep["config"]["n_trees"] == 9
    assert rep["config"]["rng_seed"] == 5


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["train", "--data-dir", "."],  # no rng seed
    ["ingest-stats", "--data-dir", "/nonexistent/dir"],
    ["train", "--classifier", "svm", "--rng-seed", "1"],
    ["synth", "--rng-seed", "1", "--p-intra", "2.0"],
])
def test_usage_errors_exit_1(argv, tmp_path, capsys):
    code = None
    try:
        code = cli.run(argv + ["--out", str(tmp_path)])
    except SystemExit as exc:
        code = exc.code
    assert code == 1


def test_bad_config_key_exits_1(small_synth, tmp_path):
    data, _ = small_synth
    conf = tmp_path / "c.conf"
    conf.write_text("no_such_option = 3\n")
    assert cli.run(["ingest-stats", "--config", str(conf), "--data-dir", str(data), "--out", str(tmp_path)]) == 1


def test_data_error_exits_2(small_synth, tmp_path):
    data, _ = small_synth
    bad = tmp_path / "bots.csv"
    bad.write_text("user_id,overall\nu1,0.5\n")
    argv = ["botstats", "--data-dir", str(data), "--botscores", str(bad), "--out", str(tmp_path / "o")]
    assert cli.run(argv) == 2


def test_progress_is_json_lines(small_synth, tmp_path, capsys):
    data, _ = small_synth
    assert cli.run(["ingest-stats", "--data-dir", str(data), "--out", str(tmp_path)]) == 0
    events = [json.loads(line) for line in capsys.readouterr().err.splitlines() if line.startswith("{")]
    assert events[0]["event"] == "start" and events[-1]["event"] == "done"


def test_console_entry_point_version():
    res = subprocess.run([sys.executable, "-m", "trollspread.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0
    assert __version__ in res.stdout
