import hashlib
import json
import os

import numpy as np
import pytest

from trollspread.botscore import load_bot_scores
from trollspread.errors import ConfigError, DataError
from trollspread.synth import Manifest, SynthConfig, generate, planted_partition_graph, sbm_pairs


def _digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_generation_is_deterministic(tmp_path):
    cfg = SynthConfig(n_users=300, n_trolls=6, rng_seed=9)
    generate(cfg, tmp_path / "a")
    generate(cfg, tmp_path / "b")
    names = sorted(os.listdir(tmp_path / "a"))
    assert names == ["botscores.csv", "manifest.json", "outlets.csv", "profiles.jsonl", "trolls.txt",
                     "tweets.jsonl"]
    for name in names:
        assert _digest(tmp_path / "a" / name) == _digest(tmp_path / "b" / name), name
    generate(SynthConfig(n_users=300, n_trolls=6, rng_seed=10), tmp_path / "c")
    assert _digest(tmp_path / "a" / "tweets.jsonl") != _digest(tmp_path / "c" / "tweets.jsonl")


def test_manifest_round_trip_and_contents(small_synth):
    d, manifest = small_synth
    loaded = Manifest.load(d / "manifest.json")
    assert loaded.to_dict() == json.loads(json.dumps(manifest.to_dict()))
    users = manifest.users
    assert len(users) == 600
    assert sum(u["troll"] for u in users.values()) == 10
    assert not any(u["spreader"] and u["troll"] for u in users.values())
    scores = load_bot_scores(d / "botscores.csv")
    for uid, u in users.items():
        if u["bot_score"] is None:
            assert uid not in scores
        else:
            assert scores[uid].overall == u["bot_score"]
    assert (d / "trolls.txt").read_text().startswith("#")


def test_tweets_are_time_ordered_with_utc_timestamps(small_synth):
    d, _ = small_synth
    last = ""
    with open(d / "tweets.jsonl") as fh:
        for line in fh:
            rec = json.loads(line)
            assert rec["created_at"].endswith("Z")
            assert rec["created_at"] >= last
            last = rec["created_at"]


def test_config_validation():
    with pytest.raises(ConfigError):
        SynthConfig(p_intra=1.5)
    with pytest.raises(ConfigError):
        SynthConfig(n_users=10, n_trolls=10)
    with pytest.raises(ConfigError):
        SynthConfig(p_reply=0.7, p_quote=0.5)


def test_unwritable_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(DataError):
        generate(SynthConfig(n_users=20, n_trolls=2), blocker / "sub")


def test_sbm_edge_counts_follow_probabilities():
    rng = np.random.default_rng(0)
    blocks = [np.arange(0, 400), np.arange(400, 800)]
    src, dst = sbm_pairs(rng, blocks, 0.01, 0.001)
    same = (src < 400) == (dst < 400)
    expected_intra = 2 * 0.01 * 400 * 399 / 2
    expected_inter = 0.001 * 400 * 400
    assert abs(same.sum() - expected_intra) < 5 * np.sqrt(expected_intra)
    assert abs((~same).sum() - expected_inter) < 5 * np.sqrt(expected_inter)
    assert np.all(src != dst)


def test_planted_partition_graph_blocks():
    g, block = planted_partition_graph(50, p_intra=0.1, p_inter=0.01, rng_seed=1)
    assert g.n_nodes == 100
    assert block["n000"] == 0 and block["n099"] == 1
    assert np.all(np.diff(g.src * 100 + g.dst) > 0)
    assert g.weight.sum() >= g.n_edges
