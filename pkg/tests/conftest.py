import json
import re
from pathlib import Path

import pytest

from trollspread.corpus import ingest
from trollspread.synth import SynthConfig, generate

T0 = 1474156800  # 2016-09-18T00:00:00Z


def write_jsonl(path: Path, records) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(r if isinstance(r, str) else json.dumps(r))
            fh.write("\n")
    return path


def tweet(tid, user, t=T0, text="hello world", **kw):
    rec = {"id": tid, "user_id": user, "created_at": t, "text": text}
    rec.update(kw)
    return rec


@pytest.fixture
def corpus_files(tmp_path):
    """Factory writing tweets/profiles/trolls files and returning their paths."""

    def make(tweets, profiles=(), trolls=(), name="c"):
        d = tmp_path / name
        d.mkdir(exist_ok=True)
        tp = write_jsonl(d / "tweets.jsonl", tweets)
        pp = write_jsonl(d / "profiles.jsonl", profiles)
        trp = d / "trolls.txt"
        trp.write_text("".join(f"{t}\n" for t in trolls), encoding="utf-8")
        return tp, pp, trp

    return make


@pytest.fixture
def make_index(corpus_files):
    def make(tweets, profiles=(), trolls=(), window=None, name="c"):
        return ingest(*corpus_files(tweets, profiles, trolls, name), window=window)

    return make


@pytest.fixture(scope="session")
def small_synth(tmp_path_factory):
    """A 600-user synthetic corpus shared by integration-style tests."""
    out = tmp_path_factory.mktemp("synth600")
    manifest = generate(SynthConfig(n_users=600, n_trolls=10, p_intra=0.02, p_inter=0.001, rng_seed=5), out)
    return out, manifest


@pytest.fixture(scope="session")
def small_dataset(small_synth):
    from trollspread.pipeline import build_dataset

    d, manifest = small_synth
    ds = build_dataset(d / "tweets.jsonl", d / "profiles.jsonl", d / "trolls.txt", d / "outlets.csv",
                       d / "botscores.csv")
    return ds, manifest


# -- acceptance summary ----------------------------------------------------------

_ACCEPTANCE: dict = {}
_CRITERION = re.compile(r"test_criterion_(\d+)")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = _CRITERION.search(item.name)
    if m is None or not item.nodeid.startswith("tests/test_acceptance.py"):
        return
    n = int(m.group(1))
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
        _ACCEPTANCE[n] = ("PASS" if rep.passed else "FAIL", item.name, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        status, name, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {name}  {detail}")
