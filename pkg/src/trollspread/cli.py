"""Command-line entry point: one subcommand per pipeline stage.

Every option can also come from a flat ``key = value`` config file given
with ``--config``; keys are flag names with or without the leading dashes
(``rng-seed = 7`` or ``rng_seed = 7``). Flags given on the command line win.
Outputs go under ``--out`` together with a ``run.json`` provenance record.
Exit codes: 1 usage/config error, 2 data error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import logging
import math
import os
import platform
import sys
import tempfile
import time
from dataclasses import fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, DataError, InvariantError
from .synth import SynthConfig

logger = logging.getLogger("trollspread")

EXPERIMENTS = {"ideology", "train", "ladder", "pdp", "synth"}
_INPUT_NAMES = {
    "tweets": "tweets.jsonl",
    "profiles": "profiles.jsonl",
    "trolls": "trolls.txt",
    "outlets": "outlets.csv",
    "botscores": "botscores.csv",
}
# input files each subcommand reads; lexicon is always optional
_NEEDS = {
    "ingest-stats": ("tweets", "profiles", "trolls"),
    "build-graph": ("tweets", "profiles", "trolls"),
    "engagement": ("tweets", "profiles", "trolls"),
    "ideology": ("tweets", "profiles", "trolls", "outlets"),
    "botstats": ("tweets", "profiles", "trolls", "botscores"),
    "features": tuple(_INPUT_NAMES),
    "correlate": tuple(_INPUT_NAMES),
    "train": tuple(_INPUT_NAMES),
    "ladder": tuple(_INPUT_NAMES),
    "pdp": tuple(_INPUT_NAMES),
    "synth": (),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _progress(event: str, **payload) -> None:
    sys.stderr.write(json.dumps({"event": event, **payload}, sort_keys=True) + "\n")
    sys.stderr.flush()


# -- atomic outputs -------------------------------------------------------------


@contextlib.contextmanager
def _atomic_path(path: Path):
    """Yield a temp path in the target directory; rename onto ``path`` on success."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    os.close(fd)
    try:
        yield Path(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


class Outputs:
    def __init__(self, out_dir: Path):
        self.dir = out_dir
        self.written: dict = {}

    def _record(self, name: str) -> None:
        data = (self.dir / name).read_bytes()
        self.written[name] = hashlib.sha256(data).hexdigest()

    def write(self, name: str, writer) -> Path:
        """Run ``writer(tmp_path)`` and move the result into place."""
        target = self.dir / name
        with _atomic_path(target) as tmp:
            writer(tmp)
        self._record(name)
        return target

    def json(self, name: str, payload) -> Path:
        text = json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
        return self.write(name, lambda p: p.write_text(text, encoding="utf-8"))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# -- argument parsing ------------------------------------------------------------


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _depth(text) -> int:
    # -1 stands for unlimited depth
    return -1 if str(text).strip().lower() in ("none", "unlimited") else int(text)


def _add_common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("common")
    g.add_argument("--config", help="flat key = value config file")
    g.add_argument("--out", help="output directory (default: current directory)")
    g.add_argument("--threads", type=int, help="worker threads (default: available cores)")
    g.add_argument("--log-level", help="logging level (default WARNING)")


def _add_inputs(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("inputs")
    g.add_argument("--data-dir", help="directory holding inputs under their default file names")
    for key, default in _INPUT_NAMES.items():
        g.add_argument(f"--{key}", help=f"path (default: DATA_DIR/{default})")
    g.add_argument("--lexicon", help="category,term CSV (default: bundled demo lexicon)")
    g.add_argument("--window-start", help="inclusive window start (ISO-8601 or epoch seconds)")
    g.add_argument("--window-end", help="inclusive window end")


def _add_propagation(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-iter", type=int, help="label propagation sweep cap (default 100)")
    p.add_argument("--mode", choices=("undirected", "out", "in"), help="voting neighbourhood (default undirected)")
    p.add_argument("--rng-seed", type=int, help="random seed (mandatory for experiment subcommands)")


def _add_learning(p: argparse.ArgumentParser, model_choice: bool) -> None:
    g = p.add_argument_group("classifier")
    g.add_argument("--classifier", choices=("gbdt", "forest"), help="default gbdt")
    g.add_argument("--trees", type=int, help="ensemble size (gbdt 200, forest 100)")
    g.add_argument("--depth", type=_depth, help="max tree depth or 'none' (gbdt 3, forest none)")
    g.add_argument("--learning-rate", type=float, help="gbdt shrinkage (default 0.1)")
    g.add_argument("--min-leaf", type=int, help="minimum leaf size (gbdt 5, forest 1)")
    g.add_argument("--folds", type=int, help="cross-validation folds (default 10)")
    g.add_argument("--harness", choices=("balanced", "full", "dropmissing"), help="default balanced")
    g.add_argument("--n-nonspreaders", type=int, help="balanced harness negative sample size")
    g.add_argument("--global-impute", nargs="?", const=True, type=_bool,
                   help="impute from the whole population instead of each training fold")
    if model_choice:
        g.add_argument("--model", type=int, choices=range(1, 6), help="feature set 1-5 (default 5)")


_SYNTH_FLAGS = {f.name: type(f.default) for f in fields(SynthConfig)}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trollspread", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def cmd(name, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        _add_common(p)
        return p

    p = cmd("ingest-stats", "ingest the corpus and write descriptive statistics")
    _add_inputs(p)
    p = cmd("build-graph", "build the weighted retweet graph and export its edge list")
    _add_inputs(p)
    p = cmd("ideology", "seed and propagate political ideology, with holdout validation")
    _add_inputs(p)
    _add_propagation(p)
    p.add_argument("--folds", type=int, help="holdout folds over the seeds (default 5)")
    p = cmd("engagement", "compute the 16 received-engagement features")
    _add_inputs(p)
    p = cmd("features", "extract the user feature matrix")
    _add_inputs(p)
    _add_propagation(p)
    p.add_argument("--impute", nargs="?", const=True, type=_bool, help="also write the imputed matrix")
    p = cmd("correlate", "Pearson and Spearman correlations of the imputed features")
    _add_inputs(p)
    _add_propagation(p)
    p = cmd("botstats", "compare bot scores of spreaders and non-spreaders")
    _add_inputs(p)
    p.add_argument("--bins", type=int, help="histogram bins (default 50)")
    p = cmd("train", "cross-validate one model of the ladder")
    _add_inputs(p)
    _add_propagation(p)
    _add_learning(p, model_choice=True)
    p = cmd("ladder", "cross-validate models 1-5 on shared folds")
    _add_inputs(p)
    _add_propagation(p)
    _add_learning(p, model_choice=False)
    p = cmd("pdp", "fit one model on the population and export partial dependence curves")
    _add_inputs(p)
    _add_propagation(p)
    _add_learning(p, model_choice=True)
    p.add_argument("--features", help="comma-separated feature names (default: top-k by importance)")
    p.add_argument("--top-k", type=int, help="number of features when --features is absent (default 3)")
    p.add_argument("--grid-points", type=int, help="quantile grid size (default 20)")
    p = cmd("synth", "generate a synthetic corpus with planted ground truth")
    for name, typ in _SYNTH_FLAGS.items():
        if name == "rng_seed":
            continue
        p.add_argument("--" + name.replace("_", "-"), type=typ, help=f"default {getattr(SynthConfig, name)}")
    p.add_argument("--rng-seed", type=int, help="random seed (mandatory)")
    return parser


_DEFAULTS = {
    "threads": None,
    "log_level": "WARNING",
    "max_iter": 100,
    "mode": "undirected",
    "folds": None,
    "classifier": "gbdt",
    "trees": None,
    "depth": "unset",
    "learning_rate": 0.1,
    "min_leaf": None,
    "harness": "balanced",
    "global_impute": False,
    "impute": False,
    "model": 5,
    "top_k": 3,
    "grid_points": 20,
    "bins": 50,
}


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        out[key] = value
    return out


def resolve(parser: argparse.ArgumentParser, argv) -> dict:
    """Merge flags, config file and defaults into one flat settings dict."""
    ns = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[ns.command]
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    settings = {k: v for k, v in vars(ns).items() if k != "config"}
    if ns.config:
        for key, value in read_config_file(ns.config).items():
            if key not in actions:
                raise ConfigError(f"config key {key!r} is not an option of {ns.command}")
            if settings.get(key) is not None:
                continue
            act = actions[key]
            try:
                conv = act.type if act.type is not None else str
                settings[key] = conv(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"config key {key!r}: {exc}") from exc
            if act.choices is not None and settings[key] not in act.choices:
                raise ConfigError(f"config key {key!r}: {value!r} is not one of {list(act.choices)}")
    for key in actions:
        if settings.get(key) is None and key in _DEFAULTS:
            settings[key] = _DEFAULTS[key]
    if settings.get("threads") is None:
        settings["threads"] = os.cpu_count() or 1
    if settings["threads"] < 1:
        raise ConfigError("--threads must be at least 1")
    if ns.command in EXPERIMENTS and settings.get("rng_seed") is None:
        raise ConfigError(f"{ns.command} needs --rng-seed (flag or config file)")
    return settings


def _input_paths(settings: dict, command: str) -> dict:
    base = settings.get("data_dir")
    paths = {}
    for key in _NEEDS[command]:
        p = settings.get(key) or (str(Path(base) / _INPUT_NAMES[key]) if base else None)
        if p is None:
            raise ConfigError(f"{command} needs --{key} or --data-dir")
        paths[key] = p
    if settings.get("lexicon"):
        paths["lexicon"] = settings["lexicon"]
    missing = [f"{k}={p}" for k, p in paths.items() if not Path(p).is_file()]
    if missing:
        raise ConfigError("input files not found: " + ", ".join(missing))
    return paths


def _window(settings: dict):
    lo, hi = settings.get("window_start"), settings.get("window_end")
    if lo is None and hi is None:
        return None
    return (lo if lo is not None else float("-inf"), hi if hi is not None else float("inf"))


# -- stage helpers ---------------------------------------------------------------------


def _timed(timings: dict, name: str, fn, *args, **kwargs):
    t = time.perf_counter()
    out = fn(*args, **kwargs)
    timings[name] = round(time.perf_counter() - t, 6)
    _progress("stage", stage=name, seconds=timings[name])
    return out


def _index(settings, paths, timings):
    from .corpus import ingest
    return _timed(timings, "ingest", ingest, paths["tweets"], paths["profiles"], paths["trolls"], _window(settings))


def _dataset(settings, paths, timings):
    from .pipeline import build_dataset

    def progress(stage, seconds):
        timings[stage] = round(seconds, 6)
        _progress("stage", stage=stage, seconds=timings[stage])

    return build_dataset(paths["tweets"], paths["profiles"], paths["trolls"], paths["outlets"],
                         paths["botscores"], paths.get("lexicon"), _window(settings),
                         max_iter=settings["max_iter"], rng_seed=settings.get("rng_seed") or 0,
                         mode=settings["mode"], progress=progress)


def _classifier_config(settings: dict):
    from .learn.forest import ForestConfig
    from .learn.gbdt import GBDTConfig

    seed = settings["rng_seed"]
    depth = settings["depth"]
    if depth == -1:
        depth = None
    try:
        if settings["classifier"] == "gbdt":
            return GBDTConfig(
                n_trees=settings["trees"] or 200,
                max_depth=3 if depth == "unset" else depth,
                learning_rate=settings["learning_rate"],
                min_leaf=settings["min_leaf"] or 5,
                rng_seed=seed,
            )
        return ForestConfig(
            n_trees=settings["trees"] or 100,
            max_depth=None if depth == "unset" else depth,
            min_leaf=settings["min_leaf"] or 1,
            rng_seed=seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _population(settings, ds):
    from .learn.experiment import select_population

    return select_population(ds.matrix, ds.labels, settings["harness"], bot_scored=set(ds.bot_scores),
                             n_nonspreaders=settings.get("n_nonspreaders"), rng_seed=settings["rng_seed"])


# -- subcommands ---------------------------------------------------------------------------


def cmd_ingest_stats(settings, paths, out: Outputs, timings):
    from .corpus import descriptive_stats

    index = _index(settings, paths, timings)
    stats = _timed(timings, "stats", descriptive_stats, index)
    out.json("stats.json", stats.to_dict())
    out.json("ingest_report.json", index.report.to_dict())
    return {"tweets": stats.tweets, "distinct_users": stats.distinct_users}


def cmd_build_graph(settings, paths, out, timings):
    from .graph import build_retweet_graph

    index = _index(settings, paths, timings)
    graph = _timed(timings, "graph", build_retweet_graph, index)
    out.write("edges.csv", graph.to_csv)
    out.json("graph.json", graph.summary())
    return graph.summary()


def cmd_ideology(settings, paths, out, timings):
    from .graph import build_retweet_graph
    from .ideology import (holdout_validate, hyperpartisan_validate, load_outlets, propagate_labels,
                           seed_users, write_assignments)

    index = _index(settings, paths, timings)
    graph = _timed(timings, "graph", build_retweet_graph, index)
    outlets = load_outlets(paths["outlets"])
    seeds = _timed(timings, "seeds", seed_users, index, outlets)
    prop = _timed(timings, "propagate", propagate_labels, graph, seeds, max_iter=settings["max_iter"],
                  rng_seed=settings["rng_seed"], mode=settings["mode"])
    k = settings["folds"] or 5
    common = dict(k=k, rng_seed=settings["rng_seed"], max_iter=settings["max_iter"], mode=settings["mode"],
                  threads=settings["threads"])
    try:
        holdout = _timed(timings, "holdout", holdout_validate, graph, seeds, **common)
    except ValueError as exc:
        holdout = {"skipped": str(exc)}
    try:
        partisan = _timed(timings, "hyperpartisan", hyperpartisan_validate, index, graph, seeds, outlets, **common)
    except ValueError as exc:
        partisan = {"skipped": str(exc)}
    out.write("assignments.csv", lambda p: write_assignments(p, prop.assignments))
    report = {"seeds": len(seeds), "propagation": {**prop.summary(), "changes_per_sweep": prop.changes_per_sweep},
              "holdout": holdout, "hyperpartisan": partisan}
    out.json("ideology.json", report)
    return prop.summary()


def cmd_engagement(settings, paths, out, timings):
    import csv

    from .engagement import FEATURE_NAMES, compute_engagement, engagement_report

    index = _index(settings, paths, timings)
    vectors = _timed(timings, "engagement", compute_engagement, index)

    def write(p):
        with open(p, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["user_id", *FEATURE_NAMES])
            for uid in sorted(vectors):
                feats = vectors[uid].as_features()
                w.writerow([uid, *(repr(feats[n]) for n in FEATURE_NAMES)])

    out.write("engagement.csv", write)
    report = engagement_report(vectors)
    out.json("engagement.json", report)
    return report


def cmd_features(settings, paths, out, timings):
    from .features import impute

    ds = _dataset(settings, paths, timings)
    extra = {"is_spreader": ds.labels}
    out.write("features.csv", lambda p: ds.matrix.to_csv(p, extra))
    summary = {"users": len(ds.matrix.user_ids), "features": list(ds.matrix.names),
               "groups": dict(zip(ds.matrix.names, ds.matrix.groups)),
               "missing_per_feature": dict(zip(ds.matrix.names, ds.matrix.missing().sum(axis=0).tolist())),
               "spreaders": int(ds.labels.sum())}
    if settings["impute"]:
        imputed = impute(ds.matrix)
        out.write("features_imputed.csv", lambda p: imputed.to_csv(p, extra))
        summary["all_missing_filled_with_zero"] = imputed.notes["all_missing_filled_with_zero"]
    out.json("features.json", summary)
    return {"users": summary["users"], "spreaders": summary["spreaders"]}


def cmd_correlate(settings, paths, out, timings):
    from .features import correlation_matrix, impute, write_square_csv, zero_variance_features

    ds = _dataset(settings, paths, timings)
    imputed = impute(ds.matrix)
    flat = zero_variance_features(imputed)
    for method in ("pearson", "spearman"):
        corr = _timed(timings, method, correlation_matrix, imputed, method)
        out.write(f"correlation_{method}.csv", lambda p, c=corr: write_square_csv(p, imputed.names, c))
    out.json("correlate.json", {"features": list(imputed.names), "zero_variance": flat,
                                "all_missing_filled_with_zero": imputed.notes["all_missing_filled_with_zero"]})
    return {"zero_variance": flat}


def cmd_botstats(settings, paths, out, timings):
    from .botscore import compare_groups, load_bot_scores, write_histogram_csv
    from .corpus import label_spreaders

    index = _index(settings, paths, timings)
    scores = _timed(timings, "botscores", load_bot_scores, paths["botscores"])
    labels = label_spreaders(index)
    sp = [s.user_id for s in labels if s.is_spreader]
    ns = [s.user_id for s in labels if not s.is_spreader]
    report = _timed(timings, "compare", compare_groups, scores, sp, ns, settings["bins"])
    for name, entry in report["classes"].items():
        hist = entry.pop("histogram")
        out.write(f"histogram_{name}.csv", lambda p, h=hist: write_histogram_csv(p, h))
    report["skipped_rows"] = scores.skipped
    out.json("botstats.json", report)
    return {"n_spreaders": report["n_spreaders"], "n_nonspreaders": report["n_nonspreaders"]}


def cmd_train(settings, paths, out, timings):
    from .learn.experiment import evaluate_model, write_roc_csv

    ds = _dataset(settings, paths, timings)
    X, y = _population(settings, ds)
    rep = _timed(timings, "cross_validate", evaluate_model, X, y, settings["model"], k=settings["folds"] or 10,
                 rng_seed=settings["rng_seed"], classifier=settings["classifier"],
                 config=_classifier_config(settings), harness=settings["harness"], threads=settings["threads"],
                 global_impute=settings["global_impute"])
    out.json(f"train_model{settings['model']}.json", rep.to_dict())
    out.write(f"roc_model{settings['model']}.csv", lambda p: write_roc_csv(p, [rep]))
    return {"model": rep.model, "mean_auc": rep.mean_auc}


def cmd_ladder(settings, paths, out, timings):
    from .learn.experiment import run_ladder, write_roc_csv

    ds = _dataset(settings, paths, timings)
    X, y = _population(settings, ds)
    reports = _timed(timings, "ladder", run_ladder, X, y, k=settings["folds"] or 10, rng_seed=settings["rng_seed"],
                     classifier=settings["classifier"], config=_classifier_config(settings),
                     harness=settings["harness"], threads=settings["threads"],
                     global_impute=settings["global_impute"])
    out.json("ladder.json", {"reports": [r.to_dict() for r in reports]})
    out.write("roc.csv", lambda p: write_roc_csv(p, reports))
    return {f"model{r.model}": r.mean_auc for r in reports}


def cmd_pdp(settings, paths, out, timings):
    from .features import impute, select_model
    from .learn.experiment import fit_classifier
    from .learn.explain import feature_importance, partial_dependence, write_pd_csv

    ds = _dataset(settings, paths, timings)
    X, y = _population(settings, ds)
    sub = impute(select_model(X, settings["model"]))
    model = _timed(timings, "fit", fit_classifier, sub.values, y, settings["classifier"],
                   _classifier_config(settings), sub.names)
    imp = feature_importance(model)
    if settings.get("features"):
        wanted = [s.strip() for s in settings["features"].split(",") if s.strip()]
        unknown = [w for w in wanted if w not in sub.names]
        if unknown:
            raise ConfigError(f"unknown features for model {settings['model']}: {unknown}")
    else:
        order = sorted(range(len(imp)), key=lambda j: (-imp[j], j))
        wanted = [sub.names[j] for j in order[:settings["top_k"]]]
    curves = [partial_dependence(model, sub.values, sub.names.index(f), n_grid=settings["grid_points"])
              for f in wanted]
    out.write("pdp.csv", lambda p: write_pd_csv(p, curves))
    out.json("pdp.json", {
        "model": settings["model"],
        "importance": dict(zip(sub.names, imp.tolist())),
        "curves": [{"feature": c.feature, "constant": c.constant, "quantile": c.levels.tolist(),
                    "value": c.grid.tolist(), "pd": c.values.tolist()} for c in curves],
    })
    return {"features": wanted}


def cmd_synth(settings, paths, out, timings):
    from .synth import SynthConfig, generate

    kwargs = {k: settings[k] for k in _SYNTH_FLAGS if settings.get(k) is not None}
    config = SynthConfig(**kwargs)
    manifest = _timed(timings, "generate", generate, config, out.dir)
    for name in (*manifest.files.values(), "manifest.json"):
        out._record(name)
    return manifest.counts


COMMANDS = {
    "ingest-stats": cmd_ingest_stats,
    "build-graph": cmd_build_graph,
    "ideology": cmd_ideology,
    "engagement": cmd_engagement,
    "features": cmd_features,
    "correlate": cmd_correlate,
    "botstats": cmd_botstats,
    "train": cmd_train,
    "ladder": cmd_ladder,
    "pdp": cmd_pdp,
    "synth": cmd_synth,
}


def _versions() -> dict:
    import numba
    import scipy

    return {"trollspread": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__}


def config_hash(settings: dict) -> str:
    """SHA-256 of the resolved settings, excluding knobs that cannot change results."""
    relevant = {k: v for k, v in settings.items() if k not in ("threads", "log_level", "out")}
    return hashlib.sha256(json.dumps(relevant, sort_keys=True, default=str).encode()).hexdigest()


def run(argv=None) -> int:
    parser = build_parser()
    try:
        settings = resolve(parser, argv)
        logging.basicConfig(level=str(settings["log_level"]).upper(), stream=sys.stderr,
                            format="%(asctime)s %(name)s %(levelname)s %(message)s")
        command = settings["command"]
        paths = _input_paths(settings, command)
        out_dir = Path(settings.get("out") or ".")
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {out_dir}: {exc}") from exc
        outputs = Outputs(out_dir)
        timings: dict = {}
        started = datetime.now(timezone.utc).isoformat(timespec="seconds")
        _progress("start", command=command)
        t0 = time.perf_counter()
        result = COMMANDS[command](settings, paths, outputs, timings)
        timings["total"] = round(time.perf_counter() - t0, 6)
        provenance = {
            "command": command,
            "config": {k: v for k, v in settings.items()},
            "config_hash": config_hash(settings),
            "versions": _versions(),
            "inputs": paths,
            "outputs": dict(sorted(outputs.written.items())),
            "result": result,
            "started_at": started,
            "timings": timings,
        }
        outputs.json("run.json", provenance)
        _progress("done", command=command, seconds=timings["total"])
        return 0
    except ConfigError as exc:
        _progress("error", kind="config", message=str(exc))
        print(f"trollspread: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ValueError) as exc:
        _progress("error", kind="data", message=str(exc))
        print(f"trollspread: data error: {exc}", file=sys.stderr)
        return 2
    except InvariantError as exc:
        _progress("error", kind="invariant", message=str(exc))
        print(f"trollspread: internal error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
