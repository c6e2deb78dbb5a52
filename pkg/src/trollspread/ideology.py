"""Political ideology: outlet-based seeding, label propagation, holdout validation."""

from __future__ import annotations

import csv
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from numba import njit

from .corpus import CorpusIndex
from .errors import DataError
from .graph import RetweetGraph
from .learn.cv import stratified_kfold

LIBERAL = "Liberal"
CONSERVATIVE = "Conservative"
UNLABELED = "Unlabeled"
POLARITIES = (LIBERAL, CONSERVATIVE)
_CODE = {LIBERAL: 0, CONSERVATIVE: 1}
_NAME = {0: LIBERAL, 1: CONSERVATIVE, -1: UNLABELED}

_CATEGORY_ALIASES = {
    "liberal": LIBERAL,
    "left": LIBERAL,
    "conservative": CONSERVATIVE,
    "right": CONSERVATIVE,
    "leftcenter": "center",
    "center": "center",
    "rightcenter": "center",
}


def normalize_domain(domain: str) -> str:
    d = domain.strip().lower().rstrip(".")
    return d[4:] if d.startswith("www.") else d


@dataclass
class OutletList:
    """Domain -> polarity, plus centrist domains used only to exclude seeds."""

    polarity: dict
    centrist: frozenset = frozenset()

    def __post_init__(self):
        self.polarity = {normalize_domain(d): p for d, p in self.polarity.items()}
        self.centrist = frozenset(normalize_domain(d) for d in self.centrist)
        both = set(self.polarity) & self.centrist
        if both:
            raise ValueError(f"domains listed as both partisan and centrist: {sorted(both)}")
        for p in self.polarity.values():
            if p not in POLARITIES:
                raise ValueError(f"unknown polarity {p!r}")

    def __len__(self) -> int:
        return len(self.polarity)

    def _lookup(self, host: str, table) -> Optional[str]:
        h = normalize_domain(host)
        while h:
            if h in table:
                return h
            if "." not in h:
                return None
            h = h.split(".", 1)[1]
        return None

    def classify(self, host: str) -> Optional[str]:
        """Polarity of ``host`` (matching the domain or any parent domain), ``"center"``, or ``None``."""
        hit = self._lookup(host, self.polarity)
        if hit is not None:
            return self.polarity[hit]
        if self.centrist and self._lookup(host, self.centrist) is not None:
            return "center"
        return None


def load_outlets(path) -> OutletList:
    """Read a ``domain,polarity`` CSV.

    Polarity may be Liberal/Conservative or one of the five-way categories
    Left, LeftCenter, Center, RightCenter, Right (separators ignored).
    """
    polarity: dict = {}
    centrist: set = set()
    try:
        fh = open(Path(path), newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read outlet list {path}: {exc}") from exc
    with fh:
        for lineno, row in enumerate(csv.DictReader(fh), 2):
            dom = normalize_domain(row.get("domain") or "")
            raw = (row.get("polarity") or "").strip().lower().replace("-", "").replace(" ", "").replace("_", "")
            if not dom or raw not in _CATEGORY_ALIASES:
                raise DataError(f"{path}:{lineno}: bad outlet row {row}")
            cat = _CATEGORY_ALIASES[raw]
            if cat == "center":
                centrist.add(dom)
                continue
            if polarity.get(dom, cat) != cat:
                raise DataError(f"{path}:{lineno}: domain {dom} listed with both polarities")
            polarity[dom] = cat
    if not polarity:
        raise DataError(f"{path}: outlet list has no partisan domains")
    return OutletList(polarity, frozenset(centrist - set(polarity)))


@dataclass(frozen=True)
class IdeologySeed:
    user_id: str
    polarity: str
    liberal_link_count: int
    conservative_link_count: int


@dataclass(frozen=True)
class IdeologyAssignment:
    user_id: str
    label: str
    source: str  # "Seed", "Propagated" or "None"


def seed_users(index: CorpusIndex, outlets: OutletList) -> list[IdeologySeed]:
    """Majority-rule seeds from tweets linking partisan outlets.

    A tweet counts once per side it links to. Users with equal counts are
    dropped, as are users whose centrist-linking tweets outnumber their
    majority side (only when centrist domains are configured).
    """
    if not len(outlets):
        raise ValueError("outlet list is empty")
    seeds = []
    cache: dict = {}
    for uid in sorted(index.by_author):
        lib = con = cen = 0
        for tw in index.by_author[uid]:
            if not tw.domains:
                continue
            sides = set()
            for d in tw.domains:
                if d not in cache:
                    cache[d] = outlets.classify(d)
                if cache[d] is not None:
                    sides.add(cache[d])
            lib += LIBERAL in sides
            con += CONSERVATIVE in sides
            cen += "center" in sides
        if lib == con:
            continue
        if cen and cen > max(lib, con):
            continue
        seeds.append(IdeologySeed(uid, LIBERAL if lib > con else CONSERVATIVE, lib, con))
    return seeds


@njit(nogil=True, cache=True)
def _sweep(indptr, indices, weights, labels, frozen, order):
    changed = 0
    for i in order:
        if frozen[i]:
            continue
        v0 = 0.0
        v1 = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            lab = labels[indices[k]]
            if lab == 0:
                v0 += weights[k]
            elif lab == 1:
                v1 += weights[k]
        cur = labels[i]
        if v0 > v1:
            new = 0
        elif v1 > v0:
            new = 1
        else:
            new = cur
        if new != cur:
            labels[i] = new
            changed += 1
    return changed


@dataclass
class Propagation:
    assignments: list
    converged: bool
    sweeps: int
    changes_per_sweep: list

    @property
    def termination(self) -> str:
        return "converged" if self.converged else "max_iter"

    def labels(self) -> dict:
        return {a.user_id: a.label for a in self.assignments}

    def summary(self) -> dict:
        c = Counter((a.label, a.source) for a in self.assignments)
        return {
            "termination": self.termination,
            "sweeps": self.sweeps,
            "counts": {f"{lab}/{src}": n for (lab, src), n in sorted(c.items())},
        }


def vote_totals(graph: RetweetGraph, labels: dict, user_id: str, mode: str = "undirected") -> dict:
    """Sum of edge weights from ``user_id`` to neighbours holding each label."""
    adj = graph.adjacency(mode)
    i = graph.node_index[user_id]
    out = {LIBERAL: 0.0, CONSERVATIVE: 0.0}
    for k in range(adj.indptr[i], adj.indptr[i + 1]):
        lab = labels.get(graph.node_ids[adj.indices[k]], UNLABELED)
        if lab in out:
            out[lab] += float(adj.data[k])
    return out


def propagate_labels(graph: RetweetGraph, seeds, max_iter: int = 100, rng_seed: int = 0,
                     mode: str = "undirected") -> Propagation:
    """Asynchronous weighted-vote label propagation with frozen seeds.

    Each sweep visits nodes in a fresh permutation drawn from ``rng_seed``;
    a free node takes the label with the larger total edge weight among its
    labelled neighbours and keeps its current label on a tie. Stops when a
    sweep changes nothing or after ``max_iter`` sweeps.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    seed_map = {s.user_id: s.polarity for s in seeds}
    n = graph.n_nodes
    labels = np.full(n, -1, dtype=np.int8)
    frozen = np.zeros(n, dtype=np.bool_)
    for uid, pol in seed_map.items():
        i = graph.node_index.get(uid)
        if i is not None:
            labels[i] = _CODE[pol]
            frozen[i] = True
    in_graph = set(labels[frozen].tolist())
    if not in_graph:
        raise DataError("no seed users appear in the retweet graph")
    if in_graph != {0, 1}:
        raise DataError("seeds in the graph cover only one polarity")

    adj = graph.adjacency(mode)
    indptr = adj.indptr.astype(np.int64)
    indices = adj.indices.astype(np.int64)
    weights = adj.data.astype(np.float64)
    rng = np.random.default_rng(rng_seed)
    changes = []
    converged = False
    for _ in range(max_iter):
        order = rng.permutation(n)
        changed = _sweep(indptr, indices, weights, labels, frozen, order)
        changes.append(int(changed))
        if changed == 0:
            converged = True
            break

    assignments = []
    for i, uid in enumerate(graph.node_ids):
        if frozen[i]:
            src = "Seed"
        elif labels[i] >= 0:
            src = "Propagated"
        else:
            src = "None"
        assignments.append(IdeologyAssignment(uid, _NAME[int(labels[i])], src))
    for uid in sorted(set(seed_map) - set(graph.node_index)):
        assignments.append(IdeologyAssignment(uid, seed_map[uid], "Seed"))
    assignments.sort(key=lambda a: a.user_id)
    return Propagation(assignments, converged, len(changes), changes)


def write_assignments(path, assignments) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["user_id", "label", "source"])
        for a in assignments:
            w.writerow([a.user_id, a.label, a.source])


# -- validation ---------------------------------------------------------------


def _score_fold(truth: dict, predicted: dict) -> dict:
    """Per-class precision/recall; unlabelled predictions are recall misses only."""
    out = {}
    for cls in POLARITIES:
        actual = [u for u, t in truth.items() if t == cls]
        hits = sum(1 for u in actual if predicted.get(u) == cls)
        claimed = sum(1 for u in truth if predicted.get(u) == cls)
        out[cls] = {
            "precision": hits / claimed if claimed else None,
            "recall": hits / len(actual) if actual else None,
            "support": len(actual),
            "predicted": claimed,
        }
    out["unlabeled"] = sum(1 for u in truth if predicted.get(u, UNLABELED) == UNLABELED)
    return out


def _mean_defined(values):
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


def _aggregate(folds: list) -> dict:
    report = {"folds": folds, "classes": {}, "degenerate": False}
    for cls in POLARITIES:
        prec = [f[cls]["precision"] for f in folds]
        rec = [f[cls]["recall"] for f in folds]
        entry = {"precision": _mean_defined(prec), "recall": _mean_defined(rec),
                 "undefined_precision_folds": sum(p is None for p in prec)}
        if entry["precision"] is None or entry["undefined_precision_folds"]:
            report["degenerate"] = True
        report["classes"][cls] = entry
    return report


def _run_folds(graph, base_seeds, held_truth: dict, folds: np.ndarray, held_users: list, k: int,
               max_iter: int, rng_seed: int, mode: str, threads: int) -> dict:
    def one(f):
        out_users = {held_users[i] for i in np.flatnonzero(folds == f)}
        train = [s for s in base_seeds if s.user_id not in out_users]
        prop = propagate_labels(graph, train, max_iter=max_iter, rng_seed=rng_seed + f, mode=mode)
        predicted = prop.labels()
        res = _score_fold({u: held_truth[u] for u in sorted(out_users)}, predicted)
        res["fold"] = f
        res["termination"] = prop.termination
        return res

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(k)))
    else:
        results = [one(f) for f in range(k)]
    return _aggregate(results)


def holdout_validate(graph: RetweetGraph, seeds, k: int = 5, rng_seed: int = 0, max_iter: int = 100,
                     mode: str = "undirected", threads: int = 1) -> dict:
    """Stratified k-fold check of propagation against held-out seeds.

    Each fold propagates from the remaining seeds and scores the held-out
    ones. Precision and recall are averaged over folds per class.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    seeds = sorted(seeds, key=lambda s: s.user_id)
    counts = Counter(s.polarity for s in seeds)
    if any(counts[p] < k for p in POLARITIES):
        raise ValueError(f"each polarity needs at least {k} seeds, got {dict(counts)}")
    users = [s.user_id for s in seeds]
    y = np.array([_CODE[s.polarity] for s in seeds])
    folds = stratified_kfold(y, k, rng_seed)
    truth = {s.user_id: s.polarity for s in seeds}
    return _run_folds(graph, seeds, truth, folds, users, k, max_iter, rng_seed, mode, threads)


def hyperpartisan_users(index: CorpusIndex, outlets: OutletList) -> dict:
    """Users whose profile link points at a partisan outlet, mapped to that outlet's polarity."""
    out = {}
    for uid, prof in sorted(index.profiles.items()):
        if prof.profile_url_domain:
            pol = outlets.classify(prof.profile_url_domain)
            if pol in POLARITIES:
                out[uid] = pol
    return out


def hyperpartisan_validate(index: CorpusIndex, graph: RetweetGraph, seeds, outlets: OutletList, k: int = 5,
                           rng_seed: int = 0, max_iter: int = 100, mode: str = "undirected",
                           threads: int = 1) -> dict:
    """Score propagation against profile-link partisans, in the same report format.

    Each fold withholds its hyper-partisan users from the seed set before
    propagating.
    """
    truth = hyperpartisan_users(index, outlets)
    users = sorted(truth)
    counts = Counter(truth.values())
    if any(counts[p] < k for p in POLARITIES):
        raise ValueError(f"each polarity needs at least {k} hyper-partisan users, got {dict(counts)}")
    y = np.array([_CODE[truth[u]] for u in users])
    folds = stratified_kfold(y, k, rng_seed)
    return _run_folds(graph, list(seeds), truth, folds, users, k, max_iter, rng_seed, mode, threads)
