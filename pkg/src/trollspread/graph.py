"""Weighted retweet network."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse

from .corpus import CorpusIndex


@dataclass(eq=False)
class RetweetGraph:
    """Directed retweet graph: an edge ``i -> j`` means ``i`` retweeted ``j``.

    Nodes are numbered densely in sorted ``user_id`` order. Edge arrays are
    sorted by ``(src, dst)``.
    """

    node_ids: tuple
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    self_loops: int = 0
    node_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.node_index = {u: i for i, u in enumerate(self.node_ids)}

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    def adjacency(self, mode: str = "undirected") -> sparse.csr_matrix:
        """CSR adjacency used for voting: row ``i`` lists the neighbours ``i`` listens to.

        ``undirected``: weight(i,j) = w(i->j) + w(j->i).
        ``out``: row i holds the accounts i retweeted.
        ``in``: row i holds the accounts that retweeted i.
        """
        if mode == "undirected":
            return self._undirected
        if mode == "out":
            return self._directed
        if mode == "in":
            return self._reverse
        raise ValueError(f"unknown adjacency mode {mode!r}")

    def _csr(self, rows, cols, vals) -> sparse.csr_matrix:
        n = self.n_nodes
        m = sparse.csr_matrix((vals.astype(np.float64), (rows, cols)), shape=(n, n))
        m.sum_duplicates()
        m.sort_indices()
        return m

    @cached_property
    def _directed(self):
        return self._csr(self.src, self.dst, self.weight)

    @cached_property
    def _reverse(self):
        return self._csr(self.dst, self.src, self.weight)

    @cached_property
    def _undirected(self):
        rows = np.concatenate([self.src, self.dst])
        cols = np.concatenate([self.dst, self.src])
        vals = np.concatenate([self.weight, self.weight])
        return self._csr(rows, cols, vals)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["src", "dst", "weight"])
            for s, d, wt in zip(self.src, self.dst, self.weight):
                w.writerow([self.node_ids[s], self.node_ids[d], int(wt)])

    def summary(self) -> dict:
        return {
            "nodes": self.n_nodes,
            "edges": self.n_edges,
            "total_weight": int(self.weight.sum()),
            "self_loops_dropped": self.self_loops,
        }


def build_retweet_graph(index: CorpusIndex) -> RetweetGraph:
    """Count retweets per (retweeter, retweetee) pair; self-retweets are dropped."""
    pairs: Counter = Counter()
    self_loops = 0
    for tw in index.tweets.values():
        target = tw.retweeted_user_id
        if target is None:
            continue
        if target == tw.author_id:
            self_loops += 1
            continue
        pairs[(tw.author_id, target)] += 1
    nodes = tuple(sorted({u for pair in pairs for u in pair}))
    pos = {u: i for i, u in enumerate(nodes)}
    m = len(pairs)
    src = np.empty(m, dtype=np.int64)
    dst = np.empty(m, dtype=np.int64)
    wt = np.empty(m, dtype=np.int64)
    for k, ((a, b), c) in enumerate(pairs.items()):
        src[k], dst[k], wt[k] = pos[a], pos[b], c
    order = np.lexsort((dst, src))
    return RetweetGraph(nodes, src[order], dst[order], wt[order], self_loops)
