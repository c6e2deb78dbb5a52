"""End-to-end assembly of the modelling dataset from raw input files."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .botscore import BotScores, load_bot_scores
from .corpus import CorpusIndex, ingest, label_spreaders
from .engagement import compute_engagement
from .features import FeatureMatrix, Lexicon, demo_lexicon, extract_features, load_lexicon
from .graph import RetweetGraph, build_retweet_graph
from .ideology import Propagation, load_outlets, propagate_labels, seed_users

logger = logging.getLogger(__name__)


@dataclass
class Dataset:
    index: CorpusIndex
    graph: RetweetGraph
    seeds: list
    propagation: Propagation
    engagement: dict
    bot_scores: BotScores
    matrix: FeatureMatrix
    labels: np.ndarray
    timings: dict = field(default_factory=dict)


class _Clock:
    def __init__(self, progress: Optional[Callable] = None):
        self.timings: dict = {}
        self.progress = progress

    def stage(self, name: str, fn, *args, **kwargs):
        t = time.perf_counter()
        out = fn(*args, **kwargs)
        self.timings[name] = time.perf_counter() - t
        if self.progress is not None:
            self.progress(name, self.timings[name])
        return out


def build_dataset(tweets, profiles, trolls, outlets, botscores, lexicon=None, window=None,
                  max_iter: int = 100, rng_seed: int = 0, mode: str = "undirected",
                  progress: Optional[Callable] = None) -> Dataset:
    """Ingest, build the graph, propagate ideology, compute engagement, load
    bot scores and extract features for every non-troll user.

    ``lexicon`` is a path, a :class:`Lexicon`, or ``None`` for the bundled
    demo lexicon. ``labels`` is aligned with ``matrix.user_ids``.
    """
    clock = _Clock(progress)
    index = clock.stage("ingest", ingest, tweets, profiles, trolls, window)
    graph = clock.stage("graph", build_retweet_graph, index)
    outlet_list = load_outlets(outlets)
    seeds = clock.stage("seeds", seed_users, index, outlet_list)
    prop = clock.stage("propagate", propagate_labels, graph, seeds, max_iter=max_iter, rng_seed=rng_seed,
                       mode=mode)
    engagement = clock.stage("engagement", compute_engagement, index)
    scores = clock.stage("botscores", load_bot_scores, botscores)
    if lexicon is None:
        lex = demo_lexicon()
    elif isinstance(lexicon, Lexicon):
        lex = lexicon
    else:
        lex = load_lexicon(lexicon)
    matrix = clock.stage("features", extract_features, index, prop.assignments, engagement, scores, lex)
    spreader = {s.user_id: s.is_spreader for s in label_spreaders(index)}
    labels = np.array([int(spreader[u]) for u in matrix.user_ids], dtype=np.int64)
    logger.info("dataset: %d users, %d spreaders, %d features", len(labels), int(labels.sum()),
                len(matrix.names))
    return Dataset(index, graph, seeds, prop, engagement, scores, matrix, labels, clock.timings)
