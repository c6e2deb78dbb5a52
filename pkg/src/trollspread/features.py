"""User feature matrix: assembly, imputation, correlations, and model column sets."""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.stats import rankdata

from .corpus import CorpusIndex
from .engagement import FEATURE_NAMES as ENGAGEMENT_FEATURES
from .errors import DataError
from .ideology import CONSERVATIVE, LIBERAL

NUMERIC = "numeric"
CATEGORICAL = "categorical"

METADATA_FEATURES = (
    "followers_count", "favourites_count", "friends_count", "statuses_count", "listed_count",
    "default_profile", "geo_enabled", "background_image", "verified", "account_age_days",
)
_BOOLEAN_FEATURES = ("default_profile", "geo_enabled", "background_image", "verified")
ACTIVITY_FEATURES = ("chars_per_tweet", "hashtags_per_tweet", "mentions_per_tweet", "urls_per_tweet")
OTHER_FEATURES = ("political_ideology", "bot_score", "tweet_count")
GROUPS = ("metadata", "lexicon", "activity", "engagement", "other")

IDEOLOGY_CODE = {LIBERAL: 0.0, CONSERVATIVE: 1.0}


# -- lexicon ------------------------------------------------------------------


@dataclass
class Lexicon:
    """Category -> match terms. A term ending in ``*`` matches by prefix."""

    categories: dict

    def __post_init__(self):
        self._exact = {}
        self._prefix = {}
        for cat, terms in self.categories.items():
            for term in terms:
                if term.endswith("*"):
                    self._prefix.setdefault(term[:-1], set()).add(cat)
                else:
                    self._exact.setdefault(term, set()).add(cat)
        self._max_prefix = max((len(p) for p in self._prefix), default=0)
        self._cache: dict = {}

    @property
    def names(self) -> tuple:
        return tuple(self.categories)

    def match(self, token: str) -> frozenset:
        """Categories containing ``token``."""
        hit = self._cache.get(token)
        if hit is None:
            cats = set(self._exact.get(token, ()))
            for k in range(1, min(len(token), self._max_prefix) + 1):
                cats.update(self._prefix.get(token[:k], ()))
            hit = self._cache[token] = frozenset(cats)
        return hit

    def proportions(self, token_counts: Counter) -> dict:
        total = sum(token_counts.values())
        hits = dict.fromkeys(self.categories, 0)
        for tok, n in token_counts.items():
            for cat in self.match(tok):
                hits[cat] += n
        return {c: (h / total if total else math.nan) for c, h in hits.items()}


def load_lexicon(path) -> Lexicon:
    """Read a ``category,term`` CSV."""
    cats: dict = {}
    try:
        fh = open(Path(path), newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read lexicon {path}: {exc}") from exc
    with fh:
        for lineno, row in enumerate(csv.DictReader(fh), 2):
            cat = (row.get("category") or "").strip()
            term = (row.get("term") or "").strip().lower()
            if not cat or not term or term == "*":
                raise DataError(f"{path}:{lineno}: bad lexicon row {row}")
            cats.setdefault(cat, [])
            if term not in cats[cat]:
                cats[cat].append(term)
    return Lexicon(cats)


def demo_lexicon() -> Lexicon:
    with resources.as_file(resources.files("trollspread.data") / "demo_lexicon.csv") as p:
        return load_lexicon(p)


# -- feature matrix -----------------------------------------------------------


@dataclass
class FeatureMatrix:
    """Users x features with NaN as the missing marker."""

    user_ids: tuple
    names: tuple
    values: np.ndarray
    kinds: tuple
    groups: tuple
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        self.user_ids = tuple(self.user_ids)
        self.names = tuple(self.names)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.user_ids), len(self.names)):
            raise ValueError(f"values shape {self.values.shape} does not match "
                             f"{len(self.user_ids)} users x {len(self.names)} features")
        if len(set(self.names)) != len(self.names):
            raise ValueError("feature names must be unique")
        if not len(self.kinds) == len(self.groups) == len(self.names):
            raise ValueError("kinds and groups must align with names")

    @property
    def shape(self):
        return self.values.shape

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    def columns(self, names) -> "FeatureMatrix":
        idx = [self.names.index(n) for n in names]
        return FeatureMatrix(self.user_ids, [self.names[i] for i in idx], self.values[:, idx],
                             [self.kinds[i] for i in idx], [self.groups[i] for i in idx])

    def rows(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx)
        return replace(self, user_ids=[self.user_ids[i] for i in idx], values=self.values[idx], notes={})

    def to_csv(self, path, extra: Optional[dict] = None) -> None:
        """Write with a header row; missing cells are empty. ``extra`` adds named columns."""
        extra = extra or {}
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["user_id", *self.names, *extra])
            cols = [np.asarray(v) for v in extra.values()]
            for i, uid in enumerate(self.user_ids):
                cells = ["" if math.isnan(v) else repr(float(v)) for v in self.values[i]]
                w.writerow([uid, *cells, *(c[i] for c in cols)])


def _ideology_labels(assignments) -> dict:
    if isinstance(assignments, dict):
        return assignments
    return {a.user_id: a.label for a in assignments}


def extract_features(index: CorpusIndex, assignments, engagement: dict, bot_scores: dict,
                     lexicon: Lexicon, users=None) -> FeatureMatrix:
    """Assemble metadata, lexicon, activity, engagement and other features.

    ``users`` defaults to every non-troll indexed user. Users without
    tweets get missing lexicon and activity values; users without a
    profile get missing metadata; unlabelled ideology and absent bot scores
    are missing as well.
    """
    users = list(index.non_troll_users() if users is None else users)
    unknown = sorted(set(users) - set(index.users))
    no_engagement = sorted(set(users) - set(engagement))
    if unknown or no_engagement:
        raise DataError(
            "inconsistent user universes: "
            f"{len(unknown)} users not in the corpus index (e.g. {unknown[:5]}), "
            f"{len(no_engagement)} without engagement vectors (e.g. {no_engagement[:5]})")
    for cat in lexicon.names:
        if cat in METADATA_FEATURES + ACTIVITY_FEATURES + OTHER_FEATURES + ENGAGEMENT_FEATURES + ("word_count",):
            raise DataError(f"lexicon category {cat!r} collides with a built-in feature name")

    labels = _ideology_labels(assignments)
    names = (list(METADATA_FEATURES) + ["word_count", *lexicon.names] + list(ACTIVITY_FEATURES)
             + list(ENGAGEMENT_FEATURES) + list(OTHER_FEATURES))
    groups = (["metadata"] * len(METADATA_FEATURES) + ["lexicon"] * (1 + len(lexicon.names))
              + ["activity"] * len(ACTIVITY_FEATURES) + ["engagement"] * len(ENGAGEMENT_FEATURES)
              + ["other"] * len(OTHER_FEATURES))
    kinds = [CATEGORICAL if n in _BOOLEAN_FEATURES or n == "political_ideology" else NUMERIC for n in names]

    window_end = index.window[1]
    if not math.isfinite(window_end):
        window_end = max((t.created_at for t in index.tweets.values()), default=0.0)

    nan = math.nan
    values = np.full((len(users), len(names)), nan)
    for r, uid in enumerate(users):
        row = []
        prof = index.profiles.get(uid)
        if prof is None:
            row.extend([nan] * len(METADATA_FEATURES))
        else:
            for n in METADATA_FEATURES[:5]:
                v = getattr(prof, n)
                row.append(nan if v is None else float(v))
            for n in _BOOLEAN_FEATURES:
                v = getattr(prof, n)
                row.append(nan if v is None else float(v))
            created = prof.account_created_at
            row.append(nan if created is None else (window_end - created) / 86400.0)

        tweets = index.tweets_of(uid)
        n_tw = len(tweets)
        if n_tw:
            tokens: Counter = Counter()
            chars = tags = ments = urls = 0
            for tw in tweets:
                tokens.update(tw.words)
                chars += tw.text_char_count
                tags += tw.hashtag_count
                ments += tw.mention_count
                urls += tw.url_count
            props = lexicon.proportions(tokens)
            row.append(float(sum(tokens.values())))
            row.extend(props[c] for c in lexicon.names)
            row.extend([chars / n_tw, tags / n_tw, ments / n_tw, urls / n_tw])
        else:
            row.extend([nan] * (1 + len(lexicon.names) + len(ACTIVITY_FEATURES)))

        eng = engagement[uid].as_features()
        row.extend(float(eng[n]) for n in ENGAGEMENT_FEATURES)

        row.append(IDEOLOGY_CODE.get(labels.get(uid), nan))
        bs = bot_scores.get(uid)
        row.append(nan if bs is None else float(bs.overall))
        row.append(float(n_tw))
        values[r] = row
    return FeatureMatrix(users, names, values, kinds, groups)


# -- imputation ----------------------------------------------------------------


def imputation_values(values: np.ndarray, kinds) -> tuple[np.ndarray, list]:
    """Per-column fill values: mean for numeric, mode (lowest code on ties) for categorical.

    The mean is the correctly rounded column sum divided by the count.
    Columns with no observed entry get 0 and are listed in the second return value.
    """
    values = np.asarray(values, dtype=np.float64)
    fills = np.zeros(values.shape[1])
    all_missing = []
    for j, kind in enumerate(kinds):
        col = values[:, j]
        obs = col[~np.isnan(col)]
        if obs.size == 0:
            all_missing.append(j)
            continue
        if kind == CATEGORICAL:
            codes, counts = np.unique(obs, return_counts=True)
            fills[j] = codes[np.argmax(counts)]
        else:
            # correctly rounded sum: the fill does not depend on row order
            fills[j] = math.fsum(obs.tolist()) / obs.size
    return fills, all_missing


def fill_missing(values: np.ndarray, fills: np.ndarray) -> np.ndarray:
    out = np.array(values, dtype=np.float64, copy=True)
    mask = np.isnan(out)
    if mask.any():
        out[mask] = np.broadcast_to(fills, out.shape)[mask]
    return out


def impute(matrix: FeatureMatrix, reference: Optional[FeatureMatrix] = None) -> FeatureMatrix:
    """Fill missing cells; statistics come from ``reference`` (default: the matrix itself)."""
    ref = matrix if reference is None else reference
    if ref.names != matrix.names:
        raise ValueError("reference matrix has different features")
    fills, all_missing = imputation_values(ref.values, ref.kinds)
    out = replace(matrix, values=fill_missing(matrix.values, fills), notes=dict(matrix.notes))
    out.notes["all_missing_filled_with_zero"] = [matrix.names[j] for j in all_missing]
    return out


# -- correlation ----------------------------------------------------------------


def _pearson(values: np.ndarray) -> np.ndarray:
    x = values - values.mean(axis=0)
    ss = np.einsum("ij,ij->j", x, x)
    cov = x.T @ x
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = cov / np.sqrt(np.outer(ss, ss))
    defined = ss > 0
    corr[~defined, :] = np.nan
    corr[:, ~defined] = np.nan
    corr = np.clip(corr, -1.0, 1.0)
    corr = (corr + corr.T) / 2.0
    idx = np.flatnonzero(defined)
    corr[idx, idx] = 1.0
    return corr


def correlation_matrix(matrix, method: str = "pearson") -> np.ndarray:
    """Pairwise feature correlations; zero-variance features give NaN rows/columns.

    Spearman is Pearson on average ranks.
    """
    values = matrix.values if isinstance(matrix, FeatureMatrix) else np.asarray(matrix, dtype=np.float64)
    if np.isnan(values).any():
        raise ValueError("correlation needs an imputed matrix")
    if method == "spearman":
        values = rankdata(values, axis=0, method="average").astype(np.float64)
    elif method != "pearson":
        raise ValueError(f"unknown method {method!r}")
    return _pearson(values)


def zero_variance_features(matrix: FeatureMatrix) -> list:
    return [n for n, v in zip(matrix.names, matrix.values.T) if np.all(v == v[0])] if len(matrix.user_ids) else []


def write_square_csv(path, names, corr: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["feature", *names])
        for n, row in zip(names, corr):
            w.writerow([n, *("" if math.isnan(v) else repr(float(v)) for v in row)])


# -- model ladder -------------------------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    number: int
    groups: tuple


MODELS = {k: ModelSpec(k, GROUPS[:k]) for k in range(1, 6)}


def select_model(matrix: FeatureMatrix, spec) -> FeatureMatrix:
    """Keep the columns whose group belongs to the model (1 = metadata ... 5 = everything)."""
    if not isinstance(spec, ModelSpec):
        if spec not in MODELS:
            raise ValueError(f"unknown model {spec!r}; expected 1-5")
        spec = MODELS[spec]
    keep = [n for n, g in zip(matrix.names, matrix.groups) if g in spec.groups]
    return matrix.columns(keep)
