"""Synthetic corpora with planted ground truth.

Users fall into two ideology blocks. Retweets between non-troll users come
from a stochastic block model, seed sharers link their block's partisan
outlets, and each non-troll user becomes a spreader with probability
``sigmoid(intercept + b_ideology * conservative + b_bot * bot + b_statuses * z)``
where ``z`` is the standardized log status count. A spreader converts some
of its own original tweets into retweets of same-block trolls, so tweet
counts and content features carry no trace of the outcome.

manifest.json schema
--------------------
``config``
    The generating :class:`SynthConfig`.
``files``
    Names of the emitted files.
``counts``
    Corpus-level counts named like the ``StatsReport`` fields they must
    equal after ingestion (``tweets``, ``retweets``, ``distinct_users``,
    ``tweets_with_url``, ``trolls_present``, ``troll_original_tweets``,
    ``troll_to_troll_retweets``, ``troll_received_retweets``, ``spreaders``,
    ``spreader_troll_retweets``) plus ``seed_sharers``.
``users``
    ``user_id -> {block, troll, spreader, spreader_probability, bot_score,
    statuses_count, seed_sharer, has_profile, tweets}``; ``bot_score`` is
    ``null`` when the user has no row in botscores.csv.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.special import expit

from .errors import ConfigError, DataError
from .graph import RetweetGraph
from .ideology import CONSERVATIVE, LIBERAL

logger = logging.getLogger(__name__)

BLOCKS = (LIBERAL, CONSERVATIVE)
WINDOW_START = "2016-09-16T00:00:00Z"
WINDOW_DAYS = 55
_STATUS_LOG_MEAN = 7.0
_STATUS_LOG_SD = 1.5
_NEUTRAL_DOMAINS = ("example.com", "news.example.org", "video.example.net", "blog.example.io")
_NEUTRAL_WORDS = (
    "the", "a", "and", "of", "to", "in", "is", "on", "for", "this", "that", "with", "vote", "debate",
    "election", "today", "news", "people", "state", "campaign", "rally", "poll", "night", "america",
    "policy", "tax", "jobs", "media", "watch", "live", "report", "week", "city", "time", "new", "big",
)


@dataclass(frozen=True)
class SynthConfig:
    n_users: int = 5000
    n_trolls: int = 50
    frac_conservative: float = 0.5
    seed_frac_liberal: float = 0.1
    seed_frac_conservative: float = 0.1
    p_intra: float = 0.0025
    p_inter: float = 0.000125
    spreader_intercept: float = -9.4
    coef_ideology: float = 5.0
    coef_bot: float = 12.0
    coef_statuses: float = 1.2
    tweets_mean: float = 6.0
    p_reply: float = 0.1
    p_quote: float = 0.05
    profile_link_frac: float = 0.05
    bot_coverage: float = 0.9
    profile_coverage: float = 0.95
    rng_seed: int = 0

    def __post_init__(self):
        probs = ("frac_conservative", "seed_frac_liberal", "seed_frac_conservative", "p_intra", "p_inter",
                 "p_reply", "p_quote", "profile_link_frac", "bot_coverage", "profile_coverage")
        for name in probs:
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.n_users < 2:
            raise ConfigError("n_users must be at least 2")
        if not 0 <= self.n_trolls < self.n_users:
            raise ConfigError("n_trolls must satisfy 0 <= n_trolls < n_users")
        if self.tweets_mean < 1:
            raise ConfigError("tweets_mean must be at least 1")
        if self.p_reply + self.p_quote > 1:
            raise ConfigError("p_reply + p_quote must not exceed 1")


@dataclass
class Manifest:
    config: dict
    files: dict
    counts: dict
    users: dict

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def load(cls, path) -> "Manifest":
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))


def _epoch(iso: str) -> int:
    return int(datetime.fromisoformat(iso.replace("Z", "+00:00")).timestamp())


def _iso(t: int) -> str:
    return datetime.fromtimestamp(int(t), tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _vocabulary() -> list:
    words = set(_NEUTRAL_WORDS)
    with resources.as_file(resources.files("trollspread.data") / "demo_lexicon.csv") as p:
        for line in Path(p).read_text(encoding="utf-8").splitlines()[1:]:
            term = line.split(",", 1)[1].strip()
            words.add(term.rstrip("*"))
    return sorted(w for w in words if w)


def default_outlets() -> dict:
    """The bundled ``domain -> polarity`` table, in file order."""
    out = {}
    with resources.as_file(resources.files("trollspread.data") / "outlets.csv") as p:
        for line in Path(p).read_text(encoding="utf-8").splitlines()[1:]:
            dom, pol = line.strip().split(",")
            out[dom] = pol
    return out


def sbm_pairs(rng: np.random.Generator, blocks, p_intra: float, p_inter: float):
    """Ordered edge endpoints of a stochastic block model.

    ``blocks`` is a list of integer node arrays. Each unordered pair inside a
    block is an edge with probability ``p_intra`` and across blocks with
    ``p_inter``; the edge count is drawn exactly and endpoints uniformly,
    so repeated pairs are possible and add weight. Direction is uniform.
    """
    src, dst = [], []
    for a, ba in enumerate(blocks):
        na = len(ba)
        if na >= 2:
            m = rng.binomial(na * (na - 1) // 2, p_intra)
            i = rng.integers(0, na, m)
            j = rng.integers(0, na - 1, m)
            j = j + (j >= i)
            src.append(ba[i])
            dst.append(ba[j])
        for b in range(a + 1, len(blocks)):
            bb = blocks[b]
            m = rng.binomial(na * len(bb), p_inter)
            i = ba[rng.integers(0, na, m)]
            j = bb[rng.integers(0, len(bb), m)]
            flip = rng.random(m) < 0.5
            src.append(np.where(flip, j, i))
            dst.append(np.where(flip, i, j))
    if not src:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    return np.concatenate(src).astype(np.int64), np.concatenate(dst).astype(np.int64)


def planted_partition_graph(n_per_block: int, n_blocks: int = 2, p_intra: float = 0.002,
                            p_inter: float = 0.0001, rng_seed: int = 0):
    """Weighted directed planted-partition graph and its block truth.

    Node ids are ``"n000000"``-style strings; node ``i`` belongs to block
    ``i // n_per_block``. Returns ``(graph, block_of)`` with ``block_of``
    mapping node id to block index.
    """
    rng = np.random.default_rng(rng_seed)
    n = n_per_block * n_blocks
    blocks = [np.arange(b * n_per_block, (b + 1) * n_per_block) for b in range(n_blocks)]
    src, dst = sbm_pairs(rng, blocks, p_intra, p_inter)
    width = len(str(n))
    ids = [f"n{i:0{width}d}" for i in range(n)]
    key = src * n + dst
    uniq, counts = np.unique(key, return_counts=True)
    graph = RetweetGraph(
        node_ids=tuple(ids),
        src=(uniq // n).astype(np.int64),
        dst=(uniq % n).astype(np.int64),
        weight=counts.astype(np.float64),
    )
    return graph, {ids[i]: i // n_per_block for i in range(n)}


class _Writer:
    """Temp-file writer renamed into place on success."""

    def __init__(self, path: Path):
        self.path = path
        self.tmp = path.with_name(path.name + ".tmp")

    def __enter__(self):
        self.fh = open(self.tmp, "w", encoding="utf-8", newline="\n")
        return self.fh

    def __exit__(self, exc_type, exc, tb):
        self.fh.close()
        if exc_type is None:
            os.replace(self.tmp, self.path)
        else:
            self.tmp.unlink(missing_ok=True)
        return False


def generate(config: SynthConfig, out_dir) -> Manifest:
    """Write tweets.jsonl, profiles.jsonl, trolls.txt, botscores.csv,
    outlets.csv and manifest.json under ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise DataError(f"cannot write to {out}: {exc}") from exc

    cfg = config
    rng = np.random.default_rng(cfg.rng_seed)
    n = cfg.n_users
    width = len(str(n))
    uids = [f"u{i:0{width}d}" for i in range(n)]
    t0 = _epoch(WINDOW_START)
    span = WINDOW_DAYS * 86400

    # -- users -------------------------------------------------------------------
    block = (rng.random(n) < cfg.frac_conservative).astype(np.int64)
    is_troll = np.zeros(n, dtype=bool)
    if cfg.n_trolls:
        is_troll[rng.choice(n, cfg.n_trolls, replace=False)] = True
    statuses = np.floor(np.exp(rng.normal(_STATUS_LOG_MEAN, _STATUS_LOG_SD, n))).astype(np.int64)
    z_status = (np.log1p(statuses) - _STATUS_LOG_MEAN) / _STATUS_LOG_SD
    # scores are rounded to what botscores.csv stores so the truth matches the file
    bot = np.round(rng.beta(2.0, 5.0, n), 6)
    has_bot = rng.random(n) < cfg.bot_coverage
    has_profile = rng.random(n) < cfg.profile_coverage
    seed_frac = np.where(block == 1, cfg.seed_frac_conservative, cfg.seed_frac_liberal)
    seed_sharer = (rng.random(n) < seed_frac) & ~is_troll

    logit = cfg.spreader_intercept + cfg.coef_ideology * block + cfg.coef_bot * bot + cfg.coef_statuses * z_status
    prob = expit(logit)
    draw = rng.random(n)
    trolls_by_block = [np.flatnonzero(is_troll & (block == b)) for b in (0, 1)]
    all_trolls = np.flatnonzero(is_troll)
    spreader = (draw < prob) & ~is_troll & (cfg.n_trolls > 0)

    # -- original tweets -----------------------------------------------------------
    n_orig = 1 + rng.poisson(cfg.tweets_mean - 1.0, n)
    author = np.repeat(np.arange(n), n_orig)
    m = author.size
    times = t0 + rng.integers(0, span, m)
    kind = rng.random(m)
    is_reply = kind < cfg.p_reply
    is_quote = (kind >= cfg.p_reply) & (kind < cfg.p_reply + cfg.p_quote)
    nontroll_by_block = [np.flatnonzero(~is_troll & (block == b)) for b in (0, 1)]
    first_orig = np.r_[0, np.cumsum(n_orig)[:-1]]

    def same_block_target(users):
        out_t = np.empty(users.size, dtype=np.int64)
        for b in (0, 1):
            pool = nontroll_by_block[b]
            sel = block[users] == b
            if pool.size == 0:
                pool = np.flatnonzero(~is_troll)
            out_t[sel] = pool[rng.integers(0, pool.size, int(sel.sum()))]
        return out_t

    interact = same_block_target(author)
    orig_target_tweet = first_orig[interact] + rng.integers(0, n_orig[interact])

    vocab = _vocabulary()
    n_words = rng.integers(3, 16, m)
    word_idx = rng.integers(0, len(vocab), int(n_words.sum()))
    n_tags = rng.poisson(0.4, m)
    n_ment = rng.poisson(0.3, m)
    ment_targets = rng.integers(0, n, int(n_ment.sum()))
    has_url = rng.random(m) < 0.25
    neutral_url = rng.integers(0, len(_NEUTRAL_DOMAINS), m)

    outlets = default_outlets()
    by_side = {p: [d for d, q in outlets.items() if q == p] for p in BLOCKS}
    # seed sharers link outlets of their own block in a few of their original tweets
    partisan_url = np.full(m, -1, dtype=np.int64)
    for u in np.flatnonzero(seed_sharer):
        k = min(n_orig[u], 1 + rng.poisson(1.0))
        picks = first_orig[u] + rng.choice(n_orig[u], k, replace=False)
        partisan_url[picks] = rng.integers(0, len(by_side[BLOCKS[block[u]]]), k)

    # -- troll retweets by spreaders replace some of their original tweets -------------
    rt_of_troll = np.full(m, -1, dtype=np.int64)
    troll_tweet_target = np.full(m, -1, dtype=np.int64)
    for u in np.flatnonzero(spreader):
        pool = trolls_by_block[block[u]]
        if pool.size == 0:
            pool = all_trolls
        k = min(n_orig[u], 1 + rng.poisson(0.5))
        picks = first_orig[u] + rng.choice(n_orig[u], k, replace=False)
        t = pool[rng.integers(0, pool.size, k)]
        rt_of_troll[picks] = t
        troll_tweet_target[picks] = first_orig[t] + rng.integers(0, n_orig[t])

    # -- block-model retweets among non-trolls, plus troll-to-troll retweets -----------
    src, dst = sbm_pairs(rng, nontroll_by_block, cfg.p_intra, cfg.p_inter)
    tt_src, tt_dst = [], []
    for b in (0, 1):
        pool = trolls_by_block[b]
        if pool.size >= 2:
            who = pool[rng.random(pool.size) < 0.3]
            j = rng.integers(0, pool.size - 1, who.size)
            other = pool[j + (j >= np.searchsorted(pool, who))]
            tt_src.append(who)
            tt_dst.append(other)
    if tt_src:
        src = np.r_[src, np.concatenate(tt_src)]
        dst = np.r_[dst, np.concatenate(tt_dst)]
    n_rt = src.size
    rt_times = t0 + rng.integers(0, span, n_rt)
    rt_target_tweet = first_orig[dst] + rng.integers(0, n_orig[dst])
    rt_words = rng.integers(3, 16, n_rt)
    rt_word_idx = rng.integers(0, len(vocab), int(rt_words.sum()))

    # -- assemble and write tweets ------------------------------------------------------
    total = m + n_rt
    all_times = np.r_[times, rt_times]
    order = np.lexsort((np.arange(total), all_times))
    tweet_id = np.empty(total, dtype=np.int64)
    tweet_id[order] = np.arange(1, total + 1)

    word_off = np.r_[0, np.cumsum(n_words)]
    ment_off = np.r_[0, np.cumsum(n_ment)]
    rt_word_off = np.r_[0, np.cumsum(rt_words)]
    n_tweets = np.bincount(np.r_[author, src], minlength=n)
    counts = dict.fromkeys(("tweets", "retweets", "tweets_with_url", "troll_original_tweets",
                            "troll_to_troll_retweets", "troll_received_retweets",
                            "spreader_troll_retweets"), 0)
    counts["tweets"] = int(total)
    troll_set = set(all_trolls.tolist())

    def record(g: int) -> dict:
        if g < m:
            u = int(author[g])
            words = [vocab[w] for w in word_idx[word_off[g]:word_off[g + 1]]]
            tags = [f"tag{int(x)}" for x in rng.integers(0, 50, n_tags[g])]
            ments = sorted({uids[x] for x in ment_targets[ment_off[g]:ment_off[g + 1]] if x != u})
            urls = []
            if partisan_url[g] >= 0:
                urls.append(f"https://{by_side[BLOCKS[block[u]]][partisan_url[g]]}/story/{int(tweet_id[g])}")
            elif has_url[g]:
                urls.append(f"https://{_NEUTRAL_DOMAINS[neutral_url[g]]}/item/{int(tweet_id[g])}")
            obj = {"id": int(tweet_id[g]), "user_id": uids[u], "created_at": _iso(times[g]),
                   "text": " ".join(words)}
            if rt_of_troll[g] >= 0:
                obj["retweeted_user_id"] = uids[rt_of_troll[g]]
                obj["target_tweet_id"] = int(tweet_id[troll_tweet_target[g]])
            elif is_reply[g]:
                obj["replied_to_user_id"] = uids[interact[g]]
                obj["target_tweet_id"] = int(tweet_id[orig_target_tweet[g]])
            elif is_quote[g]:
                obj["quoted_user_id"] = uids[interact[g]]
                obj["target_tweet_id"] = int(tweet_id[orig_target_tweet[g]])
        else:
            r = g - m
            u = int(src[r])
            words = [vocab[w] for w in rt_word_idx[rt_word_off[r]:rt_word_off[r + 1]]]
            tags, ments, urls = [], [], []
            obj = {"id": int(tweet_id[g]), "user_id": uids[u], "created_at": _iso(rt_times[r]),
                   "text": " ".join(words), "retweeted_user_id": uids[dst[r]],
                   "target_tweet_id": int(tweet_id[rt_target_tweet[r]])}
        if ments:
            obj["mentioned_user_ids"] = ments
        if tags:
            obj["hashtags"] = tags
        if urls:
            obj["urls"] = urls
            counts["tweets_with_url"] += 1
        rt = obj.get("retweeted_user_id")
        if rt is None:
            if u in troll_set:
                counts["troll_original_tweets"] += 1
        else:
            counts["retweets"] += 1
            if int(rt[1:]) in troll_set:
                if u in troll_set:
                    counts["troll_to_troll_retweets"] += 1
                else:
                    counts["troll_received_retweets"] += 1
                    counts["spreader_troll_retweets"] += 1
        return obj

    dumps = json.dumps
    with _Writer(out / "tweets.jsonl") as fh:
        for g in order:
            fh.write(dumps(record(int(g)), separators=(",", ":")))
            fh.write("\n")

    # -- profiles, trolls, bot scores, outlets ----------------------------------------
    with _Writer(out / "profiles.jsonl") as fh:
        for u in range(n):
            if not has_profile[u]:
                continue
            age_days = int(rng.integers(30, 3000))
            prof = {
                "user_id": uids[u],
                "followers_count": int(np.exp(rng.normal(5.5, 1.8))),
                "friends_count": int(np.exp(rng.normal(5.8, 1.2))),
                "favourites_count": int(np.exp(rng.normal(7.0, 2.0))),
                "statuses_count": int(statuses[u]),
                "listed_count": int(rng.poisson(3.0)),
                "default_profile": bool(rng.random() < 0.4),
                "geo_enabled": bool(rng.random() < 0.3),
                "background_image": bool(rng.random() < 0.7),
                "verified": bool(rng.random() < 0.02),
                "account_created_at": _iso(t0 - age_days * 86400 - int(rng.integers(0, 86400))),
            }
            # a few profiles link an outlet of the user's own block
            if rng.random() < cfg.profile_link_frac:
                side = by_side[BLOCKS[block[u]]]
                prof["profile_url_domain"] = "https://" + side[int(rng.integers(0, len(side)))] + "/"
            fh.write(dumps(prof, separators=(",", ":")))
            fh.write("\n")

    with _Writer(out / "trolls.txt") as fh:
        fh.write("# synthetic troll accounts\n")
        for u in all_trolls:
            fh.write(uids[u] + "\n")

    with _Writer(out / "botscores.csv") as fh:
        fh.write("user_id,overall,user,friends,network,temporal,content,sentiment\n")
        for u in range(n):
            if not has_bot[u]:
                continue
            subs = np.clip(bot[u] + rng.normal(0.0, 0.08, 6), 0.0, 1.0)
            cells = [f"{bot[u]:.6f}", *(f"{s:.6f}" for s in subs)]
            fh.write(uids[u] + "," + ",".join(cells) + "\n")

    with _Writer(out / "outlets.csv") as fh:
        fh.write("domain,polarity\n")
        for dom, pol in outlets.items():
            fh.write(f"{dom},{pol}\n")

    counts["distinct_users"] = int(np.sum((n_tweets > 0) | has_profile))
    counts["trolls_present"] = int(cfg.n_trolls)
    counts["spreaders"] = int(spreader.sum())
    counts["seed_sharers"] = int(seed_sharer.sum())

    users = {}
    for u in range(n):
        users[uids[u]] = {
            "block": BLOCKS[block[u]],
            "troll": bool(is_troll[u]),
            "spreader": bool(spreader[u]),
            "spreader_probability": float(prob[u]) if not is_troll[u] else 0.0,
            "bot_score": float(bot[u]) if has_bot[u] else None,
            "statuses_count": int(statuses[u]),
            "seed_sharer": bool(seed_sharer[u]),
            "has_profile": bool(has_profile[u]),
            "tweets": int(n_tweets[u]),
        }
    manifest = Manifest(
        config=asdict(cfg),
        files={"tweets": "tweets.jsonl", "profiles": "profiles.jsonl", "trolls": "trolls.txt",
               "botscores": "botscores.csv", "outlets": "outlets.csv"},
        counts=counts,
        users=users,
    )
    with _Writer(out / "manifest.json") as fh:
        json.dump(manifest.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")
    logger.info("synth: %d users, %d tweets, %d spreaders", n, total, counts["spreaders"])
    return manifest


def collection_window() -> tuple:
    """The collection window covered by generated timestamps, inclusive."""
    t0 = _epoch(WINDOW_START)
    return float(t0), float(t0 + WINDOW_DAYS * 86400 - 1)
