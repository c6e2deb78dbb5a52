"""Tweet corpus ingestion, indexing, descriptive statistics and spreader labels.

Input formats
-------------
tweets.jsonl
    One JSON object per line. Required keys: ``id``, ``user_id``,
    ``created_at`` (ISO-8601 or epoch seconds), ``text``. Optional keys:
    ``retweeted_user_id``, ``replied_to_user_id``, ``quoted_user_id``,
    ``target_tweet_id``, ``mentioned_user_ids``, ``hashtags``, ``urls``.
profiles.jsonl
    One JSON object per line keyed by ``user_id``.
trolls.txt
    One user id per line; ``#`` starts a comment.
"""

from __future__ import annotations

import json
import logging
import re
import sys
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional
from urllib.parse import urlsplit

from .errors import DataError

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[a-z0-9]+")
MAX_REPORTED_PROBLEMS = 1000


def tokenize(text: str) -> list[str]:
    """Lowercase ``text`` and split it on non-alphanumeric boundaries."""
    return _TOKEN_RE.findall(text.lower())


def parse_timestamp(value) -> float:
    """Return UTC epoch seconds for an ISO-8601 string or an epoch number.

    Naive ISO strings are taken as UTC. Raises ``ValueError`` otherwise.
    """
    if isinstance(value, bool):
        raise ValueError("boolean is not a timestamp")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ValueError(f"unsupported timestamp type {type(value).__name__}")
    s = value.strip()
    try:
        return float(s)
    except ValueError:
        pass
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def url_domain(url: str) -> Optional[str]:
    """Lowercased host name of ``url``; ``None`` if there is none."""
    if not url:
        return None
    if "//" not in url:
        url = "//" + url
    try:
        host = urlsplit(url).hostname
    except ValueError:
        return None
    return host.lower().rstrip(".") if host else None


def _opt_user(value) -> Optional[str]:
    if value is None or value == "":
        return None
    if isinstance(value, (dict, list, bool)):
        raise ValueError("user id must be a scalar")
    return str(value)


def _str_list(value, name: str) -> list:
    if value is None:
        return []
    if not isinstance(value, list):
        raise ValueError(f"{name} must be an array")
    return value


@dataclass(slots=True)
class TweetRecord:
    tweet_id: int
    author_id: str
    created_at: float
    text_char_count: int
    word_count: int
    hashtag_count: int
    mention_count: int
    url_count: int
    domains: tuple
    retweeted_user_id: Optional[str]
    replied_to_user_id: Optional[str]
    quoted_user_id: Optional[str]
    mentioned_user_ids: tuple
    words: tuple
    target_tweet_id: Optional[int] = None

    @property
    def is_retweet(self) -> bool:
        return self.retweeted_user_id is not None

    @classmethod
    def from_json(cls, obj: dict) -> "TweetRecord":
        if not isinstance(obj, dict):
            raise ValueError("record is not a JSON object")
        for key in ("id", "user_id", "created_at", "text"):
            if key not in obj:
                raise ValueError(f"missing required key {key!r}")
        text = obj["text"]
        if not isinstance(text, str):
            raise ValueError("text must be a string")
        tweet_id = obj["id"]
        if isinstance(tweet_id, bool) or not isinstance(tweet_id, (int, str)):
            raise ValueError("id must be an integer")
        tweet_id = int(tweet_id)
        author = _opt_user(obj["user_id"])
        if author is None:
            raise ValueError("empty user_id")
        mentions = tuple(dict.fromkeys(str(m) for m in _str_list(obj.get("mentioned_user_ids"), "mentioned_user_ids")))
        hashtags = _str_list(obj.get("hashtags"), "hashtags")
        urls = _str_list(obj.get("urls"), "urls")
        domains = tuple(d for d in (url_domain(str(u)) for u in urls) if d)
        words = tuple(sys.intern(w) for w in tokenize(text))
        target = obj.get("target_tweet_id")
        return cls(
            tweet_id,
            author,
            parse_timestamp(obj["created_at"]),
            len(text),
            len(words),
            len(hashtags),
            len(mentions),
            len(urls),
            domains,
            _opt_user(obj.get("retweeted_user_id")),
            _opt_user(obj.get("replied_to_user_id")),
            _opt_user(obj.get("quoted_user_id")),
            mentions,
            words,
            None if target is None else int(target),
        )


_PROFILE_COUNTS = ("followers_count", "friends_count", "favourites_count", "statuses_count", "listed_count")
_PROFILE_FLAGS = ("default_profile", "geo_enabled", "background_image", "verified")


@dataclass(slots=True)
class UserProfile:
    """Account metadata. Absent fields are ``None`` and become missing features."""

    user_id: str
    followers_count: Optional[int] = None
    friends_count: Optional[int] = None
    favourites_count: Optional[int] = None
    statuses_count: Optional[int] = None
    listed_count: Optional[int] = None
    default_profile: Optional[bool] = None
    geo_enabled: Optional[bool] = None
    background_image: Optional[bool] = None
    verified: Optional[bool] = None
    account_created_at: Optional[float] = None
    self_reported_location: Optional[str] = None
    profile_url_domain: Optional[str] = None

    @classmethod
    def from_json(cls, obj: dict) -> "UserProfile":
        if not isinstance(obj, dict):
            raise ValueError("record is not a JSON object")
        uid = _opt_user(obj.get("user_id"))
        if uid is None:
            raise ValueError("missing user_id")
        kw = {}
        for name in _PROFILE_COUNTS:
            v = obj.get(name)
            if v is not None:
                if isinstance(v, bool) or int(v) != v or v < 0:
                    raise ValueError(f"{name} must be a non-negative integer")
                v = int(v)
            kw[name] = v
        for name in _PROFILE_FLAGS:
            v = obj.get(name)
            if v is not None and not isinstance(v, bool):
                if v in (0, 1):
                    v = bool(v)
                else:
                    raise ValueError(f"{name} must be boolean")
            kw[name] = v
        created = obj.get("account_created_at")
        kw["account_created_at"] = None if created is None else parse_timestamp(created)
        loc = obj.get("self_reported_location")
        kw["self_reported_location"] = None if loc is None else str(loc)
        dom = obj.get("profile_url_domain")
        kw["profile_url_domain"] = url_domain(str(dom)) if dom else None
        return cls(uid, **kw)


@dataclass
class IngestReport:
    tweet_lines: int = 0
    tweets_indexed: int = 0
    tweets_malformed: int = 0
    tweets_out_of_window: int = 0
    tweets_duplicate: int = 0
    duplicate_rate: float = 0.0
    profile_lines: int = 0
    profiles_indexed: int = 0
    profiles_malformed: int = 0
    profiles_duplicate: int = 0
    trolls_listed: int = 0
    profile_missing: list = field(default_factory=list)
    created_after_first_tweet: list = field(default_factory=list)
    problems: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def problem(self, source: str, line: int, reason: str) -> None:
        if len(self.problems) < MAX_REPORTED_PROBLEMS:
            self.problems.append({"file": source, "line": line, "reason": reason})

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SpreaderLabel:
    user_id: str
    is_spreader: bool
    troll_retweet_count: int


class CorpusIndex:
    """Read-only index over tweets, profiles and the troll list.

    ``users`` are the tweet authors plus every user with a profile, in sorted
    order. Users referenced only as retweet/mention targets are not indexed.
    """

    def __init__(self, tweets: Iterable[TweetRecord], profiles: Iterable[UserProfile] = (),
                 troll_ids: Iterable[str] = (), window: tuple = (float("-inf"), float("inf")),
                 report: Optional[IngestReport] = None):
        self.report = report if report is not None else IngestReport()
        self.window = (float(window[0]), float(window[1]))
        self.troll_ids = frozenset(str(t) for t in troll_ids)
        by_id: dict[int, TweetRecord] = {}
        by_author: dict[str, list] = defaultdict(list)
        for tw in tweets:
            if tw.tweet_id in by_id:
                continue
            by_id[tw.tweet_id] = tw
            by_author[tw.author_id].append(tw)
        self.tweets = by_id
        self.by_author = {a: tuple(v) for a, v in by_author.items()}
        self.profiles = {}
        for p in profiles:
            self.profiles.setdefault(p.user_id, p)
        self.users = tuple(sorted(set(self.by_author) | set(self.profiles)))
        self.profile_missing = tuple(u for u in sorted(self.by_author) if u not in self.profiles)

    def __len__(self) -> int:
        return len(self.tweets)

    @property
    def trolls_present(self) -> frozenset:
        return self.troll_ids.intersection(self.users)

    def tweets_of(self, user_id: str) -> tuple:
        return self.by_author.get(user_id, ())

    def non_troll_users(self) -> list[str]:
        return [u for u in self.users if u not in self.troll_ids]


def read_troll_list(path) -> list[str]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read troll list {path}: {exc}") from exc
    out = []
    for line in lines:
        s = line.split("#", 1)[0].strip()
        if s:
            out.append(s)
    return list(dict.fromkeys(out))


def _read_lines(path: Path):
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    return fh


def ingest(corpus_path, profiles_path, troll_list_path, window=None,
           duplicate_warn_rate: float = 0.10) -> CorpusIndex:
    """Parse the three input files into a :class:`CorpusIndex`.

    Malformed and out-of-window records are skipped and counted in
    ``index.report``; duplicate tweet ids keep their first occurrence.
    ``window`` is an inclusive ``(start, end)`` pair of timestamps, or
    ``None`` for no bound.
    """
    report = IngestReport()
    if window is None:
        window = (float("-inf"), float("inf"))
    lo, hi = parse_timestamp(window[0]), parse_timestamp(window[1])
    if lo > hi:
        raise ValueError("window start is after window end")

    corpus_path = Path(corpus_path)
    tweets: list[TweetRecord] = []
    seen: set[int] = set()
    loads = json.loads
    from_json = TweetRecord.from_json
    with _read_lines(corpus_path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            report.tweet_lines += 1
            try:
                tw = from_json(loads(line))
            except (ValueError, TypeError, OverflowError) as exc:
                report.tweets_malformed += 1
                report.problem(corpus_path.name, lineno, str(exc))
                continue
            if not lo <= tw.created_at <= hi:
                report.tweets_out_of_window += 1
                continue
            if tw.tweet_id in seen:
                report.tweets_duplicate += 1
                continue
            seen.add(tw.tweet_id)
            tweets.append(tw)
    report.tweets_indexed = len(tweets)
    considered = report.tweets_indexed + report.tweets_duplicate
    report.duplicate_rate = report.tweets_duplicate / considered if considered else 0.0
    if report.duplicate_rate > duplicate_warn_rate:
        msg = f"duplicate tweet rate {report.duplicate_rate:.3f} exceeds {duplicate_warn_rate:.3f}"
        logger.warning(msg)
        report.warnings.append(msg)

    profiles_path = Path(profiles_path)
    profiles: list[UserProfile] = []
    seen_users: set[str] = set()
    with _read_lines(profiles_path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            report.profile_lines += 1
            try:
                prof = UserProfile.from_json(loads(line))
            except (ValueError, TypeError, OverflowError) as exc:
                report.profiles_malformed += 1
                report.problem(profiles_path.name, lineno, str(exc))
                continue
            if prof.user_id in seen_users:
                report.profiles_duplicate += 1
                continue
            seen_users.add(prof.user_id)
            profiles.append(prof)
    report.profiles_indexed = len(profiles)

    trolls = read_troll_list(troll_list_path)
    report.trolls_listed = len(trolls)

    index = CorpusIndex(tweets, profiles, trolls, (lo, hi), report)
    report.profile_missing = list(index.profile_missing[:MAX_REPORTED_PROBLEMS])
    for uid, user_tweets in index.by_author.items():
        prof = index.profiles.get(uid)
        if prof is None or prof.account_created_at is None:
            continue
        first = min(t.created_at for t in user_tweets)
        if prof.account_created_at > first and len(report.created_after_first_tweet) < MAX_REPORTED_PROBLEMS:
            report.created_after_first_tweet.append(uid)
    return index


@dataclass
class StatsReport:
    """Corpus statistics. Field names are part of the output contract."""

    tweets: int = 0
    retweets: int = 0
    distinct_users: int = 0
    tweets_with_url: int = 0
    troll_list_size: int = 0
    trolls_present: int = 0
    trolls_with_original_tweets: int = 0
    troll_original_tweets: int = 0
    troll_to_troll_retweets: int = 0
    troll_received_retweets: int = 0
    spreaders: int = 0
    spreader_troll_retweets: int = 0
    spreaders_with_original_tweets: int = 0
    spreader_original_tweets: int = 0
    spreader_other_retweets: int = 0
    per_troll_received_retweets: dict = field(default_factory=dict)

    # troll_list_size describes the input list, not the corpus, so it is not additive
    COUNT_FIELDS = ("tweets", "retweets", "distinct_users", "tweets_with_url", "trolls_present",
                    "trolls_with_original_tweets", "troll_original_tweets", "troll_to_troll_retweets",
                    "troll_received_retweets", "spreaders", "spreader_troll_retweets",
                    "spreaders_with_original_tweets", "spreader_original_tweets", "spreader_other_retweets")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_troll_received_retweets"] = dict(sorted(self.per_troll_received_retweets.items()))
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _troll_retweet_counts(index: CorpusIndex) -> Counter:
    trolls = index.troll_ids
    counts: Counter = Counter()
    for tw in index.tweets.values():
        rt = tw.retweeted_user_id
        if rt is not None and rt in trolls and tw.author_id not in trolls and rt != tw.author_id:
            counts[tw.author_id] += 1
    return counts


def descriptive_stats(index: CorpusIndex) -> StatsReport:
    """Aggregate counts over the corpus, the trolls and the spreaders.

    Original tweets are tweets that are not retweets. Troll-received
    retweets count retweets of a troll by non-troll users only; retweets
    among trolls are reported separately.
    """
    trolls = index.troll_ids
    rep = StatsReport(troll_list_size=len(trolls))
    rep.tweets = len(index.tweets)
    rep.distinct_users = len(index.users)
    rep.trolls_present = len(index.trolls_present)
    per_troll: Counter = Counter({t: 0 for t in index.trolls_present})
    for tw in index.tweets.values():
        if tw.url_count:
            rep.tweets_with_url += 1
        rt = tw.retweeted_user_id
        author_is_troll = tw.author_id in trolls
        if rt is None:
            if author_is_troll:
                rep.troll_original_tweets += 1
            continue
        rep.retweets += 1
        if rt in trolls and rt != tw.author_id:
            if author_is_troll:
                rep.troll_to_troll_retweets += 1
            else:
                per_troll[rt] += 1
    rep.trolls_with_original_tweets = sum(
        1 for t in index.trolls_present if any(not tw.is_retweet for tw in index.tweets_of(t)))
    rep.per_troll_received_retweets = dict(per_troll)
    rep.troll_received_retweets = sum(per_troll.values())

    spreader_counts = _troll_retweet_counts(index)
    rep.spreaders = len(spreader_counts)
    rep.spreader_troll_retweets = sum(spreader_counts.values())
    for uid in spreader_counts:
        originals = 0
        for tw in index.tweets_of(uid):
            if tw.retweeted_user_id is None:
                originals += 1
            elif tw.retweeted_user_id not in trolls:
                rep.spreader_other_retweets += 1
        rep.spreader_original_tweets += originals
        if originals:
            rep.spreaders_with_original_tweets += 1
    return rep


def label_spreaders(index: CorpusIndex) -> list[SpreaderLabel]:
    """One label per non-troll indexed user, in sorted user order."""
    if not index.troll_ids:
        raise DataError("troll list is empty; the spreader outcome is undefined")
    counts = _troll_retweet_counts(index)
    return [SpreaderLabel(u, counts[u] > 0, counts[u]) for u in index.non_troll_users()]
