"""Received-engagement metrics per user.

For each activity (retweet, mention, reply, quote) four components are
computed: the number of events by other users, the number of distinct
engagers, a daily-consistency h-index, and mean longevity in seconds.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from .corpus import CorpusIndex

ACTIVITIES = ("retweet", "mention", "reply", "quote")
COMPONENTS = ("count", "unique", "h_index", "longevity")
FEATURE_NAMES = tuple(f"{a}_{c}" for a in ACTIVITIES for c in COMPONENTS)

SECONDS_PER_DAY = 86400


def h_index(daily_counts) -> int:
    """Largest ``h`` such that at least ``h`` entries are ``>= h``."""
    h = 0
    for i, c in enumerate(sorted(daily_counts, reverse=True), 1):
        if c >= i:
            h = i
        else:
            break
    return h


@dataclass
class EngagementVector:
    received: dict = field(default_factory=lambda: dict.fromkeys(ACTIVITIES, 0))
    unique: dict = field(default_factory=lambda: dict.fromkeys(ACTIVITIES, 0))
    h_index: dict = field(default_factory=lambda: dict.fromkeys(ACTIVITIES, 0))
    longevity: dict = field(default_factory=lambda: dict.fromkeys(ACTIVITIES, 0.0))
    # True where longevity fell back to last-minus-first over all events of the user
    longevity_user_level: dict = field(default_factory=lambda: dict.fromkeys(ACTIVITIES, False))

    def as_features(self) -> dict:
        out = {}
        for a in ACTIVITIES:
            out[f"{a}_count"] = self.received[a]
            out[f"{a}_unique"] = self.unique[a]
            out[f"{a}_h_index"] = self.h_index[a]
            out[f"{a}_longevity"] = self.longevity[a]
        return out


def _events(index: CorpusIndex):
    """Yield ``(activity, target, engager, time, target_tweet_id)`` for every non-self event."""
    for tw in index.tweets.values():
        author = tw.author_id
        t = tw.created_at
        tgt = tw.target_tweet_id
        if tw.retweeted_user_id is not None and tw.retweeted_user_id != author:
            yield "retweet", tw.retweeted_user_id, author, t, tgt
        if tw.replied_to_user_id is not None and tw.replied_to_user_id != author:
            yield "reply", tw.replied_to_user_id, author, t, tgt
        if tw.quoted_user_id is not None and tw.quoted_user_id != author:
            yield "quote", tw.quoted_user_id, author, t, tgt
        for m in tw.mentioned_user_ids:
            if m != author:
                yield "mention", m, author, t, None


def _longevity(events: list, tweet_level: bool) -> tuple[float, bool]:
    times = [e[1] for e in events]
    if not tweet_level or any(e[2] is None for e in events):
        return float(max(times) - min(times)), True
    spans: dict = {}
    for _, t, tid in events:
        lo, hi = spans.get(tid, (t, t))
        spans[tid] = (min(lo, t), max(hi, t))
    return sum(hi - lo for lo, hi in spans.values()) / len(spans), False


def compute_engagement(index: CorpusIndex) -> dict[str, EngagementVector]:
    """Map every indexed user to its received :class:`EngagementVector`.

    Longevity is averaged per target tweet when every event of that
    activity carries ``target_tweet_id``; otherwise (and always for
    mentions) it is last-minus-first event time over the user's events.
    """
    users = set(index.users)
    grouped: dict = defaultdict(list)
    for activity, target, engager, t, tgt in _events(index):
        if target in users:
            grouped[(target, activity)].append((engager, t, tgt))

    out = {u: EngagementVector() for u in index.users}
    for (target, activity), events in grouped.items():
        vec = out[target]
        vec.received[activity] = len(events)
        vec.unique[activity] = len({e[0] for e in events})
        days: dict = defaultdict(int)
        for _, t, _ in events:
            days[int(t // SECONDS_PER_DAY)] += 1
        vec.h_index[activity] = h_index(days.values())
        lon, user_level = _longevity(events, tweet_level=activity != "mention")
        vec.longevity[activity] = lon
        vec.longevity_user_level[activity] = user_level
    return out


def engagement_report(vectors: dict[str, EngagementVector]) -> dict:
    """Count of users whose longevity fell back to user level, per activity."""
    return {
        "longevity_user_level": {
            a: sum(1 for v in vectors.values() if v.longevity_user_level[a]) for a in ACTIVITIES
        },
        "users": len(vectors),
    }
