import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trollspread.corpus import CorpusIndex, TweetRecord
from trollspread.engagement import FEATURE_NAMES, compute_engagement, engagement_report, h_index

from conftest import T0, tweet
from oracles import brute_h

DAY = 86400


@pytest.mark.parametrize("counts, h", [([], 0), ([3, 0, 6, 1, 5], 3), ([1, 1, 1, 1], 1), ([5, 3, 3, 1], 3),
                                       ([0, 0], 0), ([100], 1), ([4, 4, 4, 4], 4)])
def test_h_index_examples(counts, h):
    assert h_index(counts) == h == brute_h(counts)


@given(st.lists(st.integers(0, 50), max_size=60))
@settings(max_examples=300)
def test_h_index_properties(counts):
    h = h_index(counts)
    assert h == brute_h(counts)
    assert h_index(sorted(counts)) == h
    assert h <= min(len(counts), max(counts, default=0))
    assert h_index(counts + [0]) == h


def _index(recs):
    return CorpusIndex([TweetRecord.from_json(r) for r in recs])


def test_unreferenced_user_has_zero_vector():
    vec = compute_engagement(_index([tweet(1, "a")]))["a"]
    assert all(v == 0 for v in vec.as_features().values())
    assert list(vec.as_features()) == list(FEATURE_NAMES)
    assert len(FEATURE_NAMES) == 16


def test_counts_and_unique_engagers():
    recs = [tweet(1, "u"), tweet(2, "A", retweeted_user_id="u"), tweet(3, "A", retweeted_user_id="u"),
            tweet(4, "B", retweeted_user_id="u")]
    vec = compute_engagement(_index(recs))["u"]
    assert vec.received["retweet"] == 3
    assert vec.unique["retweet"] == 2


def test_daily_h_index_from_events():
    recs = [tweet(1, "u")]
    k = 2
    for day, n in enumerate([5, 3, 3, 1]):
        for _ in range(n):
            recs.append(tweet(k, f"e{k}", t=T0 + day * DAY + 60 * k, retweeted_user_id="u"))
            k += 1
    assert compute_engagement(_index(recs))["u"].h_index["retweet"] == 3


def test_self_engagement_ignored():
    recs = [tweet(1, "u", retweeted_user_id="u", mentioned_user_ids=["u"], replied_to_user_id="u")]
    vec = compute_engagement(_index(recs))["u"]
    assert all(v == 0 for v in vec.as_features().values())


def test_tweet_level_longevity():
    recs = [tweet(1, "u"), tweet(2, "u"),
            tweet(3, "a", t=T0 + 10, replied_to_user_id="u", target_tweet_id=1),
            tweet(4, "b", t=T0 + 40, replied_to_user_id="u", target_tweet_id=1),
            tweet(5, "c", t=T0 + 500, replied_to_user_id="u", target_tweet_id=2)]
    vec = compute_engagement(_index(recs))["u"]
    assert vec.longevity["reply"] == (30 + 0) / 2
    assert vec.longevity_user_level["reply"] is False


def test_longevity_falls_back_to_user_level():
    recs = [tweet(1, "u"),
            tweet(3, "a", t=T0 + 10, quoted_user_id="u", target_tweet_id=1),
            tweet(4, "b", t=T0 + 70, quoted_user_id="u")]
    vectors = compute_engagement(_index(recs))
    assert vectors["u"].longevity["quote"] == 60
    assert vectors["u"].longevity_user_level["quote"] is True
    assert engagement_report(vectors)["longevity_user_level"]["quote"] == 1


def test_single_event_has_zero_longevity():
    recs = [tweet(1, "u"), tweet(2, "a", t=T0 + 99, retweeted_user_id="u", target_tweet_id=1)]
    assert compute_engagement(_index(recs))["u"].longevity["retweet"] == 0


def test_mentions_are_user_level():
    recs = [tweet(1, "u"), tweet(2, "a", t=T0 + 5, mentioned_user_ids=["u", "v"]),
            tweet(3, "b", t=T0 + 25, mentioned_user_ids=["u"])]
    vec = compute_engagement(_index(recs))["u"]
    assert vec.received["mention"] == 2
    assert vec.longevity["mention"] == 20
    assert vec.longevity_user_level["mention"] is True


def test_targets_outside_index_are_not_vectors():
    vectors = compute_engagement(_index([tweet(1, "a", retweeted_user_id="ghost")]))
    assert set(vectors) == {"a"}


_events = st.lists(st.tuples(st.sampled_from(["a", "b", "c"]), st.integers(0, 10 * DAY)), max_size=30)


@given(_events, st.sampled_from(["a", "b", "c", "d"]), st.integers(0, 10 * DAY))
@settings(max_examples=80, deadline=None)
def test_adding_an_event_is_monotone(events, engager, t):
    base = [tweet(1, "u")] + [tweet(k + 2, e, t=T0 + dt, retweeted_user_id="u") for k, (e, dt) in enumerate(events)]
    more = base + [tweet(10_000, engager, t=T0 + t, retweeted_user_id="u")]
    v0 = compute_engagement(_index(base))["u"]
    v1 = compute_engagement(_index(more))["u"]
    assert v1.received["retweet"] == v0.received["retweet"] + 1
    assert v1.unique["retweet"] >= v0.unique["retweet"]
    assert v1.h_index["retweet"] >= v0.h_index["retweet"]
    for v in (v0, v1):
        assert v.unique["retweet"] <= v.received["retweet"]
