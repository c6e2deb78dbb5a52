import csv

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from trollspread.corpus import CorpusIndex, TweetRecord
from trollspread.graph import build_retweet_graph

from conftest import tweet


def _records(pairs):
    return [TweetRecord.from_json(tweet(k + 1, a, retweeted_user_id=b)) for k, (a, b) in enumerate(pairs)]


def test_repeated_retweets_form_one_weighted_edge():
    g = build_retweet_graph(CorpusIndex(_records([("A", "B")] * 3)))
    assert g.node_ids == ("A", "B")
    assert g.n_edges == 1
    assert (g.src[0], g.dst[0], g.weight[0]) == (0, 1, 3)


def test_self_retweet_dropped_and_counted():
    g = build_retweet_graph(CorpusIndex(_records([("A", "A")])))
    assert g.n_edges == 0 and g.n_nodes == 0
    assert g.self_loops == 1


def test_empty_corpus_gives_empty_graph():
    g = build_retweet_graph(CorpusIndex([]))
    assert g.n_nodes == 0
    assert g.adjacency().shape == (0, 0)


def test_ten_user_fixture_matches_hand_matrix():
    users = [f"u{i}" for i in range(10)]
    multiset = [(0, 1), (0, 1), (1, 0), (2, 3), (3, 4), (4, 2), (5, 6), (5, 6), (5, 6), (7, 8),
                (8, 9), (9, 7), (9, 0), (6, 5)]
    g = build_retweet_graph(CorpusIndex(_records([(users[a], users[b]) for a, b in multiset])))
    expected = np.zeros((10, 10))
    for a, b in multiset:
        expected[a, b] += 1
    assert g.node_ids == tuple(users)
    np.testing.assert_array_equal(g.adjacency("out").toarray(), expected)
    np.testing.assert_array_equal(g.adjacency("in").toarray(), expected.T)
    np.testing.assert_array_equal(g.adjacency("undirected").toarray(), expected + expected.T)


def test_csv_export(tmp_path):
    g = build_retweet_graph(CorpusIndex(_records([("A", "B"), ("B", "C"), ("A", "B")])))
    g.to_csv(tmp_path / "e.csv")
    with open(tmp_path / "e.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows == [["src", "dst", "weight"], ["A", "B", "2"], ["B", "C", "1"]]
    assert g.summary() == {"nodes": 3, "edges": 2, "total_weight": 3, "self_loops_dropped": 0}


_pairs = st.lists(st.tuples(st.sampled_from("abcdefg"), st.sampled_from("abcdefg")), max_size=40)


@given(_pairs, st.randoms())
@settings(max_examples=80, deadline=None)
def test_graph_properties(pairs, rnd):
    recs = _records(pairs)
    g = build_retweet_graph(CorpusIndex(recs))
    non_self = sum(1 for a, b in pairs if a != b)
    assert g.weight.sum() == non_self
    assert g.self_loops == len(pairs) - non_self
    assert np.all(g.weight >= 1)
    assert np.all(g.src != g.dst)
    u = g.adjacency("undirected").toarray()
    np.testing.assert_array_equal(u, u.T)
    shuffled = recs[:]
    rnd.shuffle(shuffled)
    h = build_retweet_graph(CorpusIndex(shuffled))
    assert h.node_ids == g.node_ids
    np.testing.assert_array_equal(h.src, g.src)
    np.testing.assert_array_equal(h.dst, g.dst)
    np.testing.assert_array_equal(h.weight, g.weight)


def test_nodes_are_retweet_participants_only():
    recs = _records([("a", "b")]) + [TweetRecord.from_json(tweet(99, "c", mentioned_user_ids=["a"]))]
    g = build_retweet_graph(CorpusIndex(recs))
    assert g.node_ids == ("a", "b")
