import numpy as np
import pytest

import storytopics as st

from oracles import bow_oracle, tfidf_oracle


def _random_docs(rng, n_tokens=12):
    alphabet = [f"w{i}" for i in range(n_tokens)]
    n_docs = int(rng.integers(2, 9))
    return [
        [str(t) for t in rng.choice(alphabet, size=int(rng.integers(0, 10)))]
        for _ in range(n_docs)
    ]


def _stories(docs):
    return [st.TokenizedStory(story_id=str(i), tokens=tuple(d)) for i, d in enumerate(docs)]


def test_bow_matches_recount_randomized():
    rng = np.random.default_rng(7)
    for _ in range(200):
        docs = _random_docs(rng)
        vocab = st.build_vocabulary(docs)
        bm = st.bow(_stories(docs), vocab)
        dense = bm.matrix.toarray()
        oracle = bow_oracle(docs, vocab.index_to_token)
        assert np.array_equal(dense, oracle)  # exact integers


def test_tfidf_matches_recount_randomized():
    rng = np.random.default_rng(8)
    for _ in range(200):
        docs = _random_docs(rng)
        vocab = st.build_vocabulary(docs)
        tm = st.tfidf(st.bow(_stories(docs), vocab), vocab)
        dense = tm.matrix.toarray()
        oracle = tfidf_oracle(docs, vocab.index_to_token)
        assert np.allclose(dense, oracle, rtol=1e-9, atol=1e-12)


def test_everywhere_token_weighs_zero():
    docs = [["ubiquitous", "rare"], ["ubiquitous"], ["ubiquitous", "other"]]
    vocab = st.build_vocabulary(docs)
    tm = st.tfidf(st.bow(_stories(docs), vocab), vocab)
    col = vocab.token_to_index["ubiquitous"]
    assert np.all(tm.matrix.toarray()[:, col] == 0.0)  # idf = ln(n/n) = 0 exactly


def test_row_norms_are_unit():
    docs = [["a", "b", "b"], ["b", "c"], ["a", "c", "c", "d"]]
    vocab = st.build_vocabulary(docs)
    dense = st.tfidf(st.bow(_stories(docs), vocab), vocab).matrix.toarray()
    norms = np.linalg.norm(dense, axis=1)
    assert np.allclose(norms[norms > 0], 1.0, atol=1e-12)


def test_empty_doc_row_stays_zero():
    docs = [["a", "b"], [], ["a", "c"]]
    vocab = st.build_vocabulary(docs)
    bm = st.bow(_stories(docs), vocab)
    tm = st.tfidf(bm, vocab)
    assert bm.matrix.toarray()[1].sum() == 0
    assert np.all(tm.matrix.toarray()[1] == 0.0)


def test_oov_tokens_dropped_and_reported():
    docs = [["a", "zzz", "b"], ["a"]]
    vocab = st.build_vocabulary([["a", "b"], ["a"]])
    bm = st.bow(_stories(docs), vocab)
    assert bm.dropped_per_story[0] == 1
    assert bm.dropped_per_story[1] == 0
    assert bm.matrix.toarray()[0, vocab.token_to_index["a"]] == 1


def test_shapes_and_sparse_type(prepped):
    stories, _, vocab = prepped
    bm = st.bow(stories, vocab)
    tm = st.tfidf(bm, vocab)
    assert bm.matrix.shape == (len(stories), vocab.V)
    assert tm.matrix.shape == (len(stories), vocab.V)
    assert bm.matrix.format == "csr" and tm.matrix.format == "csr"
    assert bm.matrix.dtype == np.int64


def test_export_triplets(tmp_path):
    docs = [["a", "b", "b"], ["c"]]
    vocab = st.build_vocabulary(docs)
    tm = st.tfidf(st.bow(_stories(docs), vocab), vocab)
    path = tmp_path / "trip.txt"
    st.export_triplets(tm.matrix, path)
    lines = path.read_text().strip().splitlines()
    parsed = [line.split() for line in lines]
    # sorted by (row, col), parseable back to the same values
    keys = [(int(r), int(c)) for r, c, _ in parsed]
    assert keys == sorted(keys)
    dense = tm.matrix.toarray()
    for r, c, v in parsed:
        assert float(v) == dense[int(r), int(c)]
