import numpy as np
import pytest
from scipy.spatial.distance import cdist

import storytopics as st
from storytopics.errors import KTooLargeError, NonFiniteInputError, UnknownStoryError


def _blobs(rng, centers, n_per=12, scale=0.3):
    parts, labels = [], []
    for i, c in enumerate(centers):
        parts.append(rng.normal(0.0, scale, size=(n_per, len(c))) + np.asarray(c))
        labels += [i] * n_per
    return np.vstack(parts), np.array(labels)


# --- k-means --------------------------------------------------------------------


def test_kmeans_seed_determinism():
    rng = np.random.default_rng(0)
    X, _ = _blobs(rng, [(0, 0), (8, 0), (0, 8)])
    a = st.kmeans(X, k=3, seed=5)
    b = st.kmeans(X, k=3, seed=5)
    assert np.array_equal(a.labels, b.labels)
    assert np.array_equal(a.centers, b.centers)
    assert a.inertia == b.inertia
    assert a.inertia_trace == b.inertia_trace


def test_kmeans_inertia_trace_non_increasing():
    rng = np.random.default_rng(1)
    X, _ = _blobs(rng, [(0, 0), (4, 0), (0, 4), (4, 4)], n_per=20, scale=1.0)
    for seed in range(5):
        trace = np.array(st.kmeans(X, k=4, seed=seed).inertia_trace)
        assert np.all(np.diff(trace) <= 1e-9 * max(1.0, trace[0]))


def test_kmeans_recovers_three_blobs():
    rng = np.random.default_rng(2)
    X, true = _blobs(rng, [(0, 0), (10, 0), (0, 10)])
    run = st.kmeans(X, k=3, seed=0)
    assert st.adjusted_rand_index(run.labels, true) == 1.0


def test_kmeans_k_equals_n_and_k_equals_one():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(6, 2))
    solo = st.kmeans(X, k=6, seed=0)
    assert solo.inertia == 0.0
    assert sorted(solo.labels) == list(range(6))
    one = st.kmeans(X, k=1, seed=0)
    assert np.all(one.labels == 0)
    np.testing.assert_allclose(one.centers[0], X.mean(axis=0), rtol=0, atol=1e-12)
    expected = float(((X - X.mean(axis=0)) ** 2).sum())
    assert one.inertia == pytest.approx(expected, rel=1e-12)


def test_kmeans_input_validation():
    X = np.ones((4, 2))
    with pytest.raises(KTooLargeError):
        st.kmeans(X, k=5)
    with pytest.raises(ValueError):
        st.kmeans(X, k=0)
    with pytest.raises(ValueError):
        st.kmeans(np.empty((0, 2)), k=1)
    bad = X.copy()
    bad[1, 1] = np.nan
    with pytest.raises(NonFiniteInputError):
        st.kmeans(bad, k=2)


def test_estimator_api_and_predict():
    rng = np.random.default_rng(4)
    X, _ = _blobs(rng, [(0, 0), (9, 9)])
    est = st.LloydKMeans(k=2, seed=1)
    assert est.get_params() == {"k": 2, "seed": 1, "max_iter": 300}
    labels = est.fit_predict(X)
    assert np.array_equal(labels, est.labels_)
    # predict assigns brand-new points to the nearest center
    probes = np.array([[0.1, -0.2], [8.8, 9.3]])
    pred = est.predict(probes)
    assert pred[0] == est.predict(np.array([[0.0, 0.0]]))[0]
    assert pred[1] == est.predict(np.array([[9.0, 9.0]]))[0]
    assert pred[0] != pred[1]


def test_kmeans_best_prefers_low_inertia_then_low_seed():
    rng = np.random.default_rng(5)
    X, _ = _blobs(rng, [(0, 0), (12, 0)], n_per=10)
    # every seed converges to the same optimum here, so the tie-break rules
    best = st.kmeans_best(X, k=2, seeds=[7, 3, 5])
    assert best.seed == 3
    assert best.inertia == st.kmeans(X, k=2, seed=7).inertia
    with pytest.raises(ValueError):
        st.kmeans_best(X, k=2, seeds=[])


def test_kmeans_best_matches_exhaustive_minimum():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(40, 3))
    seeds = range(8)
    best = st.kmeans_best(X, k=4, seeds=seeds)
    runs = [st.kmeans(X, k=4, seed=s) for s in seeds]
    assert best.inertia == min(r.inertia for r in runs)


# --- agreement ------------------------------------------------------------------


def test_purity_hand_computed():
    pred = [0, 0, 1, 1]
    true = ["a", "a", "a", "b"]
    assert st.purity(pred, true) == pytest.approx(0.75)
    assert st.purity([0, 1, 2], ["x", "y", "z"]) == 1.0
    assert st.purity([0, 0, 0, 0], ["a", "a", "b", "b"]) == 0.5


def test_ari_hand_computed():
    assert st.adjusted_rand_index([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    assert st.adjusted_rand_index([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(-0.5)


def test_nmi_hand_computed():
    assert st.normalized_mutual_info([0, 0, 1, 1], ["b", "b", "a", "a"]) == pytest.approx(1.0)
    # independent partitions share no information
    assert st.normalized_mutual_info([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(0.0)


def test_degenerate_partition_conventions():
    # both sides trivial: identical by convention
    assert st.adjusted_rand_index([3, 3, 3], ["x", "x", "x"]) == 1.0
    assert st.normalized_mutual_info([3, 3, 3], ["x", "x", "x"]) == 1.0
    assert st.purity([3, 3, 3], ["x", "x", "x"]) == 1.0
    # one trivial side carries no pair information
    assert st.adjusted_rand_index([0, 0, 0, 0], ["a", "a", "b", "b"]) == 0.0
    assert st.normalized_mutual_info([0, 0, 0, 0], ["a", "a", "b", "b"]) == 0.0


def test_agreement_matches_reference_implementations():
    from sklearn.metrics import adjusted_rand_score, normalized_mutual_info_score

    rng = np.random.default_rng(7)
    for _ in range(50):
        n = int(rng.integers(2, 40))
        pred = rng.integers(0, int(rng.integers(1, 7)), size=n)
        true = rng.integers(0, int(rng.integers(1, 7)), size=n)
        scores = st.agreement(pred, true)
        assert scores.ari == pytest.approx(adjusted_rand_score(true, pred), abs=1e-12)
        ref_nmi = normalized_mutual_info_score(true, pred, average_method="arithmetic")
        assert scores.nmi == pytest.approx(ref_nmi, abs=1e-9)
        assert 0.0 <= scores.purity <= 1.0


def test_agreement_input_validation():
    with pytest.raises(ValueError):
        st.purity([0, 1], [0, 1, 2])
    with pytest.raises(ValueError):
        st.adjusted_rand_index([], [])


# --- neighbors ------------------------------------------------------------------


def test_neighbor_report_orders_and_filters():
    ids = ["s1", "s2", "s3", "s4", "s5"]
    m = np.array([
        [0.0, 2.0, 1.0, 2.0, np.nan],
        [2.0, 0.0, 3.0, 1.0, 1.0],
        [1.0, 3.0, 0.0, 4.0, 2.0],
        [2.0, 1.0, 4.0, 0.0, 5.0],
        [np.nan, 1.0, 2.0, 5.0, 0.0],
    ])
    got = st.neighbor_report(m, ids, "s1", k=3)
    # self excluded, NaN (s5) excluded, tie at 2.0 broken by story id
    assert [(nb.story_id, nb.distance) for nb in got] == [
        ("s3", 1.0), ("s2", 2.0), ("s4", 2.0),
    ]
    assert len(st.neighbor_report(m, ids, "s1", k=10)) == 3
    with pytest.raises(UnknownStoryError):
        st.neighbor_report(m, ids, "nope")


def test_format_neighbor_table():
    nbs = [st.Neighbor("s3", 1.0), st.Neighbor("s2", 2.5)]
    text = st.format_neighbor_table("s1", nbs)
    lines = text.splitlines()
    assert lines[0].split() == ["story_id", "distance"]
    assert lines[1].split() == ["s3", "1.000000"]
    assert lines[2].split() == ["s2", "2.500000"]


# --- classical MDS ----------------------------------------------------------------


def test_classical_mds_recovers_euclidean_distances():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(15, 4))
    D = cdist(X, X)
    coords = st.classical_mds(D, dims=4)
    np.testing.assert_allclose(cdist(coords, coords), D, rtol=0, atol=1e-9)


def test_classical_mds_extra_dims_are_zero():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(12, 3))
    coords = st.classical_mds(cdist(X, X), dims=6)
    assert coords.shape == (12, 6)
    # rank of centered 3-d data is 3: the rest is eigensolver noise at most
    assert np.abs(coords[:, 3:]).max() < 1e-6
    np.testing.assert_allclose(cdist(coords, coords), cdist(X, X), rtol=0, atol=1e-9)
    # a non-Euclidean (star) metric has a strictly negative eigenvalue,
    # and that component becomes an exact zero column
    star = np.array([
        [0.0, 1.0, 1.0, 1.0],
        [1.0, 0.0, 2.0, 2.0],
        [1.0, 2.0, 0.0, 2.0],
        [1.0, 2.0, 2.0, 0.0],
    ])
    flat = st.classical_mds(star, dims=4)
    assert np.all(flat[:, 3] == 0.0)


def test_classical_mds_sign_convention_and_validation():
    rng = np.random.default_rng(10)
    X = rng.normal(size=(10, 2))
    coords = st.classical_mds(cdist(X, X), dims=2)
    for col in coords.T:
        assert col[np.argmax(np.abs(col))] > 0
    with pytest.raises(ValueError):
        st.classical_mds(np.zeros((3, 4)))
    bad = cdist(X, X)
    bad[0, 1] = np.inf
    with pytest.raises(NonFiniteInputError):
        st.classical_mds(bad)
