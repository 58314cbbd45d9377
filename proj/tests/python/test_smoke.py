"""End-to-end smoke tests for the Python bindings."""

import numpy as np
import pytest

try:
    import proxima
except ImportError:
    import _proxima as proxima


@pytest.fixture(scope="module")
def index():
    base = proxima.make_sift_like(2000, 32, seed=7, clusters=64, sigma=16.0)
    queries = proxima.make_sift_like(50, 32, seed=8, clusters=64, sigma=16.0)
    graph = proxima.build_graph(base, r=12, l_build=32, seed=3)
    model = proxima.train_pq(base, m=4, c=64, iters=10, seed=4)
    codes = proxima.encode(model, base)
    return base, queries, graph, model, codes


def test_dataset_round_trip(tmp_path):
    arr = np.random.default_rng(0).random((20, 8), dtype=np.float32)
    ds = proxima.Dataset(arr)
    assert ds.n == 20 and ds.d == 8
    np.testing.assert_array_equal(ds.to_numpy(), arr)

    path = str(tmp_path / "v.fvecs")
    proxima.write_vectors(path, ds)
    back = proxima.load_vectors(path)
    np.testing.assert_array_equal(back.to_numpy(), arr)


def test_exact_distance_is_squared_l2():
    q = np.array([0.0, 0.0], dtype=np.float32)
    x = np.array([3.0, 4.0], dtype=np.float32)
    assert proxima.exact_distance(q, x) == pytest.approx(25.0)


def test_search_beats_nothing_and_counters_exist(index):
    base, queries, graph, model, codes = index
    truth_ids, _ = proxima.brute_force_knn(base, queries, 10)
    res = proxima.batch_search(graph, model, codes, base, queries, k=10, l=60, beta=1.1)
    recall = proxima.recall_at_k(res["ids"], truth_ids, 10)
    assert recall > 0.8
    counters = res["counters"][0]
    assert counters["hops"] >= 1
    assert counters["pq_distance_count"] >= counters["hops"]


def test_single_query_matches_batch(index):
    base, queries, graph, model, codes = index
    q = queries.to_numpy()[0]
    single = proxima.search(graph, model, codes, base, q, k=5, l=40, beta=1.1)
    batch = proxima.batch_search(graph, model, codes, base, queries, k=5, l=40, beta=1.1)
    assert single["ids"] == batch["ids"][0]


def test_graph_stats_and_files(index, tmp_path):
    base, _, graph, model, codes = index
    stats = proxima.graph_stats(graph)
    assert stats["raw_bits"] == 32 * graph.n * graph.r
    assert 0.0 < stats["compression"] < 1.0

    gpath = str(tmp_path / "g.px")
    graph.save(gpath)
    back = proxima.load_graph(gpath)
    assert back.n == graph.n
    assert sorted(back.neighbors(0)) == sorted(graph.neighbors(0))

    mpath = str(tmp_path / "m.pq")
    model.save(mpath)
    assert proxima.load_pq(mpath).m == model.m


def test_beta_calibration(index):
    base, _, _, model, _ = index
    cal = proxima.calibrate_beta(model, base, sample_size=300, percentile=0.99, seed=5)
    assert cal["beta"] >= 1.0


def test_accelerator_model(index):
    base, queries, graph, model, codes = index
    report = proxima.run_accelerator_model(
        graph, model, codes, base, queries, k=10, l=40, beta=1.1,
        hot_pct=3.0, trace_samples=100, n_queues=32,
    )
    assert report["qps"] > 0
    assert 0 <= report["core_utilization_pct"] <= 100
    assert report["traffic_bytes"]["pq"] > 0


def test_errors_are_python_exceptions(index):
    base, _, graph, model, codes = index
    q = np.zeros(32, dtype=np.float32)
    with pytest.raises(proxima.ProximaError):
        proxima.search(graph, model, codes, base, q, k=50, l=10)  # k > L
