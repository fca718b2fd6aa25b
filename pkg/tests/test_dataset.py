import numpy as np
import pytest

from tabprior.dataset import (
    Converter,
    GeneratedDataset,
    GenerationConfig,
    _sample_categorical_converter,
    apply_converter,
    filter_graph,
    generate_batch,
    generate_dataset,
    sample_graph,
)
from tabprior.rng import RngStream, new_sampler_context


def _ctx_stream(seed=0):
    return new_sampler_context(RngStream(seed)), RngStream(seed + 9000)


# -- graph -------------------------------------------------------------------


def test_sample_graph_is_upper_triangular_dag():
    edges = sample_graph(16, RngStream(0))
    assert edges.shape == (16, 16)
    assert not np.tril(edges).any()


def test_sample_graph_deterministic():
    assert np.array_equal(sample_graph(10, RngStream(3)), sample_graph(10, RngStream(3)))


def test_filter_graph_direct_edge():
    # 0 -> 1; feature on 0, target on 1: share ancestor 0
    edges = np.zeros((3, 3), dtype=bool)
    edges[0, 1] = True
    assert filter_graph(edges, [0], 1)


def test_filter_graph_common_ancestor():
    # 0 -> 1, 0 -> 2: x on 1, y on 2 share ancestor 0 without an x-y path
    edges = np.zeros((3, 3), dtype=bool)
    edges[0, 1] = True
    edges[0, 2] = True
    assert filter_graph(edges, [1], 2)


def test_filter_graph_rejects_disconnected():
    edges = np.zeros((4, 4), dtype=bool)
    edges[0, 1] = True
    edges[2, 3] = True
    assert not filter_graph(edges, [1], 3)


def test_filter_graph_same_node():
    edges = np.zeros((2, 2), dtype=bool)
    assert filter_graph(edges, [1], 1)  # self counts as a shared ancestor


# -- converters --------------------------------------------------------------


def test_numeric_identity_converter():
    ctx, s = _ctx_stream(1)
    conv = Converter("numeric", 1)
    X = RngStream(5).standard_normal((50, 1))
    out, v = apply_converter(conv, X.copy(), ctx, s)
    assert np.array_equal(out, X)
    assert np.array_equal(v, X[:, 0])


def test_numeric_warp_converter():
    ctx, s = _ctx_stream(2)
    conv = Converter("numeric", 1, warp=(2.0, 3.0))
    X = RngStream(6).standard_normal((80, 1))
    out, v = apply_converter(conv, X.copy(), ctx, s)
    # warp output lives in [0, 1]; extracted column is the raw input
    assert np.all(out >= 0.0) and np.all(out <= 1.0)
    assert np.array_equal(v, X[:, 0])


def test_categorical_converters_produce_valid_codes():
    for seed in range(25):
        ctx, s = _ctx_stream(seed + 50)
        conv = _sample_categorical_converter(5, ctx, s)
        X = RngStream(seed).standard_normal((120, conv.dim))
        out, v = apply_converter(conv, X.copy(), ctx, s)
        assert out.shape == X.shape
        assert v.shape == (120,)
        assert v.min() >= 0 and v.max() < 5
        assert np.all(np.isfinite(out))


def test_converter_dim_mismatch():
    ctx, s = _ctx_stream(3)
    conv = Converter("numeric", 1)
    with pytest.raises(ValueError):
        apply_converter(conv, np.zeros((10, 2)), ctx, s)


# -- end-to-end generation ----------------------------------------------------


def _check_invariants(ds: GeneratedDataset, config: GenerationConfig):
    n, m = ds.X.shape
    assert n == config.n_samples
    assert config.min_columns >= 1 and m >= 1
    assert np.all(np.isfinite(ds.X))
    assert len(ds.column_meta) == m
    for j, (kind, card) in enumerate(ds.column_meta):
        col = ds.X[:, j]
        assert len(np.unique(col)) >= 2, "constant column survived"
        if kind == "cat":
            assert 2 <= card <= 9
            codes = np.unique(col)
            assert np.array_equal(codes, np.arange(len(codes), dtype=float))
    if ds.task == "classification":
        assert 2 <= ds.n_classes <= 10
        train_classes = set(ds.y[ds.train_mask])
        test_classes = set(ds.y[~ds.train_mask])
        assert train_classes == test_classes == set(range(ds.n_classes))
    else:
        assert ds.n_classes is None
        assert len(np.unique(ds.y)) >= 2
    assert 0 < ds.train_mask.sum() < n


@pytest.mark.parametrize("task", ["classification", "regression"])
def test_generate_dataset_invariants(task):
    config = GenerationConfig(n_samples=256, max_columns=20, task=task, filtering=False)
    for seed in range(8):
        ds = generate_dataset(config, seed)
        _check_invariants(ds, config)


def test_generate_dataset_deterministic():
    config = GenerationConfig(n_samples=128, max_columns=10)
    a = generate_dataset(config, 99)
    b = generate_dataset(config, 99)
    assert np.array_equal(a.X, b.X)
    assert np.array_equal(a.y, b.y)
    assert np.array_equal(a.train_mask, b.train_mask)
    assert a.column_meta == b.column_meta


def test_generate_dataset_seeds_differ():
    config = GenerationConfig(n_samples=128, max_columns=10, filtering=False)
    a = generate_dataset(config, 1)
    b = generate_dataset(config, 2)
    assert a.X.shape != b.X.shape or not np.array_equal(a.X, b.X)


def test_telemetry_reports_attempts():
    config = GenerationConfig(n_samples=128, max_columns=10)
    ds = generate_dataset(config, 5)
    assert ds.telemetry["attempts"] >= 1
    assert "rejections" in ds.telemetry


def test_generate_batch_item_independence():
    config = GenerationConfig(n_samples=128, max_columns=8, filtering=False)
    full = generate_batch(config, 7, 3)
    # regenerating only item 2 gives the identical dataset
    again = generate_batch(config, 7, 3)[2]
    assert np.array_equal(full[2].X, again.X)


def test_config_validation():
    with pytest.raises(ValueError):
        GenerationConfig(task="clustering")
    with pytest.raises(ValueError):
        GenerationConfig(train_fraction=1.5)
    with pytest.raises(ValueError):
        GenerationConfig(min_columns=5, max_columns=2)
    with pytest.raises(ValueError):
        GenerationConfig(n_samples=4)
