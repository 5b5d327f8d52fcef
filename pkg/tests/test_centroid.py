import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acowa.centroid import augment_partition, centroid_loss_gap, compute_centroids
from acowa.data import DimensionError, SparseDataset, partition

from conftest import random_dataset


def test_two_point_mean():
    ds = SparseDataset.from_matrix([[1.0, 0.0], [0.0, 1.0], [3.0, 3.0]], [1.0, 1.0, -1.0])
    c = compute_centroids(ds, 0)
    assert c.mu_plus.tolist() == [0.5, 0.5] and c.mass_plus == 2
    assert c.mu_minus.tolist() == [3.0, 3.0] and c.mass_minus == 1


def test_empty_class():
    ds = SparseDataset.from_matrix([[1.0, 2.0], [0.0, 1.0]], [-1.0, -1.0])
    c = compute_centroids(ds, 0)
    assert not c.valid_plus and c.mass_plus == 0
    assert np.all(c.mu_plus == 0)
    assert c.valid_minus


def test_singleton():
    x = [0.25, -3.0, 0.0]
    c = compute_centroids(SparseDataset.from_matrix([x], [1.0]), 5)
    assert c.mu_plus.tolist() == x and c.partition_id == 5


@pytest.mark.parametrize("seed", range(3))
def test_mean_matches_dense(seed):
    rng = np.random.default_rng(seed)
    ds = random_dataset(rng, 40, 7)
    X = ds.to_csr().toarray()
    c = compute_centroids(ds, 0)
    assert np.allclose(c.mu_plus, X[ds.labels > 0].mean(axis=0), atol=1e-12)
    assert np.allclose(c.mu_minus, X[ds.labels < 0].mean(axis=0), atol=1e-12)


def _parts(ds, p, seed=0):
    plan = partition(ds, p, seed)
    parts = [plan.extract(ds, i) for i in range(p)]
    return parts, [compute_centroids(q, i) for i, q in enumerate(parts)]


def test_p1_identity(small_ds):
    parts, cents = _parts(small_ds, 1)
    assert augment_partition(parts[0], cents, 0) is parts[0]


def test_p3_counts(rng):
    ds = random_dataset(rng, 60, 5)
    parts, cents = _parts(ds, 3)
    assert all(c.valid_plus and c.valid_minus for c in cents)
    aug = augment_partition(parts[1], cents, 1)
    assert aug.n_rows == parts[1].n_rows + 4
    extra_w = aug.row_weights[parts[1].n_rows:]
    assert extra_w.sum() == parts[0].n_rows + parts[2].n_rows
    assert aug.row_weights.sum() == ds.n_rows
    assert np.all(aug.row_weights[:parts[1].n_rows] == 1.0)
    assert aug.labels[parts[1].n_rows:].tolist() == [1, -1, 1, -1]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_mass_conservation(seed, p):
    rng = np.random.default_rng(seed)
    ds = random_dataset(rng, 10 * p, 4, noise=0.0)
    parts, cents = _parts(ds, p, seed % 97)
    for i in range(p):
        aug = augment_partition(parts[i], cents, i)
        others_ok = all(c.valid_plus and c.valid_minus for j, c in enumerate(cents) if j != i)
        if others_ok:
            assert aug.row_weights.sum() == ds.n_rows
        assert aug.n_cols == ds.n_cols
        # input untouched
        assert np.array_equal(aug.values[:parts[i].nnz], parts[i].values)


def test_skips_empty_class():
    a = SparseDataset.from_matrix([[1.0], [2.0]], [1.0, -1.0])
    b = SparseDataset.from_matrix([[3.0], [5.0]], [1.0, 1.0])
    cents = [compute_centroids(a, 0), compute_centroids(b, 1)]
    aug = augment_partition(a, cents, 0)
    assert aug.n_rows == 3
    assert aug.values[-1] == 4.0 and aug.row_weights[-1] == 2.0


def test_centroid_rows_sparse():
    a = SparseDataset.from_matrix([[1.0, 0.0], [2.0, 0.0]], [1.0, -1.0])
    cents = [compute_centroids(a, 0), compute_centroids(a, 1)]
    assert augment_partition(a, cents, 0).nnz == 4


def test_dimension_mismatch():
    a = SparseDataset.from_matrix([[1.0, 0.0]], [1.0])
    b = SparseDataset.from_matrix([[1.0, 0.0, 3.0]], [1.0])
    with pytest.raises(DimensionError):
        augment_partition(a, [compute_centroids(a, 0), compute_centroids(b, 1)], 0)


def test_gap_identical_rows():
    ds = SparseDataset.from_matrix([[1.0, -2.0]] * 5, [1.0] * 5)
    gap, bound = centroid_loss_gap(ds, np.array([0.3, 0.9]))
    assert gap == pytest.approx(0.0, abs=1e-12) and bound == pytest.approx(0.0, abs=1e-12)


def test_gap_zero_model(rng):
    ds = SparseDataset.from_matrix(rng.standard_normal((10, 3)), -np.ones(10))
    gap, bound = centroid_loss_gap(ds, np.zeros(3))
    assert gap == 0.0


def test_gap_mixed_labels(small_ds):
    with pytest.raises(ValueError):
        centroid_loss_gap(small_ds, np.zeros(8))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, -1.0]), st.floats(0.01, 10.0))
def test_gap_sandwich(seed, label, scale):
    rng = np.random.default_rng(seed)
    ds = SparseDataset.from_matrix(rng.standard_normal((50, 6)), np.full(50, label))
    gap, bound = centroid_loss_gap(ds, scale * rng.standard_normal(6))
    assert np.isfinite(gap) and np.isfinite(bound)
    assert -1e-9 <= gap <= bound * (1 + 1e-12) + 1e-12
