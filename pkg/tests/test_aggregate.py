import numpy as np
import pytest

from acowa.aggregate import (DEFAULT_CV_GRID, MethodSpec, ModelMatrix, PipelineAborted,
                             compute_feature_weights, naive_average, owa_merge,
                             project_models, run_pipeline)
from acowa.comm import Exchange
from acowa.data import DimensionError, SparseDataset, merge_set_size, synth_sparse
from acowa.objective import ModelVector, Penalty
from acowa.reference import solve_reference
from acowa.solver import SolverConfig, solve_glmnet

from conftest import random_dataset


@pytest.fixture(scope="module")
def planted():
    return synth_sparse(600, 30, 0.3, 5, seed=11, noise=0.2).dataset


def test_naive_average_cases():
    w = np.array([1.0, -2.0, 0.5])
    assert np.array_equal(naive_average(ModelMatrix(np.column_stack([w, w, w]))).coefficients, w)
    e1 = np.array([1.0, 0.0])
    assert np.all(naive_average(ModelMatrix(np.column_stack([e1, -e1]))).coefficients == 0)
    assert np.array_equal(naive_average(ModelMatrix(w[:, None])).coefficients, w)


def test_model_matrix_dims():
    with pytest.raises(DimensionError):
        ModelMatrix.from_models([ModelVector.zeros(2), ModelVector.zeros(3)])


def test_project_models():
    ds = SparseDataset.from_matrix(np.eye(3), [1.0, -1.0, 1.0])
    assert np.all(project_models(ds, ModelMatrix(np.zeros((3, 1)))) == 0)
    W = np.arange(6.0).reshape(3, 2)
    assert np.array_equal(project_models(ds, ModelMatrix(W)), W)
    with pytest.raises(DimensionError):
        project_models(ds, ModelMatrix(np.zeros((4, 1))))


def test_project_dense_oracle(rng):
    ds = random_dataset(rng, 20, 10)
    W = rng.standard_normal((10, 3))
    assert np.allclose(project_models(ds, ModelMatrix(W)), ds.to_csr().toarray() @ W,
                       rtol=0, atol=1e-12)


def test_feature_weights():
    cols = np.array([[1.0, 2.0, 3.0, 4.0], [0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 1.0, 0.0]])
    fw = compute_feature_weights(ModelMatrix(cols), 2.0)
    assert fw.alpha.tolist() == [3.0, 1.0, 2.5]
    assert fw.support_fraction.tolist() == [1.0, 0.0, 0.75]


def test_owa_single_model_unregularized(rng):
    ds = random_dataset(rng, 60, 4, noise=2.0)
    w_hat = solve_reference(ds, Penalty(), tol=1e-13)
    merged, lam = owa_merge(ds, ModelMatrix(w_hat.coefficients[:, None]), [0.0], 5, 0)
    assert lam == 0.0
    assert np.allclose(merged.coefficients, w_hat.coefficients, rtol=1e-6, atol=1e-8)


def test_owa_duplicate_columns(rng):
    ds = random_dataset(rng, 80, 5, noise=1.0)
    a, b = rng.standard_normal(5), rng.standard_normal(5)
    one, _ = owa_merge(ds, ModelMatrix(np.column_stack([a, a, b])), [0.1], 5, 0)
    two, _ = owa_merge(ds, ModelMatrix(np.column_stack([a, b, b])), [0.1], 5, 0)
    ref, _ = owa_merge(ds, ModelMatrix(np.column_stack([b, a, a])), [0.1], 5, 0)
    assert np.allclose(one.coefficients, ref.coefficients, atol=1e-8)
    assert not np.allclose(one.coefficients, two.coefficients, atol=1e-3)


def test_owa_huge_penalty(rng):
    ds = random_dataset(rng, 50, 5)
    W = rng.standard_normal((5, 3))
    merged, lam = owa_merge(ds, ModelMatrix(W), [1e12], 5, 0)
    assert np.abs(merged.coefficients).max() < 1e-8


def test_owa_empty_merge_set():
    with pytest.raises(ValueError):
        owa_merge(SparseDataset.empty(3), ModelMatrix(np.ones((3, 1))))


def test_owa_degenerate_cv_falls_back(caplog):
    ds = SparseDataset.from_matrix(np.ones((6, 2)), np.ones(6))
    merged, lam = owa_merge(ds, ModelMatrix(np.ones((2, 2))), [0.01, 0.1, 1.0], 3, 0)
    assert lam == 0.1
    assert "degenerate" in caplog.text


def test_owa_cv_picks_from_grid(planted):
    W = ModelMatrix(np.column_stack([
        solve_glmnet(planted.rows(np.arange(k, 600, 3)), SolverConfig.full(1.0)).model.coefficients
        for k in range(3)]))
    _, lam = owa_merge(planted, W, DEFAULT_CV_GRID, 5, 0)
    assert lam in DEFAULT_CV_GRID


def test_method_spec_validation():
    with pytest.raises(ValueError):
        MethodSpec("bagging")
    with pytest.raises(ValueError):
        MethodSpec(p=0)
    with pytest.raises(ValueError):
        MethodSpec(beta=-1)
    with pytest.raises(ValueError):
        MethodSpec(lambda_cv_grid=())
    with pytest.raises(ValueError):
        MethodSpec(cv_folds=1)


def test_p1_naive_is_direct_solve(planted):
    cfg = SolverConfig.full(2.0)
    direct = solve_glmnet(planted, cfg).model
    res = run_pipeline(planted, MethodSpec("naive", 1), cfg)
    assert np.allclose(res.model.coefficients, direct.coefficients, atol=1e-8)


def test_p1_acowa_skips_augmentation(planted):
    res = run_pipeline(planted, MethodSpec("acowa", 1), SolverConfig.relaxed(2.0))
    assert res.diagnostics["exchange"]["messages"].get("all_to_all", 0) == 0
    assert res.model.nnz() > 0
    assert "round2_nnz" in res.diagnostics


def test_fw_only_beta0_equals_owa(planted):
    cfg = SolverConfig.relaxed(2.0)
    owa = run_pipeline(planted, MethodSpec("owa", 4, seed=3), cfg).model
    fw0 = run_pipeline(planted, MethodSpec("acowa_fw_only", 4, beta=0.0, seed=3), cfg).model
    assert owa == fw0


def test_min_size_merge_policy(planted):
    res = run_pipeline(planted, MethodSpec("owa", 4, merge_set_policy="paper_min"),
                       SolverConfig.relaxed(2.0))
    assert res.diagnostics["merge_set_size"] == merge_set_size(600, 4, 30) == 80
    res = run_pipeline(planted, MethodSpec("owa", 4), SolverConfig.relaxed(2.0))
    assert res.diagnostics["merge_set_size"] == 150


@pytest.mark.parametrize("method", ["naive", "owa", "acowa", "acowa_centroid_only", "acowa_fw_only"])
def test_schedule_independence(planted, method):
    cfg = SolverConfig.relaxed(1.0)
    spec = MethodSpec(method, 6, seed=5)
    models = [run_pipeline(planted, spec, cfg, n_threads=t).model for t in (1, 2, 6, 1)]
    assert all(m.coefficients.tobytes() == models[0].coefficients.tobytes() for m in models)


def test_protocol_counts(planted):
    ex = Exchange(5)
    run_pipeline(planted, MethodSpec("acowa", 5), SolverConfig.relaxed(1.0), exchange=ex)
    assert dict(ex.calls) == {"all_to_all": 1, "gather": 2, "broadcast": 1}
    assert ex.messages["all_to_all"] == 20
    assert ex.messages["gather"] == 10
    assert ex.messages["broadcast"] == 4


def test_single_class_partition_still_solves(caplog):
    X = np.array([[1.0, 0.0], [2.0, 1.0], [0.0, 1.0], [1.0, 1.0]])
    ds = SparseDataset.from_matrix(X, [1.0, 1.0, 1.0, -1.0])
    res = run_pipeline(ds, MethodSpec("naive", 4), SolverConfig.relaxed(0.1))
    assert len(res.diagnostics["single_class_partitions"]) == 4


def test_too_many_partitions(planted):
    with pytest.raises(ValueError):
        run_pipeline(planted.rows(np.arange(3)), MethodSpec("naive", 4), SolverConfig.relaxed(1.0))


def test_abort_reports_stage(planted, monkeypatch):
    import acowa.aggregate as agg

    def broken(*a, **k):
        raise FloatingPointError("bad merge")

    monkeypatch.setattr(agg, "owa_merge", broken)
    with pytest.raises(PipelineAborted) as err:
        run_pipeline(planted, MethodSpec("owa", 3), SolverConfig.relaxed(1.0))
    assert err.value.stage == "merge"
    assert err.value.timings.round1 > 0
    assert isinstance(err.value.cause, FloatingPointError)


def test_timings_nonnegative(planted):
    res = run_pipeline(planted, MethodSpec("acowa", 4), SolverConfig.relaxed(1.0))
    t = res.timings
    vals = [v for k, _, v in t.rows()]
    assert len(vals) == 9 and min(vals) >= 0
    assert t.total >= max(vals[:-1])
