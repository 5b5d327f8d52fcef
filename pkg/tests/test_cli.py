import csv

import numpy as np
import pytest

from acowa.cli import BENCH_FIELDS, SWEEP_FIELDS, main, read_model
from acowa.data import dump_libsvm, synth_sparse
from acowa.objective import lambda_max


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    ds = synth_sparse(900, 40, 0.3, 5, seed=1, noise=0.2).dataset
    tr, te = root / "train.svm", root / "test.svm"
    dump_libsvm(ds.rows(np.arange(600)), tr)
    dump_libsvm(ds.rows(np.arange(600, 900)), te)
    return root, str(tr), str(te), ds.rows(np.arange(600))


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_train_l1_kill(files, capsys):
    root, tr, te, train = files
    out = root / "killed.txt"
    huge = 10 * lambda_max(train)
    assert main(["train", "--train", tr, "--method", "naive", "--p", "1",
                 "--lambda1", str(huge), "--out", str(out)]) == 0
    assert out.read_text() == ""
    assert "nnz 0" in capsys.readouterr().out


def test_train_deterministic(files, capsys):
    root, tr, te, train = files
    paths = [root / f"m{k}.txt" for k in range(2)]
    for path in paths:
        assert main(["train", "--train", tr, "--test", te, "--method", "acowa", "--p", "4",
                     "--seed", "7", "--lambda1", "1.0", "--out", str(path)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    model = read_model(paths[0], train.n_cols)
    text = capsys.readouterr().out
    assert f"nnz {model.nnz()}" in text and "test_accuracy" in text


def test_missing_test_file(files, capsys):
    root, tr, te, train = files
    assert main(["train", "--train", tr, "--test", str(root / "nope.svm"), "--lambda1", "1"]) == 2
    assert "nope.svm" in capsys.readouterr().err


def test_bad_flags(files):
    root, tr, te, train = files
    assert main(["train", "--train", tr, "--p", "100000", "--lambda1", "1"]) == 2
    with pytest.raises(SystemExit):
        main(["train", "--train", tr, "--method", "bagging", "--lambda1", "1"])


def test_sweep_counts(files):
    root, tr, te, train = files
    out = root / "sweep.csv"
    assert main(["sweep", "--train", tr, "--test", te, "--methods", "naive,owa", "--p", "4",
                 "--seeds", "2", "--lambda1-grid", "0.1,1,10", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert list(rows[0].keys()) == SWEEP_FIELDS
    detail = [r for r in rows if r["seed"] != "-1"]
    agg = [r for r in rows if r["seed"] == "-1"]
    assert len(detail) == 12 and len(agg) == 6
    assert all(0.0 <= float(r["accuracy"]) <= 1.0 for r in rows)
    assert all(r["status"] == "ok" for r in rows)
    # aggregates are the means of their detail rows
    for a in agg:
        mine = [float(r["accuracy"]) for r in detail
                if (r["method"], r["lambda1"]) == (a["method"], a["lambda1"])]
        assert float(a["accuracy"]) == pytest.approx(np.mean(mine), abs=1e-15)


def test_sweep_beta_grid(files):
    root, tr, te, train = files
    out = root / "beta.csv"
    assert main(["sweep", "--train", tr, "--methods", "owa,acowa", "--p", "2", "--seeds", "1",
                 "--lambda1-grid", "1", "--beta-grid", "0,2", "--out", str(out)]) == 0
    rows = [r for r in read_csv(out) if r["seed"] != "-1"]
    assert [(r["method"], r["beta"]) for r in rows] == [("owa", "0.0"), ("acowa", "0.0"), ("acowa", "2.0")]


def test_sweep_records_failures(files, monkeypatch):
    import acowa.cli as cli

    real = cli.run_pipeline

    def flaky(ds, spec, cfg, **kw):
        if spec.seed == 1:
            raise RuntimeError("worker lost")
        return real(ds, spec, cfg, **kw)

    monkeypatch.setattr(cli, "run_pipeline", flaky)
    root, tr, te, train = files
    out = root / "flaky.csv"
    assert main(["sweep", "--train", tr, "--methods", "naive", "--p", "2", "--seeds", "2",
                 "--lambda1-grid", "1", "--out", str(out)]) == 1
    rows = read_csv(out)
    assert [r["status"] for r in rows] == ["ok", "failed: worker lost", "ok"]


def test_bench(files):
    root, tr, te, train = files
    outs = [root / f"bench{k}.csv" for k in range(2)]
    nnz = []
    for out in outs:
        assert main(["bench", "--train", tr, "--p", "4", "--target-nnz", "8", "--out", str(out)]) == 0
        rows = read_csv(out)
        assert list(rows[0].keys()) == BENCH_FIELDS
        assert [r["stage"] for r in rows] == ["Centroids", "All-to-all", "Round 1", "Model gather",
                                              "Compute α", "Round 2", "Model gather", "Round 3", "Total"]
        secs = [float(r["seconds"]) for r in rows]
        assert min(secs) >= 0 and secs[-1] >= max(secs[:-1])
        nnz.append(rows)
    assert len(nnz[0]) == len(nnz[1]) == 9


def test_bench_zero_target(files, capsys):
    root, tr, te, train = files
    assert main(["bench", "--train", tr, "--p", "2", "--target-nnz", "0",
                 "--out", str(root / "zero.csv")]) == 0
    assert "nnz 0" in capsys.readouterr().out


def test_tuner_zero_target_is_immediate(files):
    from acowa.aggregate import MethodSpec
    from acowa.solver import SolverConfig
    from acowa.tuning import tune_lambda1

    train = files[3]
    res = tune_lambda1(train, MethodSpec("acowa", 2), SolverConfig.relaxed(), 0)
    assert res.hit and res.nnz == 0 and res.steps == 1


def test_tuner_hits_target(files):
    from acowa.aggregate import MethodSpec
    from acowa.solver import SolverConfig
    from acowa.tuning import tune_lambda1

    train = files[3]
    a = tune_lambda1(train, MethodSpec("acowa", 2), SolverConfig.relaxed(), 10)
    b = tune_lambda1(train, MethodSpec("acowa", 2), SolverConfig.relaxed(), 10)
    assert a.hit and 9 <= a.nnz <= 11
    assert (a.lambda1, a.nnz) == (b.lambda1, b.nnz)


@pytest.mark.slow
def test_sweep_acowa_beats_naive(tmp_path):
    # planted model with 10 informative features; best accuracy among lambda values
    # whose mean model has at most twice the planted support
    planted = synth_sparse(5000, 100, 0.2, 10, seed=3, noise=0.1).dataset
    tr, te = tmp_path / "tr.svm", tmp_path / "te.svm"
    dump_libsvm(planted.rows(np.arange(4000)), tr)
    dump_libsvm(planted.rows(np.arange(4000, 5000)), te)
    out = tmp_path / "s.csv"
    assert main(["sweep", "--train", str(tr), "--test", str(te), "--methods", "naive,acowa",
                 "--p", "32", "--seeds", "3", "--lambda1-count", "12", "--out", str(out)]) == 0
    agg = [r for r in read_csv(out) if r["seed"] == "-1" and float(r["nnz"]) <= 20]

    def best(m):
        return max(float(r["accuracy"]) for r in agg if r["method"] == m)

    assert best("acowa") > best("naive")
