"""CSV parsing, splitting/normalization, and result serialization."""

import numpy as np
import pytest

from interpnn.core import Dataset
from interpnn.data_io import (
    RESULTS_HEADER,
    SUMMARY_HEADER,
    CsvSchema,
    SplitSpec,
    load_csv,
    load_features_csv,
    split_normalize,
    write_csv,
    write_results,
    write_summary,
)
from interpnn.simulations import SweepResult, SweepRow

# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def test_load_csv_basic(tmp_path):
    p = tmp_path / "data.csv"
    p.write_text("1.5,2.5,1\n-0.5,0.25,0\n3.0,4.0,1\n")
    ds = load_csv(p, CsvSchema(n_features=2))
    assert ds.n == 3 and ds.d == 2
    assert ds.task == "classification"
    np.testing.assert_array_equal(ds.responses, [1.0, 0.0, 1.0])
    np.testing.assert_array_equal(ds.features[1], [-0.5, 0.25])


def test_load_csv_header_and_blank_lines(tmp_path):
    p = tmp_path / "data.csv"
    p.write_text("a,b,label\n1,2,0\n\n3,4,1\n")
    ds = load_csv(p, CsvSchema(n_features=2, header=True))
    assert ds.n == 2


def test_load_csv_reports_line_numbers(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2,0\n1,2\n")
    with pytest.raises(ValueError, match="line 2: expected 3 fields"):
        load_csv(p, CsvSchema(n_features=2))

    p.write_text("1,2,0\n1,x,1\n")
    with pytest.raises(ValueError, match="line 2: non-numeric"):
        load_csv(p, CsvSchema(n_features=2))

    p.write_text("1,2,0\n1,inf,1\n")
    with pytest.raises(ValueError, match="line 2: non-finite"):
        load_csv(p, CsvSchema(n_features=2))

    p.write_text("")
    with pytest.raises(ValueError, match="no data rows"):
        load_csv(p, CsvSchema(n_features=2))


def test_load_csv_label_validation(tmp_path):
    p = tmp_path / "lab.csv"
    p.write_text("1,2,0\n3,4,0.5\n")
    with pytest.raises(ValueError, match="line 2: label must be 0 or 1"):
        load_csv(p, CsvSchema(n_features=2))
    # With a header the reported line shifts accordingly.
    p.write_text("a,b,y\n1,2,0\n3,4,2\n")
    with pytest.raises(ValueError, match="line 3: label must be 0 or 1"):
        load_csv(p, CsvSchema(n_features=2, header=True))
    # Regression task accepts any finite response.
    p.write_text("1,2,0.5\n3,4,-7.25\n")
    ds = load_csv(p, CsvSchema(n_features=2), task="regression")
    assert ds.task == "regression"


def test_load_features_csv(tmp_path):
    p = tmp_path / "q.csv"
    p.write_text("0.5,1.5\n2.5,3.5\n")
    x = load_features_csv(p, CsvSchema(n_features=2, has_label=False))
    assert x.shape == (2, 2)
    with pytest.raises(ValueError):
        load_features_csv(p, CsvSchema(n_features=2))  # schema declares label
    with pytest.raises(ValueError):
        load_csv(p, CsvSchema(n_features=2, has_label=False))


def test_semicolon_delimiter(tmp_path):
    p = tmp_path / "semi.csv"
    p.write_text("1;2;1\n3;4;0\n")
    ds = load_csv(p, CsvSchema(n_features=2, delimiter=";"))
    assert ds.n == 2
    with pytest.raises(ValueError):
        CsvSchema(n_features=2, delimiter=";;")
    with pytest.raises(ValueError):
        CsvSchema(n_features=0)


def test_write_csv_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    ds = Dataset(rng.standard_normal((20, 3)), rng.standard_normal(20))
    p = tmp_path / "round.csv"
    write_csv(ds, p)
    back = load_csv(p, CsvSchema(n_features=3), task="regression")
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.responses, ds.responses)
    # Rewriting the re-read data reproduces the file byte for byte.
    p2 = tmp_path / "round2.csv"
    write_csv(back, p2)
    assert p.read_bytes() == p2.read_bytes()


# ---------------------------------------------------------------------------
# split + normalization
# ---------------------------------------------------------------------------


def split_fixture(n=50, d=3, seed=1):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-4, 9, size=(n, d))
    y = (rng.uniform(size=n) < 0.4).astype(float)
    return Dataset(x, y, task="classification")


def test_split_sizes_and_determinism():
    ds = split_fixture()
    train, test, stats = split_normalize(ds, SplitSpec(test_size=12, seed=3))
    assert test.n == 12 and train.n == 38
    train2, test2, stats2 = split_normalize(ds, SplitSpec(test_size=12, seed=3))
    assert np.array_equal(train.features, train2.features)
    assert np.array_equal(stats.test_indices, stats2.test_indices)
    _, _, other = split_normalize(ds, SplitSpec(test_size=12, seed=4))
    assert not np.array_equal(stats.test_indices, other.test_indices)


def test_split_partition_is_disjoint_and_complete():
    ds = split_fixture(n=40)
    train, test, stats = split_normalize(ds, SplitSpec(test_size=10, seed=0, normalize="none"))
    test_set = set(stats.test_indices.tolist())
    assert len(test_set) == 10
    # Unnormalized rows must be recoverable from the original dataset.
    all_rows = {tuple(r) for r in ds.features}
    assert {tuple(r) for r in train.features} <= all_rows
    assert {tuple(r) for r in test.features} <= all_rows
    assert train.n + test.n == ds.n


def test_zscore_uses_train_statistics_only():
    ds = split_fixture(n=60)
    train, test, stats = split_normalize(ds, SplitSpec(test_size=20, seed=5))
    assert stats.applied
    np.testing.assert_allclose(train.features.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(train.features.std(axis=0), 1.0, rtol=1e-12)
    # Test features were transformed with the train mean/sd, not their own.
    raw_test = ds.features[stats.test_indices]
    np.testing.assert_allclose(
        test.features, (raw_test - stats.mean) / stats.sd, rtol=1e-12
    )
    assert not np.allclose(test.features.mean(axis=0), 0.0, atol=1e-6)


def test_constant_columns_flagged_and_passed_through():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((30, 3))
    x[:, 1] = 7.0
    ds = Dataset(x, rng.standard_normal(30))
    train, test, stats = split_normalize(ds, SplitSpec(test_size=8, seed=0))
    assert stats.constant_columns.tolist() == [False, True, False]
    assert np.all(train.features[:, 1] == 7.0)
    assert np.all(test.features[:, 1] == 7.0)


def test_split_validation():
    ds = split_fixture(n=10)
    with pytest.raises(ValueError):
        split_normalize(ds, SplitSpec(test_size=1))
    with pytest.raises(ValueError):
        split_normalize(ds, SplitSpec(test_size=9))
    with pytest.raises(ValueError):
        SplitSpec(test_size=5, normalize="minmax")


# ---------------------------------------------------------------------------
# results serialization
# ---------------------------------------------------------------------------


def result_fixture():
    rows = (
        SweepRow(64, 2, "uniform", 1, "mse", 0.5, 0.1, 0.2),
        SweepRow(64, 1, "uniform", 0, "mse", 0.25, 0.05, 0.125),
        SweepRow(32, 1, "log:2", 0, "mse", 0.125, None, None),
        SweepRow(64, 1, "uniform", 1, "mse", 0.75, 0.3, 0.0625),
        SweepRow(64, 2, "uniform", 0, "mse", 1.5, 0.7, 0.375),
    )
    return SweepResult(
        rows=rows,
        optimal_k={(64, "uniform"): 1, (32, "log:2"): 1},
        optimal_metric={(64, "uniform"): 0.5, (32, "log:2"): 0.125},
    )


def test_write_results_sorted_and_exact(tmp_path):
    p = tmp_path / "res.csv"
    write_results(result_fixture(), p)
    lines = p.read_text().splitlines()
    assert lines[0] == RESULTS_HEADER
    assert lines[1] == "32,1,log:2,0,mse,0.125,,"
    assert lines[2] == "64,1,uniform,0,mse,0.25,0.05,0.125"
    assert lines[3] == "64,1,uniform,1,mse,0.75,0.3,0.0625"
    assert lines[4] == "64,2,uniform,0,mse,1.5,0.7,0.375"
    assert lines[5] == "64,2,uniform,1,mse,0.5,0.1,0.2"
    # Row order in the input never affects the bytes on disk.
    shuffled = SweepResult(
        rows=tuple(reversed(result_fixture().rows)),
        optimal_k=result_fixture().optimal_k,
        optimal_metric=result_fixture().optimal_metric,
    )
    p2 = tmp_path / "res2.csv"
    write_results(shuffled, p2)
    assert p.read_bytes() == p2.read_bytes()


def test_write_summary(tmp_path):
    p = tmp_path / "sum.csv"
    write_summary(result_fixture(), p)
    lines = p.read_text().splitlines()
    assert lines[0] == SUMMARY_HEADER
    assert lines[1] == "32,log:2,1,0.125"
    assert lines[2] == "64,uniform,1,0.5"
