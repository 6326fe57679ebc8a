from pathlib import Path

import numpy as np
import pytest

from oda import data
from oda.exceptions import EmptyDataset, ParseError, TooFewSamples

DATA = Path(__file__).parent / "data"


def test_circles_without_noise_lie_on_rings():
    ds = data.gen_circles(1500, noise=0.0)
    r = np.linalg.norm(ds.points, axis=1)
    np.testing.assert_allclose(r[ds.labels == 0], 1.0)
    np.testing.assert_allclose(r[ds.labels == 1], 0.5)
    assert ds.class_set == [0, 1]


@pytest.mark.parametrize("gen", [data.gen_circles, data.gen_moons, data.gen_blobs])
def test_generators_are_deterministic(gen):
    a, b = gen(rng_seed=7), gen(rng_seed=7)
    np.testing.assert_array_equal(a.points, b.points)
    np.testing.assert_array_equal(a.labels, b.labels)
    assert len(a) == 1500
    assert not np.array_equal(a.points, gen(rng_seed=8).points)


def test_moons_class_balance():
    counts = np.bincount(data.gen_moons(1500, noise=0.1).labels)
    assert abs(counts[0] - counts[1]) <= 1


def test_blobs_single_center_no_spread():
    ds = data.gen_blobs(20, centers=[(1.0, 2.0)], spread=0.0)
    assert np.all(ds.points == [1.0, 2.0])


def test_default_blobs_have_three_classes():
    ds = data.gen_blobs()
    assert ds.class_set == [0, 1, 2] and ds.d == 2


def test_bounding_box_and_delta():
    ds = data.Dataset([[0, 0], [2, 1], [1, 5]])
    np.testing.assert_array_equal(ds.bounding_box, [[0, 2], [0, 5]])
    assert ds.delta_s == 5.0


def test_load_small_csv(tmp_path):
    f = tmp_path / "t.csv"
    f.write_text("a,b,label\n1,2.5,0\n-3,4e1,1\n0.5,0,1\n")
    ds = data.load_csv(f, "last")
    np.testing.assert_array_equal(ds.points, [[1, 2.5], [-3, 40], [0.5, 0]])
    assert ds.labels.tolist() == [0, 1, 1]
    assert ds.meta["header"] == ["a", "b", "label"]


def test_load_csv_without_header_or_labels(tmp_path):
    f = tmp_path / "t.csv"
    f.write_text("1,2\n3,4\n")
    ds = data.load_csv(f)
    assert ds.labels is None and ds.points.shape == (2, 2)


def test_parse_error_names_line_and_column(tmp_path):
    f = tmp_path / "t.csv"
    f.write_text("x,y,c\n1,2,0\n3,oops,1\n")
    with pytest.raises(ParseError) as err:
        data.load_csv(f, "last")
    assert (err.value.line, err.value.column) == (3, 1)


def test_bad_rows_can_be_skipped(tmp_path):
    f = tmp_path / "t.csv"
    f.write_text("1,2,0\n3,?,1\n5,6\n7,8,1\n")
    ds = data.load_csv(f, "last", skip_bad_rows=True)
    assert len(ds) == 2 and ds.meta["rejected"] == 2


def test_empty_and_missing_files(tmp_path):
    f = tmp_path / "t.csv"
    f.write_text("a,b\n")
    with pytest.raises(EmptyDataset):
        data.load_csv(f)
    with pytest.raises(FileNotFoundError):
        data.load_csv(tmp_path / "nope.csv")


def test_wbcd_fixture():
    ds = data.load_csv(DATA / "wbcd.csv", "last")
    assert ds.points.shape == (683, 9)
    assert ds.class_set == [0, 1]


def test_positive_shift():
    ds = data.shift_positive(data.Dataset([[-2.0, 3.0], [1.0, 5.0]]))
    assert ds.points.min() >= 1e-6
    np.testing.assert_allclose(ds.points[:, 1], [3.0, 5.0])
    np.testing.assert_allclose(ds.points[:, 0], [1e-6, 3 + 1e-6])


def test_minmax_scale():
    ds = data.minmax_scale(data.Dataset([[0.0, 5.0], [2.0, 5.0], [1.0, 5.0]]))
    np.testing.assert_allclose(ds.points, [[0, 0], [1, 0], [0.5, 0]])


def test_kfold_ten_points():
    folds = data.kfold(data.Dataset(np.arange(10.0)[:, None]), 5, 0)
    tests = [te for _, te in folds]
    assert all(len(te) == 2 for te in tests)
    assert sorted(np.concatenate(tests).tolist()) == list(range(10))
    for tr, te in folds:
        assert not set(tr) & set(te)


def test_kfold_stratified():
    labels = np.array([0] * 80 + [1] * 20)
    folds = data.kfold(data.Dataset(np.zeros((100, 1)), labels), 5, 3)
    for _, te in folds:
        assert abs(np.sum(labels[te] == 1) - 4) <= 1


def test_kfold_errors():
    with pytest.raises(TooFewSamples):
        data.kfold(data.Dataset(np.zeros((3, 1))), 5)
    with pytest.raises(TooFewSamples):
        data.kfold(data.Dataset(np.zeros((10, 1))), 1)


def test_stream_reproducible():
    ds = data.gen_blobs(50)
    a = [next(s) for s in [data.stream(ds, 4)] for _ in range(100)]
    b = [next(s) for s in [data.stream(ds, 4)] for _ in range(100)]
    assert all(np.array_equal(x, y) and la == lb for (x, la), (y, lb) in zip(a, b))


def test_subsample():
    ds = data.gen_blobs(100)
    sub = data.subsample(ds, 10, 1)
    assert len(sub) == 10
    np.testing.assert_array_equal(sub.points, data.subsample(ds, 10, 1).points)
