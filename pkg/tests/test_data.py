import math

import numpy as np
import pytest

from squentropy_lab.data import (
    DataError,
    Dataset,
    generate_spiral,
    load_csv,
    one_hot,
    save_csv,
    split,
    standardize,
)


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_one_hot():
    assert one_hot(1, 3).tolist() == [0.0, 1.0, 0.0]
    assert one_hot(0, 1).tolist() == [1.0]
    with pytest.raises(ValueError):
        one_hot(3, 3)


def test_spiral_counts_and_balance():
    tr, te = generate_spiral(100, 40, 0.05, 2.0, seed=3)
    assert (tr.n, te.n, tr.d) == (100, 40, 2)
    assert np.bincount(tr.labels).tolist() == [50, 50]
    assert np.bincount(te.labels).tolist() == [20, 20]


def test_spiral_noise_free_geometry():
    tr, _ = generate_spiral(200, 2, 0.0, 2.0, seed=1)
    r = np.hypot(tr.features[:, 0], tr.features[:, 1])
    assert np.all(r <= 1.0 + 1e-12)
    # paired samples mirror each other through the origin
    assert np.allclose(tr.features[0::2], -tr.features[1::2], atol=1e-12)
    # radius grows linearly with the angle along each arm
    theta = np.arctan2(tr.features[0::2, 1], tr.features[0::2, 0])
    assert np.allclose(np.cos(theta), tr.features[0::2, 0] / np.maximum(r[0::2], 1e-300), atol=1e-9)


def test_spiral_inner_radius():
    tr, _ = generate_spiral(200, 2, 0.0, 2.0, seed=1, inner_radius=0.1)
    r = np.hypot(*tr.features.T)
    assert r.min() >= 0.1 - 1e-12 and r.max() <= 1.0


def test_spiral_deterministic_and_seed_sensitive():
    a = generate_spiral(20, 10, 0.05, 2.0, seed=7)
    b = generate_spiral(20, 10, 0.05, 2.0, seed=7)
    c = generate_spiral(20, 10, 0.05, 2.0, seed=8)
    assert np.array_equal(a[0].features, b[0].features)
    assert not np.array_equal(a[0].features, c[0].features)
    assert not np.array_equal(a[0].features[:10], a[1].features)


@pytest.mark.parametrize("kwargs", [dict(n_train=3), dict(n_test=0), dict(noise_sigma=-1), dict(rotations=0)])
def test_spiral_rejects_bad_arguments(kwargs):
    with pytest.raises(ValueError):
        generate_spiral(**{"n_train": 4, "n_test": 4, **kwargs})


def test_csv_integer_labels_numeric_order(tmp_path):
    p = write(tmp_path, "a,b,label\n1,2,10\n3,4,2\n5,6,2\n")
    ds = load_csv(p)
    assert ds.class_names == ("2", "10")
    assert ds.labels.tolist() == [1, 0, 0]
    assert ds.features.tolist() == [[1, 2], [3, 4], [5, 6]]


def test_csv_string_labels_sorted(tmp_path):
    p = write(tmp_path, "cat,1.5,2\ndog,0,1\nant,3,3\n")
    ds = load_csv(p, label_column=0)
    assert ds.class_names == ("ant", "cat", "dog")
    assert ds.labels.tolist() == [1, 2, 0]
    assert ds.features.tolist() == [[1.5, 2.0], [0.0, 1.0], [3.0, 3.0]]


def test_csv_reuse_mapping(tmp_path):
    p = write(tmp_path, "1,b\n2,b\n")
    ds = load_csv(p, classes=("a", "b"))
    assert ds.class_count == 2 and ds.labels.tolist() == [1, 1]
    with pytest.raises(DataError, match="line 1"):
        load_csv(write(tmp_path, "1,z\n", "e.csv"), classes=("a", "b"))


@pytest.mark.parametrize(
    "text,match",
    [
        ("", "empty"),
        ("x,label\n1,0\n2\n", "line 3"),
        ("x,label\n1,0\nfoo,1\n", "line 3"),
        ("1,0\nnan,1\n", "non-finite"),
        ("1,0\n2,0\n", "one class"),
        ("x,label\n", "no data"),
    ],
)
def test_csv_errors_name_the_problem(tmp_path, text, match):
    with pytest.raises(DataError, match=match):
        load_csv(write(tmp_path, text))


def test_csv_missing_file(tmp_path):
    with pytest.raises(DataError, match="cannot read"):
        load_csv(tmp_path / "missing.csv")


def test_csv_round_trip(tmp_path):
    tr, _ = generate_spiral(10, 2, 0.05, 2.0, seed=0)
    save_csv(tr, tmp_path / "s.csv", header=["x", "y", "label"])
    back = load_csv(tmp_path / "s.csv")
    assert np.array_equal(back.features, tr.features)
    assert np.array_equal(back.labels, tr.labels)


def test_standardize_uses_train_statistics():
    tr = Dataset(np.array([[0.0, 5.0], [2.0, 5.0]]), np.array([0, 1]), 2)
    te = Dataset(np.array([[4.0, 9.0]]), np.array([0]), 2)
    tr2, te2, st = standardize(tr, te)
    assert tr2.features.tolist() == [[-1.0, 0.0], [1.0, 0.0]]
    assert te2.features.tolist() == [[3.0, 0.0]]
    assert st.std.tolist() == [1.0, 0.0]


def test_split_stratified_and_deterministic():
    feats = np.arange(40, dtype=float).reshape(20, 2)
    ds = Dataset(feats, np.array([0] * 10 + [1] * 10), 2)
    tr, te = split(ds, 0.2, seed=1)
    assert (tr.n, te.n) == (16, 4)
    assert np.bincount(te.labels).tolist() == [2, 2]
    tr2, te2 = split(ds, 0.2, seed=1)
    assert np.array_equal(te.features, te2.features)
    assert set(map(tuple, tr.features)) | set(map(tuple, te.features)) == set(map(tuple, feats))
    with pytest.raises(ValueError):
        split(ds, 1.0, seed=1)


def test_dataset_validation():
    with pytest.raises(DataError):
        Dataset(np.zeros((2, 1)), np.array([0, 2]), 2)
    with pytest.raises(DataError):
        Dataset(np.array([[math.inf]]), np.array([0]), 2)


def test_spiral_default_noise_radius_bound():
    tr, te = generate_spiral(seed=0)
    assert (tr.n, te.n) == (1000, 500)
    for ds in (tr, te):
        assert np.hypot(*ds.features.T).max() <= 1.0 + 5 * 0.05


def test_noise_free_spiral_defeats_a_linear_classifier():
    from squentropy_lab.trainer import TrainConfig, train

    tr, _ = generate_spiral(400, 2, 0.0, 2.0, seed=0)
    cfg = TrainConfig(loss="cross-entropy", learning_rate=0.1, weight_decay=0.0, epochs=200, batch_size="full",
                      hidden=())
    _, history = train(tr, cfg)
    assert history.accuracy[-1] < 0.7
