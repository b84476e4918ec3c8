import gzip

import numpy as np
import pytest

from l0gm.datasets import (ADULT_PATH, DataError, SyntheticSpec, TabularTask, as_task, load_adult,
                           make_synthetic_graph, make_synthetic_tabular, make_synthetic_text,
                           read_split_file, split_indices)
from l0gm.datasets.tabular import Bucketizer
from l0gm.metrics import auc
from l0gm.numcore import RngStream

HEADER = ("age,workclass,fnlwgt,education,education-num,marital-status,occupation,relationship,race,sex,"
          "capital-gain,capital-loss,hours-per-week,native-country,class")
ROW_A = "39,State-gov,77516,Bachelors,13,Never-married,Adm-clerical,Not-in-family,White,Male,2174,0,40,United-States,<=50K"
ROW_B = "50,?,83311,Bachelors,13,Married-civ-spouse,?,Husband,White,Male,0,0,13,?,>50K."


@pytest.fixture(scope="module")
def adult():
    return load_adult(ADULT_PATH)


def write(tmp_path, *lines, name="adult.csv"):
    p = tmp_path / name
    p.write_text("\n".join(lines) + "\n")
    return p


# ---- Adult ------------------------------------------------------------------

def test_adult_row_count(adult):
    assert len(adult) == 48_842
    assert adult.m == 14
    assert adult.labels.mean() == pytest.approx(0.2393, abs=5e-4)


def test_adult_reload_same_hash(adult):
    assert load_adult(ADULT_PATH).hash == adult.hash


def test_question_mark_maps_to_missing_index(tmp_path):
    ds = load_adult(write(tmp_path, HEADER, ROW_A, ROW_B))
    assert ds.categorical["workclass"].tolist() == [1, 0]
    assert ds.categorical["native-country"].tolist() == [1, 0]
    assert ds.labels.tolist() == [0, 1]


def test_vocabularies_are_bijective(adult):
    for name, vocab in adult.vocabularies.items():
        assert len(set(vocab)) == len(vocab)
        assert "" not in vocab
        idx = adult.categorical[name]
        assert idx.min() >= 0 and idx.max() == len(vocab)
        assert set(np.unique(idx[idx > 0])) == set(range(1, len(vocab) + 1))


def test_columns_matched_by_name_not_position(tmp_path):
    cols = HEADER.split(",")
    order = list(reversed(range(len(cols))))
    lines = [",".join(cols[i].upper().replace("-", "_") for i in order)]
    for row in (ROW_A, ROW_B):
        cells = row.split(",")
        lines.append(",".join(cells[i] for i in order))
    a = load_adult(write(tmp_path, HEADER, ROW_A, ROW_B, name="a.csv"))
    b = load_adult(write(tmp_path, *lines, name="b.csv"))
    for name in a.categorical:
        np.testing.assert_array_equal(a.categorical[name], b.categorical[name])
    for name in a.numeric:
        np.testing.assert_array_equal(a.numeric[name], b.numeric[name])


def test_gzip_and_plain_load_identically(tmp_path):
    plain = write(tmp_path, HEADER, ROW_A, ROW_B)
    gz = tmp_path / "adult.csv.gz"
    gz.write_bytes(gzip.compress(plain.read_bytes()))
    np.testing.assert_array_equal(load_adult(plain).labels, load_adult(gz).labels)


def test_missing_column_named(tmp_path):
    header = HEADER.replace("occupation,", "")
    row = ROW_A.replace("Adm-clerical,", "")
    with pytest.raises(DataError, match="occupation"):
        load_adult(write(tmp_path, header, row))


@pytest.mark.parametrize("bad, where", [
    (ROW_A.replace("77516", "lots"), "row 3"),
    (ROW_A.replace("<=50K", "maybe"), "row 3"),
    (",".join(ROW_A.split(",")[:5]), "row 3"),
])
def test_bad_rows_report_row_number(tmp_path, bad, where):
    with pytest.raises(DataError, match=where):
        load_adult(write(tmp_path, HEADER, ROW_B, bad))


def test_adult_seeded_split(adult):
    ds = adult.with_splits(0)
    sizes = {k: v.size for k, v in ds.splits.items()}
    assert sizes == {"train": 35_165, "val": 3_908, "test": 9_769}
    allidx = np.concatenate(list(ds.splits.values()))
    assert np.unique(allidx).size == len(adult)
    again = adult.with_splits(0)
    for k in ds.splits:
        np.testing.assert_array_equal(ds.splits[k], again.splits[k])


def test_split_file_pins_test_rows(tmp_path):
    p = tmp_path / "split.txt"
    p.write_text("4, 1\n7 9")
    idx = read_split_file(p)
    s = split_indices(12, 0, val_frac=0.25, test_index=idx)
    assert s["test"].tolist() == [1, 4, 7, 9]
    assert s["val"].size == 2 and s["train"].size == 6
    p.write_text("1, two")
    with pytest.raises(DataError):
        read_split_file(p)


def test_bucketizer_train_only_and_round_trip(adult):
    ds = adult.with_splits(0)
    b = ds.fit_bucketizer(16)
    assert all(len(v) <= 15 for v in b.boundaries.values())
    same = Bucketizer.from_dict(b.to_dict())
    np.testing.assert_array_equal(same.transform("age", ds.numeric["age"]), b.transform("age", ds.numeric["age"]))
    assert b.transform("age", np.array([np.nan]))[0] == 0
    codes = b.transform("age", ds.numeric["age"][ds.splits["train"]])
    assert codes.min() >= 1 and codes.max() < b.vocab_size("age")
    task = TabularTask.from_dataset(ds)
    assert task.rows.shape == (48_842, 14)
    assert (task.rows < np.array(task.vocab_sizes)).all()


# ---- synthetic tabular ------------------------------------------------------

def test_synthetic_tabular_deterministic():
    spec = SyntheticSpec(n=500)
    a = make_synthetic_tabular(spec, RngStream(3))
    b = make_synthetic_tabular(spec, RngStream(3))
    assert a.hash == b.hash and a.informative == b.informative
    assert make_synthetic_tabular(spec, RngStream(4)).hash != a.hash


def _naive_bayes_auc(ds):
    """Per-category log-odds fitted on train, summed over fields, scored on test."""
    X = ds.encode()
    tr, te = ds.splits["train"], ds.splits["test"]
    y = ds.labels
    score = np.zeros(te.size)
    for j in range(X.shape[1]):
        pos = np.bincount(X[tr, j], weights=y[tr], minlength=X[:, j].max() + 1) + 1
        tot = np.bincount(X[tr, j], minlength=X[:, j].max() + 1) + 2
        score += np.log(pos / (tot - pos))[X[te, j]]
    return auc(score, y[te])


def test_no_informative_fields_means_chance_auc():
    ds = make_synthetic_tabular(SyntheticSpec(n=10_000, k_true=0), RngStream(0))
    assert abs(_naive_bayes_auc(ds) - 0.5) <= 0.02
    assert ds.informative == []


def test_informative_fields_are_learnable():
    ds = make_synthetic_tabular(SyntheticSpec(n=10_000, k_true=4, noise=0.0), RngStream(0))
    assert _naive_bayes_auc(ds) > 0.9


def test_noiseless_labels_are_a_function_of_informative_fields():
    ds = make_synthetic_tabular(SyntheticSpec(n=5000, k_true=3, noise=0.0, cardinality=3), RngStream(1))
    X = ds.encode()[:, ds.informative]
    seen = {}
    for row, label in zip(map(tuple, X), ds.labels):
        assert seen.setdefault(row, label) == label


def test_synthetic_spec_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(modality="audio")
    with pytest.raises(ValueError):
        make_synthetic_tabular(SyntheticSpec(k_true=30), RngStream(0))


# ---- synthetic graph --------------------------------------------------------

def test_graph_deterministic():
    spec = SyntheticSpec("graph", n=200)
    assert make_synthetic_graph(spec, RngStream(1)).hash == make_synthetic_graph(spec, RngStream(1)).hash


def test_zero_inter_block_probability_disconnects_classes():
    d = make_synthetic_graph(SyntheticSpec("graph", n=300, p_out=0.0, p_in=0.05), RngStream(0))
    e = d.graph.edges
    assert e.shape[0] > 0
    assert (d.labels[e[:, 0]] == d.labels[e[:, 1]]).all()


def test_single_class_graph_rejected():
    with pytest.raises(ValueError, match="two classes"):
        make_synthetic_graph(SyntheticSpec("graph", n=50, n_classes=1), RngStream(0))


def test_graph_masks_match_splits():
    d = make_synthetic_graph(SyntheticSpec("graph", n=100), RngStream(2))
    for name, idx in d.splits.items():
        np.testing.assert_array_equal(np.flatnonzero(d.graph.masks[name]), idx)
    assert as_task(d).meta()["n_classes"] == 3


# ---- synthetic text ---------------------------------------------------------

def _count_score(d):
    s0, s1 = set(d.indicative[0]), set(d.indicative[1])
    return np.array([sum(t in s1 for t in seq) - sum(t in s0 for t in seq) for seq in d.sequences])


def test_text_fully_indicative_is_separable():
    d = make_synthetic_text(SyntheticSpec("text", n=2000, indicative_rate=1.0), RngStream(0))
    s = _count_score(d)
    assert (s[d.labels == 1] >= 0).all() and (s[d.labels == 0] <= 0).all()
    assert auc(s, d.labels) > 0.99


def test_text_half_indicative_is_chance():
    d = make_synthetic_text(SyntheticSpec("text", n=10_000, indicative_rate=0.5), RngStream(0))
    assert abs(auc(_count_score(d), d.labels) - 0.5) <= 0.02


def test_text_deterministic_and_lengths():
    spec = SyntheticSpec("text", n=300, min_len=3, max_len=5)
    a, b = make_synthetic_text(spec, RngStream(9)), make_synthetic_text(spec, RngStream(9))
    assert a.hash == b.hash
    assert {len(s) for s in a.sequences} <= {3, 4, 5}
    with pytest.raises(ValueError):
        make_synthetic_text(SyntheticSpec("text", min_len=0), RngStream(0))
