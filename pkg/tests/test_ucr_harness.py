"""The archive-locating harness used by the desk-scale acceptance runs."""

import numpy as np

from ucr_data import find_ucr_dataset
from shapeclust.data import save_dataset
from shapeclust.synthetic import make_motif_dataset


def make_split_files(tmp_path, name, train_rows, test_rows, flip_label_order=False):
    root = tmp_path / "archive"
    folder = root / name
    folder.mkdir(parents=True)
    ds = make_motif_dataset(train_rows + test_rows, 64, seed=5)
    train = ds.instances[:train_rows]
    test = ds.instances[train_rows:]
    labels = list(ds.labels)

    def write(path, instances, labels):
        with open(path, "w", encoding="utf-8") as fh:
            for inst, lab in zip(instances, labels):
                vals = "\t".join(repr(float(v)) for v in inst.values[0])
                fh.write(f"{lab}\t{vals}\n")

    train_labels = labels[:train_rows]
    test_labels = labels[train_rows:]
    if flip_label_order:
        # test split meets the classes in the opposite order
        test = tuple(reversed(test))
        test_labels = list(reversed(test_labels))
    write(folder / f"{name}_TRAIN.tsv", train, train_labels)
    write(folder / f"{name}_TEST.tsv", test, test_labels)
    return str(root), ds, labels[:train_rows] + test_labels


def test_concatenates_train_and_test(tmp_path, monkeypatch):
    root, ds, merged_labels = make_split_files(tmp_path, "Coffee", 28, 28)
    monkeypatch.setenv("SHAPECLUST_DATA_DIR", root)
    got = find_ucr_dataset("Coffee")
    assert got is not None
    assert got.n_instances == 56
    assert got.class_count == 2
    np.testing.assert_allclose(got.values_array(), ds.values_array(), atol=1e-9)


def test_label_codes_consistent_across_splits(tmp_path, monkeypatch):
    root, ds, merged_labels = make_split_files(
        tmp_path, "Toy", 10, 10, flip_label_order=True
    )
    monkeypatch.setenv("SHAPECLUST_DATA_DIR", root)
    got = find_ucr_dataset("Toy")
    # class identity must survive the split boundary: the same raw label
    # token maps to one code everywhere
    raw = np.array(merged_labels)
    coded = np.array(got.labels)
    for token in np.unique(raw):
        assert len(np.unique(coded[raw == token])) == 1


def test_returns_none_when_absent(tmp_path, monkeypatch):
    monkeypatch.setenv("SHAPECLUST_DATA_DIR", str(tmp_path / "nowhere"))
    assert find_ucr_dataset("Coffee") is None
