import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from romtree.errors import ArchiveIOError, DimensionMismatch, NonFiniteValue, ValidationError
from romtree.snapshots import (
    SnapshotEntry,
    SnapshotSet,
    load_archive,
    read_csv_matrix,
    read_matrix,
    save_archive,
    split_train_test,
    write_matrix,
)


def make_set(rng, count=4, n=5, d=2, cols=3):
    entries = tuple(
        SnapshotEntry(f"e{i}", rng.standard_normal(d), rng.standard_normal((n, cols + i)))
        for i in range(count)
    )
    return SnapshotSet(n, entries)


def test_zero_archive(tmp_path):
    (tmp_path / "m.snpx").write_bytes(struct.pack("<4sIQQ", b"SNPX", 1, 3, 2) + bytes(48))
    manifest = {"version": 1, "n": 3, "d": 1, "entries": [{"id": "z", "lambda": [0.5], "file": "m.snpx"}]}
    (tmp_path / "manifest.json").write_text(json.dumps(manifest))
    snaps = load_archive(tmp_path)
    assert snaps.n == 3 and len(snaps) == 1
    assert snaps.entries[0].lam.tolist() == [0.5]
    assert np.all(snaps.entries[0].snapshots == 0.0)


def test_round_trip(tmp_path, rng):
    snaps = make_set(rng)
    save_archive(snaps, tmp_path / "a")
    back = load_archive(tmp_path / "a")
    assert back == snaps
    for a, b in zip(snaps, back):
        assert a.snapshots.tobytes() == b.snapshots.tobytes()


@settings(max_examples=25, deadline=None)
@given(
    n=st.integers(1, 6),
    count=st.integers(0, 4),
    seed=st.integers(0, 2**32 - 1),
)
def test_round_trip_property(tmp_path_factory, n, count, seed):
    rng = np.random.default_rng(seed)
    entries = tuple(
        SnapshotEntry(f"id-{i}", rng.standard_normal(2) * 1e3, rng.standard_normal((n, 1 + i)) * 10.0 ** rng.integers(-300, 300))
        for i in range(count)
    )
    snaps = SnapshotSet(n, entries, d=2)
    path = tmp_path_factory.mktemp("rt")
    save_archive(snaps, path)
    assert load_archive(path) == snaps


def test_empty_set_manifest(tmp_path):
    save_archive(SnapshotSet(4, (), d=1), tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["entries"] == []
    assert [p.name for p in tmp_path.iterdir()] == ["manifest.json"]


def test_one_entry_one_file(tmp_path, rng):
    save_archive(make_set(rng, count=1), tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    files = sorted(p.name for p in tmp_path.glob("*.snpx"))
    assert files == [manifest["entries"][0]["file"]]


def test_header_layout(tmp_path):
    m = np.arange(6.0).reshape(2, 3)
    write_matrix(tmp_path / "x.snpx", m)
    raw = (tmp_path / "x.snpx").read_bytes()
    assert raw[:4] == b"SNPX"
    assert struct.unpack_from("<IQQ", raw, 4) == (1, 2, 3)
    # column-major payload
    assert np.frombuffer(raw[24:], "<f8").tolist() == [0.0, 3.0, 1.0, 4.0, 2.0, 5.0]
    assert np.array_equal(read_matrix(tmp_path / "x.snpx"), m)


def test_dimension_mismatch(tmp_path):
    write_matrix(tmp_path / "m.snpx", np.ones((4, 2)))
    manifest = {"version": 1, "n": 3, "d": 1, "entries": [{"id": "a", "lambda": [1.0], "file": "m.snpx"}]}
    (tmp_path / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(DimensionMismatch):
        load_archive(tmp_path)


def test_missing_manifest(tmp_path):
    with pytest.raises(ArchiveIOError):
        load_archive(tmp_path)


def test_non_finite_rejected(tmp_path):
    write_matrix(tmp_path / "m.snpx", np.array([[1.0, np.nan]]))
    manifest = {"version": 1, "n": 1, "d": 1, "entries": [{"id": "a", "lambda": [1.0], "file": "m.snpx"}]}
    (tmp_path / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(NonFiniteValue):
        load_archive(tmp_path)
    with pytest.raises(NonFiniteValue):
        SnapshotEntry("b", [np.inf], np.ones((1, 1)))


def test_duplicate_id(tmp_path):
    write_matrix(tmp_path / "m.snpx", np.ones((1, 1)))
    item = {"id": "a", "lambda": [1.0], "file": "m.snpx"}
    (tmp_path / "manifest.json").write_text(json.dumps({"version": 1, "n": 1, "d": 1, "entries": [item, item]}))
    with pytest.raises(ValidationError, match="duplicate"):
        load_archive(tmp_path)


def test_truncated_matrix(tmp_path):
    write_matrix(tmp_path / "m.snpx", np.ones((3, 3)))
    raw = (tmp_path / "m.snpx").read_bytes()
    (tmp_path / "m.snpx").write_bytes(raw[:-8])
    with pytest.raises(ArchiveIOError):
        read_matrix(tmp_path / "m.snpx")


def test_mixed_parameter_dimension(rng):
    with pytest.raises(DimensionMismatch):
        SnapshotSet(2, (SnapshotEntry("a", [1.0], np.ones((2, 1))), SnapshotEntry("b", [1.0, 2.0], np.ones((2, 1)))))


def test_entries_are_read_only(rng):
    e = SnapshotEntry("a", [1.0], rng.standard_normal((3, 2)))
    with pytest.raises(ValueError):
        e.snapshots[0, 0] = 1.0
    assert e.snapshots.flags.f_contiguous


def test_split_heat_ids(heat_set, heat_train_ids):
    train, test = split_train_test(heat_set, heat_train_ids)
    assert len(heat_set) == 100 and len(train) == 21 and len(test) == 79
    assert set(train.ids) | set(test.ids) == set(heat_set.ids)
    assert not set(train.ids) & set(test.ids)
    assert train.n == test.n == heat_set.n and train.d == test.d == 1


def test_split_all_and_unknown(rng):
    snaps = make_set(rng)
    train, test = split_train_test(snaps, snaps.ids)
    assert len(test) == 0 and len(train) == len(snaps)
    with pytest.raises(ValidationError):
        split_train_test(snaps, ["zzz"])


def test_csv_import(tmp_path):
    (tmp_path / "d.csv").write_text("1,2,3\n4,5,6\n")
    m = read_csv_matrix(tmp_path / "d.csv")
    assert m.shape == (2, 3) and m[1, 2] == 6.0
