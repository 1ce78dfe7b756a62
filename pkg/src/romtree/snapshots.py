"""Snapshot datasets and their on-disk archive format.

An archive is a directory holding ``manifest.json`` plus one binary matrix
file per entry. Matrix files start with the magic ``SNPX``, a ``u32``
version, ``u64`` rows and ``u64`` cols, followed by ``rows * cols``
little-endian float64 values in column-major order.
"""

from __future__ import annotations

import json
import os
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ArchiveIOError, DimensionMismatch, NonFiniteValue, ValidationError

MAGIC = b"SNPX"
MATRIX_VERSION = 1
MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"
_HEADER = struct.Struct("<4sIQQ")


def as_matrix(values, name="matrix") -> np.ndarray:
    """Validated, read-only, column-major float64 copy of ``values``."""
    arr = np.array(values, dtype=np.float64, order="F", copy=True)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1, order="F")
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"{name} contains NaN or Inf")
    arr.flags.writeable = False
    return arr


def as_param(values, name="lambda") -> np.ndarray:
    lam = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    if lam.size < 1:
        raise ValidationError(f"{name} must have at least one coordinate")
    if not np.all(np.isfinite(lam)):
        raise NonFiniteValue(f"{name} contains NaN or Inf")
    lam.flags.writeable = False
    return lam


@dataclass(frozen=True, eq=False)
class SnapshotEntry:
    id: str
    lam: np.ndarray
    snapshots: np.ndarray

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise ValidationError("entry id must be a non-empty string")
        object.__setattr__(self, "lam", as_param(self.lam, f"lambda of {self.id!r}"))
        object.__setattr__(self, "snapshots", as_matrix(self.snapshots, f"snapshots of {self.id!r}"))

    def __eq__(self, other):
        if not isinstance(other, SnapshotEntry):
            return NotImplemented
        return (
            self.id == other.id
            and np.array_equal(self.lam, other.lam)
            and self.snapshots.shape == other.snapshots.shape
            and np.array_equal(self.snapshots, other.snapshots)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SnapshotSet:
    """Collection of snapshot matrices sharing spatial dimension ``n``.

    ``d`` is the parameter dimension. It is inferred from the entries when
    omitted; an empty set may carry any ``d`` (0 when unknown).
    """

    n: int
    entries: tuple = ()
    d: int | None = None

    def __post_init__(self):
        entries = tuple(self.entries)
        if int(self.n) < 1:
            raise ValidationError(f"spatial dimension n must be positive, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        d = self.d
        seen = set()
        for e in entries:
            if not isinstance(e, SnapshotEntry):
                raise ValidationError("entries must be SnapshotEntry instances")
            if e.snapshots.shape[0] != self.n:
                raise DimensionMismatch(
                    f"entry {e.id!r} has {e.snapshots.shape[0]} rows, expected n={self.n}"
                )
            if d is None:
                d = e.lam.size
            elif e.lam.size != d:
                raise DimensionMismatch(f"entry {e.id!r} has d={e.lam.size}, expected d={d}")
            if e.id in seen:
                raise ValidationError(f"duplicate entry id {e.id!r}")
            seen.add(e.id)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "d", 0 if d is None else int(d))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __eq__(self, other):
        if not isinstance(other, SnapshotSet):
            return NotImplemented
        return (
            self.n == other.n
            and self.d == other.d
            and len(self) == len(other)
            and all(a == b for a, b in zip(self.entries, other.entries))
        )

    __hash__ = None

    @property
    def ids(self) -> list[str]:
        return [e.id for e in self.entries]

    def params(self) -> np.ndarray:
        """Parameters stacked as an ``(N, d)`` array."""
        if not self.entries:
            return np.empty((0, self.d))
        return np.vstack([e.lam for e in self.entries])

    def get(self, entry_id: str) -> SnapshotEntry:
        for e in self.entries:
            if e.id == entry_id:
                return e
        raise ValidationError(f"unknown entry id {entry_id!r}")

    def subset(self, ids: Iterable[str]) -> "SnapshotSet":
        by_id = {e.id: e for e in self.entries}
        picked = []
        for i in ids:
            if i not in by_id:
                raise ValidationError(f"unknown entry id {i!r}")
            picked.append(by_id[i])
        return SnapshotSet(self.n, tuple(picked), self.d)

    def with_entry(self, entry: SnapshotEntry) -> "SnapshotSet":
        return SnapshotSet(self.n, self.entries + (entry,), self.d or None)


def split_train_test(snaps: SnapshotSet, train_ids: Sequence[str]) -> tuple[SnapshotSet, SnapshotSet]:
    """Partition ``snaps`` into the entries named by ``train_ids`` and the rest.

    Both halves keep the original entry order.
    """
    wanted = list(train_ids)
    known = set(snaps.ids)
    for i in wanted:
        if i not in known:
            raise ValidationError(f"unknown training id {i!r}")
    chosen = set(wanted)
    train = tuple(e for e in snaps.entries if e.id in chosen)
    test = tuple(e for e in snaps.entries if e.id not in chosen)
    return SnapshotSet(snaps.n, train, snaps.d), SnapshotSet(snaps.n, test, snaps.d)


# --- matrix files -----------------------------------------------------------


def write_matrix(path, matrix) -> None:
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch("only 2-D matrices can be written")
    rows, cols = arr.shape
    payload = np.asarray(arr, dtype="<f8").tobytes(order="F")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, MATRIX_VERSION, rows, cols))
        fh.write(payload)


def read_matrix(path) -> np.ndarray:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ArchiveIOError(f"cannot read matrix file {path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise ArchiveIOError(f"{path}: truncated header")
    magic, version, rows, cols = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ArchiveIOError(f"{path}: bad magic {magic!r}")
    if version != MATRIX_VERSION:
        raise ArchiveIOError(f"{path}: unsupported matrix version {version}")
    expected = rows * cols * 8
    body = raw[_HEADER.size:]
    if len(body) != expected:
        raise ArchiveIOError(f"{path}: expected {expected} data bytes, found {len(body)}")
    data = np.frombuffer(body, dtype="<f8").astype(np.float64)
    return data.reshape((rows, cols), order="F")


# --- archives ---------------------------------------------------------------

_UNSAFE = re.compile(r"[^A-Za-z0-9._-]+")


def _file_name(index: int, entry_id: str) -> str:
    stem = _UNSAFE.sub("_", entry_id)[:48]
    return f"{index:05d}_{stem}.snpx"


def save_archive(snaps: SnapshotSet, path) -> None:
    """Write ``snaps`` to the archive directory ``path``, creating it if needed."""
    root = Path(path)
    try:
        root.mkdir(parents=True, exist_ok=True)
        manifest_entries = []
        for k, e in enumerate(snaps.entries):
            fname = _file_name(k, e.id)
            write_matrix(root / fname, e.snapshots)
            manifest_entries.append({"id": e.id, "lambda": [float(v) for v in e.lam], "file": fname})
        manifest = {"version": MANIFEST_VERSION, "n": snaps.n, "d": snaps.d, "entries": manifest_entries}
        tmp = root / (MANIFEST_NAME + ".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=1)
        os.replace(tmp, root / MANIFEST_NAME)
    except OSError as exc:
        if isinstance(exc, ArchiveIOError):
            raise
        raise ArchiveIOError(f"cannot write archive {root}: {exc}") from exc


def load_archive(path) -> SnapshotSet:
    root = Path(path)
    manifest_path = root / MANIFEST_NAME
    try:
        with open(manifest_path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except FileNotFoundError as exc:
        raise ArchiveIOError(f"missing manifest: {manifest_path}") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise ArchiveIOError(f"unreadable manifest {manifest_path}: {exc}") from exc

    try:
        version = manifest["version"]
        n = int(manifest["n"])
        d = int(manifest["d"])
        raw_entries = manifest["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ArchiveIOError(f"malformed manifest {manifest_path}: {exc}") from exc
    if version != MANIFEST_VERSION:
        raise ArchiveIOError(f"unsupported manifest version {version}")

    entries = []
    for item in raw_entries:
        entry_id = item["id"]
        lam = [float(v) for v in item["lambda"]]
        if len(lam) != d:
            raise DimensionMismatch(f"entry {entry_id!r}: lambda has {len(lam)} values, manifest d={d}")
        matrix = read_matrix(root / item["file"])
        if matrix.shape[0] != n:
            raise DimensionMismatch(
                f"entry {entry_id!r}: matrix file declares {matrix.shape[0]} rows, manifest n={n}"
            )
        entries.append(SnapshotEntry(entry_id, lam, matrix))
    return SnapshotSet(n, tuple(entries), d)


def read_csv_matrix(path) -> np.ndarray:
    """Plain numeric CSV: one row per spatial point, one column per time step."""
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except OSError as exc:
        raise ArchiveIOError(f"cannot read CSV {path}: {exc}") from exc
    except ValueError as exc:
        raise ValidationError(f"{path}: not a numeric CSV ({exc})") from exc
    return as_matrix(data, str(path))
