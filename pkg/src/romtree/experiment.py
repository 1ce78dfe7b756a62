"""Method comparison and diagnostics on snapshot archives.

Three ways of predicting a POD basis for an unseen parameter are compared by
projection error on the test snapshots:

* ``tree``   -- :func:`romtree.tree.fit` / :func:`romtree.tree.predict`
* ``global`` -- one basis from all training snapshots concatenated
* ``interp`` -- tangent-space interpolation at one or every training point
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ArchiveIOError, LogMapUndefined, RankError, UndefinedCorrelation, ValidationError
from .grassmann import EQUAL_TOL, TangentInterpolator, riemannian_distance
from .pod import pod_basis, reconstruction_error
from .snapshots import SnapshotSet, load_archive, split_train_test
from .tree import GrassmannTree, Leaf, TreeConfig, fit

METHODS = ("tree", "global", "interp")
CSV_COLUMNS = ("id", "lambda", "method", "reference", "error", "stable")


@dataclass
class ExperimentConfig:
    archive: str | None
    rank: int
    min_leaf: int
    methods: tuple = METHODS
    train_ids: tuple | None = None
    train_frac: float | None = None
    seed: int = 0
    interp_ref: str = "all"
    out: str | None = None
    use_rsvd: bool = False
    oversample: int = 10
    min_split: int | None = None
    correlation: bool = True

    def __post_init__(self):
        self.methods = tuple(self.methods)
        if not self.methods:
            raise ValidationError("at least one method is required")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValidationError(f"unknown methods: {sorted(unknown)}")
        if (self.train_ids is None) == (self.train_frac is None):
            raise ValidationError("give exactly one of train_ids or train_frac")
        if self.train_frac is not None and not 0.0 < self.train_frac < 1.0:
            raise ValidationError("train_frac must lie in (0, 1)")

    def tree_config(self) -> TreeConfig:
        return TreeConfig(self.rank, self.min_leaf, self.use_rsvd, self.oversample, self.seed, self.min_split)


@dataclass
class ExperimentReport:
    config: dict
    rows: list = field(default_factory=list)
    per_test: list = field(default_factory=list)
    wins: dict = field(default_factory=dict)
    tree: dict | None = None
    failed_references: list = field(default_factory=list)
    correlation: float | None = None

    def errors(self, method: str) -> dict:
        """``{test id: error}`` for ``tree`` or ``global``."""
        return {r["id"]: r["error"] for r in self.rows if r["method"] == method}

    def to_dict(self) -> dict:
        return asdict(self)


def choose_train_ids(snaps: SnapshotSet, frac: float, seed: int) -> list[str]:
    """Seeded random subset, returned in archive order."""
    n = len(snaps)
    k = min(max(1, int(round(frac * n))), n - 1) if n > 1 else n
    rng = np.random.default_rng(seed)
    picked = set(rng.choice(n, size=k, replace=False).tolist())
    return [e.id for i, e in enumerate(snaps.entries) if i in picked]


def entry_bases(snaps: SnapshotSet, r: int) -> list:
    return [pod_basis(e.snapshots, r) for e in snaps]


def _tree_summary(tree: GrassmannTree) -> dict:
    def walk(node):
        if isinstance(node, Leaf):
            return {"region": node.region, "members": list(node.member_ids)}
        return {"var": node.var, "value": node.value, "left": walk(node.left), "right": walk(node.right)}

    return {"depth": tree.depth, "n_leaves": len(tree.leaves()), "root": walk(tree.root)}


def _pairwise_wins(per_test, a, b):
    counts = {a: 0, b: 0, "tie": 0, "missing": 0}
    for row in per_test:
        ea, eb = row.get(a), row.get(b)
        if ea is None or eb is None:
            counts["missing"] += 1
        elif ea < eb:
            counts[a] += 1
        elif eb < ea:
            counts[b] += 1
        else:
            counts["tie"] += 1
    return counts


def run_compare(cfg: ExperimentConfig, snaps: SnapshotSet | None = None) -> ExperimentReport:
    """Fit every requested method on the training split and score the test split.

    Interpolation results flagged unstable, or whose reference admits no log
    map, are kept in ``rows`` but excluded from the per-test mean/best/worst.
    """
    if snaps is None:
        if cfg.archive is None:
            raise ValidationError("no archive given")
        snaps = load_archive(cfg.archive)
    train_ids = list(cfg.train_ids) if cfg.train_ids is not None else choose_train_ids(
        snaps, cfg.train_frac, cfg.seed
    )
    train, test = split_train_test(snaps, train_ids)
    if len(test) == 0:
        raise ValidationError("test set is empty")
    if len(train) == 0:
        raise ValidationError("training set is empty")
    for e in train:
        if cfg.rank > min(e.snapshots.shape):
            raise RankError(f"rank {cfg.rank} infeasible for entry {e.id!r} of shape {e.snapshots.shape}")

    report = ExperimentReport(config=_config_dict(cfg, train.ids))
    rows = report.rows
    per_test = {e.id: {"id": e.id, "lambda": [float(v) for v in e.lam]} for e in test}

    def add(entry, method, reference, error, stable):
        rows.append({
            "id": entry.id,
            "lambda": [float(v) for v in entry.lam],
            "method": method,
            "reference": reference,
            "error": error,
            "stable": stable,
        })

    if "tree" in cfg.methods:
        tree = fit(train, cfg.tree_config())
        report.tree = _tree_summary(tree)
        for e in test:
            err = reconstruction_error(e.snapshots, tree.leaf_for(e.lam).basis)
            add(e, "tree", "", err, True)
            per_test[e.id]["tree"] = err

    if "global" in cfg.methods:
        global_basis = pod_basis(np.hstack([e.snapshots for e in train]), cfg.rank)
        for e in test:
            err = reconstruction_error(e.snapshots, global_basis)
            add(e, "global", "", err, True)
            per_test[e.id]["global"] = err

    all_bases = None
    if "interp" in cfg.methods:
        if len(train) < 2:
            raise ValidationError("interpolation needs at least 2 training entries")
        bases = entry_bases(train, cfg.rank)
        params = train.params()
        if cfg.interp_ref == "all":
            refs = list(range(len(train)))
        else:
            if cfg.interp_ref not in train.ids:
                raise ValidationError(f"interpolation reference {cfg.interp_ref!r} is not a training id")
            refs = [train.ids.index(cfg.interp_ref)]
        stable_errs = {e.id: [] for e in test}
        unstable_refs = {e.id: [] for e in test}
        for k in refs:
            ref_id = train.ids[k]
            try:
                interp = TangentInterpolator(params, bases, k, train.ids)
            except LogMapUndefined as exc:
                report.failed_references.append({"reference": ref_id, "reason": str(exc)})
                for e in test:
                    add(e, "interp", ref_id, None, False)
                    unstable_refs[e.id].append(ref_id)
                continue
            for e in test:
                basis, stab = interp(e.lam)
                err = reconstruction_error(e.snapshots, basis)
                add(e, "interp", ref_id, err, stab.stable)
                if stab.stable:
                    stable_errs[e.id].append(err)
                else:
                    unstable_refs[e.id].append(ref_id)
        for e in test:
            errs = stable_errs[e.id]
            row = per_test[e.id]
            row["interp_mean"] = float(np.mean(errs)) if errs else None
            row["interp_best"] = float(min(errs)) if errs else None
            row["interp_worst"] = float(max(errs)) if errs else None
            row["interp_unstable_refs"] = unstable_refs[e.id]
        if cfg.correlation:
            all_bases = dict(zip(train.ids, bases))

    report.per_test = [per_test[e.id] for e in test]
    present = [m for m in ("tree", "global") if m in cfg.methods]
    if "interp" in cfg.methods:
        present += ["interp_best", "interp_mean"]
    for i, a in enumerate(present):
        for b in present[i + 1:]:
            if a.startswith("interp") and b.startswith("interp"):
                continue
            report.wins[f"{a}_vs_{b}"] = _pairwise_wins(report.per_test, a, b)

    if cfg.correlation and len(snaps) >= 3:
        try:
            report.correlation = correlation_diagnostic(snaps, cfg.rank, known_bases=all_bases)[0]
        except UndefinedCorrelation:
            report.correlation = None

    if cfg.out:
        write_report(report, cfg.out)
    return report


def _config_dict(cfg: ExperimentConfig, train_ids) -> dict:
    out = asdict(cfg)
    out["methods"] = list(cfg.methods)
    out["train_ids"] = list(train_ids)
    out.pop("out", None)
    return out


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_report(report: ExperimentReport, out) -> None:
    """Write ``report.json`` and ``errors.csv`` into directory ``out``."""
    root = Path(out)
    try:
        root.mkdir(parents=True, exist_ok=True)
        with open(root / "report.json", "w", encoding="utf-8") as fh:
            json.dump(_json_safe(report.to_dict()), fh, indent=1, allow_nan=False)
        with open(root / "errors.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for r in report.rows:
                writer.writerow([
                    r["id"],
                    " ".join(repr(v) for v in r["lambda"]),
                    r["method"],
                    r["reference"],
                    "" if r["error"] is None else repr(r["error"]),
                    int(r["stable"]),
                ])
    except OSError as exc:
        raise ArchiveIOError(f"cannot write report to {root}: {exc}") from exc


# --- Euclidean vs Riemannian distance diagnostic --------------------------------


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size or x.size < 2:
        raise ValidationError("pearson needs two samples of equal length >= 2")
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        raise UndefinedCorrelation("correlation undefined: one distance set has zero variance")
    dx, dy = x - x.mean(), y - y.mean()
    r = float(np.dot(dx, dy) / np.sqrt(np.dot(dx, dx) * np.dot(dy, dy)))
    return max(-1.0, min(1.0, r))


def pairwise_distances(snaps: SnapshotSet, r: int, known_bases: dict | None = None):
    """``(pairs, euclidean, riemannian)`` over all unordered entry pairs.

    Riemannian distances below the subspace-equality tolerance are reported
    as exactly zero.
    """
    known_bases = known_bases or {}
    bases = [known_bases[e.id] if e.id in known_bases else pod_basis(e.snapshots, r) for e in snaps]
    lam = snaps.params()
    pairs, eu, ri = [], [], []
    for i in range(len(snaps)):
        for j in range(i + 1, len(snaps)):
            pairs.append((snaps.entries[i].id, snaps.entries[j].id))
            eu.append(float(np.linalg.norm(lam[i] - lam[j])))
            dist = riemannian_distance(bases[i], bases[j])
            ri.append(0.0 if dist < EQUAL_TOL else dist)
    return pairs, np.array(eu), np.array(ri)


def correlation_diagnostic(snaps: SnapshotSet, r: int, csv_path=None, known_bases: dict | None = None):
    """Pearson correlation between parameter distances and subspace distances.

    Returns ``(correlation, pairs, euclidean, riemannian)``; when ``csv_path``
    is given the scatter pairs are also written there.
    """
    if len(snaps) < 3:
        raise ValidationError("correlation diagnostic needs at least 3 entries")
    pairs, eu, ri = pairwise_distances(snaps, r, known_bases)
    if csv_path is not None:
        write_scatter(csv_path, pairs, eu, ri)
    return pearson(eu, ri), pairs, eu, ri


def write_scatter(path, pairs: Sequence, eu, ri) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("id_a", "id_b", "euclidean", "riemannian"))
            for (a, b), e, d in zip(pairs, eu, ri):
                w.writerow((a, b, repr(float(e)), repr(float(d))))
    except OSError as exc:
        raise ArchiveIOError(f"cannot write scatter CSV {path}: {exc}") from exc
