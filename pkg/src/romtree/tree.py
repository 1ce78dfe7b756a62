"""Binary regression tree over parameter space with POD bases at the leaves.

Each node is split on the variable/threshold pair that minimises the summed
geodesic distance between every member's own POD basis and the POD basis of
the concatenated snapshots on its side of the split. Leaves store that
"locally-global" basis for their region.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import ArchiveIOError, DimensionMismatch, RankError, ValidationError
from .grassmann import riemannian_distance
from .pod import PodBasis, pod_basis, randomized_svd
from .snapshots import SnapshotSet, read_matrix, write_matrix

# a split must lower the node objective by at least this much
MIN_IMPROVEMENT = 1e-12
TREE_FILE = "tree.json"
TREE_VERSION = 1


def num_threads() -> int:
    """Worker count from ``ROM_NUM_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("ROM_NUM_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"ROM_NUM_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValidationError("ROM_NUM_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


@dataclass(frozen=True)
class TreeConfig:
    """Growth settings.

    ``min_leaf`` bounds the training members of every leaf. ``min_split``
    optionally also requires a node to hold at least that many members
    before a split is attempted (rpart-style ``minsplit``); ``None`` leaves
    only the leaf bound in force.
    """

    rank: int
    min_leaf: int
    use_rsvd: bool = False
    rsvd_oversample: int = 10
    rsvd_seed: int = 0
    min_split: int | None = None

    def __post_init__(self):
        if self.rank < 1:
            raise ValidationError("rank must be >= 1")
        if self.min_leaf < 1:
            raise ValidationError("min_leaf must be >= 1")
        if self.min_split is not None and self.min_split < 2:
            raise ValidationError("min_split must be >= 2")
        if self.rsvd_oversample < 0 or self.rsvd_seed < 0:
            raise ValidationError("rsvd_oversample and rsvd_seed must be non-negative")

    @property
    def rsvd_threshold(self) -> int:
        return 4 * (self.rank + self.rsvd_oversample)


@dataclass(frozen=True)
class SplitCandidate:
    var: int
    value: float
    cost: float


@dataclass(eq=False)
class Leaf:
    region: int
    basis: PodBasis
    member_ids: tuple


@dataclass(eq=False)
class Split:
    var: int
    value: float
    left: "Node"
    right: "Node"


Node = Union[Leaf, Split]


@dataclass(eq=False)
class GrassmannTree:
    root: Node
    rank: int
    n: int
    d: int

    def leaves(self) -> list[Leaf]:
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Leaf):
                out.append(node)
            else:
                stack.extend((node.right, node.left))
        return out

    def splits(self) -> list[Split]:
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Split):
                out.append(node)
                stack.extend((node.right, node.left))
        return out

    @property
    def depth(self) -> int:
        def walk(node):
            return 0 if isinstance(node, Leaf) else 1 + max(walk(node.left), walk(node.right))

        return walk(self.root)

    def leaf_for(self, target) -> Leaf:
        lam = np.asarray(target, dtype=np.float64).reshape(-1)
        if lam.size != self.d:
            raise DimensionMismatch(f"target has d={lam.size}, tree was trained with d={self.d}")
        node = self.root
        while isinstance(node, Split):
            node = node.left if lam[node.var] <= node.value else node.right
        return node


def leaf_basis(members: Sequence[np.ndarray], cfg: TreeConfig) -> PodBasis:
    """POD basis of the column-wise concatenation of ``members``."""
    if not members:
        raise ValidationError("leaf has no members")
    rows = {m.shape[0] for m in members}
    if len(rows) != 1:
        raise DimensionMismatch("member snapshot matrices differ in row count")
    D = members[0] if len(members) == 1 else np.hstack(members)
    if cfg.rank > min(D.shape):
        raise RankError(f"rank {cfg.rank} infeasible for concatenated {D.shape[0]} x {D.shape[1]} data")
    if cfg.use_rsvd and D.shape[1] > cfg.rsvd_threshold:
        svd = randomized_svd(D, cfg.rank, cfg.rsvd_oversample, cfg.rsvd_seed)
        return PodBasis(svd.U)
    return pod_basis(D, cfg.rank)


@dataclass(frozen=True, eq=False)
class _Member:
    id: str
    lam: np.ndarray
    D: np.ndarray
    basis: PodBasis


def _canonical(members):
    # order-independent concatenation: sort by parameter, then id
    return sorted(members, key=lambda m: (tuple(m.lam), m.id))


def _side_cost(side, cfg):
    hat = leaf_basis([m.D for m in side], cfg)
    return float(sum(riemannian_distance(m.basis, hat) for m in side))


def node_cost(members, cfg: TreeConfig) -> float:
    """Unsplit objective: summed distance to the node's own locally-global basis."""
    return _side_cost(_canonical(_wrap(members)), cfg)


def _wrap(members):
    out = []
    for k, m in enumerate(members):
        if isinstance(m, _Member):
            out.append(m)
            continue
        lam, D, basis = m
        out.append(_Member(str(k), np.asarray(lam, dtype=np.float64).reshape(-1), D,
                           basis if isinstance(basis, PodBasis) else PodBasis(basis)))
    return out


def _candidates(members, min_leaf):
    d = members[0].lam.size
    for j in range(d):
        values = np.unique([m.lam[j] for m in members])
        for lo, hi in zip(values[:-1], values[1:]):
            split = 0.5 * (lo + hi)
            if not lo < split <= hi:  # adjacent floats: fall back to the lower value
                split = lo
            n_left = sum(1 for m in members if m.lam[j] <= split)
            if n_left >= min_leaf and len(members) - n_left >= min_leaf:
                yield j, float(split)


def best_split(members, cfg: TreeConfig, workers: int | None = None) -> SplitCandidate | None:
    """Exhaustive search for the best (variable, threshold) split of a node.

    ``members`` holds ``(lambda, snapshots, own_basis)`` triples. Returns
    ``None`` when no split keeps ``min_leaf`` members on both sides or when
    the best split does not lower the unsplit objective.
    """
    members = _canonical(_wrap(members))
    if len(members) < 2 * cfg.min_leaf:
        return None
    if cfg.min_split is not None and len(members) < cfg.min_split:
        return None
    cands = list(_candidates(members, cfg.min_leaf))
    if not cands:
        return None

    def evaluate(jl):
        j, l = jl
        left = [m for m in members if m.lam[j] <= l]
        right = [m for m in members if m.lam[j] > l]
        return _side_cost(left, cfg) + _side_cost(right, cfg)

    workers = num_threads() if workers is None else workers
    if workers > 1 and len(cands) > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(cands))) as pool:
            costs = list(pool.map(evaluate, cands))
    else:
        costs = [evaluate(c) for c in cands]

    # candidates are generated in (j, l) ascending order, so the first minimum wins ties
    best = None
    for (j, l), cost in zip(cands, costs):
        if best is None or cost < best.cost:
            best = SplitCandidate(j, l, cost)
    if best.cost > _side_cost(members, cfg) - MIN_IMPROVEMENT:
        return None
    return best


def fit(train: SnapshotSet, cfg: TreeConfig, workers: int | None = None) -> GrassmannTree:
    """Grow a tree greedily, depth first, until no node can be split."""
    if len(train) == 0:
        raise ValidationError("cannot fit a tree on an empty training set")
    for e in train:
        if cfg.rank > min(e.snapshots.shape):
            raise RankError(
                f"rank {cfg.rank} infeasible for entry {e.id!r} of shape {e.snapshots.shape}"
            )
    members = [_Member(e.id, e.lam, e.snapshots, pod_basis(e.snapshots, cfg.rank)) for e in train]
    counter = iter(range(len(members)))

    def grow(group):
        split = best_split(group, cfg, workers)
        if split is None:
            group = _canonical(group)
            basis = leaf_basis([m.D for m in group], cfg)
            return Leaf(next(counter), basis, tuple(m.id for m in group))
        left = [m for m in group if m.lam[split.var] <= split.value]
        right = [m for m in group if m.lam[split.var] > split.value]
        return Split(split.var, split.value, grow(left), grow(right))

    return GrassmannTree(grow(members), cfg.rank, train.n, train.d)


def predict(tree: GrassmannTree, target) -> PodBasis:
    """Basis of the leaf whose region contains ``target`` (left iff lambda_j <= l)."""
    return tree.leaf_for(target).basis


# --- persistence --------------------------------------------------------------


def save_tree(tree: GrassmannTree, path) -> None:
    """Write ``tree.json`` plus one SNPX file per leaf into directory ``path``."""
    if not str(path):
        raise ArchiveIOError("empty tree path")
    root = Path(path)
    nodes = []

    def emit(node):
        idx = len(nodes)
        nodes.append(None)
        if isinstance(node, Leaf):
            fname = f"leaf_{node.region:04d}.snpx"
            write_matrix(root / fname, node.basis.phi)
            nodes[idx] = {"kind": "leaf", "region": node.region, "file": fname,
                          "members": list(node.member_ids)}
        else:
            left = emit(node.left)
            right = emit(node.right)
            nodes[idx] = {"kind": "split", "var": node.var, "value": node.value,
                          "left": left, "right": right}
        return idx

    try:
        root.mkdir(parents=True, exist_ok=True)
        emit(tree.root)
        doc = {"version": TREE_VERSION, "rank": tree.rank, "n": tree.n, "d": tree.d,
               "root": 0, "nodes": nodes}
        with open(root / TREE_FILE, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
    except OSError as exc:
        raise ArchiveIOError(f"cannot write tree to {root}: {exc}") from exc


def load_tree(path) -> GrassmannTree:
    if not str(path):
        raise ArchiveIOError("empty tree path")
    root = Path(path)
    try:
        with open(root / TREE_FILE, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ArchiveIOError(f"cannot read tree file in {root}: {exc}") from exc
    try:
        if doc["version"] != TREE_VERSION:
            raise ArchiveIOError(f"unsupported tree version {doc['version']}")
        nodes = doc["nodes"]
        rank, n, d = int(doc["rank"]), int(doc["n"]), int(doc["d"])

        def build(idx, depth=0):
            if depth > len(nodes):
                raise ArchiveIOError("cycle in tree skeleton")
            item = nodes[idx]
            if item["kind"] == "leaf":
                phi = read_matrix(root / item["file"])
                if phi.shape != (n, rank):
                    raise ArchiveIOError(f"leaf matrix {item['file']} has shape {phi.shape}")
                return Leaf(int(item["region"]), PodBasis(phi), tuple(item["members"]))
            if item["kind"] == "split":
                return Split(int(item["var"]), float(item["value"]),
                             build(item["left"], depth + 1), build(item["right"], depth + 1))
            raise ArchiveIOError(f"unknown node kind {item['kind']!r}")

        return GrassmannTree(build(int(doc["root"])), rank, n, d)
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise ArchiveIOError(f"corrupt tree file in {root}: {exc}") from exc
