"""Command-line entry point: ``romtree <subcommand> ...``.

Exit codes: 0 success, 1 validation/usage error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import generators as gen
from .errors import ArchiveIOError, RomTreeError, ValidationError
from .experiment import ExperimentConfig, choose_train_ids, correlation_diagnostic, run_compare
from .snapshots import SnapshotEntry, SnapshotSet, load_archive, read_csv_matrix, save_archive, write_matrix
from .tree import TreeConfig, fit, load_tree, num_threads, save_tree

log = logging.getLogger("romtree")

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(" ", ",").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _read_ids(arg: str) -> list[str]:
    """``@file`` with whitespace/comma separated ids, or an inline comma list."""
    if arg.startswith("@"):
        path = Path(arg[1:])
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ArchiveIOError(f"cannot read id file {path}: {exc}") from exc
    else:
        text = arg
    ids = [tok for tok in text.replace(",", " ").split() if tok]
    if not ids:
        raise ValidationError("no training ids given")
    return ids


def _add_train_selection(p):
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--train-ids", help="@file of training ids (or an inline comma list)")
    group.add_argument("--train-frac", type=float, help="random training fraction in (0, 1)")
    p.add_argument("--seed", type=int, default=0, help="seed for --train-frac and rSVD")


def _add_tree_options(p):
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--min-leaf", type=int, required=True)
    p.add_argument("--min-split", type=int, default=None,
                   help="minimum node size before a split is attempted")
    p.add_argument("--rsvd", action="store_true", help="use randomized SVD for wide leaf matrices")
    p.add_argument("--oversample", type=int, default=10)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="romtree", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="generate a snapshot archive")
    gsub = g.add_subparsers(dest="problem", required=True, parser_class=_Parser)
    heat = gsub.add_parser("heat", help="1-D heat equation sweep over gamma")
    heat.add_argument("--gammas", required=True, help="a:step:b or comma list")
    heat.add_argument("--out", required=True)
    heat.add_argument("--nx", type=int, default=101)
    heat.add_argument("--nt", type=int, default=501)
    heat.add_argument("--T", type=float, default=5.0)
    heat.add_argument("--bc", choices=("neumann", "dirichlet"), default="neumann")
    sol = gsub.add_parser("soliton", help="two-soliton NLS sweep over alpha")
    sol.add_argument("--alphas", required=True, help="a:step:b or comma list")
    sol.add_argument("--out", required=True)
    sol.add_argument("--nx", type=int, default=512)
    sol.add_argument("--nt", type=int, default=801)
    sol.add_argument("--T", type=float, default=40.0)
    sol.add_argument("--L", type=float, default=80.0)
    sol.add_argument("--substeps", type=int, default=10)

    imp = sub.add_parser("import-csv", help="append a CSV snapshot matrix to an archive")
    imp.add_argument("--from-csv", required=True, dest="csv")
    imp.add_argument("--id", required=True)
    imp.add_argument("--lambda", required=True, dest="lam", type=_floats)
    imp.add_argument("--archive", required=True)

    cmp_ = sub.add_parser("compare", help="compare tree, global POD and interpolation")
    cmp_.add_argument("--archive", required=True)
    _add_train_selection(cmp_)
    _add_tree_options(cmp_)
    cmp_.add_argument("--methods", default="tree,global,interp")
    cmp_.add_argument("--interp-ref", default="all", help="training id or 'all'")
    cmp_.add_argument("--out", required=True)
    cmp_.add_argument("--no-correlation", action="store_true", help="skip the distance diagnostic")

    cor = sub.add_parser("correlate", help="Euclidean vs Riemannian distance correlation")
    cor.add_argument("--archive", required=True)
    cor.add_argument("--rank", type=int, required=True)
    cor.add_argument("--out", default=None, help="scatter CSV (default: <archive>/scatter_r<rank>.csv)")

    tr = sub.add_parser("tree", help="fit or query a tree")
    tsub = tr.add_subparsers(dest="action", required=True, parser_class=_Parser)
    tfit = tsub.add_parser("fit")
    tfit.add_argument("--archive", required=True)
    group = tfit.add_mutually_exclusive_group()
    group.add_argument("--train-ids")
    group.add_argument("--train-frac", type=float)
    tfit.add_argument("--seed", type=int, default=0)
    _add_tree_options(tfit)
    tfit.add_argument("--out", required=True)
    tpred = tsub.add_parser("predict")
    tpred.add_argument("--tree", required=True)
    tpred.add_argument("--lambda", required=True, dest="lam", type=_floats)
    tpred.add_argument("--out", default=None, help="write the predicted basis as an SNPX file")

    info = sub.add_parser("info", help="summarise an archive")
    info.add_argument("--archive", required=True)
    return parser


def _cmd_generate(args):
    workers = num_threads()
    if args.problem == "heat":
        values = gen.parse_range(args.gammas)
        snaps = gen.heat_sweep(values, workers=workers, nx=args.nx, nt=args.nt, T=args.T, bc=args.bc)
    else:
        values = gen.parse_range(args.alphas)
        snaps = gen.soliton_sweep(values, workers=workers, nx=args.nx, nt=args.nt, T=args.T,
                                  L=args.L, x_min=-0.25 * args.L, substeps=args.substeps)
    save_archive(snaps, args.out)
    print(f"wrote {len(snaps)} entries (n={snaps.n}) to {args.out}")


def _cmd_import_csv(args):
    matrix = read_csv_matrix(args.csv)
    entry = SnapshotEntry(args.id, args.lam, matrix)
    path = Path(args.archive)
    if (path / "manifest.json").exists():
        snaps = load_archive(path).with_entry(entry)
    else:
        snaps = SnapshotSet(matrix.shape[0], (entry,))
    save_archive(snaps, path)
    print(f"archive {path} now holds {len(snaps)} entries")


def _cmd_compare(args):
    cfg = ExperimentConfig(
        archive=args.archive,
        rank=args.rank,
        min_leaf=args.min_leaf,
        min_split=args.min_split,
        methods=tuple(m.strip() for m in args.methods.split(",") if m.strip()),
        train_ids=tuple(_read_ids(args.train_ids)) if args.train_ids else None,
        train_frac=args.train_frac,
        seed=args.seed,
        interp_ref=args.interp_ref,
        out=args.out,
        use_rsvd=args.rsvd,
        oversample=args.oversample,
        correlation=not args.no_correlation,
    )
    report = run_compare(cfg)
    print(json.dumps({"wins": report.wins, "correlation": report.correlation,
                      "failed_references": len(report.failed_references)}, indent=1))
    print(f"report written to {args.out}")


def _cmd_correlate(args):
    snaps = load_archive(args.archive)
    out = args.out or str(Path(args.archive) / f"scatter_r{args.rank}.csv")
    corr = correlation_diagnostic(snaps, args.rank, csv_path=out)[0]
    print(f"correlation: {corr!r}")
    print(f"scatter pairs written to {out}")


def _cmd_tree(args):
    if args.action == "predict":
        tree = load_tree(args.tree)
        leaf = tree.leaf_for(args.lam)
        if args.out:
            write_matrix(args.out, leaf.basis.phi)
        print(json.dumps({"region": leaf.region, "members": list(leaf.member_ids)}))
        return
    snaps = load_archive(args.archive)
    if args.train_ids:
        snaps = snaps.subset(_read_ids(args.train_ids))
    elif args.train_frac is not None:
        snaps = snaps.subset(choose_train_ids(snaps, args.train_frac, args.seed))
    cfg = TreeConfig(args.rank, args.min_leaf, args.rsvd, args.oversample, args.seed, args.min_split)
    tree = fit(snaps, cfg)
    save_tree(tree, args.out)
    print(f"tree with {len(tree.leaves())} leaves (depth {tree.depth}) written to {args.out}")


def _cmd_info(args):
    snaps = load_archive(args.archive)
    lam = snaps.params()
    print(f"entries: {len(snaps)}  n: {snaps.n}  d: {snaps.d}")
    if len(snaps):
        cols = sorted({e.snapshots.shape[1] for e in snaps})
        print(f"columns per entry: {cols}")
        for j in range(snaps.d):
            print(f"lambda[{j}]: min {float(lam[:, j].min())!r} max {float(lam[:, j].max())!r}")


COMMANDS = {
    "generate": _cmd_generate,
    "import-csv": _cmd_import_csv,
    "compare": _cmd_compare,
    "correlate": _cmd_correlate,
    "tree": _cmd_tree,
    "info": _cmd_info,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_VALIDATION
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_VALIDATION
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (ArchiveIOError, OSError) as exc:
        print(f"romtree: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValidationError, RomTreeError) as exc:
        print(f"romtree: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
