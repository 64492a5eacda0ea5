"""Command-line entry point: ``wlsubset <subcommand> [options]``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .demo import demo_csv_text
from .errors import WorkloadToolkitError
from .pipeline import AGGREGATE_MODES, PipelineConfig, load_manifest, run_pipeline
from .kmeans import BIC_FORMS, DEFAULT_RESTARTS

EXIT_USAGE = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _pc_pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two PC numbers like 1,2, got {text!r}")
    if a < 1 or b < 1:
        raise argparse.ArgumentTypeError("PC numbers start at 1")
    return a, b


def _add_input_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--events", help="raw events CSV (workload,node,event,count)")
    src.add_argument("--matrix", help="matrix CSV (workload[,stack,...],metric...)")
    p.add_argument("--catalog", help="metric catalog (name,category,unit[,derivation])")
    p.add_argument("--workloads", help="workload metadata CSV for --events input")
    p.add_argument("--aggregate-mode", choices=AGGREGATE_MODES, default="events-first",
                   help="average raw events across nodes before deriving metrics, or after")
    p.add_argument("--out-dir", default="wlsubset-out")


def _add_analysis_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kaiser-threshold", type=float, default=1.0)
    p.add_argument("--kaiser-strict", action="store_true",
                   help="keep eigenvalues > threshold instead of >=")
    p.add_argument("--scatter", type=_pc_pair, action="append", metavar="I,J",
                   help="emit a PC scatter CSV for this 1-based pair (repeatable)")


def _add_kmeans_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k-min", type=int)
    p.add_argument("--k-max", type=int)
    p.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pj-compat", action="store_true",
                   help="count BIC parameters as (K-1) + dK + 1")
    p.add_argument("--bic-form", choices=BIC_FORMS, default="corrected",
                   help="'literal' keeps the -(R_i-K)/2 likelihood term as printed")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wlsubset", description="Workload characterisation and benchmark subsetting.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="build the workloads x metrics matrix")
    _add_input_args(p)

    p = sub.add_parser("pca", help="standardise, PCA, Kaiser selection")
    _add_input_args(p)
    _add_analysis_args(p)

    p = sub.add_parser("hcluster", help="single-linkage dendrogram over retained PCs")
    _add_input_args(p)
    _add_analysis_args(p)

    for name, helptext in (("kmeans", "K-means BIC sweep"),
                           ("subset", "representative workloads"),
                           ("run", "full pipeline")):
        p = sub.add_parser(name, help=helptext)
        _add_input_args(p)
        _add_analysis_args(p)
        _add_kmeans_args(p)
        if name == "run":
            p.add_argument("--manifest", help="re-run with the config recorded in this manifest")

    p = sub.add_parser("demo", help="write the bundled synthetic demo matrix")
    p.add_argument("--out", default="demo_matrix.csv")
    return parser


def _config(args) -> PipelineConfig:
    if getattr(args, "manifest", None):
        return PipelineConfig.from_manifest(load_manifest(args.manifest)["config"], args.out_dir)
    cfg = PipelineConfig(
        events=args.events,
        matrix=args.matrix,
        catalog=args.catalog,
        workloads=args.workloads,
        aggregate_mode=args.aggregate_mode,
        out_dir=args.out_dir,
    )
    for name in ("kaiser_threshold", "kaiser_strict", "scatter", "k_min", "k_max",
                 "restarts", "seed", "pj_compat", "bic_form"):
        if hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    return cfg


def _summary(result) -> str:
    lines = [f"wrote {len(result.artifacts)} artifacts to {result.config.out_dir}"]
    if result.model is not None:
        m = result.model
        lines.append(f"PCA: {m.retained} PCs retained, {100 * m.retained_variance_fraction:.2f}% variance")
    if result.sweep is not None:
        lines.append(f"K-means: best K = {result.sweep.best_k}")
    ids = result.matrix.workload_ids if result.matrix is not None else []
    for r in result.subsets:
        reps = ", ".join(f"{ids[x.workload]} ({x.cluster_size})" for x in r.representatives)
        lines.append(f"{r.strategy}: {reps}; max linkage {r.max_linkage_distance:.2f}")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "demo":
            out = Path(args.out)
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(demo_csv_text(), encoding="utf-8")
            print(f"wrote {out}")
            return 0
        cfg = _config(args)
        stop = "subset" if args.command == "run" else args.command
        result = run_pipeline(cfg, stop_after=stop)
    except WorkloadToolkitError as exc:
        stage = getattr(exc, "stage", None)
        prefix = f"error in stage {stage}: " if stage else "error: "
        cause = getattr(exc, "cause", exc)
        print(prefix + str(cause), file=sys.stderr)
        return exc.exit_code
    print(_summary(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
