"""Command-line interface.

Exit codes: 0 success, 2 input error, 3 scoring/cleaning error, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .clean import clean
from .errors import GeodesicPSIMError, InputError
from .evaluation import evaluate_scores, run_benchmark
from .mesh_io import load_mesh, read_manifest, serialize_obj, write_scores
from .scoring import MetricConfig, score_pair

EXIT_OK, EXIT_INPUT, EXIT_SCORING, EXIT_USAGE = 0, 2, 3, 64

log = logging.getLogger("geodesicpsim")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_metric_flags(p):
    g = p.add_argument_group("metric")
    g.add_argument("--keypoints", type=int, default=500, help="number of keypoints (default 500)")
    g.add_argument("--sampler", choices=("rs", "fps"), default="fps")
    g.add_argument("--seed", type=int, default=0, help="seed for random sampling")
    g.add_argument("--tau-scale", type=float, default=0.5e-3,
                   help="crop threshold as a fraction of the reference bounding box")
    g.add_argument("--keypoint-source", choices=("dist", "ref"), default="dist")
    g.add_argument("--color-space", choices=("bt601", "bt709"), default="bt601")
    g.add_argument("--gamma", type=float, nargs=3, default=(6.0, 1.0, 1.0),
                   metavar=("GY", "GU", "GV"))
    g.add_argument("--stability", type=float, default=2.22e-16, dest="T",
                   help="stability constant of the similarity")
    g.add_argument("--crop-formula", choices=("shrink", "printed"), default="shrink",
                   help=argparse.SUPPRESS)
    g.add_argument("--kernel", choices=("gaussian", "printed"), default="gaussian",
                   help=argparse.SUPPRESS)
    g.add_argument("--laplacian", choices=("symmetric", "printed"), default="symmetric",
                   help=argparse.SUPPRESS)
    g.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $GEODESICPSIM_THREADS or 1)")


def _config(args):
    return MetricConfig(
        kn=args.keypoints,
        sampler=args.sampler,
        seed=args.seed,
        tau_scale=args.tau_scale,
        T=args.T,
        gamma=tuple(args.gamma),
        color_space=args.color_space,
        crop_formula=args.crop_formula,
        kernel=args.kernel,
        laplacian=args.laplacian,
        keypoint_source=args.keypoint_source,
    )


def build_parser():
    parser = _Parser(prog="geodesicpsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("score", help="score one distorted mesh against its reference")
    p.add_argument("--ref", required=True, help="reference OBJ")
    p.add_argument("--ref-tex", required=True, help="reference texture (PNG/JPEG)")
    p.add_argument("--dist", required=True, help="distorted OBJ")
    p.add_argument("--dist-tex", required=True, help="distorted texture (PNG/JPEG)")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="JSON on stdout (default)")
    fmt.add_argument("--plain", action="store_true", help="print only q")
    p.add_argument("--dump-features", metavar="PATH", help="write per-keypoint features as JSON")
    _add_metric_flags(p)

    p = sub.add_parser("clean", help="clean an OBJ mesh")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="write the clean report JSON here (default: stdout)")

    p = sub.add_parser("batch", help="score every row of a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output CSV; a .json twin is written alongside")
    _add_metric_flags(p)

    p = sub.add_parser("eval", help="correlate scores with MOS")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest", help="manifest CSV with a mos column")
    src.add_argument("--scores-only", metavar="CSV", help="precomputed score,mos[,class] CSV")
    p.add_argument("--out", required=True, help="report JSON path; CSV and PNG twins alongside")
    p.add_argument("--no-figure", action="store_true")
    _add_metric_flags(p)

    p = sub.add_parser("fixtures", help="generate the synthetic test corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _threads(args):
    if args.threads is not None:
        return args.threads
    env = os.environ.get("GEODESICPSIM_THREADS")
    return int(env) if env else 1


def cmd_score(args):
    config = _config(args)
    result = score_pair(args.ref, args.ref_tex, args.dist, args.dist_tex, config,
                        threads=_threads(args), keep_features=bool(args.dump_features))
    if args.dump_features:
        Path(args.dump_features).write_text(json.dumps(result.features, indent=1))
    if args.plain:
        print(repr(result.q))
    else:
        print(json.dumps(result.as_dict(), indent=2))
        print(f"Q = {result.q:.4f}", file=sys.stderr)
    return EXIT_OK


def cmd_clean(args):
    mesh = load_mesh(args.inp)
    cleaned, report = clean(mesh)
    Path(args.out).write_text(serialize_obj(cleaned))
    text = json.dumps(report.as_dict(), indent=2)
    if args.report:
        Path(args.report).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _read_manifest_file(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read manifest {path}: {exc.strerror or exc}") from exc
    return read_manifest(text, base_dir=Path(path).parent)


def cmd_batch(args):
    rows = _read_manifest_file(args.manifest)
    config = _config(args)
    out_rows, n_failed = [], 0
    for i, row in enumerate(rows, start=1):
        rec = {"ref_mesh": row.ref_mesh, "ref_tex": row.ref_tex,
               "dist_mesh": row.dist_mesh, "dist_tex": row.dist_tex,
               "mos": row.mos, "class": row.label}
        try:
            rec["score"] = score_pair(row.ref_mesh, row.ref_tex, row.dist_mesh, row.dist_tex,
                                      config, threads=_threads(args)).q
            rec["status"] = "ok"
        except GeodesicPSIMError as exc:
            log.warning("row %d failed: %s", i, exc)
            rec["score"] = None
            rec["status"] = f"failed: {exc}"
            n_failed += 1
        out_rows.append(rec)
    csv_text, json_text = write_scores(out_rows)
    out = Path(args.out)
    out.write_text(csv_text)
    out.with_suffix(".json").write_text(json_text + "\n")
    print(f"scored {len(rows) - n_failed}/{len(rows)} rows -> {out}", file=sys.stderr)
    return EXIT_SCORING if n_failed == len(rows) else EXIT_OK


def _read_scores_file(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    reader = csv.DictReader(io.StringIO(text))
    scores, mos, labels = [], [], []
    for i, rec in enumerate(reader, start=1):
        try:
            scores.append(float(rec["score"]))
            mos.append(float(rec["mos"]))
        except (KeyError, TypeError, ValueError):
            raise InputError(f"{path}: row {i}: needs numeric score and mos") from None
        labels.append((rec.get("class") or "").strip() or None)
    return scores, mos, labels


def cmd_eval(args):
    if args.scores_only:
        scores, mos, labels = _read_scores_file(args.scores_only)
        report = evaluate_scores(scores, mos, labels)
    else:
        rows = _read_manifest_file(args.manifest)
        report = run_benchmark(rows, _config(args), threads=_threads(args))
    out = Path(args.out)
    out.write_text(json.dumps(report.as_dict(), indent=2) + "\n")
    buf = io.StringIO()
    cols = sorted({k for r in report.per_row for k in r},
                  key=lambda k: ("row", "ref_mesh", "dist_mesh", "class", "score", "mos",
                                 "mapped_score").index(k))
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    w.writerows(report.per_row)
    out.with_suffix(".csv").write_text(buf.getvalue())
    if not args.no_figure:
        from .plotting import plot_eval

        plot_eval(report, out.with_suffix(".png"))
    print(f"PLCC {report.plcc:.4f}  SRCC {report.srcc:.4f}  RMSE {report.rmse:.4f}  "
          f"(n={report.n}, failed={len(report.failed)})")
    return EXIT_OK


def cmd_fixtures(args):
    from .fixtures import generate_corpus

    try:
        digests = generate_corpus(args.out, seed=args.seed)
    except OSError as exc:
        raise InputError(f"cannot write fixtures to {args.out}: {exc.strerror or exc}") from exc
    for name in digests:
        print(name)
    return EXIT_OK


COMMANDS = {
    "score": cmd_score,
    "clean": cmd_clean,
    "batch": cmd_batch,
    "eval": cmd_eval,
    "fixtures": cmd_fixtures,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GeodesicPSIMError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCORING


if __name__ == "__main__":
    sys.exit(main())
