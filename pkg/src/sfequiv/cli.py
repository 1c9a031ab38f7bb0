"""Command-line interface.

Subcommands: ``evaluate`` (score synthetic files against an original),
``curve`` (build the sample-fraction reference curve), ``equivalence``
(bracket scores on a curve), ``rumap`` (render the risk-utility map),
``synthesize`` (built-in generators) and ``make-fixture`` (toy population).

Exit codes: 0 success, 2 configuration error, 3 data error, 4 metric failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from .config import EvaluationConfig, load_config
from .data_model import MicroTable, load_csv, write_csv
from .equivalence import (
    equivalence,
    locate_on_curve,
    read_report_csv,
    write_report_csv,
)
from .errors import ConfigError, DataError, MetricError, SfequivError
from .fixture import PopulationSpec, write_fixture
from .pipeline import Evaluator
from .risk import RiskScore
from .rumap import RUPoint, write_rumap
from .sampling import build_curve, read_curve_csv, write_curve_csv
from .synth import load_external_synth, synth_cart, synth_independent
from .utility import UtilityScore, cio_details

logger = logging.getLogger(__name__)

SCORES_HEADER = ("label", "roc_univariate", "roc_bivariate", "cio", "overall_utility",
                 "raw_tcap", "baseline", "marginal_tcap", "matched_fraction")


def write_scores_csv(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCORES_HEADER)
        for row in rows:
            writer.writerow([row["label"]] + [repr(float(row[k])) for k in SCORES_HEADER[1:]])


def read_scores_csv(path) -> list[dict]:
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except FileNotFoundError:
        raise DataError(f"scores file not found: {path}") from None
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(SCORES_HEADER) <= set(reader.fieldnames):
            raise DataError(f"{path}: expected columns {SCORES_HEADER}")
        rows = []
        for raw in reader:
            row = {"label": raw["label"]}
            for k in SCORES_HEADER[1:]:
                try:
                    row[k] = float(raw[k])
                except ValueError:
                    raise DataError(f"{path}: malformed value {raw[k]!r} in {k}") from None
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: no score rows")
    return rows


def _score_row(label: str, u: UtilityScore, r: RiskScore) -> dict:
    return {
        "label": label,
        "roc_univariate": u.roc_univariate, "roc_bivariate": u.roc_bivariate,
        "cio": u.cio, "overall_utility": u.overall,
        "raw_tcap": r.raw_tcap, "baseline": r.baseline,
        "marginal_tcap": r.marginal, "matched_fraction": r.matched_fraction,
    }


def _mean_row(rows: list[dict]) -> dict:
    out = {"label": "mean"}
    for k in SCORES_HEADER[1:]:
        out[k] = float(np.mean([row[k] for row in rows]))
    return out


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    original = load_csv(args.original, cfg.schema)
    evaluator = Evaluator(original, cfg)
    rows = []
    failures = []
    cio_rows = []
    for synth_path in args.synthetic:
        label = Path(synth_path).stem
        try:
            synth = load_external_synth(synth_path, cfg.schema)
            u, r = evaluator.evaluate(synth)
        except SfequivError as e:
            logger.error("%s: %s", synth_path, e)
            failures.append((synth_path, e))
            continue
        rows.append(_score_row(label, u, r))
        if args.cio_report:
            _, details = cio_details(original, synth, cfg.regressions)
            for d in details:
                cio_rows.append({"label": label, **d})
    if failures:
        path, err = failures[0]
        raise type(err)(f"{len(failures)} file(s) failed, first: {path}: {err}")
    rows.append(_mean_row(rows))
    write_scores_csv(rows, args.out)
    if args.cio_report:
        with open(args.cio_report, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            header = ("label", "model", "term", "orig_lower", "orig_upper",
                      "synth_lower", "synth_upper", "overlap", "clamped")
            writer.writerow(header)
            for d in cio_rows:
                writer.writerow([d["label"], d["model"], d["term"]] +
                                [repr(float(d[k])) for k in header[3:]])
    print(f"wrote {args.out} ({len(rows)} rows)")
    return 0


def cmd_curve(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, plan=replace(cfg.plan, base_seed=args.seed))
    original = load_csv(args.original, cfg.schema)
    curve = build_curve(original, cfg.grid, cfg.plan, cfg, jobs=args.jobs)
    write_curve_csv(curve, args.out)
    print(f"wrote {args.out} ({len(curve.points)} points)")
    return 0


def cmd_equivalence(args) -> int:
    curve = read_curve_csv(args.curve)
    score_rows = read_scores_csv(args.scores)
    replicates = [r for r in score_rows if r["label"] != "mean"]
    used = replicates if replicates else score_rows
    mean_u = float(np.mean([r["overall_utility"] for r in used]))
    mean_r = float(np.mean([r["marginal_tcap"] for r in used]))
    result = {
        "label": args.label or f"synthetic (mean of {len(used)})",
        "overall_utility": mean_u,
        "marginal_tcap": mean_r,
        "sample_equiv_utility": locate_on_curve(mean_u, curve, "utility").format(),
        "sample_equiv_risk": locate_on_curve(mean_r, curve, "risk").format(),
    }
    write_report_csv([result], args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_rumap(args) -> int:
    curve = read_curve_csv(args.curve)
    points = []
    if args.scores:
        for row in read_scores_csv(args.scores):
            points.append(RUPoint(row["label"], row["overall_utility"],
                                  row["marginal_tcap"], "synthetic"))
    write_rumap(curve, points, args.out)
    print(f"wrote {args.out}")
    return 0


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def cmd_synthesize(args) -> int:
    cfg = load_config(args.config)
    original = load_csv(args.original, cfg.schema)
    n = args.rows or original.n_rows
    seed = args.seed if args.seed is not None else cfg.plan.base_seed
    if args.method == "cart":
        table = synth_cart(original, n, seed, cfg.cart)
    else:
        table = synth_independent(original, n, seed)
    write_csv(table, args.out)
    prov = {
        "method": args.method,
        "rows": n,
        "seed": seed,
        "original_file": Path(args.original).name,
        "original_sha256": _sha256(args.original),
    }
    if args.method == "cart":
        prov["params"] = {
            "min_leaf": cfg.cart.min_leaf,
            "max_depth": cfg.cart.max_depth,
            "min_split_improvement": cfg.cart.min_split_improvement,
        }
    with open(str(args.out) + ".prov.yaml", "w", encoding="utf-8") as fh:
        yaml.safe_dump(prov, fh, sort_keys=True)
    print(f"wrote {args.out} ({n} rows)")
    return 0


def cmd_make_fixture(args) -> int:
    if args.cardinalities:
        cards = tuple(int(c) for c in args.cardinalities.split(","))
    else:
        pattern = (2, 3, 4, 5, 6, 3, 4, 5)
        cards = tuple(pattern[i % len(pattern)] for i in range(args.cat_vars))
    spec = PopulationSpec(
        rows=args.rows, cardinalities=cards, numeric_vars=args.num_vars,
        classes=args.classes, dependence=args.dependence,
        missing_rate=args.missing_rate)
    csv_path, schema_path = write_fixture(spec, args.seed, args.out)
    print(f"wrote {csv_path} and {schema_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sfequiv",
        description="Risk/utility scoring of synthetic microdata and its "
                    "sample-fraction equivalence.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="score synthetic files against an original")
    p.add_argument("original")
    p.add_argument("synthetic", nargs="+")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--cio-report", help="per-coefficient interval diagnostics CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("curve", help="build the sample-fraction reference curve")
    p.add_argument("original")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="override the configured base seed")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("equivalence", help="bracket synthetic scores on a curve")
    p.add_argument("--curve", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--label")
    p.add_argument("--config", help="unused; accepted for uniform invocation")
    p.set_defaults(func=cmd_equivalence)

    p = sub.add_parser("rumap", help="render the risk-utility map as SVG")
    p.add_argument("--curve", required=True)
    p.add_argument("--scores", help="optional synthetic scores to plot")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rumap)

    p = sub.add_parser("synthesize", help="generate synthetic data with a built-in method")
    p.add_argument("original")
    p.add_argument("--config", required=True)
    p.add_argument("--method", choices=("cart", "independent"), default="cart")
    p.add_argument("--rows", type=int, help="output rows (default: as original)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("make-fixture", help="generate the bundled toy population")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--rows", type=int, default=10_000)
    p.add_argument("--cat-vars", type=int, default=8)
    p.add_argument("--cardinalities", help="comma-separated per-variable cardinalities")
    p.add_argument("--num-vars", type=int, default=2)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--dependence", type=float, default=0.9)
    p.add_argument("--missing-rate", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_make_fixture)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except MetricError as e:
        print(f"metric failure: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
