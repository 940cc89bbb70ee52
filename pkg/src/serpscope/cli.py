"""Command line entry point.

Payloads (JSON or CSV) go to stdout, diagnostics to stderr. Exit status:
0 success, 1 data error, 2 usage error, 3 transport error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import IO, Sequence

from serpscope import __version__
from serpscope.classifier import deserialize_model, paper_model, predict, serialize_model
from serpscope.dataset_io import FeatureCsvRow, load_dataset, write_csv
from serpscope.errors import DataError, TransportError
from serpscope.evaluator import EqualWidthBins, cross_validate, feature_information, summary_stats
from serpscope.features import extract_all
from serpscope.fetch import FetchConfig, Fetcher
from serpscope.serp import DEFAULT_PROFILE, load_profile, load_serp, parse_html, parse_timestamp, serialize_record
from serpscope.trainer import FitConfig, fit

EXIT_OK, EXIT_DATA, EXIT_USAGE, EXIT_TRANSPORT = 0, 1, 2, 3

log = logging.getLogger("serpscope")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False)


def _profile(args):
    return load_profile(args.profile or DEFAULT_PROFILE)


def _timestamp(text: str | None) -> datetime | None:
    if text is None:
        return None
    try:
        return parse_timestamp(text)
    except ValueError as exc:
        raise DataError(f"--retrieved-at: {exc}") from exc


def cmd_parse(args, out: IO[str]) -> int:
    record = parse_html(
        Path(args.html).read_bytes(), _profile(args), query=args.query, retrieved_at=_timestamp(args.retrieved_at)
    )
    out.write(serialize_record(record).decode("utf-8") + "\n")
    return EXIT_OK


def cmd_extract(args, out: IO[str]) -> int:
    record = load_serp(args.serp, _profile(args), query=args.query)
    fv = extract_all(args.query, record)
    row = FeatureCsvRow(args.id or args.query, fv, args.label)
    out.write(write_csv([row], header=not args.no_header).decode("utf-8"))
    return EXIT_OK


def cmd_classify(args, out: IO[str]) -> int:
    model = deserialize_model(Path(args.model).read_bytes()) if args.model else paper_model()
    record = load_serp(args.serp, _profile(args), query=args.query)
    pred = predict(model, extract_all(args.query, record))
    out.write(_dump({"p_q": pred.probability, "g_q": pred.logit, "label": pred.label}) + "\n")
    return EXIT_OK


def _fit_config(args) -> FitConfig:
    return FitConfig(
        method=args.method,
        ridge=args.ridge,
        max_iterations=args.max_iterations,
        convergence_tol=args.tol,
        seed=getattr(args, "seed", 0),
    )


def cmd_train(args, out: IO[str]) -> int:
    data = load_dataset(args.data)
    model, report = fit(data, _fit_config(args))
    Path(args.out).write_bytes(serialize_model(model))
    out.write(_dump(report.to_dict()) + "\n")
    return EXIT_OK


def cmd_evaluate(args, out: IO[str]) -> int:
    data = load_dataset(args.data)
    report = cross_validate(data, args.k, _fit_config(args), seed=args.seed)
    out.write((report.render() if args.table else _dump(report.to_dict())) + "\n")
    return EXIT_OK


def cmd_analyze(args, out: IO[str]) -> int:
    data = load_dataset(args.data)
    payload = {
        "binning": repr(EqualWidthBins(args.bins)),
        "features": feature_information(data, EqualWidthBins(args.bins)),
        "summary": summary_stats(data),
    }
    out.write(_dump(payload) + "\n")
    return EXIT_OK


def cmd_fetch(args, out: IO[str]) -> int:
    config = FetchConfig.load(args.config) if args.config else FetchConfig.from_dict({})
    if args.mode:
        config = FetchConfig(config.endpoint_template, config.min_interval, config.cache_dir, args.mode)
    fetcher = Fetcher(config)
    result = fetcher.fetch(args.query)
    key_paths = fetcher.paths(args.query)
    out.write(
        _dump(
            {
                "query": args.query,
                "from_cache": result.from_cache,
                "retrieved_at": result.retrieved_at.isoformat(),
                "path": str(key_paths[0]),
                "bytes": len(result.raw_html),
            }
        )
        + "\n"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="serpscope", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--version", action="version", version=f"serpscope {__version__} (profile {_profile_version()})"
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log diagnostics to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("parse", help="parse a SERP HTML file into normalized JSON")
    p.add_argument("--html", required=True)
    p.add_argument("--profile", help="selector profile name or JSON file")
    p.add_argument("--query")
    p.add_argument("--retrieved-at", help="RFC 3339 timestamp to record")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("extract", help="compute the feature CSV row for a query")
    p.add_argument("--query", required=True)
    p.add_argument("--serp", required=True, help="normalized .json or raw .html")
    p.add_argument("--profile")
    p.add_argument("--id", help="query_id column (defaults to the query text)")
    p.add_argument("--label", default="unlabeled", choices=["scholar", "non-scholar", "unlabeled"])
    p.add_argument("--no-header", action="store_true")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("classify", help="classify a query from its SERP")
    p.add_argument("--query", required=True)
    p.add_argument("--serp", required=True)
    p.add_argument("--model", help="model JSON (default: built-in reference model)")
    p.add_argument("--profile")
    p.set_defaults(func=cmd_classify)

    def fit_options(p):
        p.add_argument("--ridge", type=float, default=1e-8)
        p.add_argument("--method", choices=["newton-irls", "gradient-ascent"], default="newton-irls")
        p.add_argument("--max-iterations", type=int, default=100)
        p.add_argument("--tol", type=float, default=1e-8)

    p = sub.add_parser("train", help="fit a model on a feature CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    fit_options(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="stratified k-fold cross-validation")
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--table", action="store_true", help="plain-text table instead of JSON")
    fit_options(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="information gain, gain ratio and summary statistics")
    p.add_argument("--data", required=True)
    p.add_argument("--bins", type=int, default=10)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fetch", help="download a SERP into the cache")
    p.add_argument("--query", required=True)
    p.add_argument("--config", help="fetch config JSON")
    p.add_argument("--mode", choices=["offline", "cache-first", "network"])
    p.set_defaults(func=cmd_fetch)
    return parser


def _profile_version() -> str:
    try:
        prof = load_profile(DEFAULT_PROFILE)
    except Exception:  # noqa: BLE001 - version banner must not fail
        return "unavailable"
    return f"{prof.profile_name}@{prof.version}"


def run(argv: Sequence[str] | None = None, stdout: IO[str] | None = None, stderr: IO[str] | None = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    handler = logging.StreamHandler(stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args, stdout)
    except TransportError as exc:
        print(f"serpscope: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_TRANSPORT
    except (DataError, OSError, ValueError) as exc:
        print(f"serpscope: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_DATA
    finally:
        log.removeHandler(handler)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
