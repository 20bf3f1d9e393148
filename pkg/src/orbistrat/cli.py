"""Command line entry point ``orbistrat``.

Exit codes: 0 success, 2 parse error or unknown name, 3 model validation
failure, 4 I/O failure, 5 strategy precondition not met, 10 no strategy applies.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from orbistrat.geodesics import STRATEGY_NAMES, GeodesicError, PreconditionError, Strategy
from orbistrat.groups import GroupError
from orbistrat.models import CATALOG, ModelParseError, catalog_text, load_model
from orbistrat.scenarios import dumps_report, run_geodesic, run_stratify
from orbistrat.strata import StrataError

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_IO = 4
EXIT_PRECONDITION = 5
EXIT_OPEN_CASE = 10


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load(path: str):
    try:
        return load_model(path)
    except FileNotFoundError:
        raise _Fail(EXIT_IO, f"model file not found: {path}") from None
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot read {path}: {exc}") from None
    except ModelParseError as exc:
        raise _Fail(EXIT_PARSE, f"parse error: {exc}") from None
    except (GroupError, StrataError) as exc:
        raise _Fail(EXIT_VALIDATION, f"validation failed: {exc}") from None


def _table(report: dict) -> str:
    lines = [f"{'id':>3} {'k':>2} {'|G_x|':>6} {'closed':>6} {'frontier':>8}  sample"]
    for row in report["stratification"]:
        pt = ", ".join(f"{v:.4f}" for v in row["sample_point"])
        lines.append(
            f"{row['id']:>3} {row['k']:>2} {row['isotropy_order']:>6} {str(row['closed']):>6} "
            f"{row['frontier_count']:>8}  ({pt})"
        )
    return "\n".join(lines)


def cmd_validate(args) -> int:
    model = _load(args.model)
    cert = model.certificate
    print(f"{model.label or args.model}: dimension {model.dimension}, "
          f"{model.group.declared_generators} generators, {cert.count} elements meet the box")
    return EXIT_OK


def cmd_stratify(args) -> int:
    model = _load(args.model)
    try:
        report, _ = run_stratify(model, Path(args.out) if args.out else None, svg=args.svg)
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot write output: {exc}") from None
    print(dumps_report(report) if args.json else _table(report))
    return EXIT_OK


def cmd_geodesic(args) -> int:
    model = _load(args.model)
    strategy = None if args.strategy == "auto" else STRATEGY_NAMES[args.strategy]
    disable = [STRATEGY_NAMES[d] for d in args.disable or ()]
    try:
        report, outcome = run_geodesic(model, strategy, disable, Path(args.out) if args.out else None)
    except PreconditionError as exc:
        raise _Fail(EXIT_PRECONDITION, str(exc)) from None
    except GeodesicError as exc:
        raise _Fail(EXIT_PRECONDITION, f"construction failed: {exc}") from None
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot write output: {exc}") from None
    if args.json:
        print(dumps_report(report), end="")
    else:
        ex = report["existence"]
        if outcome.strategy is Strategy.OPEN:
            print(f"OpenCase: {ex['explanation']}")
        else:
            r = ex["residuals"]
            print(f"{ex['strategy']}: length {ex['length']:.12g}, "
                  f"residuals {r['position']:.3e} / {r['velocity']:.3e}")
    return EXIT_OPEN_CASE if outcome.strategy is Strategy.OPEN else EXIT_OK


def cmd_examples(args) -> int:
    if args.action == "list":
        for name in CATALOG:
            print(name)
        return EXIT_OK
    if not args.name:
        raise _Fail(EXIT_PARSE, "examples emit needs a catalog name")
    if args.name not in CATALOG:
        raise _Fail(EXIT_PARSE, f"unknown example {args.name!r}; choose from {', '.join(CATALOG)}")
    text = catalog_text(args.name)
    if args.output:
        try:
            Path(args.output).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise _Fail(EXIT_IO, f"cannot write {args.output}: {exc}") from None
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orbistrat", description="Strata and closed geodesics of flat orbifolds.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a model file")
    v.add_argument("model")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("stratify", help="stratify the singular locus")
    s.add_argument("model")
    s.add_argument("--out", help="directory for report, polylines and figures")
    s.add_argument("--svg", action="store_true", help="draw an SVG overview (planar models)")
    s.add_argument("--json", action="store_true", help="print the JSON report instead of a table")
    s.set_defaults(func=cmd_stratify)

    g = sub.add_parser("geodesic", help="construct a closed geodesic")
    g.add_argument("model")
    g.add_argument("--strategy", default="auto",
                   choices=["auto", "hyperbolic", "sigma1", "closed-component", "even-isotropy", "odd-stratum"])
    g.add_argument("--disable", action="append", choices=sorted(STRATEGY_NAMES),
                   help="skip a strategy during automatic dispatch (repeatable)")
    g.add_argument("--out", help="directory for the JSON report")
    g.add_argument("--json", action="store_true", help="print the JSON report")
    g.set_defaults(func=cmd_geodesic)

    e = sub.add_parser("examples", help="list or emit built-in models")
    e.add_argument("action", choices=["list", "emit"])
    e.add_argument("name", nargs="?")
    e.add_argument("-o", "--output", help="write the model file here instead of stdout")
    e.set_defaults(func=cmd_examples)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"orbistrat: {exc}", file=sys.stderr)
        return exc.code
    except ModelParseError as exc:
        print(f"orbistrat: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
