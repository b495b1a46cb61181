"""Command-line surface: measures, curve, fit, simulate and verify.

Exit codes: 0 success, 2 bad flags, schema or domain, 3 rank-deficient design,
4 no convergence (partial output is still written), 5 verification failed.
Every error is reported as a single ``error: <message>`` line on stderr.
"""

import argparse
import json
import logging
import sys
from contextlib import contextmanager

import pandas as pd
from pydantic import ValidationError

from analysis import (
    AnalysisService,
    coefficient_table,
    fit_summary,
    frame_columns,
    json_value,
    measures_table,
    sweep_summary,
    validation_message,
)
from config import config, configure_logging
from errors import AllReplicationsFailed, NotConverged, RankDeficient, WRatioError
from link_family import validate_lambda

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RANK_DEFICIENT = 3
EXIT_NOT_CONVERGED = 4
EXIT_VERIFY_FAILED = 5

LAMBDA_ALIASES = {"cloglog": 0.0, "logit": 1.0}


class UsageError(Exception):
    """Flag parsing failed"""


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that reports errors to ``main`` instead of exiting."""

    def error(self, message):
        raise UsageError(message)


def parse_lambda(text: str) -> float:
    value = LAMBDA_ALIASES.get(text.strip().lower())
    try:
        if value is None:
            value = float(text)
        return validate_lambda(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def parse_lambdas(text: str) -> list[float]:
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("at least one lambda is required")
    return [parse_lambda(p) for p in parts]


def parse_names(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def _add_output_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--format",
        dest="output_format",
        choices=("csv", "json"),
        default="csv",
        help="output format (default: %(default)s)",
    )
    parser.add_argument(
        "--output", dest="output_path", help="write to this file instead of stdout"
    )
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")


def build_parser() -> CliParser:
    parser = CliParser(
        prog="wratio",
        description="Aranda-Ordaz ratio measures, binary GLM fits and studies",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="COMMAND")

    measures = sub.add_parser("measures", help="RR, OR, CLR, WR and B for p0, p1")
    measures.add_argument("--p0", type=float, required=True, help="unexposed risk")
    measures.add_argument("--p1", type=float, required=True, help="exposed risk")
    measures.add_argument(
        "--lambdas",
        type=parse_lambdas,
        default=list(config.LAMBDA_GRID),
        help="comma-separated lambdas in [0,1] (default: 0,0.1,...,1)",
    )

    curve = sub.add_parser("curve", help="WR and B over baseline risk at fixed RR")
    curve.add_argument("--rr", type=float, required=True, help="true risk ratio")
    curve.add_argument("--lambdas", type=parse_lambdas, default=[0.0, 0.5, 1.0])
    curve.add_argument(
        "--step",
        type=float,
        default=config.CURVE_STEP,
        help="prevalence grid step (default: %(default)s)",
    )

    fit = sub.add_parser("fit", help="fit a binary GLM from a CSV file")
    fit.add_argument("--input", dest="input_path", required=True, help="CSV file")
    fit.add_argument("--outcome", required=True, help="0/1 outcome column")
    fit.add_argument("--exposure", help="0/1 exposure column (omit for none)")
    fit.add_argument(
        "--covariates",
        type=parse_names,
        default=[],
        help="comma-separated covariate columns",
    )
    fit.add_argument(
        "--lambda",
        dest="lambda_",
        type=parse_lambda,
        required=True,
        help="link parameter in [0,1], or 'cloglog' / 'logit'",
    )
    fit.add_argument("--tol", type=float, default=None)
    fit.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    fit.add_argument(
        "--level",
        type=float,
        default=0.95,
        help="Wald interval level (default: %(default)s)",
    )

    simulate = sub.add_parser("simulate", help="Monte Carlo bias of exp(beta_1)")
    simulate.add_argument("--n", dest="n_per_group", type=int, required=True)
    simulate.add_argument("--p0", type=float, required=True)
    simulate.add_argument("--rr", type=float, required=True)
    simulate.add_argument("--lambdas", type=parse_lambdas, default=[0.0, 1.0])
    simulate.add_argument("--reps", dest="replications", type=int, default=500)
    simulate.add_argument("--seed", type=int, required=True, help="unsigned 64-bit")
    simulate.add_argument(
        "--workers",
        type=int,
        default=None,
        help="worker threads; output does not depend on this",
    )
    simulate.add_argument(
        "--sample-csv",
        dest="sample_csv",
        help="also write replication 0's dataset to this CSV",
    )

    verify = sub.add_parser("verify", help="grid check of the WR(lambda) results")
    verify.add_argument("--grid-step", dest="grid_step", type=float, default=None)
    verify.add_argument("--lambda-steps", dest="lambda_steps", type=int, default=None)

    for subparser in (measures, curve, fit, simulate, verify):
        _add_output_flags(subparser)
    return parser


@contextmanager
def _output_stream(path: str | None):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            yield handle


def write_table(frame: pd.DataFrame, args) -> None:
    with _output_stream(args.output_path) as out:
        if args.output_format == "json":
            _dump_json(frame_columns(frame), out)
        else:
            frame.to_csv(
                out,
                index=False,
                float_format=config.CSV_FLOAT_FORMAT,
                lineterminator="\n",
            )


def write_record(record: dict, args) -> None:
    """A flat record: one CSV row or one JSON object"""
    if args.output_format == "json":
        _write_json(record, args)
    else:
        write_table(pd.DataFrame([record]), args)


def _write_json(document: dict, args) -> None:
    with _output_stream(args.output_path) as out:
        _dump_json(document, out)


def _json_field(value):
    if isinstance(value, list):
        return [json_value(v) for v in value]
    return json_value(value)


def _dump_json(document: dict, out) -> None:
    document = {key: _json_field(value) for key, value in document.items()}
    json.dump(document, out, indent=2, allow_nan=False)
    out.write("\n")


def cmd_measures(service: AnalysisService, args) -> int:
    report = service.measures(args.p0, args.p1, args.lambdas)
    if args.output_format == "json":
        table = measures_table(report)
        _write_json(
            {
                "p0": report.p0,
                "p1": report.p1,
                "rr": report.rr,
                "or": report.or_,
                "clr": report.clr,
                "lambda": table["lambda"].tolist(),
                "wr": table["wr"].tolist(),
                "b": table["b"].tolist(),
            },
            args,
        )
    else:
        write_table(measures_table(report), args)
    return EXIT_OK


def cmd_curve(service: AnalysisService, args) -> int:
    write_table(service.curve(args.rr, args.lambdas, args.step), args)
    return EXIT_OK


def _write_fit(result, args) -> None:
    table = coefficient_table(result, args.level)
    summary = fit_summary(result)
    if args.output_format == "json":
        _write_json({**summary, **frame_columns(table)}, args)
    else:
        write_table(table.assign(**summary), args)


def cmd_fit(service: AnalysisService, args) -> int:
    if not 0.0 < args.level < 1.0:
        raise UsageError(f"--level must lie strictly inside (0,1), got {args.level}")
    try:
        result = service.fit_csv(
            args.input_path,
            args.outcome,
            args.exposure,
            args.lambda_,
            args.covariates,
            tol=args.tol,
            max_iter=args.max_iter,
        )
    except NotConverged as e:
        if e.fit is not None:
            _write_fit(e.fit, args)
        raise
    _write_fit(result, args)
    return EXIT_OK


def cmd_simulate(service: AnalysisService, args) -> int:
    if args.workers is not None and args.workers < 1:
        raise UsageError("--workers must be at least 1")
    table = service.simulate(
        args.n_per_group,
        args.p0,
        args.rr,
        args.replications,
        args.seed,
        lambdas=args.lambdas,
        workers=args.workers,
        sample_csv=args.sample_csv,
    )
    write_table(table, args)
    return EXIT_OK


def cmd_verify(service: AnalysisService, args) -> int:
    report = service.verify(args.grid_step, args.lambda_steps)
    write_record(sweep_summary(report), args)
    if not report.passed:
        _report_error("verification failed: " + _violation_text(report))
        return EXIT_VERIFY_FAILED
    return EXIT_OK


def _violation_text(report) -> str:
    return (
        f"{report.lemma1_violations} sign, "
        f"{report.monotonicity_violations} monotonicity and "
        f"{report.corollary_violations} CLR/OR violations"
    )


COMMANDS = {
    "measures": cmd_measures,
    "curve": cmd_curve,
    "fit": cmd_fit,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def _report_error(message: str) -> None:
    print("error: " + " ".join(str(message).split()), file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        _report_error(e)
        return EXIT_USAGE

    configure_logging("INFO" if args.verbose else config.LOG_LEVEL)
    logging.captureWarnings(True)
    service = AnalysisService(config)
    logger.info("Running %s", args.subcommand)

    try:
        return COMMANDS[args.subcommand](service, args)
    except UsageError as e:
        _report_error(e)
        return EXIT_USAGE
    except ValidationError as e:
        _report_error(validation_message(e))
        return EXIT_USAGE
    except RankDeficient as e:
        _report_error(e)
        return EXIT_RANK_DEFICIENT
    except (NotConverged, AllReplicationsFailed) as e:
        _report_error(e)
        return EXIT_NOT_CONVERGED
    except (WRatioError, ValueError, OSError) as e:
        _report_error(e)
        return EXIT_USAGE
