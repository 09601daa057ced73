"""Command-line entry point: discretize, fit, compare, exact, simulate."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence as ArgList

from pydantic import ValidationError

from hmmfrag import baum_welch, core, exact, fragments, ingest
from hmmfrag.config import settings
from hmmfrag.schemas import ExactParams, FitConfig, SweepParams
from hmmfrag.services import files, reports

logger = logging.getLogger(__name__)


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    logger.info("Wrote %s", out)


def _validation_message(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        location = ".".join(str(item) for item in error["loc"])
        message = error["msg"].removeprefix("Value error, ")
        parts.append(f"{location}: {message}" if location else message)
    return "; ".join(parts)


def cmd_discretize(args: argparse.Namespace) -> int:
    series = ingest.load_csv(args.csv, args.column, args.missing, delimiter=args.delimiter)
    if args.spec is not None:
        spec = ingest.load_spec(args.spec)
        y = ingest.apply_discretization(series, spec)
    else:
        y, spec = ingest.discretize(series, args.bins)
    files.write_sequence(y, args.out)
    if args.spec_out is not None:
        ingest.save_spec(spec, args.spec_out)
    print(f"wrote {len(y)} symbols over {spec.n_bins} bins to {args.out}")
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    y = files.read_sequence(args.seq, args.alphabet_size)
    cfg = FitConfig(
        n_states=args.states,
        max_iters=args.max_iters,
        tol=args.tol,
        seed=args.seed,
        n_restarts=args.restarts,
        label=args.label,
    )
    result = baum_welch.fit(y, cfg)
    files.save_model(result.model, args.out)
    if args.trace_out is not None:
        _emit(baum_welch.loglik_trace_report(result), args.trace_out)
    sys.stdout.write(reports.render_fit(result, core.log_likelihood_full(result.model, y)))
    return 0


def _load_models(*sources: str):
    models = [files.load_model(source) for source in sources]
    sizes = {h.n_symbols for h in models}
    if len(sizes) > 1:
        detail = ", ".join(f"{h.label}: {h.n_symbols}" for h in models)
        raise core.AlphabetMismatchError(f"models disagree on alphabet size ({detail})")
    return models


def cmd_compare(args: argparse.Namespace) -> int:
    params = SweepParams(r_min=args.r_min, r_max=args.r_max, k=args.k, seed=args.seed)
    h1, h2 = _load_models(args.model1, args.model2)
    y = files.read_sequence(args.seq, h1.n_symbols)
    report = fragments.sweep(
        y,
        h1,
        h2,
        (params.r_min, params.r_max),
        params.k,
        params.seed,
        full_log_likelihood=args.full_loglik,
    )
    _emit(reports.render_sweep(report, args.format), args.out)
    return 0


def cmd_exact(args: argparse.Namespace) -> int:
    params = ExactParams(r_min=args.r_min, r_max=args.r_max, k=args.k)
    h0, h1, h2 = _load_models(args.model0, args.model1, args.model2)
    report = exact.exact_report(h0, h1, h2, params.r_min, params.r_max, k=params.k)
    _emit(reports.render_exact(report, args.format), args.out)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    model = files.load_model(args.model)
    y = core.simulate(model, args.n, args.seed)
    files.write_sequence(y, args.out)
    print(f"wrote {len(y)} symbols from {model.label} to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hmmfrag",
        description="Compare hidden Markov models by the likelihood of sequence fragments.",
    )
    parser.add_argument(
        "--log-level",
        type=str.upper,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default=None,
        help=f"Logging level for stderr (default: {settings.log_level}).",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    formats = [f.value for f in reports.ReportFormat]

    discretize = commands.add_parser("discretize", help="Encode a CSV column into symbols.")
    discretize.add_argument("csv", type=Path)
    discretize.add_argument("--column", required=True)
    discretize.add_argument("--bins", type=int, default=3)
    discretize.add_argument(
        "--missing", choices=[p.value for p in ingest.MissingPolicy], default="error"
    )
    discretize.add_argument("--delimiter", default=",")
    discretize.add_argument("--out", type=Path, required=True)
    discretize.add_argument("--spec-out", type=Path, default=None)
    discretize.add_argument(
        "--spec", type=Path, default=None, help="Apply saved cut points instead of new quantiles."
    )
    discretize.set_defaults(handler=cmd_discretize)

    fit = commands.add_parser("fit", help="Fit a model by Baum-Welch.")
    fit.add_argument("seq", type=Path)
    fit.add_argument("--states", type=int, required=True)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--max-iters", type=int, default=settings.fit_max_iters)
    fit.add_argument("--tol", type=float, default=settings.fit_tol)
    fit.add_argument("--restarts", type=int, default=1)
    fit.add_argument("--alphabet-size", type=int, default=None)
    fit.add_argument("--label", default=None)
    fit.add_argument("--out", type=Path, required=True)
    fit.add_argument("--trace-out", type=Path, default=None)
    fit.set_defaults(handler=cmd_fit)

    compare = commands.add_parser("compare", help="Sampled fragment Z-test of two models.")
    compare.add_argument("seq", type=Path)
    compare.add_argument("model1")
    compare.add_argument("model2")
    compare.add_argument("--r-min", type=int, default=3)
    compare.add_argument("--r-max", type=int, default=7)
    compare.add_argument("-k", type=int, default=1000)
    compare.add_argument("--seed", type=int, default=0)
    compare.add_argument("--format", choices=formats, default="text")
    compare.add_argument("--out", type=Path, default=None)
    compare.add_argument(
        "--full-loglik",
        action="store_true",
        help="Also report each model's full-sequence log-likelihood.",
    )
    compare.set_defaults(handler=cmd_compare)

    exact_cmd = commands.add_parser("exact", help="Closed-form comparison under a reference model.")
    exact_cmd.add_argument("model0")
    exact_cmd.add_argument("model1")
    exact_cmd.add_argument("model2")
    exact_cmd.add_argument("--r-min", type=int, default=1)
    exact_cmd.add_argument("--r-max", type=int, default=10)
    exact_cmd.add_argument("-k", type=int, default=1000)
    exact_cmd.add_argument("--format", choices=formats, default="text")
    exact_cmd.add_argument("--out", type=Path, default=None)
    exact_cmd.set_defaults(handler=cmd_exact)

    simulate = commands.add_parser("simulate", help="Draw a symbol sequence from a model.")
    simulate.add_argument("model")
    simulate.add_argument("-n", type=int, required=True)
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--out", type=Path, required=True)
    simulate.set_defaults(handler=cmd_simulate)

    return parser


def main(argv: ArgList[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=(args.log_level or settings.log_level).upper(),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        return args.handler(args)
    except ValidationError as exc:
        message = _validation_message(exc)
    except (ValueError, RuntimeError, ArithmeticError, OSError) as exc:
        message = str(exc)
    print(f"error: {' '.join(message.split())}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
