"""Render sweep, exact and fit reports as aligned text, CSV or JSON.

Text tables show five significant digits. CSV and JSON carry full precision
and the same numbers.
"""
from __future__ import annotations

from enum import Enum

import pandas as pd

from hmmfrag.config import settings
from hmmfrag.schemas import ExactReport, FitResult, SweepReport

TEXT_FLOAT_FORMAT = "{:.5g}".format


class ReportFormat(str, Enum):
    TEXT = "text"
    CSV = "csv"
    JSON = "json"


def p_value_label(p: float) -> str:
    """Display form of a p-value; exact zeros are below the configured floor."""
    if p == 0.0:
        return f"<{settings.p_value_floor:g}"
    return TEXT_FLOAT_FORMAT(p)


def sweep_frame(report: SweepReport) -> pd.DataFrame:
    """One row per fragment length, with the ratio against the previous length."""
    frame = pd.DataFrame([row.model_dump() for row in report.results])
    frame["p_value_label"] = frame["p_value"].map(p_value_label)
    ratios = pd.DataFrame(
        [
            {
                "r": ratio.numerator_r,
                "ratio_label": f"mu({ratio.numerator_r})/mu({ratio.denominator_r})",
                "mu1_ratio": ratio.mu1_ratio,
                "mu2_ratio": ratio.mu2_ratio,
            }
            for ratio in report.ratios
        ],
        columns=["r", "ratio_label", "mu1_ratio", "mu2_ratio"],
    ).astype({"r": "int64", "mu1_ratio": "float64", "mu2_ratio": "float64"})
    return frame.merge(ratios, on="r", how="left")


def exact_frame(report: ExactReport) -> pd.DataFrame:
    return pd.DataFrame([row.model_dump() for row in report.rows])


def _text_table(frame: pd.DataFrame) -> str:
    return frame.to_string(index=False, float_format=TEXT_FLOAT_FORMAT, na_rep="-")


def _sweep_text(report: SweepReport) -> str:
    frame = sweep_frame(report)
    table = frame[
        [
            "r",
            "mean_diff",
            "sample_std",
            "z",
            "p_value_label",
            "mu1_hat",
            "mu2_hat",
            "mu1_ratio",
            "mu2_ratio",
            "fragment_space",
            "sparsity_ratio",
            "sparsity_warning",
        ]
    ].rename(columns={"p_value_label": "p_value", "fragment_space": "K^r", "sparsity_ratio": "K^r/n"})
    lines = [
        f"Fragment comparison: model 1 = {report.model1_label}, model 2 = {report.model2_label}",
        f"sequence length n = {report.sequence_length}, alphabet K = {report.alphabet_size}, "
        f"k = {report.results[0].k}",
        "mean_diff = mu1_hat - mu2_hat; p_value is one-sided (H1: mu_1 > mu_2); "
        "ratios are mu_hat(r)/mu_hat(r-1)",
        "",
        _text_table(table),
    ]
    if report.full_log_likelihood_1 is not None:
        lines += [
            "",
            f"full-sequence log-likelihood, model 1: {report.full_log_likelihood_1:.4f}",
            f"full-sequence log-likelihood, model 2: {report.full_log_likelihood_2:.4f}",
        ]
    return "\n".join(lines) + "\n"


def _threshold_text(value: int | None) -> str:
    return "none" if value is None else str(value)


def _exact_text(report: ExactReport) -> str:
    frame = exact_frame(report).drop(columns=["lambda_1", "lambda_2"])
    if report.k is None:
        frame = frame.drop(columns=["expected_z"])
    lines = [
        f"Exact comparison under reference {report.reference_label}: "
        f"model 1 = {report.model1_label}, model 2 = {report.model2_label}",
        "ratio_j = mu_j(r+1)/mu_j(r)",
        "",
        _text_table(frame),
        "",
        f"lambda_max(W_1) = {report.lambda_1:.10g}",
        f"lambda_max(W_2) = {report.lambda_2:.10g}",
        f"dominance threshold, model 1 over model 2: {_threshold_text(report.threshold_1_over_2)}",
        f"dominance threshold, model 2 over model 1: {_threshold_text(report.threshold_2_over_1)}",
    ]
    return "\n".join(lines) + "\n"


def render_sweep(report: SweepReport, fmt: ReportFormat | str = ReportFormat.TEXT) -> str:
    fmt = ReportFormat(fmt)
    if fmt is ReportFormat.JSON:
        return report.model_dump_json(indent=2) + "\n"
    if fmt is ReportFormat.CSV:
        return sweep_frame(report).to_csv(index=False, lineterminator="\n")
    return _sweep_text(report)


def render_exact(report: ExactReport, fmt: ReportFormat | str = ReportFormat.TEXT) -> str:
    fmt = ReportFormat(fmt)
    if fmt is ReportFormat.JSON:
        return report.model_dump_json(indent=2) + "\n"
    if fmt is ReportFormat.CSV:
        frame = exact_frame(report)
        frame["threshold_1_over_2"] = report.threshold_1_over_2
        frame["threshold_2_over_1"] = report.threshold_2_over_1
        return frame.to_csv(index=False, lineterminator="\n")
    return _exact_text(report)


def render_fit(result: FitResult, full_log_likelihood: float) -> str:
    """Summary printed by ``hmmfrag fit``."""
    status = "converged" if result.converged else "stopped at max_iters"
    lines = [
        f"model: {result.model.label} ({result.model.n_states} states, "
        f"{result.model.n_symbols} symbols)",
        f"EM log-likelihood: {result.final_log_likelihood:.4f} "
        f"({status} after {result.iterations_used} iterations, restart {result.best_restart})",
        f"stationary-start log-likelihood: {full_log_likelihood:.4f}",
    ]
    if result.absent_symbols:
        lines.append(f"symbols never observed: {result.absent_symbols}")
    return "\n".join(lines) + "\n"
