"""Benchmark harness: sweep configuration, runner, plotting and the CLI."""

from .config import SweepConfig, load_config
from .plot import emit_plot, render_svg
from .sweep import (RECORD_FIELDS, SUMMARY_FIELDS, SummaryRow, SweepRecord, read_records,
                    read_summary, run_cell, run_trial, summarize, sweep, threshold_k,
                    write_summary)

__all__ = [
    "RECORD_FIELDS", "SUMMARY_FIELDS", "SummaryRow", "SweepConfig", "SweepRecord", "emit_plot",
    "load_config", "read_records", "read_summary", "render_svg", "run_cell", "run_trial",
    "summarize", "sweep", "threshold_k", "write_summary",
]
