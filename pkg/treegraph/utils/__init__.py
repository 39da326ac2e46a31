"""Utility modules for treegraph."""

from .reporting import (
    format_mean_std,
    to_csv,
    write_ablation_table,
    write_chunks_csv,
    write_history_csv,
    write_jsonl,
    write_metrics_json,
    write_tau_table,
)

__all__ = [
    "format_mean_std",
    "to_csv",
    "write_metrics_json",
    "write_history_csv",
    "write_chunks_csv",
    "write_ablation_table",
    "write_tau_table",
    "write_jsonl",
]
