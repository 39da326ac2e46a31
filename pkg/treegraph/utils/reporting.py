"""Result files - metrics JSON, CSV tables and the mean/std label."""

import csv
import io
import json
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any


def format_mean_std(mean: float, std: float) -> str:
    """Percent score with one decimal and its spread with two: ``95.4 ±0.92``."""
    return f"{100 * mean:.1f} ±{100 * std:.2f}"


def _write(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    output = io.StringIO()
    writer = csv.writer(output, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return output.getvalue()


def write_metrics_json(metrics: dict[str, Any], path: str | Path) -> Path:
    """Pretty JSON with sorted keys; identical metrics give identical bytes."""
    return _write(path, json.dumps(metrics, indent=2, sort_keys=True) + "\n")


def write_history_csv(history, path: str | Path) -> Path:
    rows = ([r.epoch, r.lr, r.train_loss, r.val_metric] for r in history)
    return _write(path, to_csv(["epoch", "lr", "train_loss", "val_metric"], rows))


def write_chunks_csv(fractions: Sequence[float], path: str | Path) -> Path:
    rows = ([i + 1, f] for i, f in enumerate(fractions))
    return _write(path, to_csv(["chunk", "fraction"], rows))


def write_ablation_table(rows, path: str | Path) -> Path:
    """Ablation comparison: variant, metric, mean, std."""
    table = ([r.variant, r.metric, r.mean, r.std] for r in rows)
    return _write(path, to_csv(["variant", "metric", "mean", "std"], table))


def write_tau_table(scores: Sequence[tuple[float, float]], path: str | Path) -> Path:
    return _write(path, to_csv(["tau", "score"], ([f"{tau:.2f}", s] for tau, s in scores)))


def write_jsonl(records: Iterable[dict[str, Any]], path: str | Path) -> Path:
    lines = (json.dumps(record, ensure_ascii=False, sort_keys=True) for record in records)
    return _write(path, "".join(line + "\n" for line in lines))
