"""Tests for result files."""

import json

from treegraph.services import AblationRow, EpochRecord
from treegraph.utils import (
    format_mean_std,
    to_csv,
    write_ablation_table,
    write_chunks_csv,
    write_history_csv,
    write_jsonl,
    write_metrics_json,
    write_tau_table,
)


def test_format_mean_std():
    assert format_mean_std(0.954, 0.0092) == "95.4 ±0.92"
    assert format_mean_std(1.0, 0.0) == "100.0 ±0.00"


def test_to_csv_quotes_commas():
    assert to_csv(["a", "b"], [["x,y", 1]]) == 'a,b\n"x,y",1\n'


def test_metrics_json_is_stable(tmp_path):
    one = write_metrics_json({"std": 0.1, "mean": 0.5}, tmp_path / "a.json")
    two = write_metrics_json({"mean": 0.5, "std": 0.1}, tmp_path / "b.json")
    assert one.read_bytes() == two.read_bytes()
    assert json.loads(one.read_text()) == {"mean": 0.5, "std": 0.1}


def test_history_csv(tmp_path):
    path = write_history_csv([EpochRecord(1, 0.1, 0.69, 0.5)], tmp_path / "out" / "history.csv")
    assert path.read_text().splitlines() == ["epoch,lr,train_loss,val_metric", "1,0.1,0.69,0.5"]


def test_chunks_csv(tmp_path):
    path = write_chunks_csv((0.5, 0.25, 0.0), tmp_path / "chunks.csv")
    assert path.read_text() == "chunk,fraction\n1,0.5\n2,0.25\n3,0.0\n"


def test_ablation_table(tmp_path):
    path = write_ablation_table([AblationRow("full", "accuracy", 0.9, 0.05)], tmp_path / "ablation.csv")
    assert path.read_text().splitlines()[1] == "full,accuracy,0.9,0.05"


def test_tau_table(tmp_path):
    path = write_tau_table([(0.1, 0.75), (0.15, 0.8)], tmp_path / "tau.csv")
    assert path.read_text().splitlines() == ["tau,score", "0.10,0.75", "0.15,0.8"]


def test_jsonl(tmp_path):
    path = write_jsonl([{"id": "a", "labels": ["é"]}, {"id": "b", "labels": []}], tmp_path / "p.jsonl")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert [json.loads(line)["id"] for line in lines] == ["a", "b"]
    assert "é" in lines[0]
