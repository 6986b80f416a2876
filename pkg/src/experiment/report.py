"""
Run Report - Accuracy Tables and the Run Summary Document
=========================================================

Every accuracy shown here is recomputed from a persisted predictions
file, never copied from an in-memory result. Wall-clock timings live in
their own document so report.json stays byte-stable across reruns.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from src.utils.errors import DataError
from src.utils.io import PathLike, atomic_write_json, atomic_write_text

REPORT_FORMAT = "cdae-run-report"
REPORT_VERSION = 1
ROW_ORDER = ("AE", "DAE", "CAE", "CDAE")
PREDICTION_COLUMNS = ["index", "label", "prediction"]


def write_predictions(path: PathLike, labels: np.ndarray, predictions: np.ndarray) -> None:
    labels = np.asarray(labels, dtype=np.int64)
    predictions = np.asarray(predictions, dtype=np.int64)
    frame = pd.DataFrame({
        "index": np.arange(labels.shape[0], dtype=np.int64),
        "label": labels,
        "prediction": predictions,
    }, columns=PREDICTION_COLUMNS)
    atomic_write_text(path, frame.to_csv(index=False, lineterminator="\n"))


def read_predictions(path: PathLike) -> pd.DataFrame:
    frame = pd.read_csv(path)
    missing = [c for c in PREDICTION_COLUMNS if c not in frame.columns]
    if missing:
        raise DataError(f"{path}: predictions file lacks columns {missing}", path=str(path))
    return frame


def accuracy_from_predictions(path: PathLike) -> Dict[str, Any]:
    """correct / total straight from the predictions CSV"""
    frame = read_predictions(path)
    total = int(len(frame))
    correct = int((frame["label"] == frame["prediction"]).sum())
    return {"correct": correct, "total": total, "accuracy": correct / total if total else 0.0}


@dataclass
class VariantResult:
    """One row of a results table"""
    variant: str
    architecture: str
    accuracy: Optional[float] = None
    correct: int = 0
    total: int = 0
    loss_traces: List[List[float]] = field(default_factory=list)
    final_losses: List[Dict[str, float]] = field(default_factory=list)
    feature_sha256: Dict[str, str] = field(default_factory=dict)
    svm: Dict[str, Any] = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return self.accuracy is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variant": self.variant,
            "architecture": self.architecture,
            "accuracy": self.accuracy,
            "correct": self.correct,
            "total": self.total,
            "loss_traces": self.loss_traces,
            "final_losses": self.final_losses,
            "feature_sha256": self.feature_sha256,
            "svm": self.svm,
        }


@dataclass
class RunReport:
    config: Dict[str, Any]
    results: List[VariantResult] = field(default_factory=list)
    versions: Dict[str, Any] = field(default_factory=dict)

    def architectures(self) -> List[str]:
        seen: List[str] = []
        for r in self.results:
            if r.architecture not in seen:
                seen.append(r.architecture)
        return seen

    def result(self, architecture: str, variant: str) -> Optional[VariantResult]:
        for r in self.results:
            if r.architecture == architecture and r.variant.upper() == variant.upper():
                return r
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format": REPORT_FORMAT,
            "version": REPORT_VERSION,
            "versions": self.versions,
            "config": self.config,
            "results": [r.to_dict() for r in self.results],
        }

    def save(self, path: PathLike) -> None:
        atomic_write_json(path, self.to_dict())


def accuracy_table(report: RunReport, architecture: str) -> pd.DataFrame:
    """Four fixed rows; a variant without predictions shows as missing"""
    rows = []
    for name in ROW_ORDER:
        r = report.result(architecture, name)
        complete = r is not None and r.complete
        rows.append({
            "Variant": name,
            "Accuracy": r.accuracy if complete else None,
            "Correct": r.correct if complete else None,
            "Total": r.total if complete else None,
            "Status": "ok" if complete else "missing",
        })
    return pd.DataFrame(rows, columns=["Variant", "Accuracy", "Correct", "Total", "Status"])


def format_accuracy(value: Optional[float]) -> str:
    if value is None or pd.isna(value):
        return "missing"
    return f"{100.0 * value:.2f}%"


def render_text(report: RunReport) -> str:
    """Aligned plain-text tables, one per architecture"""
    blocks = []
    for architecture in report.architectures():
        frame = accuracy_table(report, architecture)
        width = max(len(name) for name in ROW_ORDER)
        lines = [f"SVM test accuracy, encoder {architecture}",
                 f"{'Variant':<{width}}  {'Accuracy':>9}"]
        lines.append("-" * len(lines[1]))
        for _, row in frame.iterrows():
            lines.append(f"{row['Variant']:<{width}}  {format_accuracy(row['Accuracy']):>9}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def tables_document(report: RunReport) -> Dict[str, Any]:
    return {
        "format": "cdae-accuracy-tables",
        "version": REPORT_VERSION,
        "tables": {
            architecture: [
                {"variant": row["Variant"],
                 "accuracy": None if pd.isna(row["Accuracy"]) else float(row["Accuracy"]),
                 "status": row["Status"]}
                for _, row in accuracy_table(report, architecture).iterrows()
            ]
            for architecture in report.architectures()
        },
    }


def tables_csv(report: RunReport) -> str:
    frames = []
    for architecture in report.architectures():
        frame = accuracy_table(report, architecture)
        frame.insert(0, "Architecture", architecture)
        frames.append(frame)
    if not frames:
        return ""
    return pd.concat(frames, ignore_index=True).to_csv(index=False, lineterminator="\n")


def write_tables(report: RunReport, out_dir: PathLike) -> Dict[str, Path]:
    out = Path(out_dir)
    paths = {"text": out / "table.txt", "json": out / "table.json", "csv": out / "table.csv"}
    atomic_write_text(paths["text"], render_text(report))
    atomic_write_json(paths["json"], tables_document(report))
    atomic_write_text(paths["csv"], tables_csv(report))
    return paths
