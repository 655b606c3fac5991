"""
Per-batch accuracy rows, confusion counts and timings of a run, and their CSV files.

metrics.csv and confusion.csv only hold seeded quantities, so repeated runs of one config write
them byte for byte identical. Wall-clock numbers go to timings.csv.
"""
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd

from src.constellation import ModulationFormat
from src.schema import ConfusionRow, MetricsRow, RunManifest, RunnerName, TimingRow, TrialRecord

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.csv"
CONFUSION_FILE = "confusion.csv"
SUMMARY_FILE = "summary.csv"
TIMINGS_FILE = "timings.csv"
MANIFEST_FILE = "manifest.json"

SUMMARY_COLUMNS = [
    "runner", "window", "first_batch", "last_batch", "trials", "mean_accuracy", "std_error"
]


def accuracy_column(runner: str) -> str:
    return f"acc_{runner}"


@dataclass
class MetricsLog:
    formats: Sequence[ModulationFormat]
    runners: Sequence[RunnerName]
    rows: List[MetricsRow] = field(default_factory=list)
    timings: List[TimingRow] = field(default_factory=list)
    trials: List[TrialRecord] = field(default_factory=list)
    confusion: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        m = len(self.formats)
        for runner in self.runners:
            self.confusion.setdefault(runner, np.zeros((m, m), dtype=np.int64))

    def record_predictions(self, runner: str, labels: Sequence[int], predictions: Sequence[int]) -> float:
        """Add one batch to the runner's confusion matrix; returns the batch accuracy."""
        position = {fmt.id: j for j, fmt in enumerate(self.formats)}
        truth = np.array([position[label] for label in labels], dtype=np.intp)
        guess = np.array([position[p] for p in predictions], dtype=np.intp)
        np.add.at(self.confusion[runner], (truth, guess), 1)
        return float(np.mean(truth == guess)) if len(truth) else 0.0

    def extend(self, other: "MetricsLog") -> None:
        """Append another log (one trial) in order."""
        self.rows.extend(other.rows)
        self.timings.extend(other.timings)
        self.trials.extend(other.trials)
        for runner, counts in other.confusion.items():
            self.confusion[runner] = self.confusion[runner] + counts

    def metrics_frame(self) -> pd.DataFrame:
        columns = list(MetricsRow.__annotations__) + [accuracy_column(r) for r in self.runners]
        return pd.DataFrame(self.rows, columns=columns)

    def confusion_frame(self) -> pd.DataFrame:
        rows: List[ConfusionRow] = []
        for runner in self.runners:
            counts = self.confusion[runner]
            for i, true_fmt in enumerate(self.formats):
                for j, predicted_fmt in enumerate(self.formats):
                    rows.append({
                        "runner": runner,
                        "true_format": true_fmt.name,
                        "predicted_format": predicted_fmt.name,
                        "count": int(counts[i, j]),
                    })
        return pd.DataFrame(rows, columns=list(ConfusionRow.__annotations__))

    def timings_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.timings, columns=list(TimingRow.__annotations__))

    def summary_frame(self, window: int = 10) -> pd.DataFrame:
        """
        Mean accuracy per window of `window` consecutive batches, averaged over trials, with the
        standard error over trials (0 for a single trial).
        """
        frame = self.metrics_frame()
        if frame.empty:
            return pd.DataFrame(columns=SUMMARY_COLUMNS)
        frame["window"] = frame["batch"] // window
        parts = []
        for runner in self.runners:
            per_trial = frame.groupby(["window", "trial"])[accuracy_column(runner)].mean()
            grouped = per_trial.groupby(level="window")
            stats = pd.DataFrame({
                "trials": grouped.count(),
                "mean_accuracy": grouped.mean(),
                "std_error": (grouped.std(ddof=1) / np.sqrt(grouped.count())).fillna(0.0),
            }).reset_index()
            stats.insert(0, "runner", runner)
            stats["first_batch"] = stats["window"] * window
            stats["last_batch"] = np.minimum(stats["first_batch"] + window, frame["batch"].max() + 1) - 1
            parts.append(stats[SUMMARY_COLUMNS])
        return pd.concat(parts, ignore_index=True)

    def mean_accuracy(self, runner: str, first_batch: int = 0, last_batch: int | None = None) -> float:
        """Mean batch accuracy of one runner over batches [first_batch, last_batch], all trials."""
        frame = self.metrics_frame()
        selected = frame["batch"] >= first_batch
        if last_batch is not None:
            selected &= frame["batch"] <= last_batch
        return float(frame.loc[selected, accuracy_column(runner)].mean())

    def write(self, output_dir: str, manifest: RunManifest, window: int = 10) -> Dict[str, str]:
        """Write every CSV plus the manifest; returns {kind: path}."""
        os.makedirs(output_dir, exist_ok=True)
        outputs = {
            "metrics": os.path.join(output_dir, METRICS_FILE),
            "confusion": os.path.join(output_dir, CONFUSION_FILE),
            "summary": os.path.join(output_dir, SUMMARY_FILE),
            "timings": os.path.join(output_dir, TIMINGS_FILE),
            "manifest": os.path.join(output_dir, MANIFEST_FILE),
        }
        self.metrics_frame().to_csv(outputs["metrics"], index=False)
        self.confusion_frame().to_csv(outputs["confusion"], index=False)
        self.summary_frame(window).to_csv(outputs["summary"], index=False)
        self.timings_frame().to_csv(outputs["timings"], index=False)

        manifest = {**manifest, "outputs": {k: os.path.basename(v) for k, v in outputs.items()}}
        with open(outputs["manifest"], "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2)
        logger.info("wrote %d metrics rows to %s", len(self.rows), output_dir)
        return outputs
