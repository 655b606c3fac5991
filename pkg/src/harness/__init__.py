"""Experiment harness: configs, streaming runs, similarity diagnostics and runtime benchmarks."""
from typing import List

from src.harness.benchmark import linearity_r2, runtime_benchmark, second_differences
from src.harness.config import ConditionSpec, ExperimentConfig, LotSpec, TrainSpec, ValueSpec
from src.harness.experiment import build_manifest, run_experiment, run_trial
from src.harness.metrics import MetricsLog
from src.harness.similarity import SimilarityMatrix, similarity_matrix

__all__: List[str] = [
    "ConditionSpec",
    "ExperimentConfig",
    "LotSpec",
    "MetricsLog",
    "SimilarityMatrix",
    "TrainSpec",
    "ValueSpec",
    "build_manifest",
    "linearity_r2",
    "run_experiment",
    "run_trial",
    "runtime_benchmark",
    "second_differences",
    "similarity_matrix",
]
