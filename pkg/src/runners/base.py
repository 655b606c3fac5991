"""Shared pieces of the stream runners: parameters, step outcome and per-batch embedding cache."""
import time
from dataclasses import dataclass, asdict
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.baselines import DEFAULT_K
from src.classifier import DEFAULT_LEARNING_RATE, LabeledBatch, OgdModel, embed_batch
from src.constellation import IqSignal, ModulationFormat
from src.isokernel import DEFAULT_PSI, DEFAULT_T
from src.schema import RunnerName, UpdateRule


@dataclass(frozen=True)
class ClassifierParams:
    psi: int = DEFAULT_PSI
    t: int = DEFAULT_T
    learning_rate: float = DEFAULT_LEARNING_RATE
    update_rule: UpdateRule = "one_vs_rest"
    warm_start_epochs: int = 1
    k: int = DEFAULT_K

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class StepOutcome:
    predictions: List[int]
    predict_seconds: float
    update_seconds: float


class BatchEmbeddings:
    """
    Embeddings of one batch, computed on first request and shared by every IDK runner whose
    model uses the same partitionings.
    """
    def __init__(self, signals: Sequence[IqSignal]):
        self.signals = signals
        self.seconds = 0.0
        self._cache: Dict[int, List[np.ndarray]] = {}

    def get(self, model: OgdModel) -> List[np.ndarray]:
        key = id(model.partitionings)
        if key not in self._cache:
            start = time.perf_counter()
            self._cache[key] = embed_batch(model, self.signals)
            self.seconds += time.perf_counter() - start
        return self._cache[key]


class StreamRunner:
    """
    One classifier fed batch by batch.

    Subclasses implement `train` (initial classifier from the training set) and `step`
    (classify a batch, then use it according to the runner's retraining mode).
    """
    name: RunnerName

    def __init__(self, params: ClassifierParams):
        self.params = params

    def train(
        self,
        formats: Sequence[ModulationFormat],
        signals: Sequence[IqSignal],
        labels: Sequence[int],
        rng_seed: int,
    ) -> Dict[str, float]:
        """Returns stage timings in seconds."""
        raise NotImplementedError

    def step(self, batch: LabeledBatch, embeddings: Optional[BatchEmbeddings] = None) -> StepOutcome:
        raise NotImplementedError
