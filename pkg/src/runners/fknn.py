import time
from typing import Dict, Optional, Sequence

from src.baselines import KnnStore, build_store, extract_many, knn_predict_many, knn_retrain
from src.classifier import LabeledBatch
from src.constellation import IqSignal, ModulationFormat
from src.errors import UsageError
from src.runners.base import BatchEmbeddings, StepOutcome, StreamRunner


class FknnRunner(StreamRunner):
    """Moment-feature kNN, retrained on the full history after every labelled batch."""
    name = "fknn"
    store: Optional[KnnStore] = None

    def train(
        self,
        formats: Sequence[ModulationFormat],
        signals: Sequence[IqSignal],
        labels: Sequence[int],
        rng_seed: int,
    ) -> Dict[str, float]:
        start = time.perf_counter()
        self.store = build_store(signals, labels, k=self.params.k)
        return {"fit": time.perf_counter() - start}

    def step(self, batch: LabeledBatch, embeddings: Optional[BatchEmbeddings] = None) -> StepOutcome:
        if self.store is None:
            raise UsageError("fknn runner used before training")
        start = time.perf_counter()
        predictions = knn_predict_many(self.store, extract_many(batch.signals))
        predicted = time.perf_counter()
        self.store = knn_retrain(self.store, batch)
        return StepOutcome(predictions, predicted - start, time.perf_counter() - predicted)
