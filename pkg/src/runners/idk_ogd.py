import logging
import time
from typing import Dict, Optional, Sequence

from src.classifier import (
    LabeledBatch,
    OgdModel,
    fit_partitionings,
    init,
    predict_embedded,
    update_batch,
    warm_start,
)
from src.constellation import IqSignal, ModulationFormat
from src.errors import UsageError
from src.runners.base import BatchEmbeddings, ClassifierParams, StepOutcome, StreamRunner

logger = logging.getLogger(__name__)


class IdkOgdRunner(StreamRunner):
    """IDK-OGD with online update: classify every batch, then learn from it if labelled."""
    name = "idk_ogd"

    def __init__(self, params: ClassifierParams, model: Optional[OgdModel] = None):
        super().__init__(params)
        self.model = model

    def train(
        self,
        formats: Sequence[ModulationFormat],
        signals: Sequence[IqSignal],
        labels: Sequence[int],
        rng_seed: int,
    ) -> Dict[str, float]:
        start = time.perf_counter()
        partitionings = fit_partitionings(
            formats, signals, labels, psi=self.params.psi, t=self.params.t, rng_seed=rng_seed
        )
        model = init(
            formats,
            partitionings,
            learning_rate=self.params.learning_rate,
            update_rule=self.params.update_rule,
        )
        fitted = time.perf_counter()
        self.model = warm_start(model, signals, labels, epochs=self.params.warm_start_epochs)
        done = time.perf_counter()
        logger.debug("%s: fit %.3fs, warm start %.3fs", self.name, fitted - start, done - fitted)
        return {"fit": fitted - start, "warm_start": done - fitted}

    def _predict(self, batch: LabeledBatch, embeddings: Optional[BatchEmbeddings]):
        if self.model is None:
            raise UsageError(f"{self.name} runner used before training")
        if embeddings is None:
            embeddings = BatchEmbeddings(batch.signals)
        already = embeddings.seconds
        start = time.perf_counter()
        vectors = embeddings.get(self.model)
        predictions = predict_embedded(self.model, vectors)
        # Charge the embedding cost even when another runner already paid for it.
        seconds = time.perf_counter() - start - (embeddings.seconds - already) + embeddings.seconds
        return predictions, vectors, seconds

    def step(self, batch: LabeledBatch, embeddings: Optional[BatchEmbeddings] = None) -> StepOutcome:
        predictions, vectors, predict_seconds = self._predict(batch, embeddings)
        start = time.perf_counter()
        self.model = update_batch(self.model, batch, predictions, vectors)
        return StepOutcome(predictions, predict_seconds, time.perf_counter() - start)
