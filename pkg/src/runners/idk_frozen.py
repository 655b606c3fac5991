from typing import Optional

from src.classifier import LabeledBatch
from src.runners.base import BatchEmbeddings, StepOutcome
from src.runners.idk_ogd import IdkOgdRunner


class IdkFrozenRunner(IdkOgdRunner):
    """The warm-started IDK-OGD model, never updated after training ("no retrain" mode)."""
    name = "idk_frozen"

    def step(self, batch: LabeledBatch, embeddings: Optional[BatchEmbeddings] = None) -> StepOutcome:
        predictions, _, predict_seconds = self._predict(batch, embeddings)
        return StepOutcome(predictions, predict_seconds, 0.0)
