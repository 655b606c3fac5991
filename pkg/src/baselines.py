"""
fKNN baseline: high-order moment features with an online-retrained k-nearest-neighbour vote.

The store keeps every labelled example it has ever seen, so prediction cost grows with the
stream and total runtime is quadratic in the number of batches.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from src.classifier import LabeledBatch
from src.constellation import IqSignal
from src.errors import FeatureError, UsageError

logger = logging.getLogger(__name__)

DEFAULT_K = 15

# (p, q) pairs of the mixed moments M_pq = E[s^(p-q) · conj(s)^q].
MOMENT_ORDERS: Tuple[Tuple[int, int], ...] = (
    (2, 0), (2, 1), (4, 0), (4, 1), (4, 2), (6, 0), (6, 3), (8, 0),
)
FEATURE_NAMES: Tuple[str, ...] = tuple(f"M{p}{q}" for p, q in MOMENT_ORDERS)


@dataclass(frozen=True, eq=False)
class MomentFeatureVector:
    values: np.ndarray = field(repr=False)


def _moments(samples: np.ndarray) -> np.ndarray:
    power = float(np.mean(np.abs(samples) ** 2))
    if not np.isfinite(power) or power <= 0.0:
        raise FeatureError("cannot compute moment features of a zero-power signal")
    # Normalising by sqrt(M21) first is the same as dividing |M_pq| by M21^(p/2).
    u = samples / np.sqrt(power)
    values = np.array([abs(np.mean(u ** (p - q) * np.conj(u) ** q)) for p, q in MOMENT_ORDERS])
    if not np.all(np.isfinite(values)):
        raise FeatureError("moment features are not finite")
    return values


def extract_moments(signal: IqSignal) -> MomentFeatureVector:
    """|M_pq| / M21^(p/2) for every (p, q) in MOMENT_ORDERS."""
    return MomentFeatureVector(values=_moments(signal.samples))


def extract_many(signals: Sequence[IqSignal]) -> np.ndarray:
    if not signals:
        return np.zeros((0, len(MOMENT_ORDERS)))
    return np.vstack([_moments(s.samples) for s in signals])


@dataclass(frozen=True, eq=False)
class KnnStore:
    """All labelled examples seen so far. Grows by whole batches via `knn_retrain`."""
    k: int = DEFAULT_K
    features: np.ndarray = field(default_factory=lambda: np.zeros((0, len(MOMENT_ORDERS))), repr=False)
    labels: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64), repr=False)

    def __post_init__(self):
        if self.k < 1:
            raise UsageError(f"k must be at least 1, got {self.k}")

    def __len__(self) -> int:
        return int(self.labels.size)


def build_store(signals: Sequence[IqSignal], labels: Sequence[int], k: int = DEFAULT_K) -> KnnStore:
    return KnnStore(
        k=k,
        features=extract_many(signals),
        labels=np.asarray(labels, dtype=np.int64),
    )


def knn_predict_many(store: KnnStore, features: np.ndarray) -> List[int]:
    """
    Majority vote among the k nearest stored examples (Euclidean), per query row.

    Equidistant examples are taken in store order; vote ties go to the lowest format id.
    """
    if len(store) == 0:
        raise UsageError("cannot predict with an empty kNN store")
    queries = np.atleast_2d(features)
    if queries.shape[0] == 0:
        return []
    k = min(store.k, len(store))
    distances = cdist(queries, store.features)
    nearest = np.argsort(distances, axis=1, kind="stable")[:, :k]
    minlength = int(store.labels.max()) + 1
    return [int(np.argmax(np.bincount(store.labels[row], minlength=minlength))) for row in nearest]


def knn_predict(store: KnnStore, features: MomentFeatureVector) -> int:
    return knn_predict_many(store, features.values)[0]


def knn_retrain(store: KnnStore, batch: LabeledBatch) -> KnnStore:
    """Append the batch's features and labels to the store. Unlabelled batches are ignored."""
    if batch.labels is None:
        logger.debug("skipped retrain: batch %s carries no labels", batch.condition_tag)
        return store
    return KnnStore(
        k=store.k,
        features=np.vstack([store.features, extract_many(batch.signals)]),
        labels=np.concatenate([store.labels, np.asarray(batch.labels, dtype=np.int64)]),
    )
