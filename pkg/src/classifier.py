"""
IDK-OGD: an online multiclass classifier over per-format distribution embeddings.

Every format j owns an isolation partitioning and a linear scorer w_j. A signal is embedded under
each format's partitioning, scored with g_j = ⟨w_j, Φ̂_j(S)⟩ and labelled with the argmax. When a
batch arrives with ground-truth labels the scorers take hinge-loss gradient steps, one sample at a
time in batch order.
"""
import hashlib
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.constellation import IqSignal, ModulationFormat
from src.errors import FitError, UsageError
from src.isokernel import DEFAULT_PSI, DEFAULT_T, IsolationPartitioning, embed_many, fit
from src.schema import UpdateRule
from src.utilities import run_multithreaded

logger = logging.getLogger(__name__)

DEFAULT_LEARNING_RATE = 0.01
DEFAULT_BATCH_SIZE = 100
UPDATE_RULES: Tuple[UpdateRule, ...] = ("one_vs_rest", "literal")


@dataclass(frozen=True, eq=False)
class OgdModel:
    """
    Online classifier state. Formats are kept sorted by id; `weights[j]` scores `formats[j]`
    under `partitionings[j]`.
    """
    formats: Tuple[ModulationFormat, ...]
    partitionings: Tuple[IsolationPartitioning, ...] = field(repr=False)
    weights: Tuple[np.ndarray, ...] = field(repr=False)
    learning_rate: float = DEFAULT_LEARNING_RATE
    update_rule: UpdateRule = "one_vs_rest"
    loss: str = "hinge"

    @property
    def m(self) -> int:
        return len(self.formats)

    def position(self, format_id: int) -> int:
        for j, fmt in enumerate(self.formats):
            if fmt.id == format_id:
                return j
        raise UsageError(f"format id {format_id} is not one of the model's formats")

    def digest(self) -> str:
        """SHA-256 over the weight vectors, for cheap state comparison."""
        h = hashlib.sha256()
        for w in self.weights:
            h.update(np.ascontiguousarray(w).tobytes())
        return h.hexdigest()


@dataclass
class LabeledBatch:
    """Signals arriving together; `labels` are format ids and only present with ground truth."""
    signals: List[IqSignal]
    labels: Optional[List[int]] = None
    condition_tag: Any = None

    def __post_init__(self):
        if self.labels is not None and len(self.labels) != len(self.signals):
            raise UsageError(
                f"batch has {len(self.signals)} signals but {len(self.labels)} labels"
            )

    def __len__(self) -> int:
        return len(self.signals)


def init(
    formats: Sequence[ModulationFormat],
    partitionings: Sequence[IsolationPartitioning],
    learning_rate: float = DEFAULT_LEARNING_RATE,
    update_rule: UpdateRule = "one_vs_rest",
) -> OgdModel:
    """Zero-weight model over already fitted per-format partitionings."""
    if len(formats) != len(partitionings):
        raise UsageError(
            f"{len(formats)} formats but {len(partitionings)} partitionings"
        )
    if not formats:
        raise UsageError("a model needs at least one format")
    if learning_rate < 0:
        raise UsageError(f"learning rate must be non-negative, got {learning_rate}")
    if update_rule not in UPDATE_RULES:
        raise UsageError(f"unknown update rule '{update_rule}'")
    for fmt, p in zip(formats, partitionings):
        if p.source_format is not None and p.source_format != fmt.id:
            raise UsageError(f"partitioning fitted for format id {p.source_format} given for {fmt.name}")

    pairs = sorted(zip(formats, partitionings), key=lambda pair: pair[0].id)
    return OgdModel(
        formats=tuple(f for f, _ in pairs),
        partitionings=tuple(p for _, p in pairs),
        weights=tuple(np.zeros(p.dim) for _, p in pairs),
        learning_rate=float(learning_rate),
        update_rule=update_rule,
    )


def embed_batch(model: OgdModel, signals: Sequence[IqSignal], threads: int = 1) -> List[np.ndarray]:
    """Embed every signal under every format's partitioning: one (n, t·ψ) array per format."""
    tasks = [lambda p=p: embed_many(p, signals) for p in model.partitionings]
    if threads > 1:
        return run_multithreaded(tasks, threads=threads, exit_on_exception=True)
    return [task() for task in tasks]


def scores(model: OgdModel, embeddings: Sequence[np.ndarray]) -> np.ndarray:
    """(n, m) matrix of g_{i,j}."""
    return np.column_stack([e @ w for e, w in zip(embeddings, model.weights)])


def count_degenerate(embeddings: Sequence[np.ndarray]) -> int:
    """Signals whose embedding is all-zero under every partitioning."""
    if not embeddings or embeddings[0].shape[0] == 0:
        return 0
    empty = np.logical_and.reduce([~e.any(axis=1) for e in embeddings])
    return int(empty.sum())


def predict_embedded(model: OgdModel, embeddings: Sequence[np.ndarray]) -> List[int]:
    if embeddings[0].shape[0] == 0:
        return []
    degenerate = count_degenerate(embeddings)
    if degenerate:
        logger.warning("%d signal(s) fell outside every hypersphere; scored 0 for all formats", degenerate)
    winners = np.argmax(scores(model, embeddings), axis=1)
    return [model.formats[j].id for j in winners]


def predict_batch(model: OgdModel, batch: LabeledBatch) -> List[int]:
    """Classification stage: argmax over formats per signal, ties to the lowest id."""
    if len(batch) == 0:
        return []
    return predict_embedded(model, embed_batch(model, batch.signals))


def update_embedded(
    model: OgdModel,
    embeddings: Sequence[np.ndarray],
    labels: Sequence[int],
    predictions: Optional[Sequence[int]] = None,
) -> OgdModel:
    """
    Hinge-loss OGD steps over a labelled batch, sample by sample in batch order.

    `one_vs_rest`: target y_{i,j} = +1 for the true format and -1 otherwise; w_j += η·y·Φ̂_j
    whenever y·g < 1. `literal`: one sign k_i (+1 iff the prediction was right) for all m scorers;
    w_j += η·k_i·Φ̂_j whenever k_i·g < 1. Scores use the weights as updated so far.
    """
    if model.update_rule == "literal" and predictions is None:
        raise UsageError("the literal update rule needs the classification-stage predictions")

    weights = [w.copy() for w in model.weights]
    eta = model.learning_rate
    for i, label in enumerate(labels):
        truth = model.position(label)
        literal_sign = 1.0 if predictions is not None and predictions[i] == label else -1.0
        for j, (w, e) in enumerate(zip(weights, embeddings)):
            x = e[i]
            if model.update_rule == "literal":
                y = literal_sign
            else:
                y = 1.0 if j == truth else -1.0
            if y * float(w @ x) < 1.0:
                w += eta * y * x
    return replace(model, weights=tuple(weights))


def update_batch(
    model: OgdModel,
    batch: LabeledBatch,
    predictions: Optional[Sequence[int]] = None,
    embeddings: Optional[Sequence[np.ndarray]] = None,
) -> OgdModel:
    """Model-update stage. Without labels the model is returned untouched."""
    if batch.labels is None:
        logger.debug("skipped update: batch %s carries no labels", batch.condition_tag)
        return model
    if len(batch) == 0:
        return model
    if embeddings is None:
        embeddings = embed_batch(model, batch.signals)
    return update_embedded(model, embeddings, batch.labels, predictions)


def process_stream_step(model: OgdModel, batch: LabeledBatch) -> Tuple[List[int], OgdModel]:
    """Classify a batch, then update on it if its labels are available."""
    if len(batch) == 0:
        return [], model
    embeddings = embed_batch(model, batch.signals)
    predictions = predict_embedded(model, embeddings)
    return predictions, update_batch(model, batch, predictions, embeddings)


def fit_partitionings(
    formats: Sequence[ModulationFormat],
    signals: Sequence[IqSignal],
    labels: Sequence[int],
    psi: int = DEFAULT_PSI,
    t: int = DEFAULT_T,
    rng_seed: int = 0,
) -> List[IsolationPartitioning]:
    """Fit one partitioning per format on the pooled I/Q points of that format's signals."""
    seeds = np.random.SeedSequence(rng_seed).generate_state(len(formats))
    by_format: Dict[int, List[IqSignal]] = {f.id: [] for f in formats}
    for signal, label in zip(signals, labels):
        if label in by_format:
            by_format[label].append(signal)

    partitionings = []
    for fmt, seed in zip(formats, seeds):
        pool = by_format[fmt.id]
        if not pool:
            raise FitError(f"no training signals of format {fmt.name} to fit its partitioning")
        partitionings.append(fit(pool, psi=psi, t=t, rng_seed=int(seed), source_format=fmt))
        logger.debug("fitted %s partitioning on %d signals", fmt.name, len(pool))
    return partitionings


def warm_start(
    model: OgdModel,
    signals: Sequence[IqSignal],
    labels: Sequence[int],
    epochs: int = 1,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> OgdModel:
    """Run the classify-then-update stages over the training set, `epochs` times, in batches."""
    for epoch in range(epochs):
        for start in range(0, len(signals), batch_size):
            batch = LabeledBatch(
                signals=list(signals[start:start + batch_size]),
                labels=list(labels[start:start + batch_size]),
                condition_tag=f"warm-start epoch {epoch}",
            )
            embeddings = embed_batch(model, batch.signals)
            predictions = predict_embedded(model, embeddings)
            model = update_embedded(model, embeddings, batch.labels, predictions)
    return model


def train(
    formats: Sequence[ModulationFormat],
    signals: Sequence[IqSignal],
    labels: Sequence[int],
    psi: int = DEFAULT_PSI,
    t: int = DEFAULT_T,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    update_rule: UpdateRule = "one_vs_rest",
    epochs: int = 1,
    batch_size: int = DEFAULT_BATCH_SIZE,
    rng_seed: int = 0,
) -> OgdModel:
    """Fit partitionings, init and warm-start: the initial classifier."""
    partitionings = fit_partitionings(formats, signals, labels, psi=psi, t=t, rng_seed=rng_seed)
    model = init(formats, partitionings, learning_rate=learning_rate, update_rule=update_rule)
    return warm_start(model, signals, labels, epochs=epochs, batch_size=batch_size)


def refit(
    model: OgdModel,
    signals: Sequence[IqSignal],
    labels: Sequence[int],
    rng_seed: int,
    epochs: int = 1,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> OgdModel:
    """
    Re-fit the partitionings on new labelled data and warm-start fresh weights on it.

    The old weights live in the old feature space and are discarded. Never called by the stream
    loop itself.
    """
    first = model.partitionings[0]
    return train(
        model.formats,
        signals,
        labels,
        psi=first.psi,
        t=first.t,
        learning_rate=model.learning_rate,
        update_rule=model.update_rule,
        epochs=epochs,
        batch_size=batch_size,
        rng_seed=rng_seed,
    )
