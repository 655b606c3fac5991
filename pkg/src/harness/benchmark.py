"""Runtime of IDK-OGD and fKNN over growing test streams."""
import logging
import math
import time
from typing import List, Sequence, Tuple

import numpy as np

from src.classifier import LabeledBatch
from src.errors import ConfigurationError
from src.harness.config import ExperimentConfig
from src.harness.datagen import generate_stratified_batch, generate_training_set
from src.runners import BatchEmbeddings, build_runner
from src.schema import BenchmarkRow, RunnerName
from src.utilities import derive_seeds

logger = logging.getLogger(__name__)

BENCHMARK_RUNNERS: Tuple[RunnerName, ...] = ("idk_ogd", "fknn")


def linearity_r2(x: Sequence[float], y: Sequence[float]) -> float:
    """Coefficient of determination of the least-squares line through (x, y)."""
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    residual = np.sum((y - (slope * x + intercept)) ** 2)
    total = np.sum((y - y.mean()) ** 2)
    return 1.0 if total == 0 else float(1 - residual / total)


def second_differences(y: Sequence[float]) -> np.ndarray:
    return np.diff(np.asarray(y, dtype=np.float64), n=2)


def runtime_benchmark(
    config: ExperimentConfig,
    test_sizes: Sequence[int],
    runners: Sequence[RunnerName] = BENCHMARK_RUNNERS,
) -> List[BenchmarkRow]:
    """
    Train each runner once per size on the config's training set, then stream `size` test signals
    (rounded up to whole batches) drawn under the lots' conditions in order, cycling through them.

    Signal generation is excluded from every timing. Streaming time covers classification and
    learning; ratio = (train_time + stream_time) / train_time.

    Args:
        config: Experiment config supplying formats, training set, lots and classifier params
        test_sizes: Strictly increasing stream sizes, at least 2
        runners: Runners to time

    Returns:
        One row per (size, runner)
    """
    sizes = list(test_sizes)
    if len(sizes) < 2:
        raise ConfigurationError("runtime benchmark needs at least 2 test sizes")
    if any(s < 1 for s in sizes) or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ConfigurationError(f"test sizes must be positive and strictly increasing, got {sizes}")

    train_seed, fit_seed, lot_seed, batch_seed = derive_seeds(config.seed, 4)
    training = generate_training_set(
        config.formats, config.train.num_samples, config.train.condition, config.signal_length,
        config.train.seed if config.train.seed is not None else train_seed,
    )
    lot_rng = np.random.default_rng(lot_seed)
    conditions = [lot.condition.draw(lot_rng) for lot in config.stream]
    labels_available = [lot.labels_available for lot in config.stream]

    # Batches for the largest size; smaller sizes stream a prefix.
    batch_rng = np.random.default_rng(batch_seed)
    batches = []
    for i in range(math.ceil(sizes[-1] / config.batch_size)):
        lot = i % len(conditions)
        generated = generate_stratified_batch(
            config.formats, config.batch_size, conditions[lot], config.signal_length, batch_rng
        )
        batches.append(LabeledBatch(
            generated.signals, generated.labels if labels_available[lot] else None, lot
        ))

    rows: List[BenchmarkRow] = []
    for size in sizes:
        count = math.ceil(size / config.batch_size)
        for name in runners:
            runner = build_runner(name, config.classifier)
            start = time.perf_counter()
            runner.train(config.formats, training.signals, training.labels, rng_seed=fit_seed)
            train_time = time.perf_counter() - start

            start = time.perf_counter()
            for batch in batches[:count]:
                runner.step(batch, BatchEmbeddings(batch.signals))
            stream_time = time.perf_counter() - start

            total = train_time + stream_time
            rows.append({
                "size": size,
                "classifier": name,
                "train_time": train_time,
                "stream_time": stream_time,
                "total_time": total,
                "ratio": total / train_time,
            })
            logger.info("%s size %d: train %.3fs, stream %.3fs", name, size, train_time, stream_time)
    return rows
