"""
Streaming experiment runner.

Per trial: generate the training set, train every configured runner on it, then feed the test
stream batch by batch. Each lot draws one channel condition; each batch holds an equal number of
signals per format. Runners classify a batch before learning from it.
"""
import logging
from datetime import datetime, timezone
from typing import Dict, List, Optional

import numpy as np

from src.classifier import LabeledBatch, count_degenerate
from src.harness.config import ExperimentConfig
from src.harness.datagen import SignalSet, generate_stratified_batch, generate_training_set
from src.harness.metrics import MetricsLog, accuracy_column
from src.runners import BatchEmbeddings, StreamRunner, build_runner
from src.runners.idk_ogd import IdkOgdRunner
from src.schema import RunManifest, TimingRow
from src.utilities import default_threads, derive_seeds, run_multithreaded

logger = logging.getLogger(__name__)


def _build_runners(config: ExperimentConfig) -> Dict[str, StreamRunner]:
    return {name: build_runner(name, config.classifier) for name in config.runners}


def _train_runners(
    config: ExperimentConfig,
    runners: Dict[str, StreamRunner],
    training: SignalSet,
    fit_seed: int,
    trial: int,
) -> List[TimingRow]:
    timings: List[TimingRow] = []
    ogd = runners.get("idk_ogd")
    for name, runner in runners.items():
        if name == "idk_frozen" and isinstance(ogd, IdkOgdRunner):
            # Frozen copy of the same warm-started model; models are immutable so sharing is safe.
            runner.model = ogd.model
            continue
        stages = runner.train(config.formats, training.signals, training.labels, rng_seed=fit_seed)
        timings.extend(
            {"trial": trial, "runner": name, "stage": stage, "batch": -1, "seconds": seconds}
            for stage, seconds in stages.items()
        )
    return timings


def run_trial(config: ExperimentConfig, trial: int, seed: int) -> MetricsLog:
    """One full trial; deterministic given `seed`."""
    train_seed, fit_seed, lot_seed, batch_seed = derive_seeds(seed, 4)
    if config.train.seed is not None:
        train_seed = config.train.seed
    log = MetricsLog(config.formats, config.runners)
    logger.info("trial %d: seed %d", trial, seed)

    training = generate_training_set(
        config.formats,
        config.train.num_samples,
        config.train.condition,
        config.signal_length,
        train_seed,
    )
    runners = _build_runners(config)
    ordered = [runners[name] for name in config.runners]
    # config.runners lists idk_ogd before idk_frozen, which reuses its model
    log.timings.extend(_train_runners(config, runners, training, fit_seed, trial))

    ogd = runners.get("idk_ogd")
    warm_start_digest = ogd.model.digest() if isinstance(ogd, IdkOgdRunner) else None
    idk = next((r for r in ordered if isinstance(r, IdkOgdRunner)), None)

    lot_rng = np.random.default_rng(lot_seed)
    batch_rng = np.random.default_rng(batch_seed)
    lot_conditions = []
    batch_index = 0
    for lot_index, lot in enumerate(config.stream):
        cond = lot.condition.draw(lot_rng)
        lot_conditions.append(cond.to_dict())
        logger.info(
            "trial %d lot %d: snr %.2f dB, phase noise %.1f dBc/Hz, imbalance %.2f dB, %d batches",
            trial, lot_index, cond.snr_db, cond.phase_noise_level_dbc_hz,
            cond.iq_amplitude_imbalance_db, lot.num_batches,
        )
        if not lot.labels_available:
            logger.warning("trial %d lot %d withholds labels: online updates are skipped", trial, lot_index)

        for _ in range(lot.num_batches):
            generated = generate_stratified_batch(
                config.formats, config.batch_size, cond, config.signal_length, batch_rng
            )
            batch = LabeledBatch(
                signals=generated.signals,
                labels=generated.labels if lot.labels_available else None,
                condition_tag=lot_index,
            )
            embeddings = BatchEmbeddings(batch.signals)
            row = {
                "trial": trial,
                "batch": batch_index,
                "lot": lot_index,
                "snr_db": cond.snr_db,
                "phase_noise_dbc_hz": cond.phase_noise_level_dbc_hz,
                "iq_imbalance_db": cond.iq_amplitude_imbalance_db,
                "labels_available": lot.labels_available,
                "degenerate": 0,
            }
            if idk is not None:
                row["degenerate"] = count_degenerate(embeddings.get(idk.model))

            for name, runner in zip(config.runners, ordered):
                outcome = runner.step(batch, embeddings)
                accuracy = log.record_predictions(name, generated.labels, outcome.predictions)
                row[accuracy_column(name)] = accuracy
                log.timings.append({
                    "trial": trial, "runner": name, "stage": "predict",
                    "batch": batch_index, "seconds": outcome.predict_seconds,
                })
                log.timings.append({
                    "trial": trial, "runner": name, "stage": "update",
                    "batch": batch_index, "seconds": outcome.update_seconds,
                })
                logger.debug("trial %d batch %d %s: accuracy %.3f", trial, batch_index, name, accuracy)
            log.rows.append(row)
            batch_index += 1

    log.trials.append({
        "trial": trial,
        "seed": seed,
        "lot_conditions": lot_conditions,
        "warm_start_digest": warm_start_digest,
        "final_digest": ogd.model.digest() if isinstance(ogd, IdkOgdRunner) else None,
    })
    logger.info("trial %d: finished %d batches", trial, batch_index)
    return log


def run_experiment(config: ExperimentConfig, threads: Optional[int] = None) -> MetricsLog:
    """
    Run every trial of `config` and merge the logs in trial order.

    Args:
        config: A validated experiment config
        threads: Trials run in parallel on this many threads (default: number of cores)

    Returns:
        The merged MetricsLog; identical for identical configs whatever `threads` is
    """
    seeds = derive_seeds(config.seed, config.trials)
    tasks = [lambda i=i, s=s: run_trial(config, i, s) for i, s in enumerate(seeds)]
    threads = default_threads() if threads is None else threads
    if threads > 1 and len(tasks) > 1:
        logs = run_multithreaded(tasks, threads=min(threads, len(tasks)), exit_on_exception=True)
    else:
        logs = [task() for task in tasks]

    merged = MetricsLog(config.formats, config.runners)
    for log in logs:
        merged.extend(log)
    return merged


def build_manifest(config: ExperimentConfig, log: MetricsLog, config_path: Optional[str] = None) -> RunManifest:
    return {
        "name": config.name,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "config_path": config_path,
        "resolved_config": config.to_dict(),
        "trial_seeds": derive_seeds(config.seed, config.trials),
        "trials": log.trials,
        "outputs": {},
    }

