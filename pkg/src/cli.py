"""
Command-line interface: dataset generation, model fitting, stream simulation, experiment runs
and diagnostics.

Exit codes: 0 success, 2 invalid arguments, config or fit parameters (including missing input
files), 1 anything else.
"""
import logging
import os
from typing import List, Optional

import click
import numpy as np
import pandas as pd

from src import classifier
from src.channel import NO_PHASE_NOISE_DBC_HZ, ChannelCondition
from src.classifier import DEFAULT_BATCH_SIZE, DEFAULT_LEARNING_RATE, LabeledBatch
from src.constellation import parse_formats
from src.dataset import Dataset, read_dataset, write_dataset
from src.errors import ConfigurationError, FitError, UsageError
from src.harness import (
    build_manifest,
    linearity_r2,
    run_experiment,
    runtime_benchmark,
    second_differences,
    similarity_matrix,
)
from src.harness.benchmark import BENCHMARK_RUNNERS
from src.harness.config import ConditionSpec, ValueSpec
from src.harness.datagen import generate_training_set
from src.isokernel import DEFAULT_PSI, DEFAULT_T
from src.paths import ensure_parent_dir, get_output_dir, load_experiment_config
from src.storage import load_checkpoint, save_checkpoint, save_partitionings
from src.utilities import configure_logging, default_threads

logger = logging.getLogger(__name__)

VERSION = "0.1.0"


class InputError(click.ClickException):
    """Invalid config, argument or missing input: exit code 2."""
    exit_code = 2


class AmcGroup(click.Group):
    """Maps library errors to exit codes; click's own usage errors already exit with 2."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except (click.ClickException, click.exceptions.Exit, click.Abort):
            raise
        except (ConfigurationError, FitError, UsageError, FileNotFoundError) as e:
            raise InputError(str(e)) from e
        except Exception as e:
            logger.exception("command failed")
            raise click.ClickException(f"An error occurred: {e}") from e


def parse_value_spec(text: str, option: str) -> ValueSpec:
    """'20' is a fixed value, '10:20' a uniform interval and '0:6:2' the grid 0, 2, 4, 6."""
    problems: List[str] = []
    try:
        parts = [float(p) for p in text.split(":")]
    except ValueError:
        raise ConfigurationError(f"{option}: expected VALUE, LO:HI or LO:HI:STEP, got '{text}'")
    if len(parts) == 1:
        spec = ValueSpec.parse(parts[0], option, problems)
    elif len(parts) == 2:
        spec = ValueSpec.parse(parts, option, problems)
    elif len(parts) == 3:
        spec = ValueSpec.parse({"range": parts[:2], "step": parts[2]}, option, problems)
    else:
        problems.append(f"{option}: expected VALUE, LO:HI or LO:HI:STEP, got '{text}'")
    if problems:
        raise ConfigurationError(problems)
    return spec


def parse_float_list(text: str, option: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"{option}: expected comma-separated numbers, got '{text}'")
    if not values:
        raise ConfigurationError(f"{option}: at least one value is required")
    return values


@click.group(cls=AmcGroup)
@click.version_option(VERSION, prog_name="idk-amc")
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"], case_sensitive=False),
    default="INFO",
    show_default=True,
    help="Set the logging level",
)
@click.option(
    "--log-file",
    type=click.Path(dir_okay=False),
    default=None,
    help="Path to a file where logs should be written (default: stderr)",
)
def cli(log_level: str, log_file: Optional[str]):
    """Online modulation classification with the Isolation Distributional Kernel."""
    configure_logging(log_level, log_file)


@cli.command()
@click.option("--formats", required=True, help="Comma-separated format names, e.g. BPSK,QPSK")
@click.option("--n", "count", type=click.IntRange(min=1), required=True, help="Number of signals")
@click.option("--length", type=click.IntRange(min=1), default=1024, show_default=True, help="Samples per signal")
@click.option("--snr", default="100", show_default=True, help="SNR in dB: VALUE, LO:HI or LO:HI:STEP")
@click.option("--phase-noise", default=str(NO_PHASE_NOISE_DBC_HZ), show_default=True, help="Phase noise in dBc/Hz")
@click.option("--iq-imbalance", default="0", show_default=True, help="I/Q amplitude imbalance in dB")
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False), required=True, help="Dataset file to write")
def gen(formats, count, length, snr, phase_noise, iq_imbalance, seed, output):
    """Generate a dataset file of impaired signals, formats assigned uniformly at random."""
    format_list = parse_formats(formats)
    condition = ConditionSpec(
        snr_db=parse_value_spec(snr, "--snr"),
        phase_noise_dbc_hz=parse_value_spec(phase_noise, "--phase-noise"),
        iq_imbalance_db=parse_value_spec(iq_imbalance, "--iq-imbalance"),
    )
    generated = generate_training_set(format_list, count, condition, length, seed)
    dataset = Dataset.from_signals(format_list, generated.signals, generated.labels, generated.conditions)
    write_dataset(ensure_parent_dir(output), dataset)

    click.echo(f"Wrote {len(dataset)} signals of length {length} to {output}")
    for name, n in dataset.counts().items():
        click.echo(f"  {name}: {n}")
    conditions = dataset.conditions
    for column, label in enumerate(("snr dB", "phase noise dBc/Hz", "iq imbalance dB")):
        click.echo(f"  {label}: {conditions[:, column].min():g} .. {conditions[:, column].max():g}")


@cli.command()
@click.option("--dataset", "dataset_path", type=click.Path(dir_okay=False), required=True)
@click.option("--psi", type=click.IntRange(min=2), default=DEFAULT_PSI, show_default=True)
@click.option("--t", "t", type=click.IntRange(min=1), default=DEFAULT_T, show_default=True)
@click.option("--learning-rate", type=click.FloatRange(min=0), default=DEFAULT_LEARNING_RATE, show_default=True)
@click.option("--update-rule", type=click.Choice(list(classifier.UPDATE_RULES)), default="one_vs_rest", show_default=True)
@click.option("--epochs", type=click.IntRange(min=0), default=1, show_default=True, help="Warm-start passes")
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False), required=True, help="Checkpoint file to write")
@click.option("--partitionings", "partitionings_path", type=click.Path(dir_okay=False), default=None,
              help="Partitioning file to write (default: next to the checkpoint)")
def fit(dataset_path, psi, t, learning_rate, update_rule, epochs, seed, output, partitionings_path):
    """Fit per-format partitionings on a dataset and warm-start IDK-OGD on it."""
    dataset = read_dataset(dataset_path)
    if psi > dataset.signal_length:
        raise ConfigurationError(f"--psi {psi} exceeds the dataset's signal length {dataset.signal_length}")
    model = classifier.train(
        dataset.formats,
        dataset.signals(),
        dataset.labels(),
        psi=psi,
        t=t,
        learning_rate=learning_rate,
        update_rule=update_rule,
        epochs=epochs,
        rng_seed=seed,
    )
    partitionings_path = partitionings_path or os.path.splitext(output)[0] + ".partitionings.npz"
    save_partitionings(ensure_parent_dir(partitionings_path), model.partitionings)
    save_checkpoint(ensure_parent_dir(output), model, partitionings_path)
    click.echo(f"Fitted {model.m} formats (psi={psi}, t={t}) on {len(dataset)} signals")
    click.echo(f"Checkpoint: {output}")
    click.echo(f"Partitionings: {partitionings_path}")


@cli.command()
@click.option("--checkpoint", "checkpoint_path", type=click.Path(dir_okay=False), required=True)
@click.option("--dataset", "dataset_path", type=click.Path(dir_okay=False), required=True)
@click.option("--batch-size", type=click.IntRange(min=1), default=DEFAULT_BATCH_SIZE, show_default=True)
@click.option("--no-labels", is_flag=True, default=False, help="Withhold ground truth: classify only")
@click.option("--predictions", "-o", "predictions_path", type=click.Path(dir_okay=False), required=True,
              help="Predictions CSV to write")
@click.option("--output-checkpoint", type=click.Path(dir_okay=False), default=None,
              help="Write the model after the stream here")
def stream(checkpoint_path, dataset_path, batch_size, no_labels, predictions_path, output_checkpoint):
    """Feed a dataset to a checkpointed model batch by batch, in file order."""
    model = load_checkpoint(checkpoint_path)
    dataset = read_dataset(dataset_path)
    signals, labels = dataset.signals(), dataset.labels()
    names = {fmt.id: fmt.name for fmt in model.formats}
    unknown = [fmt.name for fmt in dataset.formats if fmt.id not in names]
    if unknown and not no_labels:
        raise ConfigurationError(f"dataset holds formats the model does not know: {', '.join(unknown)}")

    rows = []
    for batch_index, start in enumerate(range(0, len(signals), batch_size)):
        batch = LabeledBatch(
            signals=signals[start:start + batch_size],
            labels=None if no_labels else labels[start:start + batch_size],
        )
        predictions, model = classifier.process_stream_step(model, batch)
        for offset, predicted in enumerate(predictions):
            truth = labels[start + offset]
            rows.append({
                "index": start + offset,
                "batch": batch_index,
                "true_format": dataset.format_names[dataset.format_index[start + offset]],
                "predicted_format": names[predicted],
                "correct": truth == predicted,
            })
    frame = pd.DataFrame(rows, columns=["index", "batch", "true_format", "predicted_format", "correct"])
    frame.to_csv(ensure_parent_dir(predictions_path), index=False)

    if output_checkpoint:
        partitionings_path = os.path.splitext(output_checkpoint)[0] + ".partitionings.npz"
        save_partitionings(ensure_parent_dir(partitionings_path), model.partitionings)
        save_checkpoint(ensure_parent_dir(output_checkpoint), model, partitionings_path)
    click.echo(f"Streamed {len(frame)} signals in {frame['batch'].nunique()} batches")
    click.echo(f"Accuracy: {frame['correct'].mean():.4f}")


@cli.command()
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option("--trials", type=int, default=None, help="Override the config's trial count")
@click.option("--seed", type=int, default=None, help="Override the config's seed")
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Parallel trials (default: all cores)")
@click.option("--output-dir", type=click.Path(file_okay=False), default=None,
              help="Output directory (default: runs/<config name>)")
def run(config_path, trials, seed, threads, output_dir):
    """Run a streaming experiment and write its metrics."""
    config = load_experiment_config(config_path).with_overrides(trials=trials, seed=seed)
    threads = threads or default_threads()
    logger.info(
        "running %s: %d trials, %d batches per trial, %d threads",
        config.name, config.trials, config.total_batches, threads,
    )
    log = run_experiment(config, threads=threads)
    output_dir = get_output_dir(config.name, output_dir)
    outputs = log.write(output_dir, build_manifest(config, log, config_path), window=config.window)

    click.echo(f"Experiment {config.name}: {config.trials} trials x {config.total_batches} batches")
    for runner in config.runners:
        click.echo(f"  {runner}: mean accuracy {log.mean_accuracy(runner):.4f}")
    for kind, path in outputs.items():
        click.echo(f"  {kind}: {path}")


@cli.command()
@click.option("--formats", required=True, help="Comma-separated format names")
@click.option("--snr", default="15,20", show_default=True, help="Comma-separated SNRs in dB, one cell each")
@click.option("--phase-noise", type=float, default=NO_PHASE_NOISE_DBC_HZ, show_default=True)
@click.option("--iq-imbalance", type=float, default=0.0, show_default=True)
@click.option("--length", type=click.IntRange(min=1), default=1024, show_default=True)
@click.option("--psi", type=click.IntRange(min=2), default=DEFAULT_PSI, show_default=True)
@click.option("--t", "t", type=click.IntRange(min=1), default=DEFAULT_T, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False), required=True, help="CSV file to write")
def simmatrix(formats, snr, phase_noise, iq_imbalance, length, psi, t, seed, output):
    """Pairwise IDK similarity of one signal per (format, SNR) cell."""
    conditions = [
        ChannelCondition(value, phase_noise, iq_imbalance) for value in parse_float_list(snr, "--snr")
    ]
    matrix = similarity_matrix(parse_formats(formats), conditions, seed, psi=psi, t=t, length=length)
    matrix.to_frame().to_csv(ensure_parent_dir(output), index_label="cell")
    click.echo(f"Wrote {len(matrix.labels)}x{len(matrix.labels)} similarity matrix to {output}")


@cli.command()
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option("--sizes", default="1000,2000,4000,8000", show_default=True, help="Comma-separated test stream sizes")
@click.option("--seed", type=int, default=None, help="Override the config's seed")
@click.option("--output", "-o", type=click.Path(dir_okay=False), required=True, help="CSV file to write")
def bench(config_path, sizes, seed, output):
    """Time training and streaming of IDK-OGD and fKNN over growing test streams."""
    config = load_experiment_config(config_path).with_overrides(seed=seed)
    size_list = [int(s) for s in parse_float_list(sizes, "--sizes")]
    rows = runtime_benchmark(config, size_list)
    frame = pd.DataFrame(rows)
    frame.to_csv(ensure_parent_dir(output), index=False)

    click.echo(f"Wrote {len(frame)} timing rows to {output}")
    for name in BENCHMARK_RUNNERS:
        part = frame[frame["classifier"] == name]
        r2 = linearity_r2(part["size"], part["ratio"])
        convex = bool(np.all(second_differences(part["total_time"]) > 0)) if len(part) >= 3 else None
        click.echo(f"  {name}: ratio linear fit R^2 {r2:.4f}, total time convex {convex}")


def main():
    cli(prog_name="idk-amc")


if __name__ == "__main__":
    main()
