import os

import numpy as np
import pandas as pd
import pytest

from src.channel import ChannelCondition
from src.constellation import FORMAT_NAMES, get_format, parse_formats
from src.errors import ConfigurationError
from src.harness import (
    ExperimentConfig,
    ValueSpec,
    build_manifest,
    linearity_r2,
    run_experiment,
    runtime_benchmark,
    second_differences,
    similarity_matrix,
)
from src.harness.datagen import generate_stratified_batch, generate_training_set
from src.harness.config import ConditionSpec
from src.harness.similarity import cell_label
from src.paths import load_experiment_config

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")


def test_config_defaults_and_resolution(config_doc):
    del config_doc["batch_size"], config_doc["signal_length"], config_doc["classifier"]
    config_doc["stream"] = [{"num_batches": 2, "condition": {"snr_db": [10, 20]}, "repeat": 3}]
    config = ExperimentConfig.from_dict(config_doc)
    assert config.batch_size == 100
    assert config.signal_length == 1024
    assert config.classifier.psi == 128 and config.classifier.t == 75
    assert len(config.stream) == 3
    assert config.total_batches == 6
    assert config.to_dict()["stream"][0]["condition"]["snr_db"] == [10.0, 20.0]


def test_config_reports_every_problem(config_doc):
    config_doc["formats"] = ["BPSK", "FOOSK"]
    config_doc["batch_size"] = 0
    config_doc["stream"] = [{"num_batches": 0, "condition": {"snr_db": [20, 10], "doppler": 3}}]
    config_doc["classifier"]["update_rule"] = "adam"
    config_doc["runners"] = ["idk_ogd", "svm"]
    with pytest.raises(ConfigurationError) as info:
        ExperimentConfig.from_dict(config_doc)
    message = str(info.value)
    for fragment in (
        "formats", "batch_size", "stream[0].num_batches", "stream[0].condition.snr_db",
        "stream[0].condition.doppler", "classifier.update_rule", "runners",
    ):
        assert fragment in message
    assert len(info.value.problems) >= 7


def test_batch_size_must_be_divisible_by_format_count(config_doc):
    config_doc["batch_size"] = 9
    with pytest.raises(ConfigurationError, match="not divisible"):
        ExperimentConfig.from_dict(config_doc)


def test_overrides(config_doc):
    config = ExperimentConfig.from_dict(config_doc).with_overrides(trials=3, seed=9)
    assert (config.trials, config.seed) == (3, 9)
    with pytest.raises(ConfigurationError):
        config.with_overrides(trials=0)


def test_value_spec_draws():
    rng = np.random.default_rng(0)
    assert ValueSpec(15.0, 15.0).draw(rng) == 15.0
    grid = ValueSpec(0.0, 20.0, 2.0)
    assert set(grid.grid().tolist()) == set(range(0, 21, 2))
    assert all(grid.draw(rng) in set(range(0, 21, 2)) for _ in range(50))
    interval = ValueSpec(10.0, 20.0)
    draws = [interval.draw(rng) for _ in range(200)]
    assert min(draws) >= 10.0 and max(draws) <= 20.0 and len(set(draws)) > 100


def test_training_set_draws_one_condition_per_signal():
    formats = parse_formats("BPSK,QPSK")
    condition = ConditionSpec(snr_db=ValueSpec(0.0, 20.0))
    training = generate_training_set(formats, 30, condition, 16, seed=1)
    assert len(training) == 30
    assert set(training.labels) <= {f.id for f in formats}
    assert len({c.snr_db for c in training.conditions}) == 30


@pytest.mark.parametrize("seed", range(5))
def test_training_set_covers_every_format(seed):
    formats = parse_formats(",".join(FORMAT_NAMES))
    training = generate_training_set(formats, len(formats), ConditionSpec(), 16, seed=seed)
    assert sorted(training.labels) == [f.id for f in formats]
    assert len(set(generate_training_set(formats, 40, ConditionSpec(), 16, seed=seed).labels)) == 10


def test_smallest_valid_training_set_runs(config_doc):
    config_doc["formats"] = list(FORMAT_NAMES)
    config_doc["batch_size"] = 10
    config_doc["train"]["num_samples"] = 10
    config_doc["classifier"]["t"] = 5
    log = run_experiment(ExperimentConfig.from_dict(config_doc), threads=1)
    assert len(log.rows) == 1
    assert log.confusion["idk_ogd"].sum() == 10


def test_stratified_batch_has_equal_share_per_format():
    formats = parse_formats("BPSK,QPSK,8PSK")
    batch = generate_stratified_batch(formats, 12, ChannelCondition(snr_db=10), 16, np.random.default_rng(2))
    assert sorted(batch.labels) == sorted([f.id for f in formats] * 4)
    with pytest.raises(ConfigurationError):
        generate_stratified_batch(formats, 10, ChannelCondition(), 16, np.random.default_rng(2))


def test_separable_formats_are_classified(config_doc):
    log = run_experiment(ExperimentConfig.from_dict(config_doc), threads=1)
    assert len(log.rows) == 1
    row = log.rows[0]
    for runner in ("idk_ogd", "idk_frozen", "fknn"):
        assert row[f"acc_{runner}"] >= 0.95


def test_metrics_are_consistent_with_confusion(config_doc):
    config_doc["stream"] = [
        {"num_batches": 2, "condition": {"snr_db": 5}},
        {"num_batches": 1, "condition": {"snr_db": [0, 10]}, "labels_available": False},
    ]
    config = ExperimentConfig.from_dict(config_doc)
    log = run_experiment(config, threads=1)
    frame = log.metrics_frame()
    assert list(frame["batch"]) == [0, 1, 2]
    assert list(frame["lot"]) == [0, 0, 1]
    assert list(frame["labels_available"]) == [True, True, False]
    for runner in config.runners:
        counts = log.confusion[runner]
        assert counts.sum(axis=1).tolist() == [15, 15]
        correct = np.trace(counts)
        assert correct == pytest.approx(frame[f"acc_{runner}"].sum() * config.batch_size)
        assert frame[f"acc_{runner}"].between(0, 1).all()


def test_full_pipeline_is_deterministic(config_doc):
    config_doc["trials"] = 2
    config_doc["stream"] = [{"num_batches": 2, "condition": {"snr_db": [5, 15]}}]
    config = ExperimentConfig.from_dict(config_doc)
    first = run_experiment(config, threads=1)
    second = run_experiment(config, threads=2)
    pd.testing.assert_frame_equal(first.metrics_frame(), second.metrics_frame())
    pd.testing.assert_frame_equal(first.confusion_frame(), second.confusion_frame())
    assert [t["final_digest"] for t in first.trials] == [t["final_digest"] for t in second.trials]
    assert first.trials[0]["seed"] != first.trials[1]["seed"]


def test_withheld_labels_keep_warm_start_weights(config_doc):
    config_doc["stream"] = [
        {"num_batches": 2, "condition": {"snr_db": 10}, "labels_available": False, "repeat": 2}
    ]
    log = run_experiment(ExperimentConfig.from_dict(config_doc), threads=1)
    trial = log.trials[0]
    assert trial["final_digest"] == trial["warm_start_digest"]


def test_labelled_stream_changes_weights(config_doc):
    config_doc["stream"] = [{"num_batches": 2, "condition": {"snr_db": 10}}]
    log = run_experiment(ExperimentConfig.from_dict(config_doc), threads=1)
    assert log.trials[0]["final_digest"] != log.trials[0]["warm_start_digest"]


def test_summary_and_outputs(tmp_path, config_doc):
    config_doc["trials"] = 2
    config_doc["stream"] = [{"num_batches": 3, "condition": {"snr_db": 10}}]
    config = ExperimentConfig.from_dict(config_doc)
    log = run_experiment(config, threads=1)
    summary = log.summary_frame(window=2)
    ogd = summary[summary["runner"] == "idk_ogd"]
    assert ogd["window"].tolist() == [0, 1]
    assert ogd["first_batch"].tolist() == [0, 2]
    assert ogd["last_batch"].tolist() == [1, 2]
    assert (ogd["trials"] == 2).all()
    assert (summary["std_error"] >= 0).all()

    outputs = log.write(str(tmp_path), build_manifest(config, log), window=2)
    for path in outputs.values():
        assert os.path.isfile(path)
    metrics = pd.read_csv(outputs["metrics"])
    assert len(metrics) == 6
    assert {"acc_idk_ogd", "acc_idk_frozen", "acc_fknn", "degenerate"} <= set(metrics.columns)
    timings = pd.read_csv(outputs["timings"])
    assert set(timings["stage"]) == {"fit", "warm_start", "predict", "update"}


def test_similarity_matrix_properties():
    formats = parse_formats("8PSK,16APSK")
    conditions = [ChannelCondition(snr_db=15), ChannelCondition(snr_db=20)]
    matrix = similarity_matrix(formats, conditions, seed=3, psi=64, t=30, length=512)
    values = matrix.values
    assert matrix.labels == ["8PSK@15dB", "8PSK@20dB", "16APSK@15dB", "16APSK@20dB"]
    assert np.array_equal(values, values.T)
    assert (values >= 0).all() and (values <= 1).all()
    diagonal = np.diag(values)
    assert np.all(values <= np.sqrt(np.outer(diagonal, diagonal)) + 1e-12)
    assert matrix.to_frame().loc["8PSK@15dB", "16APSK@20dB"] == values[0, 3]


def test_same_format_pattern_holds_for_most_seeds():
    formats = parse_formats("8PSK,16APSK")
    conditions = [ChannelCondition(snr_db=15), ChannelCondition(snr_db=20)]
    hits = 0
    for seed in range(20):
        values = similarity_matrix(formats, conditions, seed=seed).values
        hits += min(values[0, 1], values[2, 3]) > values[:2, 2:].max()
    assert hits >= 18


def test_similarity_matrix_needs_two_cells():
    with pytest.raises(ConfigurationError):
        similarity_matrix(parse_formats("BPSK"), [ChannelCondition()], seed=0)


def test_single_format_two_conditions_overlap():
    matrix = similarity_matrix(
        parse_formats("QPSK"), [ChannelCondition(snr_db=10), ChannelCondition(snr_db=20)],
        seed=1, psi=32, t=10, length=256,
    )
    assert matrix.values.shape == (2, 2)
    assert matrix.values[0, 1] > 0


def test_cells_differing_only_in_impairments_get_distinct_labels():
    conditions = [
        ChannelCondition(snr_db=15),
        ChannelCondition(snr_db=15, phase_noise_level_dbc_hz=-35),
        ChannelCondition(snr_db=15, iq_amplitude_imbalance_db=-2.5),
    ]
    matrix = similarity_matrix(parse_formats("QPSK"), conditions, seed=1, psi=32, t=10, length=256)
    assert matrix.labels == ["QPSK@15dB", "QPSK@15dB/pn-35dBcHz", "QPSK@15dB/iq-2.5dB"]
    assert cell_label(get_format("BPSK"), ChannelCondition(20, -30, 1)) == "BPSK@20dB/pn-30dBcHz/iq1dB"


def test_linearity_helpers():
    x = [1000, 2000, 4000, 8000]
    assert linearity_r2(x, [2 * v + 3 for v in x]) == pytest.approx(1.0)
    assert linearity_r2(x, [1, 9, 2, 7]) < 0.5
    assert second_differences([1, 4, 9, 16]).tolist() == [2.0, 2.0]


def test_runtime_benchmark_rows(config_doc):
    config = ExperimentConfig.from_dict(config_doc)
    rows = runtime_benchmark(config, [10, 20, 30])
    assert [(r["size"], r["classifier"]) for r in rows] == [
        (10, "idk_ogd"), (10, "fknn"), (20, "idk_ogd"), (20, "fknn"), (30, "idk_ogd"), (30, "fknn"),
    ]
    for r in rows:
        assert r["total_time"] == pytest.approx(r["train_time"] + r["stream_time"])
        assert r["ratio"] >= 1.0
    with pytest.raises(ConfigurationError):
        runtime_benchmark(config, [20, 10])
    with pytest.raises(ConfigurationError):
        runtime_benchmark(config, [10])


@pytest.mark.parametrize(
    "name",
    ["su1", "su2", "su3", "su4", "ablation_wide_train", "ablation_narrow_train", "online_advantage", "matched"],
)
def test_bundled_configs_validate(name):
    config = load_experiment_config(os.path.join(CONFIG_DIR, f"{name}.json"))
    assert config.name == name
    assert config.batch_size % config.m == 0


def test_su1_has_110_batches_per_trial():
    config = load_experiment_config(os.path.join(CONFIG_DIR, "su1.json"))
    assert config.total_batches == 110
    assert config.m == 10


@pytest.mark.slow
def test_su1_runs_to_completion():
    config = load_experiment_config(os.path.join(CONFIG_DIR, "su1.json")).with_overrides(trials=1)
    log = run_experiment(config)
    assert len(log.rows) == 110


@pytest.mark.slow
def test_same_format_pattern_at_full_scale():
    formats = parse_formats("8PSK,16APSK")
    conditions = [ChannelCondition(snr_db=15), ChannelCondition(snr_db=20)]
    hits = 0
    for seed in range(100):
        values = similarity_matrix(formats, conditions, seed=seed, length=1024).values
        hits += min(values[0, 1], values[2, 3]) > values[:2, 2:].max()
    assert hits >= 95


@pytest.mark.slow
def test_online_update_beats_frozen_model():
    config = load_experiment_config(os.path.join(CONFIG_DIR, "online_advantage.json"))
    frame = run_experiment(config).metrics_frame()
    first = frame[frame["batch"] == 0]
    assert (first["acc_idk_ogd"] == first["acc_idk_frozen"]).all()
    final = frame[frame["batch"] >= 40].groupby("trial")[["acc_idk_ogd", "acc_idk_frozen"]].mean()
    wins = (final["acc_idk_ogd"] - final["acc_idk_frozen"] >= 0.05).sum()
    assert wins >= 8


@pytest.mark.slow
def test_matched_conditions_sanity():
    config = load_experiment_config(os.path.join(CONFIG_DIR, "matched.json"))
    log = run_experiment(config)
    assert log.mean_accuracy("idk_ogd", first_batch=19, last_batch=49) >= 0.5
    counts = log.confusion["idk_ogd"]
    for name in ("BPSK", "QPSK"):
        j = [f.name for f in config.formats].index(name)
        assert counts[j, j] / counts[j].sum() >= 0.95


@pytest.mark.slow
def test_runtime_grows_linearly_for_idk_and_quadratically_for_knn():
    config = load_experiment_config(os.path.join(CONFIG_DIR, "matched.json"))
    frame = pd.DataFrame(runtime_benchmark(config, [1000, 2000, 4000, 8000]))
    ogd = frame[frame["classifier"] == "idk_ogd"]
    knn = frame[frame["classifier"] == "fknn"]
    assert linearity_r2(ogd["size"], ogd["stream_time"]) >= 0.99
    assert (second_differences(knn["total_time"]) > 0).all()
    doubled = ogd.set_index("size")["stream_time"]
    assert doubled[8000] / doubled[4000] == pytest.approx(2.0, rel=0.25)
