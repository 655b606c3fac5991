"""TypedDict definitions for config files, CSV rows and run manifests."""
import sys
from typing import Dict, Any, List, Literal, Optional, Union

if sys.version_info >= (3, 11):
    from typing import NotRequired, TypedDict
else:
    from typing_extensions import NotRequired, TypedDict

FormatName = Literal[
    "4ASK",
    "8ASK",
    "BPSK",
    "QPSK",
    "8PSK",
    "16APSK",
    "32APSK",
    "16QAM",
    "32QAM",
    "64QAM",
]

RunnerName = Literal["idk_ogd", "idk_frozen", "fknn"]

UpdateRule = Literal["one_vs_rest", "literal"]


###########################################
#   Experiment config file (JSON or YAML)
###########################################
class GridSpec(TypedDict):
    """A [lo, hi] interval sampled on lo, lo+step, ..., hi."""
    range: List[float]
    step: float


# A condition field is a fixed value, a [lo, hi] interval or a stepped grid.
ConditionValue = Union[float, int, List[float], GridSpec]


class ChannelConditionSpec(TypedDict, total=False):
    """Channel condition as written in a config file. Missing fields mean "impairment absent"."""
    snr_db: ConditionValue
    phase_noise_dbc_hz: ConditionValue
    iq_imbalance_db: ConditionValue


class TrainSpecFile(TypedDict):
    num_samples: int
    condition: ChannelConditionSpec
    seed: NotRequired[int]


class LotSpecFile(TypedDict):
    num_batches: int
    condition: ChannelConditionSpec
    labels_available: NotRequired[bool]
    repeat: NotRequired[int]


class ClassifierParamsFile(TypedDict, total=False):
    psi: int
    t: int
    learning_rate: float
    update_rule: UpdateRule
    warm_start_epochs: int
    k: int


class ExperimentConfigFile(TypedDict):
    """Top-level structure of an experiment config."""
    name: NotRequired[str]
    formats: List[str]
    train: TrainSpecFile
    stream: List[LotSpecFile]
    batch_size: NotRequired[int]
    signal_length: NotRequired[int]
    trials: NotRequired[int]
    seed: NotRequired[int]
    window: NotRequired[int]
    classifier: NotRequired[ClassifierParamsFile]
    runners: NotRequired[List[RunnerName]]


###########################################
#   Output rows
###########################################
class MetricsRow(TypedDict):
    """One row of metrics.csv: one batch of one trial."""
    trial: int
    batch: int
    lot: int
    snr_db: float
    phase_noise_dbc_hz: float
    iq_imbalance_db: float
    labels_available: bool
    degenerate: int
    # plus one `acc_<runner>` column per configured runner


class ConfusionRow(TypedDict):
    runner: RunnerName
    true_format: str
    predicted_format: str
    count: int


class TimingRow(TypedDict):
    trial: int
    runner: str
    stage: Literal["fit", "warm_start", "predict", "update"]
    batch: int
    seconds: float


class BenchmarkRow(TypedDict):
    size: int
    classifier: RunnerName
    train_time: float
    stream_time: float
    total_time: float
    ratio: float


class TrialRecord(TypedDict):
    trial: int
    seed: int
    lot_conditions: List[Dict[str, float]]
    # SHA-256 of the idk_ogd weights after warm start and after the stream; None without idk_ogd
    warm_start_digest: Optional[str]
    final_digest: Optional[str]


class RunManifest(TypedDict):
    """Everything needed to reproduce a run: resolved parameters and all seeds."""
    name: str
    created_at: str
    config_path: Optional[str]
    resolved_config: Dict[str, Any]
    trial_seeds: List[int]
    trials: List[TrialRecord]
    outputs: Dict[str, str]
