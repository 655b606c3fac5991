"""
Declarative experiment configuration.

A config names the candidate formats, the training set (size and channel conditions) and the test
stream as a list of lots. Condition fields accept a fixed value, a [lo, hi] interval drawn
uniformly, or {"range": [lo, hi], "step": s} drawn uniformly from the grid lo, lo+s, ..., hi.
"""
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.channel import NO_PHASE_NOISE_DBC_HZ, NOISELESS_SNR_DB, ChannelCondition
from src.constellation import ModulationFormat, parse_formats
from src.errors import ConfigurationError
from src.runners import RUNNER_NAMES
from src.runners.base import ClassifierParams
from src.schema import ConditionValue, RunnerName

CONDITION_FIELDS: Dict[str, Tuple[str, float]] = {
    # config key -> (ChannelCondition attribute, value when absent)
    "snr_db": ("snr_db", NOISELESS_SNR_DB),
    "phase_noise_dbc_hz": ("phase_noise_level_dbc_hz", NO_PHASE_NOISE_DBC_HZ),
    "iq_imbalance_db": ("iq_amplitude_imbalance_db", 0.0),
}


@dataclass(frozen=True)
class ValueSpec:
    """A fixed value (lo == hi), a continuous interval, or a stepped grid."""
    lo: float
    hi: float
    step: Optional[float] = None

    @property
    def is_fixed(self) -> bool:
        return self.lo == self.hi

    def grid(self) -> np.ndarray:
        count = int(math.floor((self.hi - self.lo) / self.step + 1e-9)) + 1
        return self.lo + self.step * np.arange(count)

    def draw(self, rng: np.random.Generator) -> float:
        if self.is_fixed:
            return float(self.lo)
        if self.step is not None:
            return float(rng.choice(self.grid()))
        return float(rng.uniform(self.lo, self.hi))

    def to_json(self) -> ConditionValue:
        if self.is_fixed:
            return self.lo
        if self.step is not None:
            return {"range": [self.lo, self.hi], "step": self.step}
        return [self.lo, self.hi]

    @classmethod
    def parse(cls, value: Any, path: str, problems: List[str]) -> "ValueSpec":
        if isinstance(value, bool):
            problems.append(f"{path}: expected a number, a [lo, hi] pair or a grid, got {value!r}")
            return cls(0.0, 0.0)
        if isinstance(value, (int, float)):
            return cls(float(value), float(value))
        if isinstance(value, dict):
            bounds, step = value.get("range"), value.get("step")
            if not isinstance(step, (int, float)) or isinstance(step, bool) or step <= 0:
                problems.append(f"{path}.step: must be a positive number")
                return cls(0.0, 0.0)
            spec = cls.parse(bounds, f"{path}.range", problems)
            return cls(spec.lo, spec.hi, float(step))
        if (
            isinstance(value, (list, tuple))
            and len(value) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
        ):
            lo, hi = float(value[0]), float(value[1])
            if lo > hi:
                problems.append(f"{path}: lower bound {lo} exceeds upper bound {hi}")
            return cls(lo, hi)
        problems.append(f"{path}: expected a number, a [lo, hi] pair or a grid, got {value!r}")
        return cls(0.0, 0.0)


@dataclass(frozen=True)
class ConditionSpec:
    snr_db: ValueSpec = ValueSpec(NOISELESS_SNR_DB, NOISELESS_SNR_DB)
    phase_noise_dbc_hz: ValueSpec = ValueSpec(NO_PHASE_NOISE_DBC_HZ, NO_PHASE_NOISE_DBC_HZ)
    iq_imbalance_db: ValueSpec = ValueSpec(0.0, 0.0)

    def draw(self, rng: np.random.Generator) -> ChannelCondition:
        return ChannelCondition(
            snr_db=self.snr_db.draw(rng),
            phase_noise_level_dbc_hz=self.phase_noise_dbc_hz.draw(rng),
            iq_amplitude_imbalance_db=self.iq_imbalance_db.draw(rng),
        )

    def to_json(self) -> Dict[str, ConditionValue]:
        return {key: getattr(self, key).to_json() for key in CONDITION_FIELDS}

    @classmethod
    def fixed(cls, cond: ChannelCondition) -> "ConditionSpec":
        return cls(
            snr_db=ValueSpec(cond.snr_db, cond.snr_db),
            phase_noise_dbc_hz=ValueSpec(cond.phase_noise_level_dbc_hz, cond.phase_noise_level_dbc_hz),
            iq_imbalance_db=ValueSpec(cond.iq_amplitude_imbalance_db, cond.iq_amplitude_imbalance_db),
        )

    @classmethod
    def parse(cls, value: Any, path: str, problems: List[str]) -> "ConditionSpec":
        if value is None:
            return cls()
        if not isinstance(value, dict):
            problems.append(f"{path}: expected a mapping of channel condition fields")
            return cls()
        unknown = sorted(set(value) - set(CONDITION_FIELDS))
        for key in unknown:
            problems.append(f"{path}.{key}: unknown channel condition field")
        fields = {
            key: ValueSpec.parse(value[key], f"{path}.{key}", problems)
            for key in CONDITION_FIELDS
            if key in value
        }
        return cls(**fields)


@dataclass(frozen=True)
class TrainSpec:
    num_samples: int
    condition: ConditionSpec = ConditionSpec()
    seed: Optional[int] = None


@dataclass(frozen=True)
class LotSpec:
    num_batches: int
    condition: ConditionSpec = ConditionSpec()
    labels_available: bool = True


def _int_field(doc: Dict, key: str, path: str, default: Optional[int], minimum: int, problems: List[str]) -> int:
    value = doc.get(key, default)
    if value is None:
        problems.append(f"{path}{key}: required")
        return minimum
    if not isinstance(value, int) or isinstance(value, bool):
        problems.append(f"{path}{key}: expected an integer, got {value!r}")
        return minimum
    if value < minimum:
        problems.append(f"{path}{key}: must be >= {minimum}, got {value}")
        return minimum
    return value


@dataclass(frozen=True)
class ExperimentConfig:
    formats: Tuple[ModulationFormat, ...]
    train: TrainSpec
    stream: Tuple[LotSpec, ...]
    name: str = "experiment"
    batch_size: int = 100
    signal_length: int = 1024
    trials: int = 1
    seed: int = 0
    window: int = 10
    classifier: ClassifierParams = field(default_factory=ClassifierParams)
    runners: Tuple[RunnerName, ...] = RUNNER_NAMES

    @property
    def m(self) -> int:
        return len(self.formats)

    @property
    def total_batches(self) -> int:
        return sum(lot.num_batches for lot in self.stream)

    def with_overrides(self, trials: Optional[int] = None, seed: Optional[int] = None) -> "ExperimentConfig":
        config = self
        if trials is not None:
            if trials < 1:
                raise ConfigurationError(f"trials: must be >= 1, got {trials}")
            config = replace(config, trials=trials)
        if seed is not None:
            config = replace(config, seed=seed)
        return config

    def to_dict(self) -> Dict[str, Any]:
        """Resolved config, with repeated lots expanded, in config-file form."""
        return {
            "name": self.name,
            "formats": [f.name for f in self.formats],
            "batch_size": self.batch_size,
            "signal_length": self.signal_length,
            "trials": self.trials,
            "seed": self.seed,
            "window": self.window,
            "train": {
                "num_samples": self.train.num_samples,
                "condition": self.train.condition.to_json(),
                **({"seed": self.train.seed} if self.train.seed is not None else {}),
            },
            "stream": [
                {
                    "num_batches": lot.num_batches,
                    "condition": lot.condition.to_json(),
                    "labels_available": lot.labels_available,
                }
                for lot in self.stream
            ],
            "classifier": self.classifier.to_dict(),
            "runners": list(self.runners),
        }

    @classmethod
    def from_dict(cls, doc: Any) -> "ExperimentConfig":
        """Validate a config document, reporting every offending field at once."""
        if not isinstance(doc, dict):
            raise ConfigurationError("config: expected a mapping at the top level")
        problems: List[str] = []

        formats: Tuple[ModulationFormat, ...] = ()
        try:
            formats = tuple(parse_formats(doc.get("formats") or []))
        except ConfigurationError as e:
            problems.extend(f"formats: {p}" for p in e.problems)

        batch_size = _int_field(doc, "batch_size", "", 100, 1, problems)
        signal_length = _int_field(doc, "signal_length", "", 1024, 1, problems)
        trials = _int_field(doc, "trials", "", 1, 1, problems)
        seed = _int_field(doc, "seed", "", 0, 0, problems)
        window = _int_field(doc, "window", "", 10, 1, problems)
        if formats and batch_size % len(formats):
            problems.append(
                f"batch_size: {batch_size} is not divisible by the {len(formats)} formats (stratified batches)"
            )

        train_doc = doc.get("train")
        if not isinstance(train_doc, dict):
            problems.append("train: required mapping")
            train_doc = {}
        train = TrainSpec(
            num_samples=_int_field(train_doc, "num_samples", "train.", None, max(1, len(formats)), problems),
            condition=ConditionSpec.parse(train_doc.get("condition"), "train.condition", problems),
            seed=train_doc.get("seed"),
        )
        if train.seed is not None and (not isinstance(train.seed, int) or train.seed < 0):
            problems.append("train.seed: expected a non-negative integer")

        stream_doc = doc.get("stream")
        lots: List[LotSpec] = []
        if not isinstance(stream_doc, list) or not stream_doc:
            problems.append("stream: required non-empty list of lots")
            stream_doc = []
        for i, lot_doc in enumerate(stream_doc):
            path = f"stream[{i}]."
            if not isinstance(lot_doc, dict):
                problems.append(f"stream[{i}]: expected a mapping")
                continue
            labels = lot_doc.get("labels_available", True)
            if not isinstance(labels, bool):
                problems.append(f"{path}labels_available: expected true or false")
            lot = LotSpec(
                num_batches=_int_field(lot_doc, "num_batches", path, None, 1, problems),
                condition=ConditionSpec.parse(lot_doc.get("condition"), f"{path}condition", problems),
                labels_available=bool(labels),
            )
            lots.extend([lot] * _int_field(lot_doc, "repeat", path, 1, 1, problems))

        classifier_doc = doc.get("classifier") or {}
        if not isinstance(classifier_doc, dict):
            problems.append("classifier: expected a mapping")
            classifier_doc = {}
        unknown = sorted(set(classifier_doc) - set(ClassifierParams.__dataclass_fields__))
        problems.extend(f"classifier.{key}: unknown parameter" for key in unknown)
        defaults = ClassifierParams()
        psi = _int_field(classifier_doc, "psi", "classifier.", defaults.psi, 2, problems)
        learning_rate = classifier_doc.get("learning_rate", defaults.learning_rate)
        if not isinstance(learning_rate, (int, float)) or isinstance(learning_rate, bool) or learning_rate < 0:
            problems.append("classifier.learning_rate: expected a non-negative number")
            learning_rate = defaults.learning_rate
        update_rule = classifier_doc.get("update_rule", defaults.update_rule)
        if update_rule not in ("one_vs_rest", "literal"):
            problems.append("classifier.update_rule: expected 'one_vs_rest' or 'literal'")
            update_rule = defaults.update_rule
        classifier = ClassifierParams(
            psi=psi,
            t=_int_field(classifier_doc, "t", "classifier.", defaults.t, 1, problems),
            learning_rate=float(learning_rate),
            update_rule=update_rule,
            warm_start_epochs=_int_field(classifier_doc, "warm_start_epochs", "classifier.", 1, 0, problems),
            k=_int_field(classifier_doc, "k", "classifier.", defaults.k, 1, problems),
        )
        if psi > signal_length:
            problems.append(f"classifier.psi: {psi} exceeds signal_length {signal_length}")

        runners = doc.get("runners", list(RUNNER_NAMES))
        if not isinstance(runners, list) or not runners:
            problems.append("runners: expected a non-empty list")
            runners = list(RUNNER_NAMES)
        for name in runners:
            if name not in RUNNER_NAMES:
                problems.append(f"runners: unknown runner '{name}' (expected one of {', '.join(RUNNER_NAMES)})")
        if len(set(runners)) != len(runners):
            problems.append("runners: duplicates are not allowed")

        name = doc.get("name", "experiment")
        if not isinstance(name, str) or not name:
            problems.append("name: expected a non-empty string")

        if problems:
            raise ConfigurationError(problems)

        return cls(
            formats=formats,
            train=train,
            stream=tuple(lots),
            name=name,
            batch_size=batch_size,
            signal_length=signal_length,
            trials=trials,
            seed=seed,
            window=window,
            classifier=classifier,
            runners=tuple(r for r in RUNNER_NAMES if r in runners),
        )
