"""Training sets and stratified test batches of impaired signals."""
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from src.channel import ChannelCondition, apply_condition
from src.constellation import IqSignal, ModulationFormat, generate_signal
from src.errors import ConfigurationError
from src.harness.config import ConditionSpec

SEED_LIMIT = 2**63


def synthesize(
    format: ModulationFormat,
    length: int,
    cond: ChannelCondition,
    rng: np.random.Generator,
) -> IqSignal:
    """One clean signal of `format` passed through `cond`; two seeds are drawn from `rng`."""
    symbol_seed, channel_seed = (int(s) for s in rng.integers(0, SEED_LIMIT, size=2))
    return apply_condition(generate_signal(format, length, symbol_seed), cond, channel_seed)


@dataclass
class SignalSet:
    signals: List[IqSignal]
    labels: List[int]
    conditions: List[ChannelCondition]

    def __len__(self) -> int:
        return len(self.signals)


def generate_training_set(
    formats: Sequence[ModulationFormat],
    num_samples: int,
    condition: ConditionSpec,
    length: int,
    seed: int,
) -> SignalSet:
    """
    Formats are assigned uniformly at random (not stratified); every signal draws its own
    condition from `condition`.

    When `num_samples >= m` every format gets at least one signal, so a partitioning can be
    fitted for each. The remaining signals keep the uniform assignment.
    """
    if num_samples < 1:
        raise ConfigurationError(f"num_samples: must be >= 1, got {num_samples}")
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(formats), size=num_samples)
    if num_samples >= len(formats):
        picks[:len(formats)] = np.arange(len(formats))
        picks = rng.permutation(picks)
    out = SignalSet([], [], [])
    for pick in picks:
        fmt = formats[int(pick)]
        cond = condition.draw(rng)
        out.signals.append(synthesize(fmt, length, cond, rng))
        out.labels.append(fmt.id)
        out.conditions.append(cond)
    return out


def generate_stratified_batch(
    formats: Sequence[ModulationFormat],
    batch_size: int,
    cond: ChannelCondition,
    length: int,
    rng: np.random.Generator,
) -> SignalSet:
    """batch_size / m signals of every format under one condition, in shuffled order."""
    if batch_size % len(formats):
        raise ConfigurationError(
            f"batch_size: {batch_size} is not divisible by the {len(formats)} formats"
        )
    per_format = batch_size // len(formats)
    order = rng.permutation(np.repeat(np.arange(len(formats)), per_format))
    signals = [synthesize(formats[int(j)], length, cond, rng) for j in order]
    return SignalSet(signals, [formats[int(j)].id for j in order], [cond] * batch_size)
