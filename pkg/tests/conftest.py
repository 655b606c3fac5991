import copy
from typing import Any, Dict

import numpy as np
import pytest

from src.channel import ChannelCondition, apply_condition
from src.constellation import generate_signal, get_format

SEPARABLE_CONFIG: Dict[str, Any] = {
    "name": "separable",
    "formats": ["BPSK", "8ASK"],
    "batch_size": 10,
    "signal_length": 128,
    "trials": 1,
    "seed": 5,
    "window": 2,
    "train": {"num_samples": 40, "condition": {"snr_db": 30}},
    "stream": [{"num_batches": 1, "condition": {"snr_db": 30}}],
    "classifier": {"psi": 64, "t": 10, "learning_rate": 0.01, "k": 5},
    "runners": ["idk_ogd", "idk_frozen", "fknn"],
}


@pytest.fixture
def config_doc():
    """A fresh copy of a small, fast experiment config document."""
    return copy.deepcopy(SEPARABLE_CONFIG)


@pytest.fixture
def make_signals():
    """Build (signals, labels) for the given format names under one condition."""
    def _make(names, per_format, length=128, snr_db=30.0, seed=0):
        rng = np.random.default_rng(seed)
        signals, labels = [], []
        cond = ChannelCondition(snr_db=snr_db)
        for name in names:
            fmt = get_format(name)
            for _ in range(per_format):
                a, b = (int(s) for s in rng.integers(0, 2**63, size=2))
                signals.append(apply_condition(generate_signal(fmt, length, a), cond, b))
                labels.append(fmt.id)
        return signals, labels
    return _make
