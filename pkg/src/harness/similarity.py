import itertools
import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
import pandas as pd

from src.channel import NO_PHASE_NOISE_DBC_HZ, ChannelCondition
from src.constellation import ModulationFormat
from src.errors import ConfigurationError
from src.harness.datagen import synthesize
from src.isokernel import DEFAULT_PSI, DEFAULT_T, embed_many, fit
from src.utilities import derive_seeds

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    """Pairwise IDK similarities of one signal per (format, condition) cell."""
    labels: List[str]
    values: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, index=self.labels, columns=self.labels)


def cell_label(fmt: ModulationFormat, cond: ChannelCondition) -> str:
    """`<format>@<snr>dB`, then `/pn<level>dBcHz` and `/iq<imbalance>dB` when present."""
    label = f"{fmt.name}@{cond.snr_db:g}dB"
    if cond.phase_noise_level_dbc_hz != NO_PHASE_NOISE_DBC_HZ:
        label += f"/pn{cond.phase_noise_level_dbc_hz:g}dBcHz"
    if cond.iq_amplitude_imbalance_db != 0:
        label += f"/iq{cond.iq_amplitude_imbalance_db:g}dB"
    return label


def similarity_matrix(
    formats: Sequence[ModulationFormat],
    conditions: Sequence[ChannelCondition],
    seed: int,
    psi: int = DEFAULT_PSI,
    t: int = DEFAULT_T,
    length: int = 1024,
) -> SimilarityMatrix:
    """
    Generate one signal per (format, condition) cell, fit a single partitioning on all their
    points and return the cells' pairwise similarities.

    Cells are ordered format-major. The matrix is filled from its upper triangle so it is exactly
    symmetric.
    """
    cells = list(itertools.product(formats, conditions))
    if len(cells) < 2:
        raise ConfigurationError(f"a similarity matrix needs at least 2 cells, got {len(cells)}")

    signal_seed, fit_seed = derive_seeds(seed, 2)
    rng = np.random.default_rng(signal_seed)
    signals = [synthesize(fmt, length, cond, rng) for fmt, cond in cells]
    partitioning = fit(signals, psi=psi, t=t, rng_seed=fit_seed)
    embeddings = embed_many(partitioning, signals)

    n = len(cells)
    values = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            values[i, j] = values[j, i] = float(embeddings[i] @ embeddings[j]) / t
    logger.debug("similarity matrix over %d cells", n)
    return SimilarityMatrix([cell_label(f, c) for f, c in cells], values)
