"""
Partitioning and checkpoint files (numpy .npz archives).

A partitioning file holds the fitted per-format hyperspheres; a checkpoint holds the OGD weights
and points at its partitioning file by a path relative to the checkpoint, so a stream can resume
from it. Arrays are stored at full precision and load back bit-exact.
"""
import logging
import os
from typing import List, Sequence

import numpy as np

from src.classifier import OgdModel, UPDATE_RULES
from src.constellation import get_format_by_id
from src.errors import ConfigurationError, ModelFileError, UsageError
from src.isokernel import IsolationPartitioning

logger = logging.getLogger(__name__)

PARTITIONING_VERSION = 1
CHECKPOINT_VERSION = 1


def _load_npz(path: str, required: Sequence[str]) -> dict:
    if not os.path.isfile(path):
        raise FileNotFoundError(f"model file not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as archive:
            data = {key: archive[key] for key in archive.files}
    except (OSError, ValueError) as e:
        raise ModelFileError(f"{path}: not a readable .npz archive ({e})") from e
    missing = [key for key in required if key not in data]
    if missing:
        raise ModelFileError(f"{path}: missing {', '.join(missing)}")
    return data


def save_partitionings(path: str, partitionings: Sequence[IsolationPartitioning]) -> None:
    if not partitionings:
        raise UsageError("no partitionings to save")
    if len({(p.t, p.psi) for p in partitionings}) != 1:
        raise UsageError("partitionings saved together must share psi and t")
    if any(p.source_format is None for p in partitionings):
        raise UsageError("only per-format partitionings can be saved")
    with open(path, "wb") as f:
        np.savez(
            f,
            version=np.int64(PARTITIONING_VERSION),
            psi=np.int64(partitionings[0].psi),
            t=np.int64(partitionings[0].t),
            seeds=np.array([p.seed for p in partitionings], dtype=np.uint64),
            format_ids=np.array([p.source_format for p in partitionings], dtype=np.int64),
            centers=np.stack([p.centers for p in partitionings]),
            radii=np.stack([p.radii for p in partitionings]),
        )
    logger.info("saved %d partitionings to %s", len(partitionings), path)


def load_partitionings(path: str) -> List[IsolationPartitioning]:
    data = _load_npz(path, ("version", "psi", "t", "seeds", "format_ids", "centers", "radii"))
    if int(data["version"]) != PARTITIONING_VERSION:
        raise ModelFileError(f"{path}: unsupported partitioning file version {int(data['version'])}")
    m = data["format_ids"].shape[0]
    psi, t = int(data["psi"]), int(data["t"])
    if data["centers"].shape != (m, t, psi, 2) or data["radii"].shape != (m, t, psi):
        raise ModelFileError(f"{path}: array shapes disagree with m={m}, t={t}, psi={psi}")
    try:
        return [
            IsolationPartitioning(
                centers=data["centers"][j],
                radii=data["radii"][j],
                seed=int(data["seeds"][j]),
                source_format=get_format_by_id(int(data["format_ids"][j])).id,
            )
            for j in range(m)
        ]
    except (UsageError, ConfigurationError) as e:
        raise ModelFileError(f"{path}: {e}") from e


def save_checkpoint(path: str, model: OgdModel, partitionings_path: str) -> None:
    """Write the model's weights; its partitionings must already be saved at `partitionings_path`."""
    relative = os.path.relpath(
        os.path.abspath(partitionings_path), os.path.dirname(os.path.abspath(path))
    )
    with open(path, "wb") as f:
        np.savez(
            f,
            version=np.int64(CHECKPOINT_VERSION),
            weights=np.stack(model.weights),
            learning_rate=np.float64(model.learning_rate),
            update_rule=np.str_(model.update_rule),
            format_ids=np.array([fmt.id for fmt in model.formats], dtype=np.int64),
            partitionings=np.str_(relative),
        )
    logger.info("saved checkpoint to %s", path)


def load_checkpoint(path: str) -> OgdModel:
    data = _load_npz(
        path, ("version", "weights", "learning_rate", "update_rule", "format_ids", "partitionings")
    )
    if int(data["version"]) != CHECKPOINT_VERSION:
        raise ModelFileError(f"{path}: unsupported checkpoint version {int(data['version'])}")
    update_rule = str(data["update_rule"])
    if update_rule not in UPDATE_RULES:
        raise ModelFileError(f"{path}: unknown update rule '{update_rule}'")

    partitionings_path = os.path.join(os.path.dirname(os.path.abspath(path)), str(data["partitionings"]))
    partitionings = load_partitionings(partitionings_path)
    format_ids = [int(i) for i in data["format_ids"]]
    if [p.source_format for p in partitionings] != format_ids:
        raise ModelFileError(f"{path}: formats differ from those of {partitionings_path}")

    weights = data["weights"]
    dim = partitionings[0].dim
    if weights.shape != (len(format_ids), dim):
        raise ModelFileError(f"{path}: weights shape {weights.shape}, expected ({len(format_ids)}, {dim})")
    return OgdModel(
        formats=tuple(get_format_by_id(i) for i in format_ids),
        partitionings=tuple(partitionings),
        weights=tuple(np.array(w) for w in weights),
        learning_rate=float(data["learning_rate"]),
        update_rule=update_rule,
    )
