"""Central dispatcher for building the stream classifiers compared by the harness."""
from typing import List, Optional, Tuple

from src.classifier import OgdModel
from src.errors import ConfigurationError
from src.runners.base import BatchEmbeddings, ClassifierParams, StepOutcome, StreamRunner
from src.runners.fknn import FknnRunner
from src.runners.idk_frozen import IdkFrozenRunner
from src.runners.idk_ogd import IdkOgdRunner
from src.schema import RunnerName

RUNNER_NAMES: Tuple[RunnerName, ...] = ("idk_ogd", "idk_frozen", "fknn")


def build_runner(
    name: RunnerName,
    params: ClassifierParams,
    model: Optional[OgdModel] = None,
) -> StreamRunner:
    """
    Build one stream runner by name.

    Handles:
    - idk_ogd: online update after every labelled batch
    - idk_frozen: warm-started model that never updates; `model` lets it share an already
      trained idk_ogd model instead of training its own
    - fknn: moment-feature kNN retrained on the full history

    Args:
        name: Runner name, one of RUNNER_NAMES
        params: Classifier parameters shared by all runners
        model: Optional trained model for the IDK runners

    Returns:
        An untrained runner, or a ready one when `model` is given
    """
    if name == "idk_ogd":
        return IdkOgdRunner(params, model=model)
    elif name == "idk_frozen":
        return IdkFrozenRunner(params, model=model)
    elif name == "fknn":
        return FknnRunner(params)
    else:
        raise ConfigurationError(f"unsupported runner '{name}' (expected one of {', '.join(RUNNER_NAMES)})")


__all__: List[str] = [
    "RUNNER_NAMES",
    "BatchEmbeddings",
    "ClassifierParams",
    "StepOutcome",
    "StreamRunner",
    "build_runner",
]
