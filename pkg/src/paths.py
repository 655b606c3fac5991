import os
from typing import Optional

import yaml

from src.errors import ConfigurationError
from src.harness.config import ExperimentConfig
from src.schema import ExperimentConfigFile

DEFAULT_OUTPUT_ROOT = "runs"


def get_experiment_config_file(config_path: str) -> ExperimentConfigFile:
    """
    Read an experiment config (JSON or YAML; JSON is a subset of what yaml.safe_load accepts).
    Raises a FileNotFoundError if the file does not exist.
    """
    if not os.path.isfile(config_path):
        raise FileNotFoundError(f"config file not found: {config_path}")
    with open(config_path, 'r', encoding='utf-8') as f:
        try:
            doc = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigurationError(f"{config_path}: not valid JSON or YAML ({e})") from e
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{config_path}: expected a mapping at the top level")
    return doc


def load_experiment_config(config_path: str) -> ExperimentConfig:
    """Read and validate a config file."""
    return ExperimentConfig.from_dict(get_experiment_config_file(config_path))


def get_output_dir(name: str, output_dir: Optional[str] = None) -> str:
    """`output_dir` when given, else runs/<name>. The directory is created."""
    path = output_dir or os.path.join(DEFAULT_OUTPUT_ROOT, name)
    os.makedirs(path, exist_ok=True)
    return path


def ensure_parent_dir(file_path: str) -> str:
    """Create the directory a file will be written to; returns `file_path`."""
    parent = os.path.dirname(os.path.abspath(file_path))
    os.makedirs(parent, exist_ok=True)
    return file_path
