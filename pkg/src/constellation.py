"""
Candidate modulation formats and clean baseband signal generation.

Every signal is one complex sample per symbol, with symbols drawn i.i.d. uniformly from a
unit-energy constellation table. Pulse shaping and carrier modelling are out of scope.
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, List, Tuple

import numpy as np

from src.errors import ConfigurationError
from src.schema import FormatName

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class ModulationFormat:
    """One candidate modulation format. Ids are stable and follow `FORMAT_NAMES` order."""
    id: int
    name: FormatName
    order: int


FORMAT_NAMES: Tuple[FormatName, ...] = (
    "4ASK", "8ASK", "BPSK", "QPSK", "8PSK", "16APSK", "32APSK", "16QAM", "32QAM", "64QAM",
)

_ORDERS: Dict[str, int] = {
    "4ASK": 4, "8ASK": 8, "BPSK": 2, "QPSK": 4, "8PSK": 8,
    "16APSK": 16, "32APSK": 32, "16QAM": 16, "32QAM": 32, "64QAM": 64,
}

FORMATS: Tuple[ModulationFormat, ...] = tuple(
    ModulationFormat(id=i, name=name, order=_ORDERS[name]) for i, name in enumerate(FORMAT_NAMES)
)

# Outer ring radii relative to the inner ring.
APSK_RING_RATIOS: Dict[str, Tuple[float, ...]] = {
    "16APSK": (1.0, 2.57),
    "32APSK": (1.0, 2.53, 4.30),
}
APSK_RING_SIZES: Dict[str, Tuple[int, ...]] = {
    "16APSK": (4, 12),
    "32APSK": (4, 12, 16),
}
APSK_RING_PHASES: Tuple[float, ...] = (np.pi / 4, np.pi / 12, 0.0)


def get_format(name: str) -> ModulationFormat:
    """Look up a format by name (case-insensitive). Raises ConfigurationError if unknown."""
    key = name.strip().upper()
    for fmt in FORMATS:
        if fmt.name == key:
            return fmt
    raise ConfigurationError(
        f"unknown modulation format '{name}' (expected one of {', '.join(FORMAT_NAMES)})"
    )


def get_format_by_id(format_id: int) -> ModulationFormat:
    if not 0 <= format_id < len(FORMATS):
        raise ConfigurationError(f"unknown modulation format id {format_id}")
    return FORMATS[format_id]


def parse_formats(names: Iterable[str] | str) -> List[ModulationFormat]:
    """
    Resolve a list (or comma-separated string) of names to formats, sorted by id.

    Duplicates are rejected so that a stratified batch has a well-defined per-format share.
    """
    if isinstance(names, str):
        names = [n for n in names.split(",") if n.strip()]
    formats = [get_format(n) for n in names]
    if not formats:
        raise ConfigurationError("at least one modulation format is required")
    if len({f.id for f in formats}) != len(formats):
        raise ConfigurationError("modulation formats must be unique")
    return sorted(formats)


@dataclass(frozen=True, eq=False)
class ConstellationTable:
    format: ModulationFormat
    points: np.ndarray = field(repr=False)

    def mean_energy(self) -> float:
        return float(np.mean(np.abs(self.points) ** 2))


@dataclass(frozen=True, eq=False)
class IqSignal:
    """A length-L sequence of complex baseband samples."""
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128).reshape(-1)
        if samples.size == 0:
            raise ConfigurationError("an IqSignal needs at least one sample")
        object.__setattr__(self, "samples", samples)

    @property
    def length(self) -> int:
        return int(self.samples.size)

    def power(self) -> float:
        """Empirical mean power (1/L)·Σ|s|²."""
        return float(np.mean(np.abs(self.samples) ** 2))

    def as_points(self) -> np.ndarray:
        """The samples as an (L, 2) array of (I, Q) coordinates."""
        return np.column_stack((self.samples.real, self.samples.imag))


def _ask_points(order: int) -> np.ndarray:
    return np.arange(-(order - 1), order, 2, dtype=np.float64).astype(np.complex128)


def _psk_points(order: int, phase: float = 0.0) -> np.ndarray:
    return np.exp(1j * (phase + 2 * np.pi * np.arange(order) / order))


def _apsk_points(name: str) -> np.ndarray:
    rings = []
    for radius, size, phase in zip(APSK_RING_RATIOS[name], APSK_RING_SIZES[name], APSK_RING_PHASES):
        rings.append(radius * _psk_points(size, phase))
    return np.concatenate(rings)


def _qam_points(order: int) -> np.ndarray:
    if order == 32:
        # Cross constellation: 6x6 grid without its four corners.
        levels = np.arange(-5, 6, 2, dtype=np.float64)
        grid = [complex(i, q) for q in levels[::-1] for i in levels if not (abs(i) == 5 and abs(q) == 5)]
        return np.array(grid, dtype=np.complex128)
    side = int(round(np.sqrt(order)))
    levels = np.arange(-(side - 1), side, 2, dtype=np.float64)
    return np.array([complex(i, q) for q in levels[::-1] for i in levels], dtype=np.complex128)


@lru_cache(maxsize=None)
def build_table(format: ModulationFormat) -> ConstellationTable:
    """
    Build the canonical unit-energy constellation of a format.

    ASK amplitudes are symmetric about 0, PSK points start at angle 0 (QPSK at π/4), APSK uses
    DVB-S2 ring layouts with radius ratios from `APSK_RING_RATIOS`, QAM uses square (16, 64) or
    cross (32) grids. All tables are scaled to unit mean symbol energy.
    """
    name = format.name
    if name.endswith("ASK"):
        raw = _ask_points(format.order)
    elif name == "QPSK":
        raw = _psk_points(4, np.pi / 4)
    elif name.endswith("APSK"):
        raw = _apsk_points(name)
    elif name.endswith("PSK"):
        raw = _psk_points(format.order)
    elif name.endswith("QAM"):
        raw = _qam_points(format.order)
    else:
        raise ConfigurationError(f"no constellation defined for format '{name}'")

    if raw.size != format.order:
        raise ConfigurationError(f"{name}: built {raw.size} points, expected {format.order}")

    points = raw / np.sqrt(np.mean(np.abs(raw) ** 2))
    points.setflags(write=False)
    return ConstellationTable(format=format, points=points)


def generate_signal(format: ModulationFormat, length: int, rng_seed: int) -> IqSignal:
    """Draw `length` symbols uniformly and independently from the format's table."""
    if length <= 0:
        raise ConfigurationError(f"signal length must be positive, got {length}")
    table = build_table(format)
    rng = np.random.default_rng(rng_seed)
    symbols = rng.integers(0, format.order, size=length)
    return IqSignal(table.points[symbols])
