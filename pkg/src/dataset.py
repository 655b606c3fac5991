"""
Binary dataset files of labelled, impaired I/Q signals.

Layout, little-endian throughout:
    header: magic b"IQDS" | u16 version | u8 m | m x (u8 length, ASCII name) | u32 L | u32 count
    record: u8 index into the header's name table | 3 x f32 condition (snr dB, phase noise dBc/Hz,
            imbalance dB) | L x 2 f32 interleaved I/Q
"""
import logging
import os
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from src.channel import ChannelCondition
from src.constellation import IqSignal, ModulationFormat, get_format
from src.errors import ConfigurationError, DatasetFormatError

logger = logging.getLogger(__name__)

MAGIC = b"IQDS"
VERSION = 1

_PREAMBLE = np.dtype([("magic", "S4"), ("version", "<u2"), ("m", "u1")])
_SIZES = np.dtype([("length", "<u4"), ("count", "<u4")])


def record_dtype(length: int) -> np.dtype:
    return np.dtype([("format", "u1"), ("condition", "<f4", (3,)), ("iq", "<f4", (length, 2))])


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    In-memory form of a dataset file. `format_index[i]` points into `format_names`; conditions and
    samples are stored at file precision (float32).
    """
    format_names: Tuple[str, ...]
    format_index: np.ndarray = field(repr=False)
    conditions: np.ndarray = field(repr=False)
    iq: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 1 <= len(self.format_names) <= 255:
            raise ConfigurationError(f"a dataset holds 1 to 255 formats, got {len(self.format_names)}")
        n = self.format_index.shape[0]
        if self.conditions.shape != (n, 3) or self.iq.ndim != 3 or self.iq.shape[0] != n or self.iq.shape[2] != 2:
            raise ConfigurationError("dataset arrays disagree on the record count or layout")
        if n and int(self.format_index.max()) >= len(self.format_names):
            raise DatasetFormatError("record format index outside the header's name table")

    def __len__(self) -> int:
        return int(self.format_index.shape[0])

    @property
    def signal_length(self) -> int:
        return int(self.iq.shape[1])

    @property
    def formats(self) -> List[ModulationFormat]:
        return [get_format(name) for name in self.format_names]

    def labels(self) -> List[int]:
        """Format ids of every record."""
        ids = np.array([fmt.id for fmt in self.formats])
        return ids[self.format_index].tolist()

    def signals(self) -> List[IqSignal]:
        samples = self.iq[..., 0].astype(np.float64) + 1j * self.iq[..., 1].astype(np.float64)
        return [IqSignal(row) for row in samples]

    def condition(self, i: int) -> ChannelCondition:
        snr, phase, imbalance = (float(v) for v in self.conditions[i])
        return ChannelCondition(snr, phase, imbalance)

    def counts(self) -> dict:
        """Records per format name."""
        tally = np.bincount(self.format_index, minlength=len(self.format_names))
        return {name: int(c) for name, c in zip(self.format_names, tally)}

    @classmethod
    def from_signals(
        cls,
        formats: Sequence[ModulationFormat],
        signals: Sequence[IqSignal],
        labels: Sequence[int],
        conditions: Sequence[ChannelCondition],
    ) -> "Dataset":
        formats = sorted(formats)
        if not signals:
            raise ConfigurationError("a dataset needs at least one signal")
        lengths = {s.length for s in signals}
        if len(lengths) != 1:
            raise ConfigurationError(f"all signals in a dataset share one length, got {sorted(lengths)}")
        index_of = {fmt.id: i for i, fmt in enumerate(formats)}
        try:
            format_index = np.array([index_of[label] for label in labels], dtype=np.uint8)
        except KeyError as e:
            raise ConfigurationError(f"label {e.args[0]} is not one of the dataset formats") from e
        samples = np.stack([s.samples for s in signals])
        iq = np.stack([samples.real, samples.imag], axis=-1).astype("<f4")
        return cls(
            format_names=tuple(fmt.name for fmt in formats),
            format_index=format_index,
            conditions=np.array([c.as_tuple() for c in conditions], dtype="<f4").reshape(-1, 3),
            iq=iq,
        )


def encode(dataset: Dataset) -> bytes:
    preamble = np.array([(MAGIC, VERSION, len(dataset.format_names))], dtype=_PREAMBLE)
    names = b""
    for name in dataset.format_names:
        encoded = name.encode("ascii")
        names += bytes([len(encoded)]) + encoded
    sizes = np.array([(dataset.signal_length, len(dataset))], dtype=_SIZES)

    records = np.empty(len(dataset), dtype=record_dtype(dataset.signal_length))
    records["format"] = dataset.format_index
    records["condition"] = dataset.conditions
    records["iq"] = dataset.iq
    return preamble.tobytes() + names + sizes.tobytes() + records.tobytes()


def decode(data: bytes) -> Dataset:
    if len(data) < _PREAMBLE.itemsize:
        raise DatasetFormatError("file too short for a dataset header")
    preamble = np.frombuffer(data, dtype=_PREAMBLE, count=1)[0]
    if bytes(preamble["magic"]) != MAGIC:
        raise DatasetFormatError(f"bad magic {bytes(preamble['magic'])!r}, expected {MAGIC!r}")
    if int(preamble["version"]) != VERSION:
        raise DatasetFormatError(f"unsupported dataset version {int(preamble['version'])}")

    offset = _PREAMBLE.itemsize
    names: List[str] = []
    for _ in range(int(preamble["m"])):
        if offset >= len(data):
            raise DatasetFormatError("truncated format-name table")
        size = data[offset]
        raw = data[offset + 1:offset + 1 + size]
        if len(raw) != size:
            raise DatasetFormatError("truncated format-name table")
        try:
            names.append(raw.decode("ascii"))
        except UnicodeDecodeError as e:
            raise DatasetFormatError("format names must be ASCII") from e
        offset += 1 + size

    if len(data) < offset + _SIZES.itemsize:
        raise DatasetFormatError("truncated header")
    sizes = np.frombuffer(data, dtype=_SIZES, count=1, offset=offset)[0]
    offset += _SIZES.itemsize
    length, count = int(sizes["length"]), int(sizes["count"])
    dtype = record_dtype(length)
    expected = offset + count * dtype.itemsize
    if len(data) != expected:
        raise DatasetFormatError(f"expected {expected} bytes for {count} records of length {length}, got {len(data)}")

    records = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
    for name in names:
        try:
            get_format(name)
        except ConfigurationError as e:
            raise DatasetFormatError(str(e)) from e
    return Dataset(
        format_names=tuple(names),
        format_index=records["format"].copy(),
        conditions=records["condition"].copy(),
        iq=records["iq"].copy(),
    )


def write_dataset(path: str, dataset: Dataset) -> None:
    with open(path, "wb") as f:
        f.write(encode(dataset))
    logger.info("wrote %d records to %s", len(dataset), path)


def read_dataset(path: str) -> Dataset:
    """Raises FileNotFoundError when `path` is missing and DatasetFormatError when it is malformed."""
    if not os.path.isfile(path):
        raise FileNotFoundError(f"dataset file not found: {path}")
    with open(path, "rb") as f:
        return decode(f.read())
