"""
Isolation Kernel feature map, Isolation Distributional Kernel embedding and similarity.

A partitioning is t rounds of ψ hyperspheres. Each sphere is centred on a sampled point and its
radius is the distance to the nearest other sampled point of the same round. A point activates,
per round, the sphere with the nearest centre, or nothing when that distance exceeds the largest
radius of the round. A signal is embedded as the mean of its points' t·ψ binary feature vectors.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from src.constellation import IqSignal, ModulationFormat
from src.errors import FitError, UsageError

logger = logging.getLogger(__name__)

DEFAULT_PSI = 128
DEFAULT_T = 75

NO_SPHERE = -1

PointsLike = Union[np.ndarray, IqSignal, Sequence[IqSignal]]


@dataclass(frozen=True)
class Hypersphere:
    center: Tuple[float, float]
    radius: float


@dataclass(frozen=True)
class PointFeature:
    """Sparse form of Φ(x): per partitioning, the owning sphere index or None."""
    active_indices: Tuple[Optional[int], ...]
    psi: int

    def dense(self) -> np.ndarray:
        vector = np.zeros(len(self.active_indices) * self.psi)
        for j, k in enumerate(self.active_indices):
            if k is not None:
                vector[j * self.psi + k] = 1.0
        return vector


@dataclass(frozen=True, eq=False)
class DistributionEmbedding:
    """Kernel mean embedding (1/|S|)·Σ Φ(x) of one signal."""
    vector: np.ndarray = field(repr=False)
    sample_count: int
    t: int

    @property
    def dim(self) -> int:
        return int(self.vector.size)


def as_points(data: PointsLike) -> np.ndarray:
    """Convert a signal, a list of signals, complex samples or (n, 2) coordinates to (n, 2)."""
    if isinstance(data, IqSignal):
        return data.as_points()
    if isinstance(data, (list, tuple)) and data and isinstance(data[0], IqSignal):
        return np.concatenate([s.as_points() for s in data])
    arr = np.asarray(data)
    if np.iscomplexobj(arr):
        arr = arr.reshape(-1)
        return np.column_stack((arr.real, arr.imag))
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise UsageError(f"expected (n, 2) I/Q coordinates, got shape {arr.shape}")
    return arr


def nearest_neighbor_radii(centers: np.ndarray) -> np.ndarray:
    """Distance from each centre to its nearest other centre."""
    distances = cdist(centers, centers)
    np.fill_diagonal(distances, np.inf)
    return distances.min(axis=1)


@dataclass(frozen=True, eq=False)
class IsolationPartitioning:
    """
    t partitionings of ψ hyperspheres each, fitted for one modulation format.

    Immutable after construction, including the per-round KD-trees, so one instance can serve any
    number of concurrent readers.
    """
    centers: np.ndarray = field(repr=False)
    radii: np.ndarray = field(repr=False)
    seed: int = 0
    source_format: Optional[int] = None
    _trees: List[cKDTree] = field(default_factory=list, init=False, repr=False, compare=False)

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=np.float64)
        radii = np.asarray(self.radii, dtype=np.float64)
        if centers.ndim != 3 or centers.shape[2] != 2 or radii.shape != centers.shape[:2]:
            raise UsageError(
                f"centers must be (t, psi, 2) and radii (t, psi); got {centers.shape} and {radii.shape}"
            )
        if centers.shape[0] < 1:
            raise UsageError("an isolation partitioning needs t >= 1")
        if centers.shape[1] < 2:
            raise UsageError("an isolation partitioning needs psi >= 2")
        for j in range(centers.shape[0]):
            if not np.allclose(radii[j], nearest_neighbor_radii(centers[j]), rtol=0, atol=1e-12):
                raise UsageError(f"radii of partitioning {j} are not nearest-neighbour distances")
        centers.setflags(write=False)
        radii.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "_max_radii", radii.max(axis=1))
        object.__setattr__(self, "_trees", [cKDTree(c) for c in centers])

    @property
    def t(self) -> int:
        return int(self.centers.shape[0])

    @property
    def psi(self) -> int:
        return int(self.centers.shape[1])

    @property
    def dim(self) -> int:
        return self.t * self.psi

    @property
    def max_radii(self) -> np.ndarray:
        return self._max_radii

    @property
    def partitionings(self) -> List[List[Hypersphere]]:
        return [
            [Hypersphere((float(c[0]), float(c[1])), float(r)) for c, r in zip(cs, rs)]
            for cs, rs in zip(self.centers, self.radii)
        ]

    def assign(self, points: np.ndarray) -> np.ndarray:
        """
        Owning sphere per point and partitioning.

        Returns an (n, t) int array holding the nearest-centre index, or NO_SPHERE where the
        nearest centre is farther than the largest radius of that partitioning. Equidistant
        centres resolve to the lowest index.
        """
        out = np.empty((points.shape[0], self.t), dtype=np.int64)
        for j, tree in enumerate(self._trees):
            distances, indices = tree.query(points, k=2)
            tied = distances[:, 1] == distances[:, 0]
            nearest = np.where(tied, indices.min(axis=1), indices[:, 0])
            out[:, j] = np.where(distances[:, 0] > self._max_radii[j], NO_SPHERE, nearest)
        return out


def fit(
    points: PointsLike,
    psi: int = DEFAULT_PSI,
    t: int = DEFAULT_T,
    rng_seed: int = 0,
    source_format: Optional[ModulationFormat] = None,
) -> IsolationPartitioning:
    """
    Fit t partitionings of ψ spheres on a point set.

    Each round samples ψ points without replacement and sets every radius to the distance to the
    nearest other sampled point.
    """
    data = as_points(points)
    if psi < 2:
        raise FitError(f"psi must be at least 2, got {psi}")
    if t < 1:
        raise FitError(f"t must be at least 1, got {t}")
    if data.shape[0] < psi:
        raise FitError(f"fitting with psi={psi} requires at least {psi} points, got {data.shape[0]}")

    rng = np.random.default_rng(rng_seed)
    centers = np.empty((t, psi, 2))
    radii = np.empty((t, psi))
    for j in range(t):
        centers[j] = data[rng.choice(data.shape[0], size=psi, replace=False)]
        radii[j] = nearest_neighbor_radii(centers[j])

    return IsolationPartitioning(
        centers=centers,
        radii=radii,
        seed=rng_seed,
        source_format=source_format.id if source_format is not None else None,
    )


def map_point(p: IsolationPartitioning, x: Sequence[float] | complex) -> PointFeature:
    point = as_points(np.array([x])) if isinstance(x, complex) else np.asarray([x], dtype=np.float64)
    owners = p.assign(point)[0]
    return PointFeature(
        active_indices=tuple(None if k == NO_SPHERE else int(k) for k in owners),
        psi=p.psi,
    )


def embed_many(p: IsolationPartitioning, signals: Sequence[IqSignal]) -> np.ndarray:
    """Embed several signals at once. Returns an (n_signals, t·ψ) array."""
    if not signals:
        return np.zeros((0, p.dim))
    lengths = np.array([s.length for s in signals])
    owners = p.assign(np.concatenate([s.as_points() for s in signals]))
    signal_index = np.repeat(np.arange(len(signals)), lengths)

    rows, blocks = np.nonzero(owners != NO_SPHERE)
    flat = signal_index[rows] * p.dim + blocks * p.psi + owners[rows, blocks]
    counts = np.bincount(flat, minlength=len(signals) * p.dim).reshape(len(signals), p.dim)
    return counts / lengths[:, None]


def embed(p: IsolationPartitioning, signal: IqSignal) -> DistributionEmbedding:
    vector = embed_many(p, [signal])[0]
    return DistributionEmbedding(vector=vector, sample_count=signal.length, t=p.t)


def similarity(a: DistributionEmbedding, b: DistributionEmbedding) -> float:
    """⟨a, b⟩ / t, in [0, 1]."""
    if a.dim != b.dim or a.t != b.t:
        raise UsageError(f"cannot compare embeddings of dimension {a.dim} (t={a.t}) and {b.dim} (t={b.t})")
    return float(np.dot(a.vector, b.vector) / a.t)


def classify_by_similarity(
    signal: IqSignal,
    references: Sequence[Tuple[ModulationFormat, IsolationPartitioning, DistributionEmbedding]],
) -> ModulationFormat:
    """
    Return the format whose reference embedding is most similar to `signal`.

    The signal is embedded under each format's own partitioning. Ties go to the lowest format id.
    """
    if not references:
        raise UsageError("classify_by_similarity needs at least one reference")
    best: Optional[ModulationFormat] = None
    best_score = -np.inf
    for fmt, partitioning, reference in sorted(references, key=lambda r: r[0].id):
        score = similarity(embed(partitioning, signal), reference)
        logger.debug("similarity to %s: %.6f", fmt.name, score)
        if score > best_score:
            best, best_score = fmt, score
    return best
