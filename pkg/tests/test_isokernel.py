import math

import numpy as np
import pytest

from src.channel import apply_awgn
from src.constellation import IqSignal, generate_signal, get_format
from src.errors import FitError, UsageError
from src.isokernel import (
    DistributionEmbedding,
    IsolationPartitioning,
    classify_by_similarity,
    embed,
    embed_many,
    fit,
    map_point,
    similarity,
)


def naive_feature(centers, radii, x):
    """Per round: index of the nearest centre (lowest on ties), None beyond the largest radius."""
    owners = []
    for cs, rs in zip(centers, radii):
        best, best_d = None, math.inf
        for k, c in enumerate(cs):
            d = math.hypot(x[0] - c[0], x[1] - c[1])
            if d < best_d:
                best, best_d = k, d
        owners.append(best if best_d <= max(rs) else None)
    return owners


def naive_embedding(centers, radii, points):
    t, psi = len(centers), len(centers[0])
    vector = [0.0] * (t * psi)
    for x in points:
        for j, k in enumerate(naive_feature(centers, radii, x)):
            if k is not None:
                vector[j * psi + k] += 1.0
    return [v / len(points) for v in vector]


def naive_radii(cs):
    return [
        min(math.hypot(a[0] - b[0], a[1] - b[1]) for i2, b in enumerate(cs) if i2 != i1)
        for i1, a in enumerate(cs)
    ]


def test_matches_brute_force_on_random_small_instances():
    rng = np.random.default_rng(2024)
    for instance in range(200):
        psi = int(rng.integers(2, 5))
        t = int(rng.integers(1, 4))
        fit_points = rng.uniform(-2, 2, size=(int(rng.integers(psi, 13)), 2))
        partitioning = fit(fit_points, psi=psi, t=t, rng_seed=instance)
        centers = partitioning.centers.tolist()
        for cs, rs in zip(centers, partitioning.radii.tolist()):
            assert np.allclose(rs, naive_radii(cs), rtol=0, atol=1e-12)

        a = rng.uniform(-2, 2, size=(int(rng.integers(1, 11)), 2))
        b = rng.uniform(-2, 2, size=(int(rng.integers(1, 11)), 2))
        sig_a, sig_b = IqSignal(a[:, 0] + 1j * a[:, 1]), IqSignal(b[:, 0] + 1j * b[:, 1])
        emb_a, emb_b = embed(partitioning, sig_a), embed(partitioning, sig_b)
        expected_a = naive_embedding(centers, partitioning.radii.tolist(), a.tolist())
        expected_b = naive_embedding(centers, partitioning.radii.tolist(), b.tolist())
        assert np.allclose(emb_a.vector, expected_a, rtol=0, atol=1e-12)
        assert np.allclose(emb_b.vector, expected_b, rtol=0, atol=1e-12)

        expected_sim = sum(x * y for x, y in zip(expected_a, expected_b)) / t
        assert abs(similarity(emb_a, emb_b) - expected_sim) < 1e-12


def test_fit_centers_are_sampled_points():
    points = np.random.default_rng(1).normal(size=(50, 2))
    p = fit(points, psi=8, t=4, rng_seed=3)
    assert p.centers.shape == (4, 8, 2)
    for round_centers in p.centers:
        assert len({tuple(c) for c in round_centers}) == 8
        for c in round_centers:
            assert np.any(np.all(points == c, axis=1))


def test_fit_is_deterministic():
    signal = generate_signal(get_format("8PSK"), 300, 1)
    assert np.array_equal(fit(signal, 16, 5, 9).centers, fit(signal, 16, 5, 9).centers)


def test_fit_errors():
    points = np.zeros((3, 2)) + np.arange(3)[:, None]
    with pytest.raises(FitError):
        fit(points, psi=4, t=1)
    with pytest.raises(FitError):
        fit(points, psi=1, t=1)
    with pytest.raises(FitError):
        fit(points, psi=2, t=0)


def test_partitioning_rejects_inconsistent_radii():
    centers = np.array([[[0.0, 0.0], [1.0, 0.0]]])
    with pytest.raises(UsageError):
        IsolationPartitioning(centers=centers, radii=np.array([[0.5, 1.0]]))


def test_partitioning_is_immutable():
    p = fit(np.random.default_rng(0).normal(size=(20, 2)), psi=4, t=2)
    with pytest.raises(ValueError):
        p.centers[0, 0, 0] = 1.0


def test_point_outside_every_sphere_maps_to_none():
    centers = np.array([[[0.0, 0.0], [1.0, 0.0]]])
    p = IsolationPartitioning(centers=centers, radii=np.array([[1.0, 1.0]]))
    assert map_point(p, (0.2, 0.0)).active_indices == (0,)
    assert map_point(p, 5 + 5j).active_indices == (None,)
    assert not map_point(p, 5 + 5j).dense().any()


def test_equidistant_point_goes_to_lowest_index():
    centers = np.array([[[1.0, 0.0], [-1.0, 0.0]]])
    p = IsolationPartitioning(centers=centers, radii=np.array([[2.0, 2.0]]))
    assert map_point(p, (0.0, 0.0)).active_indices == (0,)


def test_embedding_entries_are_bounded_and_blocks_sum_to_at_most_one():
    signal = generate_signal(get_format("16QAM"), 400, 2)
    p = fit(signal, psi=32, t=6, rng_seed=4)
    vector = embed(p, signal).vector
    assert vector.min() >= 0.0 and vector.max() <= 1.0
    assert np.all(vector.reshape(p.t, p.psi).sum(axis=1) <= 1.0 + 1e-12)


def test_embed_many_matches_embed():
    signals = [generate_signal(get_format("8PSK"), 64, s) for s in range(4)]
    p = fit(signals, psi=8, t=3, rng_seed=0)
    batch = embed_many(p, signals)
    for row, signal in zip(batch, signals):
        assert np.array_equal(row, embed(p, signal).vector)
    assert embed_many(p, []).shape == (0, p.dim)


def test_signal_concentrated_in_one_sphere_has_unit_self_similarity():
    centers = np.array([[[0.0, 0.0], [1.0, 0.0]]])
    p = IsolationPartitioning(centers=centers, radii=np.array([[1.0, 1.0]]))
    e = embed(p, IqSignal(np.full(10, 0.1 + 0j)))
    assert np.array_equal(e.vector, [1.0, 0.0])
    assert similarity(e, e) == 1.0


def test_similarity_is_symmetric_and_bounded():
    a = generate_signal(get_format("QPSK"), 256, 1)
    b = generate_signal(get_format("8PSK"), 256, 2)
    p = fit([a, b], psi=16, t=8, rng_seed=3)
    ea, eb = embed(p, a), embed(p, b)
    assert similarity(ea, eb) == similarity(eb, ea)
    assert 0.0 <= similarity(ea, eb) <= 1.0


def test_similarity_rejects_mismatched_dimensions():
    a = DistributionEmbedding(np.zeros(6), 1, 2)
    b = DistributionEmbedding(np.zeros(8), 1, 2)
    with pytest.raises(UsageError):
        similarity(a, b)


def test_classify_by_similarity_picks_own_format():
    references = []
    for name, seed in (("BPSK", 1), ("QPSK", 2)):
        fmt = get_format(name)
        signal = apply_awgn(generate_signal(fmt, 512, seed), 30.0, seed)
        p = fit(signal, psi=16, t=10, rng_seed=seed, source_format=fmt)
        references.append((fmt, p, embed(p, signal)))
    query = apply_awgn(generate_signal(get_format("QPSK"), 512, 7), 30.0, 8)
    assert classify_by_similarity(query, references).name == "QPSK"
    with pytest.raises(UsageError):
        classify_by_similarity(query, [])
