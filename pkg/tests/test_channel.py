import numpy as np
import pytest

from src.channel import (
    NO_PHASE_NOISE_DBC_HZ,
    ChannelCondition,
    apply_awgn,
    apply_condition,
    apply_iq_imbalance,
    apply_phase_noise,
    phase_noise_std,
)
from src.constellation import IqSignal, generate_signal, get_format


@pytest.fixture
def qpsk():
    return generate_signal(get_format("QPSK"), 100_000, 3)


@pytest.mark.parametrize("snr_db", [0.0, 10.0])
def test_awgn_noise_power_is_calibrated(qpsk, snr_db):
    noisy = apply_awgn(qpsk, snr_db, 11)
    noise = noisy.samples - qpsk.samples
    expected = qpsk.power() / 10 ** (snr_db / 10)
    assert np.mean(np.abs(noise) ** 2) == pytest.approx(expected, rel=0.03)


def test_awgn_is_deterministic(qpsk):
    assert np.array_equal(apply_awgn(qpsk, 5, 1).samples, apply_awgn(qpsk, 5, 1).samples)
    assert not np.array_equal(apply_awgn(qpsk, 5, 1).samples, apply_awgn(qpsk, 5, 2).samples)


def test_phase_noise_preserves_magnitude(qpsk):
    rotated = apply_phase_noise(qpsk, -30.0, 8)
    assert np.allclose(np.abs(rotated.samples), np.abs(qpsk.samples), rtol=0, atol=1e-12)
    assert not np.allclose(rotated.samples, qpsk.samples)


def test_phase_noise_absent_level_is_negligible(qpsk):
    assert phase_noise_std(NO_PHASE_NOISE_DBC_HZ) < 1e-300
    assert np.allclose(apply_phase_noise(qpsk, NO_PHASE_NOISE_DBC_HZ, 8).samples, qpsk.samples)


def test_phase_noise_std_grows_with_level():
    assert phase_noise_std(-30.0) > phase_noise_std(-40.0)
    assert phase_noise_std(-30.0) ** 2 == pytest.approx(2 * np.pi * 1e-2 * 1e-3)


def test_iq_imbalance_scales_rails(qpsk):
    out = apply_iq_imbalance(qpsk, 4.0)
    assert np.allclose(out.samples.real, qpsk.samples.real * 10 ** (4.0 / 40))
    assert np.allclose(out.samples.imag, qpsk.samples.imag * 10 ** (-4.0 / 40))


def test_zero_imbalance_is_identity_copy(qpsk):
    out = apply_iq_imbalance(qpsk, 0.0)
    assert np.array_equal(out.samples, qpsk.samples)
    assert out.samples is not qpsk.samples


def test_snr_only_condition_matches_awgn(qpsk):
    cond = ChannelCondition(snr_db=12.0)
    assert np.array_equal(apply_condition(qpsk, cond, 99).samples, apply_awgn(qpsk, 12.0, 99).samples)


def test_default_condition_is_near_clean(qpsk):
    out = apply_condition(qpsk, ChannelCondition(), 4)
    assert np.allclose(out.samples, qpsk.samples, atol=1e-3)


def test_condition_round_trips_to_dict():
    cond = ChannelCondition(10.0, -35.0, 2.0)
    assert ChannelCondition(**cond.to_dict()) == cond
    assert cond.as_tuple() == (10.0, -35.0, 2.0)


def test_phase_error_variance_grows_with_level(qpsk):
    def phase_error_variance(level):
        rotated = apply_phase_noise(qpsk, level, 8)
        return np.var(np.unwrap(np.angle(rotated.samples / qpsk.samples)))

    louder, quieter = phase_error_variance(-30.0), phase_error_variance(-40.0)
    assert louder > quieter
    assert louder / quieter == pytest.approx(10.0, rel=1e-6)


def test_negative_imbalance_mirrors_positive_with_rails_swapped(qpsk):
    swapped = IqSignal(qpsk.samples.imag + 1j * qpsk.samples.real)
    mirrored = apply_iq_imbalance(swapped, -3.0).samples
    direct = apply_iq_imbalance(qpsk, 3.0).samples
    assert np.allclose(mirrored, direct.imag + 1j * direct.real, rtol=0, atol=1e-12)


def test_imbalance_of_six_db_on_a_single_sample():
    out = apply_iq_imbalance(IqSignal([1 + 1j]), 6.0).samples[0]
    assert out.real == pytest.approx(1.4125, abs=1e-4)
    assert out.imag == pytest.approx(0.7079, abs=1e-4)


def test_awgn_noise_does_not_depend_on_the_input_values():
    a = generate_signal(get_format("QPSK"), 1000, 1)
    b = generate_signal(get_format("8PSK"), 1000, 2)
    noise_a = apply_awgn(a, 3.0, 5).samples - a.samples
    noise_b = apply_awgn(b, 3.0, 5).samples - b.samples
    assert np.allclose(noise_a, noise_b, rtol=0, atol=1e-12)
