"""
Channel impairments: AWGN at a target SNR, Wiener phase noise at a dBc/Hz level and
I/Q amplitude imbalance in dB.

All functions are pure; the random ones are deterministic given their seed.
"""
import logging
from dataclasses import dataclass, asdict
from typing import Dict

import numpy as np

from src.constellation import IqSignal

logger = logging.getLogger(__name__)

NO_PHASE_NOISE_DBC_HZ = -9999.0
NOISELESS_SNR_DB = 100.0

# Normalised offset (fraction of the sample rate) at which the phase-noise level is specified.
PHASE_NOISE_REFERENCE_OFFSET = 1e-2


@dataclass(frozen=True)
class ChannelCondition:
    """
    Channel condition for one signal or lot.

    The defaults encode "impairment absent": 100 dB SNR, -9999 dBc/Hz phase noise, 0 dB imbalance.
    """
    snr_db: float = NOISELESS_SNR_DB
    phase_noise_level_dbc_hz: float = NO_PHASE_NOISE_DBC_HZ
    iq_amplitude_imbalance_db: float = 0.0

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)

    def as_tuple(self) -> tuple:
        return (self.snr_db, self.phase_noise_level_dbc_hz, self.iq_amplitude_imbalance_db)


def apply_awgn(signal: IqSignal, snr_db: float, rng_seed: int) -> IqSignal:
    """
    Add circularly symmetric complex Gaussian noise.

    Noise power is P_s / 10^(snr_db/10) with P_s the empirical mean power of `signal`, split
    equally between I and Q.
    """
    rng = np.random.default_rng(rng_seed)
    noise_power = signal.power() / 10 ** (snr_db / 10)
    scale = np.sqrt(noise_power / 2)
    noise = scale * (rng.standard_normal(signal.length) + 1j * rng.standard_normal(signal.length))
    return IqSignal(signal.samples + noise)


def phase_noise_std(level_dbc_hz: float) -> float:
    """Per-sample standard deviation of the Wiener phase increments for a dBc/Hz level."""
    return float(np.sqrt(2 * np.pi * PHASE_NOISE_REFERENCE_OFFSET * 10 ** (level_dbc_hz / 10)))


def apply_phase_noise(signal: IqSignal, level_dbc_hz: float, rng_seed: int) -> IqSignal:
    """Rotate sample n by exp(jθ_n), θ a random walk with N(0, σ²) increments."""
    sigma = phase_noise_std(level_dbc_hz)
    rng = np.random.default_rng(rng_seed)
    theta = np.cumsum(rng.normal(0.0, sigma, size=signal.length))
    return IqSignal(signal.samples * np.exp(1j * theta))


def apply_iq_imbalance(signal: IqSignal, imbalance_db: float) -> IqSignal:
    """Scale I by 10^(a/40) and Q by 10^(-a/40)."""
    if imbalance_db == 0:
        return IqSignal(signal.samples.copy())
    gain = 10 ** (imbalance_db / 40)
    samples = signal.samples
    return IqSignal(samples.real * gain + 1j * (samples.imag / gain))


def apply_condition(signal: IqSignal, cond: ChannelCondition, rng_seed: int) -> IqSignal:
    """
    Apply imbalance, then phase noise, then AWGN.

    AWGN uses `rng_seed` itself and phase noise a seed derived from it, so a condition with only
    the SNR active reproduces `apply_awgn(signal, snr_db, rng_seed)` exactly.
    """
    phase_seed = np.random.SeedSequence(rng_seed).generate_state(1)[0]
    out = apply_iq_imbalance(signal, cond.iq_amplitude_imbalance_db)
    out = apply_phase_noise(out, cond.phase_noise_level_dbc_hz, int(phase_seed))
    return apply_awgn(out, cond.snr_db, rng_seed)
