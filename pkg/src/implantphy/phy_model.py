"""Tissue channel and non-coherent MFSK link arithmetic.

Closed forms for the statistical in-body path loss, the receiver noise
floor, orthogonal FSK timing and data rate, the envelope-detector bit error
bound and its exact inverse, and the transmitter/receiver circuit power
tallies used by the energy model.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

__all__ = [
    "BOLTZMANN_J_PER_K",
    "MICS_MIN_DATA_RATE_BPS",
    "MICS_EIRP_CAP_W",
    "EirpWarning",
    "ModulationOrderWarning",
    "TissuePathLoss",
    "NoiseModel",
    "LinkBudget",
    "DEEP_TISSUE",
    "NEAR_SURFACE",
    "gain_factor",
    "gain_factor_db",
    "noise_density",
    "noise_level",
    "channel_bit_error",
    "required_snr",
    "required_symbol_energy",
    "Timing",
    "active_duration",
    "CircuitPowers",
    "circuit_powers",
    "transient_energy",
    "check_eirp",
]

BOLTZMANN_J_PER_K = 1.3806503e-23

# Medical-implant band constraints: at least 250 kbps over a 300 kHz channel,
# radiated power capped at -16 dBm.
MICS_MIN_DATA_RATE_BPS = 250e3
MICS_EIRP_CAP_W = 1e-3 * 10 ** (-16 / 10)


class EirpWarning(UserWarning):
    """Transmit power above the regulatory EIRP cap (reported, not clamped)."""


class ModulationOrderWarning(UserWarning):
    """Constellation size outside the orders this link was designed around."""


@dataclass(frozen=True)
class TissuePathLoss:
    """Statistical log-distance attenuation through body tissue."""

    l0_db: float  # attenuation at the reference distance, dB
    eta: float  # path loss exponent
    sigma_chi_db: float  # log-normal deviation across tissue compositions, dB
    d0_m: float = 0.030

    def __post_init__(self) -> None:
        if self.eta <= 0:
            raise ValueError("path loss exponent must be positive")
        if self.sigma_chi_db < 0:
            raise ValueError("shadowing deviation must be nonnegative")
        if self.d0_m <= 0:
            raise ValueError("reference distance must be positive")


DEEP_TISSUE = TissuePathLoss(l0_db=47.14, eta=4.26, sigma_chi_db=7.85)
NEAR_SURFACE = TissuePathLoss(l0_db=49.81, eta=4.22, sigma_chi_db=6.81)


@dataclass(frozen=True)
class NoiseModel:
    """Receiver front-end noise at body temperature."""

    t0_kelvin: float = 310.0
    nf_db: float = 8.0
    kappa: float = BOLTZMANN_J_PER_K

    def __post_init__(self) -> None:
        if self.t0_kelvin <= 0:
            raise ValueError("temperature must be positive kelvin")


@dataclass(frozen=True)
class LinkBudget:
    """Everything the energy equations need about one radio configuration.

    Circuit powers are watts; the defaults are the evaluation values for the
    implant synthesizer/filter transmitter and the external receiver chain.
    f0_hz is record keeping only, no formula in this package consumes it.
    """

    m: int = 2
    bandwidth_hz: float = 300e3
    frame_bits: int = 8192
    alpha_amp: float = 0.33
    p_sy_w: float = 10e-3
    p_filt_w: float = 2.5e-3
    p_filr_w: float = 2.5e-3
    p_lna_w: float = 9e-3
    p_ed_w: float = 3e-3
    p_ifa_w: float = 3e-3
    p_adc_w: float = 7e-3
    t_tr_s: float = 5e-6
    t_frame_s: float = 1.4
    f0_hz: float = 403.5e6

    def __post_init__(self) -> None:
        if self.m < 2 or self.m & (self.m - 1):
            raise ValueError("constellation size must be a power of two >= 2")
        if self.m not in (2, 4):
            warnings.warn(
                f"M={self.m} falls outside the supported data-rate window",
                ModulationOrderWarning,
                stacklevel=2,
            )
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth must be positive")
        if self.frame_bits < 1:
            raise ValueError("frame must carry at least one bit")
        if self.alpha_amp < 0:
            raise ValueError("amplifier overhead must be nonnegative")
        for name in ("p_sy_w", "p_filt_w", "p_filr_w", "p_lna_w",
                     "p_ed_w", "p_ifa_w", "p_adc_w"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.t_tr_s < 0 or self.t_frame_s <= 0:
            raise ValueError("durations must be positive")

    @property
    def carrier_separation_hz(self) -> float:
        """Minimum orthogonal tone spacing 1/(2 T_s)."""
        return self.bandwidth_hz / self.m


def gain_factor_db(pl: TissuePathLoss, d_m: float, chi_db: float = 0.0) -> float:
    if d_m <= 0:
        raise ValueError("distance must be positive")
    return pl.l0_db + 10.0 * pl.eta * math.log10(d_m / pl.d0_m) + chi_db


def gain_factor(pl: TissuePathLoss, d_m: float, chi_db: float = 0.0) -> float:
    """Linear attenuation P_t / P_r at distance d.

    chi_db = 0 selects the median channel; callers wanting shadowing draw
    chi_db ~ Normal(0, sigma_chi_db**2) or pin a percentile.
    """
    return 10.0 ** (gain_factor_db(pl, d_m, chi_db) / 10.0)


def noise_density(nm: NoiseModel) -> float:
    """One-sided receiver noise density in W/Hz."""
    return nm.kappa * nm.t0_kelvin * 10.0 ** (nm.nf_db / 10.0)


def noise_level(nm: NoiseModel, bandwidth_hz: float) -> float:
    """Noise integrated over the channel bandwidth, in watts.

    This is the figure link budgets quote (-110.91 dBm at the defaults with
    a 300 kHz channel) and the N0 the energy equations consume.
    """
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    return noise_density(nm) * bandwidth_hz


def channel_bit_error(gamma: float, m: int = 2, per_bit: bool = True) -> float:
    """Envelope-detected orthogonal MFSK bit error bound, clamped to 1/2.

    gamma is the linear per-symbol SNR.  With per_bit=True the exponent is
    normalized by log2(m) so equal-error operating points line up across
    constellation sizes (the convention the embedded operating tables
    follow); per_bit=False keeps the raw per-symbol exponent.
    """
    if gamma < 0:
        raise ValueError("SNR must be nonnegative")
    g = gamma / math.log2(m) if per_bit else gamma
    return min(0.5, (m / 4.0) * math.exp(-g / 2.0))


def required_snr(pb: float, m: int = 2, per_bit: bool = True) -> float:
    """Linear per-symbol SNR at which channel_bit_error returns pb (exact inverse)."""
    if not 0.0 < pb < m / 4.0:
        raise ValueError(f"target error rate must lie in (0, {m / 4.0})")
    g = 2.0 * math.log(m / (4.0 * pb))
    return g * math.log2(m) if per_bit else g


def required_symbol_energy(
    pb: float, m: int, gain: float, n0: float, per_bit: bool = True
) -> float:
    """Transmit energy per symbol hitting the target error rate.

    gain is the linear channel attenuation, n0 the noise level the SNR is
    referenced to.  Inverse of channel_bit_error by construction, so
    channel_bit_error(E_t / (gain * n0), m) == pb to rounding.
    """
    return required_snr(pb, m, per_bit) * gain * n0


class Timing(NamedTuple):
    t_active_s: float
    t_symbol_s: float
    data_rate_bps: float
    meets_mics_rate: bool


def active_duration(m: int, frame_bits: int, bandwidth_hz: float) -> Timing:
    """Frame air time M*L / (2 B log2 M), with T_s and the bit rate alongside."""
    if m < 2 or frame_bits <= 0 or bandwidth_hz <= 0:
        raise ValueError("m, frame_bits, and bandwidth must be positive")
    b = math.log2(m)
    t_symbol = m / (2.0 * bandwidth_hz)
    rate = b / t_symbol
    t_active = (frame_bits / b) * t_symbol
    return Timing(t_active, t_symbol, rate, rate >= MICS_MIN_DATA_RATE_BPS)


class CircuitPowers(NamedTuple):
    p_ct: float
    p_cr: float
    p_c: float
    p_amp: float


def circuit_powers(lb: LinkBudget, p_t: float) -> CircuitPowers:
    """Transmit-side and receive-side circuit power for one operating point.

    The receiver runs M parallel filter/envelope-detector branches, so its
    tally scales with the constellation size.
    """
    if p_t < 0:
        raise ValueError("transmit power must be nonnegative")
    p_amp = lb.alpha_amp * p_t
    p_ct = lb.p_sy_w + lb.p_filt_w + p_amp
    p_cr = lb.p_lna_w + lb.m * (lb.p_filr_w + lb.p_ed_w) + lb.p_ifa_w + lb.p_adc_w
    return CircuitPowers(p_ct, p_cr, p_ct + p_cr, p_amp)


def transient_energy(lb: LinkBudget) -> float:
    """Start-up energy of the synthesizer-led wake sequence, 1.75 P_Sy T_tr."""
    return 1.75 * lb.p_sy_w * lb.t_tr_s


def check_eirp(p_t: float) -> bool:
    """Warn (without clamping) when transmit power exceeds the band cap."""
    if p_t > MICS_EIRP_CAP_W:
        warnings.warn(
            f"transmit power {p_t:.3e} W exceeds the -16 dBm EIRP cap",
            EirpWarning,
            stacklevel=2,
        )
        return False
    return True
