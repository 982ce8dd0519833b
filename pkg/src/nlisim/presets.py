"""
Reference run configurations for the 10 MHz and 1 GHz drives.

The modulated-run presets solve for the source ratio and the uncorrelated
count rate so that the *expected* folded visibilities hit requested raw and
background-corrected targets. Expectations account for drive-voltage
mismatch, modulator excess loss and timing-jitter smearing across the
high/low boundaries; they do not include Poisson noise.
"""

import numpy as np
from scipy.optimize import brentq

from .config import AmziParams, DetectorModel, DriveWaveform, RunConfig
from .model import ModulatorParams, phase_from_voltage, ratio_from_visibility
from .simulator import state_factors

VPI = 7.99
BIAS_V = 2.1
EFFICIENCY = 0.85


def detectors(dark_rate_hz=100.0, jitter_sigma_ps=15.0, dead_time_ps=20_000.0, efficiency=EFFICIENCY):
    det = DetectorModel(efficiency=efficiency, dark_rate_hz=dark_rate_hz,
                        jitter_sigma_ps=jitter_sigma_ps, dead_time_ps=dead_time_ps)
    return (det, det)


def scan_config(visibility, interference="nli", counts_at_max=200.0, dwell_s=1.0, seed=1,
                window_ps=1000, phi0_rad=0.0):
    """
    Thermal-shifter scan: static modulator, ``counts_at_max`` coincidences per
    dwell at the fringe maximum.
    """
    return RunConfig(
        pair_rate_hz=counts_at_max / (dwell_s * EFFICIENCY**2),
        ratio_r=float(ratio_from_visibility(visibility)),
        modulator=ModulatorParams(vpi=VPI),
        drive=DriveWaveform(shape="dc", vdc=0.0),
        detectors=detectors(),
        window_ps=window_ps,
        duration_s=dwell_s,
        seed=seed,
        interference=interference,
        phi0_rad=phi0_rad,
    )


def jitter_contrast(c, period_ps):
    """
    Contrast loss from midpoint jitter for a square modulation.

    A Gaussian midpoint error of std ``s`` moves a fraction
    ``4 s / (sqrt(2 pi) T)`` of events into the other half period; the folded
    visibility scales by one minus twice that.
    """
    s1, s2 = (d.jitter_sigma_ps for d in c.detectors)
    s_mid = 0.5 * np.hypot(s1, s2)
    return 1.0 - 8.0 * s_mid / (np.sqrt(2.0 * np.pi) * period_ps)


def expected_fold_visibility(c):
    """Noise-free folded visibility of correlated pairs for a square-driven run."""
    high, low = state_factors(c)
    return (high - low) / (high + low) * jitter_contrast(c, c.drive.period_ps)


def modulation_config(freq_hz, raw_target, corrected_target, vpp=4.0, coincidence_rate_hz=100.0,
                      gate_ps=1000, duration_s=30.0, seed=1, t0_ps=None, alpha_db_per_pi=0.5,
                      jitter_sigma_ps=15.0):
    """
    Square-driven run tuned to expected raw and corrected visibilities.

    The thermal shifter parks the high drive state on the fringe maximum.
    The source ratio is solved so the expected corrected visibility equals
    ``corrected_target``; the pair rate gives ``coincidence_rate_hz`` detected
    coincidences on average; a common uncorrelated rate on both channels sets
    the accidental floor inside a ``[-gate, gate)`` window so the expected raw
    visibility equals ``raw_target``.
    """
    if not 0 < raw_target < corrected_target <= 1:
        raise ValueError("need 0 < raw_target < corrected_target <= 1")
    m = ModulatorParams(vpi=VPI, alpha_db_per_pi=alpha_db_per_pi)
    drive = DriveWaveform(shape="square", freq_hz=freq_hz, vpp=vpp, vdc=BIAS_V, t0_ps=t0_ps)
    tps = -float(phase_from_voltage(BIAS_V + 0.5 * vpp, m))
    base = RunConfig(
        pair_rate_hz=1.0, ratio_r=1.0, modulator=m, drive=drive,
        detectors=detectors(jitter_sigma_ps=jitter_sigma_ps), window_ps=gate_ps,
        duration_s=duration_s, seed=seed, tps_offset_rad=tps,
    )

    def excess(r):
        return expected_fold_visibility(base.replace(ratio_r=r)) - corrected_target

    if excess(1.0) < 0:
        raise ValueError(f"corrected target {corrected_target} unreachable with this drive")
    ratio = brentq(excess, 1e-9, 1.0, xtol=1e-14)
    c = base.replace(ratio_r=ratio)

    eta = EFFICIENCY
    high, low = state_factors(c)
    mean_factor = 0.5 * (high + low)
    pair_rate = coincidence_rate_hz / (eta * eta * mean_factor)
    # raw / corrected = P / (P + A)  =>  A = P (corrected / raw - 1)
    acc_rate = coincidence_rate_hz * (corrected_target / raw_target - 1.0)
    singles = np.sqrt(acc_rate / (2.0 * gate_ps * 1e-12))
    leak = singles - eta * pair_rate * mean_factor - c.detectors[0].dark_rate_hz
    if leak < 0:
        raise ValueError("accidental target below the floor set by the pair singles alone")
    return c.replace(
        pair_rate_hz=pair_rate,
        amzi=AmziParams(leak_rate_hz=float(leak)),
    )


def drive_10mhz(seed=1, t0_ps=None):
    """10 MHz drive: raw 0.78, corrected 0.90, 3.95 V peak-to-peak."""
    return modulation_config(10e6, 0.78, 0.90, vpp=3.95, seed=seed, t0_ps=t0_ps)


def drive_1ghz(seed=1, t0_ps=None):
    """1 GHz drive: raw 0.74, corrected 0.89, 4.0 V peak-to-peak."""
    return modulation_config(1e9, 0.74, 0.89, vpp=4.0, seed=seed, t0_ps=t0_ps)
