"""
End-to-end procedures tying simulation to analysis.

``analyze_streams`` is the modulated-run pipeline: match, histogram delays,
estimate the accidental floor off-peak, sweep the drive offset, fold at the
best offset and report raw and corrected visibilities. ``fit_scan`` and
``small_signal_vpi`` reproduce the phase-shifter characterisations.
"""

from dataclasses import dataclass

import numpy as np

from . import coincidence as co
from .config import DriveWaveform
from .analysis import estimate_vpi, fit_fringe, phase_swing, select_harmonic, vpi_uncertainty
from .simulator import monitor_counts, simulate_phase_scan


class EmptyCoincidenceError(ValueError):
    """No coincidences fell inside the gate."""


def default_bins(period_ps):
    # 64 bins at 10 MHz, 16 at 1 GHz: keep bins several jitter widths wide
    return 16 if period_ps < 10_000 else 64


@dataclass
class ModulationReport:
    period_ps: int
    window_ps: int
    n_matched: int
    n_gated: int
    histogram: co.DelayHistogram
    accidentals_gate: float
    sigma_accidentals_gate: float
    sweep: co.OffsetSweep
    sweep_corrected: list
    folded: co.FoldedHistogram
    raw: co.VisibilityResult
    corrected: co.VisibilityResult

    @property
    def accidentals_per_state(self):
        return 0.5 * self.accidentals_gate

    def summary(self):
        return {
            "period_ps": self.period_ps,
            "window_ps": self.window_ps,
            "best_offset_ps": self.sweep.best_offset_ps,
            "n_coincidences": self.n_gated,
            "n_matched_in_histogram_range": self.n_matched,
            "c_high": int(self.raw.c_high),
            "c_low": int(self.raw.c_low),
            "accidentals_per_state": self.accidentals_per_state,
            "v_raw": self.raw.v,
            "sigma_v_raw": self.raw.sigma_v,
            "v_corrected": self.corrected.v,
            "sigma_v_corrected": self.corrected.sigma_v,
        }


def analyze_streams(signal, idler, period_ps, window_ps=1000, n_bins=None, sweep_steps=101,
                    bin_width_ps=None, hist_range_ps=None):
    """
    Modulated-run analysis.

    Parameters
    ----------
    signal, idler : TimetagStream or int array
    period_ps : int
        Drive period.
    window_ps : int
        Coincidence gate: delays in ``[-window, window)`` are folded.
    n_bins : int, optional
        Folded-histogram bins (even). Defaults by period.
    sweep_steps : int
        Offsets evaluated over ``[-T/4, T/4]``.
    bin_width_ps, hist_range_ps : int, optional
        Delay histogram binning; default ``window/10`` and ``10*window``. The
        histogram range is also the matching window, so that off-peak bins
        are populated with accidentals.
    """
    period_ps = int(period_ps)
    window_ps = int(window_ps)
    n_bins = default_bins(period_ps) if n_bins is None else int(n_bins)
    bw = int(bin_width_ps) if bin_width_ps else max(1, window_ps // 10)
    span = int(hist_range_ps) if hist_range_ps else 10 * window_ps
    if span <= window_ps:
        raise ValueError("histogram range must exceed the coincidence window")

    matched = co.find_coincidences(signal, idler, span)
    hist = co.delay_histogram(matched, bw, span)
    d = matched.delay_ps
    gated = matched.select((d >= -window_ps) & (d < window_ps))
    if len(gated) == 0:
        raise EmptyCoincidenceError("no coincidences inside the gate")
    acc, sigma_acc = co.accidentals_in_gate(hist, window_ps)

    sweep = co.offset_sweep(gated, period_ps, sweep_steps)
    sweep_corr = [co.background_subtract(r, 0.5 * acc, 0.5 * sigma_acc) for r in sweep.results]
    folded = co.fold_midpoints(gated, period_ps, sweep.best_offset_ps, n_bins)
    raw = co.visibility_from_fold(folded)
    raw = co.VisibilityResult(raw.c_high, raw.c_low, raw.v, raw.sigma_v, 0.5 * acc)
    corrected = co.background_subtract(raw, 0.5 * acc, 0.5 * sigma_acc)
    return ModulationReport(period_ps, window_ps, len(matched), len(gated), hist, acc, sigma_acc,
                            sweep, sweep_corr, folded, raw, corrected)


@dataclass
class ScanReport:
    scan: object
    n: int
    fit: object
    fits: dict


def scan_phases(points):
    return np.linspace(0.0, 2.0 * np.pi, int(points), endpoint=False)


def fit_scan(c, points=32, dwell_s=1.0):
    """Simulate a phase-shifter scan and fit it with the better harmonic."""
    scan = simulate_phase_scan(c, scan_phases(points), dwell_s)
    fits = {n: fit_fringe(scan.phases, scan.coincidences, n) for n in (1, 2)}
    n = select_harmonic(scan.phases, scan.coincidences)
    return ScanReport(scan, n, fits[n], fits)


@dataclass(frozen=True)
class VpiEstimate:
    vpi: float
    sigma: float
    phase_swing: float
    fit: object


def small_signal_vpi(c, rng, probe_vpp=0.3, probe_freq_hz=1e5, photon_rate_hz=1e10, dwell_s=0.1,
                     points=32):
    """
    Estimate V_pi from a small square probe on the classical configuration.

    The thermal shifter is scanned with the modulator idle to fit the n=1
    fringe, then parked at quadrature while the probe toggles the modulator.
    The fitted fringe converts the two probe levels into a phase swing.
    """
    if c.interference != "classical":
        raise ValueError("small-signal probing needs the classical configuration")
    idle = c.replace(drive=DriveWaveform(shape="dc", vdc=0.0))
    phases = scan_phases(points)
    counts = np.array([sum(monitor_counts(idle.replace(tps_offset_rad=float(p)), dwell_s, photon_rate_hz, rng))
                       for p in phases], dtype=float)
    fit = fit_fringe(phases, counts, 1)
    bias = (0.5 * np.pi - fit.phi0) / fit.n
    probe = c.replace(tps_offset_rad=float(bias),
                      drive=DriveWaveform(shape="square", freq_hz=probe_freq_hz, vpp=probe_vpp, vdc=0.0, t0_ps=0.0))
    high, low = monitor_counts(probe, dwell_s, photon_rate_hz, rng)
    # each state integrates half the dwell: double to compare with scan points
    swing = phase_swing(2.0 * high, 2.0 * low, fit)
    # shot noise on the level difference dominates the error
    slope = 0.5 * fit.amplitude * fit.v
    sigma_swing = 2.0 * np.sqrt(high + low) / slope
    return VpiEstimate(float(estimate_vpi(probe_vpp, swing)),
                       float(vpi_uncertainty(probe_vpp, swing, sigma_swing)), swing, fit)
