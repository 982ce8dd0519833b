"""
Closed-form physics of a two-source nonlinear interferometer.

All functions are pure and accept numpy arrays wherever a scalar phase or
rate is expected. Phases are never reduced modulo 2*pi here; callers that
compare angles reduce them themselves.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FringeParams:
    """Parameters of ``1/2 (1 + v cos(n phi + phi0))``."""

    v: float
    n: int = 2
    phi0: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.v <= 1.0:
            raise ValueError(f"visibility must lie in [0, 1], got {self.v}")
        if self.n not in (1, 2):
            raise ValueError(f"harmonic must be 1 or 2, got {self.n}")
        if not np.isfinite(self.phi0):
            raise ValueError("phi0 must be finite")


@dataclass(frozen=True)
class PhaseState:
    phi_p_applied: float = 0.0
    phi_s: float = 0.0
    phi_i: float = 0.0
    phi0: float = 0.0

    def biphoton_phase(self):
        """Total pair phase: the pump shifter counts twice, signal/idler once."""
        return pump_phase_transfer(self.phi_p_applied) + self.phi_s + self.phi_i + self.phi0


@dataclass(frozen=True)
class ModulatorParams:
    """Carrier-depletion modulator: pi voltage and phase-correlated excess loss."""

    vpi: float = 7.99
    alpha_db_per_pi: float = 0.0
    base_loss_db: float = 0.0

    def __post_init__(self):
        if not self.vpi > 0:
            raise ValueError(f"vpi must be positive, got {self.vpi}")
        if self.alpha_db_per_pi < 0:
            raise ValueError("alpha_db_per_pi must be >= 0")
        if self.base_loss_db < 0:
            raise ValueError("base_loss_db must be >= 0")


def interference_weight(theta):
    """Squared modulus of ``(1 + exp(i theta)) / 2``, i.e. ``(1 + cos theta) / 2``."""
    return 0.5 * (1.0 + np.cos(theta))


def fringe(phi_p, params):
    """
    Coincidence fringe ``1/2 (1 + v cos(n phi_p + phi0))``.

    Parameters
    ----------
    phi_p : float or array
        Applied pump phase in radians.
    params : FringeParams

    Returns
    -------
    float or array in [0, 1]
    """
    return 0.5 * (1.0 + params.v * np.cos(params.n * np.asarray(phi_p, dtype=float) + params.phi0))


def visibility_from_ratio(r):
    """Visibility ``2R / (1 + R^2)`` for a source pair-amplitude ratio R >= 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("source ratio must be >= 0")
    out = 2.0 * r / (1.0 + r * r)
    return float(out) if out.ndim == 0 else out


def ratio_from_visibility(v):
    """Inverse of :func:`visibility_from_ratio` on the branch R <= 1."""
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {v}")
    # rationalised form: no cancellation at small v
    return float(v / (1.0 + np.sqrt(1.0 - v * v)))


def pump_phase_transfer(phi_p_applied):
    # two degenerate pump photons per pair: the pump phase enters twice
    return np.multiply(2.0, phi_p_applied)


def phase_from_voltage(v_applied, m):
    """Linear voltage-to-phase map ``pi * V / V_pi``."""
    return np.multiply(np.pi / m.vpi, v_applied)


def cdm_transmission(phi, m):
    """
    Power transmission of the modulator at applied phase ``phi``.

    Excess loss is linear in phase on the dB scale on top of a static
    insertion loss. Negative phases are treated by magnitude.
    """
    loss_db = m.base_loss_db + m.alpha_db_per_pi * np.abs(phi) / np.pi
    return 10.0 ** (-loss_db / 10.0)


def coincidence_probability(mean_n):
    """Poisson probability of exactly one coincidence when ``mean_n`` are expected."""
    mean_n = np.asarray(mean_n, dtype=float)
    if np.any(mean_n < 0):
        raise ValueError("mean_n must be >= 0")
    out = mean_n * np.exp(-mean_n)
    return float(out) if out.ndim == 0 else out


def loss_from_singles_visibility(v_singles):
    """Total loss in dB (negative) implied by a singles fringe visibility."""
    if not 0.0 < v_singles <= 1.0:
        raise ValueError(f"singles visibility must lie in (0, 1], got {v_singles}")
    return 10.0 * np.log10(v_singles)


def full_swing_vpp(m, n):
    """Peak-to-peak drive voltage taking the fringe from maximum to minimum."""
    # a fringe null sits pi/n away from the maximum in applied phase
    return m.vpi / n


def pair_rate_factor(theta, ratio, transmission=1.0):
    """
    Relative pair rate of two sources whose amplitudes add with phase ``theta``.

    The second source's amplitude is ``ratio * transmission`` relative to the
    first. Normalised so that the lossless in-phase maximum is exactly 1; for
    ``transmission == 1`` this equals ``fringe(theta) / max(fringe)`` with
    ``v = visibility_from_ratio(ratio)`` and ``n = 1`` on the biphoton phase.
    """
    amp2 = ratio * transmission
    return (1.0 + amp2 * amp2 + 2.0 * amp2 * np.cos(theta)) / (1.0 + ratio) ** 2
