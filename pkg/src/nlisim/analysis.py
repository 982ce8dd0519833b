"""
Parameter extraction from scans and modulated runs.

Fringes are fitted by weighted linear least squares on the regressors
``(1, cos n phi, sin n phi)``, which is exact for this model class and needs
no starting guess. Weights are ``1 / max(count, 1)``.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .model import loss_from_singles_visibility


class FitError(ValueError):
    """The phase set cannot constrain the fringe model."""


class AmbiguousHarmonicError(ValueError):
    """Neither harmonic fits clearly better than the other."""


@dataclass(frozen=True)
class FringeFit:
    amplitude: float
    v: float
    sigma_v: float
    phi0: float
    sigma_phi0: float
    n: int
    residual_rms: float
    sigma_amplitude: float = 0.0

    @property
    def in_range(self):
        """False when the fitted visibility falls outside [0, 1]; values are never clamped."""
        return 0.0 <= self.v <= 1.0

    def predict(self, phases):
        return 0.5 * self.amplitude * (1.0 + self.v * np.cos(self.n * np.asarray(phases) + self.phi0))


@dataclass(frozen=True)
class LossBudget:
    total_db: float
    components: tuple = field(default_factory=tuple)
    residual_db: float = 0.0


_WEIGHT_ITERATIONS = 4


def fit_fringe(phases, counts, n):
    """
    Fit ``A/2 (1 + v cos(n phi + phi0))`` to counts.

    Parameters
    ----------
    phases : array of float
        Phase-shifter settings in radians.
    counts : array of float
        Counts at each setting (>= 0).
    n : {1, 2}
        Fringe harmonic; held fixed.

    Returns
    -------
    FringeFit
        Weights are refined from the fitted model a few times. Standard
        errors come from the final weighted covariance propagated to first
        order.
    """
    if n not in (1, 2):
        raise ValueError("harmonic must be 1 or 2")
    phi = np.asarray(phases, dtype=float)
    y = np.asarray(counts, dtype=float)
    if phi.shape != y.shape or phi.ndim != 1:
        raise ValueError("phases and counts must be 1-D arrays of equal length")
    if len(phi) < 5:
        raise ValueError("need at least 5 points")
    if np.any(y < 0):
        raise ValueError("counts must be >= 0")

    X = np.column_stack([np.ones_like(phi), np.cos(n * phi), np.sin(n * phi)])
    # Poisson weights from the model, not the data: observed-count weights bias v upward
    w = 1.0 / np.maximum(y, 1.0)
    for _ in range(_WEIGHT_ITERATIONS):
        XtW = X.T * w
        M = XtW @ X
        if np.linalg.matrix_rank(M, tol=1e-10 * np.abs(M).max()) < 3:
            raise FitError("phase set does not span the fringe (singular design)")
        cov = np.linalg.inv(M)
        beta = cov @ (XtW @ y)
        w = 1.0 / np.maximum(X @ beta, 1.0)
    a, b, c = beta

    amp = np.hypot(b, c)
    v = amp / a
    phi0 = float(np.arctan2(-c, b))
    # d(v)/d(a,b,c) and d(phi0)/d(a,b,c)
    if amp > 0:
        jv = np.array([-amp / a**2, b / (a * amp), c / (a * amp)])
        jp = np.array([0.0, c / amp**2, -b / amp**2])
        sigma_v = float(np.sqrt(jv @ cov @ jv))
        sigma_phi0 = float(np.sqrt(jp @ cov @ jp))
    else:
        sigma_v = float(np.sqrt(cov[1, 1] + cov[2, 2]) / abs(a))
        sigma_phi0 = np.inf
    resid = y - X @ np.array([a, b, c])
    return FringeFit(
        amplitude=float(2.0 * a),
        v=float(v),
        sigma_v=sigma_v,
        phi0=phi0,
        sigma_phi0=sigma_phi0,
        n=n,
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        sigma_amplitude=float(2.0 * np.sqrt(cov[0, 0])),
    )


def select_harmonic(phases, counts, tolerance=0.01, significance=3.0):
    """
    Return 1 or 2, whichever fit leaves the smaller RMS residual.

    Raises AmbiguousHarmonicError when the two residuals agree to within
    ``tolerance`` of the larger one, or when neither fit finds a visibility
    above ``significance`` standard errors (a flat scan under counting noise).
    """
    f1 = fit_fringe(phases, counts, 1)
    f2 = fit_fringe(phases, counts, 2)
    r1, r2 = f1.residual_rms, f2.residual_rms
    if abs(r1 - r2) <= tolerance * max(r1, r2):
        raise AmbiguousHarmonicError(f"residuals indistinguishable (n=1: {r1:.4g}, n=2: {r2:.4g})")
    if not any(f.v > significance * f.sigma_v for f in (f1, f2)):
        raise AmbiguousHarmonicError(f"no significant fringe (v = {f1.v:.3g} +- {f1.sigma_v:.2g} at n=1, "
                                     f"{f2.v:.3g} +- {f2.sigma_v:.2g} at n=2)")
    return 1 if r1 < r2 else 2


def estimate_vpi(probe_vpp, phase_amplitude):
    """
    Pi voltage from a small-signal probe, assuming phase is linear in voltage.

    ``phase_amplitude`` is the peak-to-peak phase swing produced by a drive of
    ``probe_vpp`` volts peak-to-peak.
    """
    if probe_vpp <= 0:
        raise ValueError("probe voltage must be positive")
    if phase_amplitude <= 0:
        raise ValueError("phase amplitude must be positive")
    if phase_amplitude >= 0.5:
        warnings.warn(f"phase swing {phase_amplitude:.3f} rad is outside the small-signal regime",
                      stacklevel=2)
    return np.pi * probe_vpp / phase_amplitude


def vpi_uncertainty(probe_vpp, phase_amplitude, sigma_phase):
    """Standard error of :func:`estimate_vpi` given the error on the phase swing."""
    return np.pi * probe_vpp * sigma_phase / phase_amplitude**2


def fringe_phase(level, fit):
    """
    Invert a fitted fringe: total phase ``n phi + phi0`` in [0, pi] giving ``level``.

    Levels beyond the fitted extremes are clipped to the nearest extreme.
    """
    c = (2.0 * np.asarray(level, dtype=float) / fit.amplitude - 1.0) / fit.v
    return np.arccos(np.clip(c, -1.0, 1.0))


def phase_swing(level_high, level_low, fit):
    """Applied-phase difference between two drive states from their fringe levels."""
    return abs(float(fringe_phase(level_high, fit) - fringe_phase(level_low, fit))) / fit.n


def _components(components):
    items = components.items() if hasattr(components, "items") else components
    return tuple((str(name), -abs(float(db))) for name, db in items)


def loss_budget(v_singles, components=()):
    """
    Split the loss implied by a singles visibility into named parts.

    ``components`` is a mapping or a sequence of ``(name, dB)`` pairs. Entries
    are losses, so their sign is ignored and they are booked as negative dB.
    The residual is whatever the named parts do not explain.
    """
    total = float(loss_from_singles_visibility(v_singles))
    comps = _components(components)
    return LossBudget(total, comps, total - sum(db for _, db in comps))
