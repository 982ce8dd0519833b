"""
Monte Carlo timetag generation for the two-source interferometer.

Pair emission is an inhomogeneous Poisson process sampled by thinning
against the peak rate. Each pair produces a signal and an idler photon at
the same instant; detection, jitter, uncorrelated counts and dead time are
then applied per channel.

The run is cut into fixed one-second chunks, each drawing from its own
generator seeded by ``(seed, chunk index)``. Chunks may be generated on
several threads (``NLI_THREADS`` caps the pool) and the concatenated result
does not depend on the thread count.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .model import cdm_transmission, pair_rate_factor, phase_from_voltage, pump_phase_transfer

PS_PER_S = 10**12
CHUNK_PS = PS_PER_S
MAX_TAGS = 2**31


class ResourceLimitError(RuntimeError):
    """The requested run would produce more tags than a stream may hold."""


@dataclass
class TimetagStream:
    channel_id: int
    tags: np.ndarray

    def __post_init__(self):
        self.tags = np.asarray(self.tags, dtype=np.int64)

    def __len__(self):
        return len(self.tags)

    def is_sorted(self):
        return bool(np.all(self.tags[1:] >= self.tags[:-1]))


@dataclass
class PhaseScan:
    phases: np.ndarray
    singles_s: np.ndarray
    singles_i: np.ndarray
    coincidences: np.ndarray


def worker_count():
    env = os.environ.get("NLI_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


# --- drive and rate -----------------------------------------------------------

def waveform_voltage(t_ps, w, t0_ps=None):
    """
    Drive voltage at time ``t_ps``.

    A square wave sits at ``vdc + vpp/2`` for the first half period after
    ``t0`` and at ``vdc - vpp/2`` for the second half. ``t0_ps`` overrides the
    waveform's own offset (needed when that offset is drawn per run).
    """
    if w.shape == "dc":
        return np.full(np.shape(t_ps), float(w.vdc)) if np.ndim(t_ps) else float(w.vdc)
    t0 = w.t0_ps if t0_ps is None else t0_ps
    t0 = 0.0 if t0 is None else t0
    period = w.period_ps
    into = np.mod(np.asarray(t_ps, dtype=float) - t0, period)
    half = 0.5 * w.effective_vpp
    out = np.where(2.0 * into < period, w.vdc + half, w.vdc - half)
    return out if np.ndim(t_ps) else float(out)


def _factor_from_voltage(volts, t_ps, c):
    m = c.modulator
    phi_cdm = phase_from_voltage(volts, m)
    # static insertion loss is absorbed into the configured source ratio
    rel = cdm_transmission(phi_cdm, m) / cdm_transmission(0.0, m)
    pump = phi_cdm + c.tps_offset_rad
    if c.drift is not None and c.drift.rad_per_s:
        pump = pump + c.drift.rad_per_s * np.asarray(t_ps, dtype=float) / PS_PER_S
    if c.interference == "nli":
        # pair amplitude of the modulated source follows its pump power
        theta = pump_phase_transfer(pump)
        amp = rel
    else:
        theta = pump
        amp = np.sqrt(rel)
    return pair_rate_factor(theta + c.phi0_rad, c.ratio_r, amp)


def _rate_from_voltage(volts, t_ps, c):
    return c.pair_rate_hz * _factor_from_voltage(volts, t_ps, c)


def instantaneous_rate(t_ps, c, t0_ps=None):
    """Pair emission rate (Hz) at time ``t_ps``; the lossless fringe maximum maps to ``pair_rate_hz``."""
    return _rate_from_voltage(waveform_voltage(t_ps, c.drive, t0_ps), t_ps, c)


def state_factors(c):
    """Relative rates (fringe maximum = 1) in the (high, low) drive states, ignoring drift."""
    d = c.drive
    quiet = c.replace(drift=None)
    if d.shape == "dc":
        f = float(_factor_from_voltage(d.vdc, 0.0, quiet))
        return f, f
    half = 0.5 * d.effective_vpp
    return (float(_factor_from_voltage(d.vdc + half, 0.0, quiet)),
            float(_factor_from_voltage(d.vdc - half, 0.0, quiet)))


def state_rates(c):
    """Emission rates (Hz) in the (high, low) drive states, ignoring drift."""
    high, low = state_factors(c)
    return c.pair_rate_hz * high, c.pair_rate_hz * low


def resolve_t0(c):
    """Drive-to-tagger offset in ps: the pinned value, or a seed-derived draw in [-T/2, T/2)."""
    d = c.drive
    if d.shape == "dc":
        return 0.0
    if d.t0_ps is not None:
        return float(d.t0_ps)
    rng = np.random.default_rng([c.seed, 0])
    return float(rng.uniform(-0.5 * d.period_ps, 0.5 * d.period_ps))


# --- sampling -----------------------------------------------------------------

def sample_emissions(c, start_ps, stop_ps, rng, t0_ps=None):
    """
    Pair emission times (float ps) in ``[start_ps, stop_ps)`` by thinning.

    The bound is ``pair_rate_hz``, which no drive state can exceed because
    modulator loss only ever lowers the second source's amplitude.
    """
    lam_max = c.pair_rate_hz
    span = stop_ps - start_ps
    n = rng.poisson(lam_max * span / PS_PER_S) if lam_max > 0 else 0
    t = start_ps + np.sort(rng.uniform(0.0, span, n))
    u = rng.uniform(0.0, lam_max, n)
    if t0_ps is None:
        t0_ps = resolve_t0(c)
    return t[u < instantaneous_rate(t, c, t0_ps)]


def _chunk(c, key, k, start_ps, stop_ps, t0_ps):
    rng = np.random.default_rng([c.seed, 1, len(key), *key, k])
    emitted = sample_emissions(c, start_ps, stop_ps, rng, t0_ps) - start_ps
    out = []
    for ch, det in enumerate(c.detectors):
        rel = emitted[rng.uniform(size=len(emitted)) < det.efficiency]
        if det.jitter_sigma_ps > 0:
            rel = rel + rng.normal(0.0, det.jitter_sigma_ps, len(rel))
        n_dark = rng.poisson(c.uncorrelated_rate_hz(ch) * (stop_ps - start_ps) / PS_PER_S)
        dark = rng.uniform(0.0, stop_ps - start_ps, n_dark)
        tags = start_ps + np.rint(np.concatenate([rel, dark])).astype(np.int64)
        out.append(tags)
    return out


def apply_dead_time(tags, dead_time_ps):
    """Non-paralysable dead time: drop any tag closer than ``dead_time_ps`` to the last kept tag."""
    tags = np.asarray(tags, dtype=np.int64)
    if dead_time_ps <= 0 or len(tags) < 2:
        return tags
    suspect = np.flatnonzero(np.diff(tags) < dead_time_ps) + 1
    if len(suspect) == 0:
        return tags
    keep = np.ones(len(tags), dtype=bool)
    values = tags.tolist()
    last = None
    prev = -2
    for j in suspect.tolist():
        if j != prev + 1:
            # tag j-1 follows a full dead-time gap, so it was kept
            last = values[j - 1]
        if values[j] - last < dead_time_ps:
            keep[j] = False
        else:
            last = values[j]
        prev = j
    return tags[keep]


def expected_tags_upper(c):
    dur = c.duration_s
    return max(c.pair_rate_hz * det.efficiency + c.uncorrelated_rate_hz(ch)
               for ch, det in enumerate(c.detectors)) * dur


def _sample_run(c, key=()):
    if expected_tags_upper(c) > MAX_TAGS:
        raise ResourceLimitError(
            f"run would produce ~{expected_tags_upper(c):.3g} tags per channel (limit {MAX_TAGS})")
    duration_ps = int(round(c.duration_s * PS_PER_S))
    t0 = resolve_t0(c)
    bounds = [(k, s, min(s + CHUNK_PS, duration_ps)) for k, s in enumerate(range(0, duration_ps, CHUNK_PS))]
    workers = min(worker_count(), len(bounds))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda b: _chunk(c, key, b[0], b[1], b[2], t0), bounds))
    else:
        parts = [_chunk(c, key, k, s, e, t0) for k, s, e in bounds]
    streams = []
    for ch, det in enumerate(c.detectors):
        tags = np.concatenate([p[ch] for p in parts]) if parts else np.empty(0, np.int64)
        tags = np.sort(tags, kind="stable")
        lo, hi = np.searchsorted(tags, [0, duration_ps])
        tags = apply_dead_time(tags[lo:hi], det.dead_time_ps)
        streams.append(TimetagStream(ch, tags))
    return streams[0], streams[1]


def sample_run(c: RunConfig):
    """
    Simulate one run and return the (signal, idler) timetag streams.

    Tags are integer picoseconds in ``[0, duration)``, sorted and
    dead-time-pruned. The output is a deterministic function of ``c``.
    """
    return _sample_run(c)


def simulate_phase_scan(c, phases, dwell_s):
    """
    Step the thermal phase shifter through ``phases`` and count at each step.

    Every point is an independent run of ``dwell_s`` seconds with
    ``tps_offset_rad`` set to the phase; coincidences are matched at the
    configured window.
    """
    from .coincidence import find_coincidences

    if dwell_s <= 0:
        raise ValueError("dwell_s must be > 0")
    phases = np.asarray(phases, dtype=float)
    s_counts = np.zeros(len(phases), dtype=np.int64)
    i_counts = np.zeros(len(phases), dtype=np.int64)
    coinc = np.zeros(len(phases), dtype=np.int64)
    for k, phi in enumerate(phases):
        point = c.replace(tps_offset_rad=float(phi), duration_s=float(dwell_s))
        sig, idl = _sample_run(point, key=(k,))
        s_counts[k] = len(sig)
        i_counts[k] = len(idl)
        coinc[k] = len(find_coincidences(sig, idl, c.window_ps))
    return PhaseScan(phases, s_counts, i_counts, coinc)


def monitor_counts(c, dwell_s, photon_rate_hz, rng):
    """
    Integrated output power of the classical configuration, as photon counts.

    Models a shot-noise-limited power monitor: ``photon_rate_hz`` photons per
    second reach it at the fringe maximum. Returns Poisson counts collected
    during the (high, low) drive states over ``dwell_s`` seconds, half the
    dwell in each.
    """
    high, low = state_factors(c)
    scale = photon_rate_hz * 0.5 * dwell_s
    return int(rng.poisson(high * scale)), int(rng.poisson(low * scale))
