"""
Timetag correlation: coincidence matching, delay histograms, folding modulo
the drive period, offset sweeps and background-corrected visibilities.

Matching rule
-------------
Every signal/idler pair with ``|t_i - t_s| <= window`` is a candidate.
Candidates are accepted in order of increasing ``|delay|``, then increasing
idler index, then increasing signal index, skipping any candidate whose
signal or idler tag is already used. Each tag therefore joins at most one
coincidence and the nearest partner wins.

Candidate sets split into independent clusters (signals sharing no idler
candidates cannot interact), so clusters holding a single candidate are
resolved in bulk and only contended clusters go through the greedy pass.
"""

from dataclasses import dataclass

import numpy as np


class UnsortedStreamError(ValueError):
    """Timetags passed to the matcher are not in non-decreasing order."""


class UndefinedVisibilityError(ValueError):
    """No counts in either drive state."""


class OverSubtractionError(ValueError):
    """Background subtraction leaves a non-positive denominator."""


@dataclass(frozen=True)
class CoincidenceEvent:
    midpoint_ps: int
    delay_ps: int


@dataclass
class Coincidences:
    """Matched pairs as parallel arrays, ordered by signal tag."""

    signal_index: np.ndarray
    idler_index: np.ndarray
    midpoint_ps: np.ndarray
    delay_ps: np.ndarray

    def __len__(self):
        return len(self.midpoint_ps)

    def __iter__(self):
        for m, d in zip(self.midpoint_ps.tolist(), self.delay_ps.tolist()):
            yield CoincidenceEvent(m, d)

    def select(self, mask):
        return Coincidences(self.signal_index[mask], self.idler_index[mask],
                            self.midpoint_ps[mask], self.delay_ps[mask])


@dataclass
class DelayHistogram:
    bin_width_ps: int
    range_ps: int
    counts: np.ndarray
    n_outside: int = 0

    @property
    def edges(self):
        return np.arange(-self.range_ps, self.range_ps + 1, self.bin_width_ps, dtype=np.int64)


@dataclass
class FoldedHistogram:
    period_ps: int
    offset_ps: int
    n_bins: int
    counts: np.ndarray

    @property
    def bin_starts(self):
        return (np.arange(self.n_bins, dtype=np.int64) * self.period_ps) // self.n_bins


@dataclass(frozen=True)
class VisibilityResult:
    c_high: float
    c_low: float
    v: float
    sigma_v: float
    accidentals_per_state: float = 0.0


@dataclass
class OffsetSweep:
    offsets_ps: np.ndarray
    results: list
    best_offset_ps: int

    @property
    def v(self):
        return np.array([r.v for r in self.results])

    @property
    def sigma_v(self):
        return np.array([r.sigma_v for r in self.results])

    def __iter__(self):
        return iter(zip(self.offsets_ps.tolist(), self.results))


def _tags(stream):
    return np.asarray(getattr(stream, "tags", stream), dtype=np.int64)


def _require_sorted(tags, name):
    if len(tags) > 1 and np.any(tags[1:] < tags[:-1]):
        raise UnsortedStreamError(f"{name} timetags are not sorted")


def midpoint(t_s, t_i):
    # floor of the half sum: exact integers stay, x.5 rounds down
    return (np.asarray(t_s, dtype=np.int64) + np.asarray(t_i, dtype=np.int64)) // 2


def _greedy(sig, idl, absd):
    """Accept candidates in (|delay|, idler, signal) order with exclusive tag use."""
    order = np.lexsort((sig, idl, absd))
    used_s = set()
    used_i = set()
    keep_s = []
    keep_i = []
    for s, i in zip(sig[order].tolist(), idl[order].tolist()):
        if s in used_s or i in used_i:
            continue
        used_s.add(s)
        used_i.add(i)
        keep_s.append(s)
        keep_i.append(i)
    return np.array(keep_s, dtype=np.int64), np.array(keep_i, dtype=np.int64)


def find_coincidences(signal, idler, window_ps):
    """
    Match signal and idler tags whose delay is within ``window_ps``.

    Parameters
    ----------
    signal, idler : TimetagStream or array of int
        Sorted timetags in picoseconds.
    window_ps : int
        Maximum ``|t_i - t_s|`` of a coincidence (inclusive).

    Returns
    -------
    Coincidences
        Midpoints use round-half-down; delays are signed ``t_i - t_s``.
    """
    s = _tags(signal)
    i = _tags(idler)
    _require_sorted(s, "signal")
    _require_sorted(i, "idler")
    w = int(window_ps)
    if w < 0:
        raise ValueError("window_ps must be >= 0")

    lo = np.searchsorted(i, s - w, side="left")
    hi = np.searchsorted(i, s + w, side="right")
    has = np.flatnonzero(hi > lo)
    if len(has) == 0:
        empty = np.empty(0, np.int64)
        return Coincidences(empty, empty, empty, empty)
    L = lo[has]
    H = hi[has]

    # consecutive signals interact only when their idler ranges overlap
    starts = np.ones(len(has), dtype=bool)
    starts[1:] = L[1:] >= H[:-1]
    comp = np.cumsum(starts) - 1
    sizes = np.bincount(comp)
    single = (sizes[comp] == 1) & (H - L == 1)

    s_idx = [has[single]]
    i_idx = [L[single]]

    hard = np.flatnonzero(~single)
    if len(hard):
        cnt = H[hard] - L[hard]
        sig = np.repeat(has[hard], cnt)
        first = np.repeat(L[hard] - np.cumsum(cnt) + cnt, cnt)
        idl = first + np.arange(cnt.sum())
        absd = np.abs(i[idl] - s[sig])
        gs, gi = _greedy(sig, idl, absd)
        s_idx.append(gs)
        i_idx.append(gi)

    s_idx = np.concatenate(s_idx)
    i_idx = np.concatenate(i_idx)
    order = np.argsort(s_idx, kind="stable")
    s_idx = s_idx[order]
    i_idx = i_idx[order]
    ts = s[s_idx]
    ti = i[i_idx]
    return Coincidences(s_idx, i_idx, midpoint(ts, ti), ti - ts)


def _delays(events):
    return np.asarray(getattr(events, "delay_ps", events), dtype=np.int64)


def _midpoints(events):
    return np.asarray(getattr(events, "midpoint_ps", events), dtype=np.int64)


def delay_histogram(events, bin_width_ps, range_ps):
    """
    Histogram signed delays on ``[-range_ps, range_ps)`` in half-open bins.

    Events outside the range are dropped and tallied in ``n_outside``.
    """
    bw = int(bin_width_ps)
    rng = int(range_ps)
    if bw <= 0:
        raise ValueError("bin width must be positive")
    if rng <= 0 or (2 * rng) % bw:
        raise ValueError("bin width must divide twice the range")
    d = _delays(events)
    inside = (d >= -rng) & (d < rng)
    nb = 2 * rng // bw
    counts = np.bincount((d[inside] + rng) // bw, minlength=nb).astype(np.int64)
    return DelayHistogram(bw, rng, counts, int(len(d) - inside.sum()))


def fold_midpoints(events, period_ps, offset_ps, n_bins):
    """Histogram ``(midpoint + offset) mod period`` into ``n_bins`` equal bins."""
    T = int(period_ps)
    if T <= 0:
        raise ValueError("period must be positive")
    if n_bins <= 0:
        raise ValueError("n_bins must be positive")
    x = np.mod(_midpoints(events) + int(offset_ps), T)
    idx = (x * n_bins) // T
    counts = np.bincount(idx, minlength=n_bins).astype(np.int64)
    return FoldedHistogram(T, int(offset_ps), int(n_bins), counts)


def _visibility(h, l):
    tot = h + l
    if tot <= 0:
        raise UndefinedVisibilityError("no counts in either drive state")
    v = (h - l) / tot
    sigma = 2.0 * np.sqrt(h * l / tot**3)
    return VisibilityResult(float(h), float(l), float(v), float(sigma))


def visibility_from_fold(h):
    """Visibility from the first (high) and second (low) half of a folded period."""
    if h.n_bins % 2:
        raise ValueError("n_bins must be even")
    half = h.n_bins // 2
    return _visibility(int(h.counts[:half].sum()), int(h.counts[half:].sum()))


def sweep_offsets(period_ps, n_steps):
    """Integer offsets spanning [-T/4, T/4] in ``n_steps`` near-uniform steps."""
    if n_steps < 3:
        raise ValueError("n_steps must be >= 3")
    q = period_ps / 4.0
    return np.rint(np.linspace(-q, q, n_steps)).astype(np.int64)


def offset_sweep(events, period_ps, n_steps=101):
    """
    Folded visibility as the offset runs over ``[-T/4, T/4]``.

    For each offset the high state is ``(m + offset) mod T < T/2``, exactly as
    :func:`visibility_from_fold` would count it for any even bin count.
    Residues are sorted once so every step costs two binary searches.

    ``best_offset_ps`` maximises ``|v|``. A negative optimum means the high
    and low states are swapped; it is moved by half a period so that the
    high state comes first, then wrapped into ``(-T/2, T/2]``.
    """
    T = int(period_ps)
    offsets = sweep_offsets(T, n_steps)
    x = np.sort(np.mod(_midpoints(events), T))
    n = len(x)
    half = (T + 1) // 2  # smallest residue in the low state
    results = []
    for off in offsets.tolist():
        # high iff (x + off) mod T lies in [0, half): x in [-off, half - off) mod T
        a = (-off) % T
        b = a + half
        if b <= T:
            high = np.searchsorted(x, b, "left") - np.searchsorted(x, a, "left")
        else:
            high = n - np.searchsorted(x, a, "left") + np.searchsorted(x, b - T, "left")
        results.append(_visibility(int(high), int(n - high)))
    v = np.array([r.v for r in results])
    k = int(np.argmax(np.abs(v)))
    best = int(offsets[k])
    if v[k] < 0:
        best += T // 2
    best = (best + T // 2) % T - T // 2
    if best == -(T // 2) and T % 2 == 0:
        best = T // 2
    return OffsetSweep(offsets, results, best)


def estimate_accidentals(h, peak_halfwidth_ps):
    """
    Mean count per histogram bin away from the coincidence peak.

    Bins lying entirely outside ``[-peak_halfwidth, peak_halfwidth)`` count as
    background.
    """
    edges = h.edges
    hw = int(peak_halfwidth_ps)
    if not 0 <= hw < h.range_ps:
        raise ValueError("peak window must lie strictly inside the histogram range")
    outside = (edges[1:] <= -hw) | (edges[:-1] >= hw)
    if not outside.any():
        raise ValueError("no histogram bins outside the peak")
    return float(h.counts[outside].mean())


def accidentals_in_gate(h, gate_ps):
    """
    Expected accidental count inside ``[-gate, gate)`` and its standard error.

    Scales the off-peak per-bin mean by the number of bins the gate covers;
    the gate must be a whole number of bins.
    """
    if (2 * int(gate_ps)) % h.bin_width_ps:
        raise ValueError("gate must span a whole number of histogram bins")
    edges = h.edges
    outside = (edges[1:] <= -gate_ps) | (edges[:-1] >= gate_ps)
    n_out = int(outside.sum())
    per_bin = estimate_accidentals(h, gate_ps)
    n_gate = 2 * int(gate_ps) // h.bin_width_ps
    return per_bin * n_gate, np.sqrt(per_bin / n_out) * n_gate


def background_subtract(r, accidentals_per_state, sigma_accidentals=0.0):
    """
    Remove a flat accidental floor from both drive states.

    ``v = (H - L) / (H + L - 2a)``. H and L are Poisson; the floor ``a`` carries
    its own standard error ``sigma_accidentals``.
    """
    a = float(accidentals_per_state)
    if a < 0:
        raise ValueError("accidentals must be >= 0")
    h, l = r.c_high, r.c_low
    diff = h - l
    den = h + l - 2.0 * a
    if den <= 0:
        raise OverSubtractionError("accidental floor exceeds the measured counts")
    v = diff / den
    dh = 2.0 * (l - a) / den**2
    dl = -2.0 * (h - a) / den**2
    da = 2.0 * diff / den**2
    sigma = np.sqrt(dh * dh * h + dl * dl * l + (da * sigma_accidentals) ** 2)
    return VisibilityResult(h, l, float(v), float(sigma), a)
