import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats
from scipy.optimize import curve_fit

from nlisim import coincidence as co
from nlisim.config import DetectorModel, DriveWaveform, RunConfig
from nlisim.model import ModulatorParams
from nlisim.simulator import sample_run

from oracles import exclusive_matching


def as_tuples(ev):
    return sorted(zip(ev.signal_index.tolist(), ev.idler_index.tolist(),
                      ev.midpoint_ps.tolist(), ev.delay_ps.tolist()))


sorted_tags = st.lists(st.integers(0, 3000), max_size=60).map(sorted)


# --- matching -----------------------------------------------------------------

def test_single_pair():
    ev = co.find_coincidences([100], [150], 100)
    assert list(ev) == [co.CoincidenceEvent(midpoint_ps=125, delay_ps=50)]


def test_outside_window():
    assert len(co.find_coincidences([100], [300], 100)) == 0


def test_window_edge_inclusive():
    assert len(co.find_coincidences([100], [200], 100)) == 1


def test_midpoint_rounds_half_down():
    ev = co.find_coincidences([100], [151], 100)
    assert ev.midpoint_ps.tolist() == [125]
    assert co.midpoint(-3, 0) == -2


def test_negative_delay_sign():
    ev = co.find_coincidences([150], [100], 100)
    assert ev.delay_ps.tolist() == [-50]


def test_nearest_partner_wins():
    # idler at 130 is closer to signal 120 than to 100
    ev = co.find_coincidences([100, 120], [130], 50)
    assert ev.signal_index.tolist() == [1]


def test_tie_goes_to_earlier_idler():
    ev = co.find_coincidences([100], [90, 110], 50)
    assert ev.idler_index.tolist() == [0]


def test_exclusive_use():
    ev = co.find_coincidences([100, 101, 102], [101], 10)
    assert len(ev) == 1


def test_unsorted_rejected():
    with pytest.raises(co.UnsortedStreamError):
        co.find_coincidences([5, 1], [3], 10)
    with pytest.raises(co.UnsortedStreamError):
        co.find_coincidences([1], [5, 3], 10)


def test_empty_inputs():
    assert len(co.find_coincidences([], [], 10)) == 0
    assert len(co.find_coincidences([1, 2], [], 10)) == 0


@settings(max_examples=300, deadline=None)
@given(sorted_tags, sorted_tags, st.integers(0, 200))
def test_matches_bruteforce_oracle(s, i, w):
    assert as_tuples(co.find_coincidences(s, i, w)) == exclusive_matching(s, i, w)


def test_matches_oracle_at_full_size():
    rng = np.random.default_rng(7)
    for _ in range(3):
        s = np.sort(rng.integers(0, 10**7, 10**4))
        i = np.sort(rng.integers(0, 10**7, 10**4))
        assert as_tuples(co.find_coincidences(s, i, 700)) == exclusive_matching(s, i, 700)


@settings(max_examples=200, deadline=None)
@given(sorted_tags, sorted_tags, st.integers(0, 150), st.integers(0, 150))
def test_window_monotone(s, i, w1, extra):
    assert len(co.find_coincidences(s, i, w1 + extra)) >= len(co.find_coincidences(s, i, w1))


# --- delay histogram ------------------------------------------------------------

def test_delay_histogram_single():
    h = co.delay_histogram(co.find_coincidences([100], [150], 100), 100, 500)
    assert h.counts.sum() == 1
    k = int(np.flatnonzero(h.counts)[0])
    assert (h.edges[k], h.edges[k + 1]) == (0, 100)


def test_delay_histogram_symmetric():
    d = np.array([-70, 70, -230, 230, -10, 10])
    h = co.delay_histogram(d, 20, 300)
    assert h.counts.sum() == 6
    assert np.array_equal(h.counts, h.counts[::-1])


def test_delay_histogram_counts_outside():
    h = co.delay_histogram(np.array([-600, -500, 0, 499, 500]), 100, 500)
    assert h.counts.sum() == 3
    assert h.n_outside == 2


def test_delay_histogram_errors():
    with pytest.raises(ValueError):
        co.delay_histogram([0], 0, 500)
    with pytest.raises(ValueError):
        co.delay_histogram([0], 300, 500)


def gaussian(x, a, mu, s):
    return a * np.exp(-0.5 * ((x - mu) / s) ** 2)


def test_jitter_broadens_peak_by_root_two():
    det = DetectorModel(efficiency=1.0, jitter_sigma_ps=30.0)
    c = RunConfig(pair_rate_hz=20_000, ratio_r=1.0, modulator=ModulatorParams(),
                  drive=DriveWaveform(), detectors=(det, det), window_ps=500, duration_s=1.0, seed=11)
    s, i = sample_run(c)
    h = co.delay_histogram(co.find_coincidences(s, i, 500), 5, 500)
    x = h.edges[:-1] + 2.5
    (a, mu, sigma), _ = curve_fit(gaussian, x, h.counts, p0=(h.counts.max(), 0.0, 40.0))
    assert abs(sigma) == pytest.approx(30 * np.sqrt(2), rel=0.05)
    assert mu == pytest.approx(0, abs=2)


# --- folding ----------------------------------------------------------------------

def test_fold_periodicity():
    T = 1000
    h = co.fold_midpoints(np.array([0, T, 2 * T]), T, 0, 16)
    assert h.counts[0] == 3


def test_fold_offset_shift():
    T = 1000
    h = co.fold_midpoints(np.array([T // 2]), T, T // 2, 16)
    assert h.counts[0] == 1


def test_fold_bin_rule():
    T, n = 1000, 16
    m = np.arange(-5000, 5000, 7)
    h = co.fold_midpoints(m, T, 123, n)
    expected = np.bincount(np.floor(((m + 123) % T) / (T / n)).astype(int), minlength=n)
    assert np.array_equal(h.counts, expected)


def test_fold_uniform_is_flat():
    rng = np.random.default_rng(3)
    m = rng.integers(0, 10**9, 200_000)
    h = co.fold_midpoints(m, 100_000, 0, 64)
    assert stats.chisquare(h.counts).pvalue > 0.01


@given(st.lists(st.integers(-10**12, 10**12), max_size=200), st.integers(1, 10**6),
       st.integers(-10**6, 10**6), st.sampled_from([2, 16, 64]), st.integers(-1000, 1000))
def test_fold_conservation_and_translation(m, T, off, n, k):
    m = np.array(m, dtype=np.int64)
    h = co.fold_midpoints(m, T, off, n)
    assert h.counts.sum() == len(m)
    shifted = co.fold_midpoints(m + k * T, T, off, n)
    assert np.array_equal(h.counts, shifted.counts)


# --- visibility -------------------------------------------------------------------

def fold_from(high, low, n_bins=4):
    counts = np.zeros(n_bins, dtype=np.int64)
    counts[0] = high
    counts[n_bins // 2] = low
    return co.FoldedHistogram(1000, 0, n_bins, counts)


def test_visibility_examples():
    assert co.visibility_from_fold(fold_from(90, 10)).v == pytest.approx(0.8)
    r = co.visibility_from_fold(fold_from(50, 50))
    assert r.v == 0.0
    assert r.sigma_v == pytest.approx(0.1)
    assert co.visibility_from_fold(fold_from(37, 0)).v == 1.0


def test_visibility_sigma_matches_finite_difference():
    # first-order propagation checked against numerical partial derivatives
    h, l = 700.0, 300.0

    def v(a, b):
        return (a - b) / (a + b)

    eps = 1e-4
    dh = (v(h + eps, l) - v(h - eps, l)) / (2 * eps)
    dl = (v(h, l + eps) - v(h, l - eps)) / (2 * eps)
    expected = np.sqrt(dh**2 * h + dl**2 * l)
    assert co.visibility_from_fold(fold_from(700, 300)).sigma_v == pytest.approx(expected, rel=1e-6)


def test_visibility_errors():
    with pytest.raises(co.UndefinedVisibilityError):
        co.visibility_from_fold(fold_from(0, 0))
    with pytest.raises(ValueError):
        co.visibility_from_fold(co.FoldedHistogram(1000, 0, 3, np.array([1, 1, 1])))


def test_boundary_bin_belongs_to_later_state():
    T = 1000
    r = co.visibility_from_fold(co.fold_midpoints(np.array([T // 2]), T, 0, 2))
    assert (r.c_high, r.c_low) == (0, 1)


# --- offset sweep -------------------------------------------------------------------

def square_events(T, n, v_true, t0=0, seed=0):
    """Midpoints from a square-modulated rate; the high half-period starts at t0."""
    rng = np.random.default_rng(seed)
    high = rng.random(n) < 0.5 * (1 + v_true)
    cycle = rng.integers(0, 10**6, n) * T
    phase = np.where(high, rng.integers(0, T // 2, n), rng.integers(T // 2, T, n))
    return cycle + phase + t0


@pytest.mark.parametrize("T, steps", [(1000, 101), (100_000, 101), (999, 11)])
def test_sweep_equals_direct_folding(T, steps):
    m = square_events(T, 5000, 0.7, t0=T // 7, seed=1)
    sweep = co.offset_sweep(m, T, steps)
    for off, r in sweep:
        direct = co.visibility_from_fold(co.fold_midpoints(m, T, off, 16 if T % 2 == 0 else 2))
        assert (r.c_high, r.c_low) == (direct.c_high, direct.c_low)


def test_sweep_triangle_ideal():
    T = 1000
    m = square_events(T, 200_000, 0.8, seed=2)
    sweep = co.offset_sweep(m, T, 101)
    v0 = sweep.v[50]
    model = (1 - 4 * np.abs(sweep.offsets_ps) / T) * v0
    assert np.all(np.abs(sweep.v - model) < 4 * sweep.sigma_v + 1e-12)
    assert abs(sweep.v[0]) < 4 * sweep.sigma_v[0]
    assert abs(sweep.v[-1]) < 4 * sweep.sigma_v[-1]
    assert sweep.best_offset_ps == 0


def test_sweep_recovers_shifted_offset():
    T = 100_000
    m = square_events(T, 50_000, 0.9, t0=8000, seed=4)
    sweep = co.offset_sweep(m, T, 101)
    step = T // 2 / 100
    assert abs(sweep.best_offset_ps - (-8000)) <= step


def test_sweep_flips_inverted_states():
    # high state begins half a period later than assumed: sweep still locks on
    T = 100_000
    m = square_events(T, 50_000, 0.9, t0=T // 2, seed=5)
    sweep = co.offset_sweep(m, T, 101)
    assert sweep.best_offset_ps in (T // 2, -T // 2)
    r = co.visibility_from_fold(co.fold_midpoints(m, T, sweep.best_offset_ps, 64))
    assert r.v > 0.85


def test_sweep_flat_events():
    rng = np.random.default_rng(6)
    m = rng.integers(0, 10**10, 20_000)
    sweep = co.offset_sweep(m, 1000, 21)
    assert np.all(np.abs(sweep.v) < 4 * sweep.sigma_v)


def test_sweep_needs_three_steps():
    with pytest.raises(ValueError):
        co.offset_sweep(np.array([1, 2]), 1000, 2)


# --- accidentals and background -------------------------------------------------------

def test_accidentals_flat_and_zero():
    flat = co.DelayHistogram(100, 1000, np.full(20, 7, dtype=np.int64))
    assert co.estimate_accidentals(flat, 200) == 7.0
    peak = np.zeros(20, dtype=np.int64)
    peak[9:11] = 500
    assert co.estimate_accidentals(co.DelayHistogram(100, 1000, peak), 200) == 0.0


def test_accidentals_errors():
    h = co.DelayHistogram(100, 1000, np.ones(20, dtype=np.int64))
    with pytest.raises(ValueError):
        co.estimate_accidentals(h, 1000)


def test_accidentals_match_dark_count_formula():
    d1, d2, dur, w = 20_000.0, 30_000.0, 10.0, 100_000
    det = (DetectorModel(efficiency=0.0, dark_rate_hz=d1), DetectorModel(efficiency=0.0, dark_rate_hz=d2))
    c = RunConfig(pair_rate_hz=0.0, ratio_r=1.0, modulator=ModulatorParams(), drive=DriveWaveform(),
                  detectors=det, window_ps=w, duration_s=dur, seed=21)
    s, i = sample_run(c)
    bw = 10_000
    h = co.delay_histogram(co.find_coincidences(s, i, w), bw, w)
    per_bin = co.estimate_accidentals(h, bw)
    expected = d1 * d2 * bw * 1e-12 * dur
    n_out = len(h.counts) - 2
    assert abs(per_bin - expected) < 3 * np.sqrt(expected / n_out)
    total, _ = co.accidentals_in_gate(h, 2 * bw)
    assert total == pytest.approx(co.estimate_accidentals(h, 2 * bw) * 4)


def test_background_subtract_reference_numbers():
    h, l = 890.0, 110.0
    raw = co._visibility(h, l)
    assert raw.v == pytest.approx(0.78)
    corr = co.background_subtract(raw, (0.2 / 3) * (h + l))
    assert corr.v == pytest.approx(0.90)


def test_background_subtract_identity_and_null():
    raw = co._visibility(700.0, 300.0)
    same = co.background_subtract(raw, 0.0)
    assert same.v == raw.v and same.sigma_v == pytest.approx(raw.sigma_v)
    assert co.background_subtract(co._visibility(400.0, 400.0), 123.0).v == 0.0


def test_background_subtract_error_propagation():
    h, l, a, sa = 800.0, 200.0, 50.0, 4.0

    def v(x, y, z):
        return (x - y) / (x + y - 2 * z)

    eps = 1e-4
    grads = [(v(h + eps, l, a) - v(h - eps, l, a)) / (2 * eps),
             (v(h, l + eps, a) - v(h, l - eps, a)) / (2 * eps),
             (v(h, l, a + eps) - v(h, l, a - eps)) / (2 * eps)]
    expected = np.sqrt(grads[0] ** 2 * h + grads[1] ** 2 * l + grads[2] ** 2 * sa**2)
    r = co.background_subtract(co._visibility(h, l), a, sa)
    assert r.sigma_v == pytest.approx(expected, rel=1e-6)


def test_over_subtraction():
    with pytest.raises(co.OverSubtractionError):
        co.background_subtract(co._visibility(10.0, 10.0), 10.0)
