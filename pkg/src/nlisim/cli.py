"""
Command-line front end.

    nlisim simulate CONFIG OUT.nltt
    nlisim analyze TAGS.nltt OUTDIR --period-ps 100000 [--window-ps ...]
    nlisim scan CONFIG OUTDIR [--points 32 --dwell-s 1]

Exit codes: 0 ok, 2 configuration/usage, 3 I/O, 4 file format, 5 empty
result, 6 ambiguous fringe harmonic.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import coincidence as co
from .analysis import AmbiguousHarmonicError, FitError
from .config import ConfigError, load_config
from .io import TimetagFormatError, read_timetags, write_timetags
from .pipeline import EmptyCoincidenceError, analyze_streams, fit_scan
from .simulator import ResourceLimitError, sample_run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_FORMAT = 4
EXIT_EMPTY = 5
EXIT_AMBIGUOUS = 6


class CommandError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _fmt(x):
    # locale-independent, round-trippable
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if not isinstance(v, str) else v for v in row])


def _write_json(path, obj):
    with open(path, "w", encoding="ascii") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load(path):
    try:
        return load_config(path)
    except ConfigError as exc:
        raise CommandError(EXIT_CONFIG, f"config error: {exc}") from None
    except OSError as exc:
        raise CommandError(EXIT_IO, f"cannot read config: {exc}") from None


def cmd_simulate(config_path, out_path):
    c = _load(config_path)
    try:
        sig, idl = sample_run(c)
    except ResourceLimitError as exc:
        raise CommandError(EXIT_CONFIG, str(exc)) from None
    try:
        write_timetags(out_path, [sig, idl])
    except OSError as exc:
        raise CommandError(EXIT_IO, f"cannot write {out_path}: {exc}") from None
    summary = {
        "out": str(out_path),
        "duration_s": c.duration_s,
        "tags": [len(sig), len(idl)],
        "rate_hz": [len(sig) / c.duration_s, len(idl) / c.duration_s],
    }
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_analyze(tags_path, out_dir, period_ps, window_ps=1000, bins=None, sweep_steps=101,
                bin_width_ps=None, hist_range_ps=None, signal_channel=0, idler_channel=1):
    try:
        streams = read_timetags(tags_path)
    except TimetagFormatError as exc:
        raise CommandError(EXIT_FORMAT, f"bad timetag file: {exc}") from None
    except OSError as exc:
        raise CommandError(EXIT_IO, f"cannot read {tags_path}: {exc}") from None
    if len(streams) < 2 or max(signal_channel, idler_channel) >= len(streams):
        raise CommandError(EXIT_FORMAT, f"file holds {len(streams)} channel(s); need signal and idler")
    try:
        rep = analyze_streams(streams[signal_channel], streams[idler_channel], period_ps, window_ps,
                              bins, sweep_steps, bin_width_ps, hist_range_ps)
    except (EmptyCoincidenceError, co.UndefinedVisibilityError, co.OverSubtractionError) as exc:
        raise CommandError(EXIT_EMPTY, str(exc)) from None
    except ValueError as exc:
        raise CommandError(EXIT_CONFIG, str(exc)) from None

    try:
        os.makedirs(out_dir, exist_ok=True)
        h = rep.histogram
        edges = h.edges
        _write_csv(os.path.join(out_dir, "delay_histogram.csv"),
                   ["delay_start_ps", "delay_end_ps", "counts"],
                   zip(edges[:-1].tolist(), edges[1:].tolist(), h.counts.tolist()))
        _write_csv(os.path.join(out_dir, "offset_sweep.csv"),
                   ["offset_ps", "v", "sigma_v", "v_corrected", "sigma_v_corrected"],
                   ((off, r.v, r.sigma_v, rc.v, rc.sigma_v)
                    for (off, r), rc in zip(rep.sweep, rep.sweep_corrected)))
        f = rep.folded
        half = f.n_bins // 2
        per_bin_acc = rep.accidentals_per_state / half
        starts = f.bin_starts.tolist()
        _write_csv(os.path.join(out_dir, "folded_high_low.csv"),
                   ["bin", "start_ps", "state", "counts", "counts_bg_subtracted"],
                   ((k, starts[k], "high" if k < half else "low", int(cnt), cnt - per_bin_acc)
                    for k, cnt in enumerate(f.counts.tolist())))
        _write_json(os.path.join(out_dir, "visibility.json"), rep.summary())
    except OSError as exc:
        raise CommandError(EXIT_IO, f"cannot write results: {exc}") from None
    return EXIT_OK


def cmd_scan(config_path, out_dir, points=32, dwell_s=1.0):
    c = _load(config_path)
    if points < 5:
        raise CommandError(EXIT_CONFIG, "--points must be >= 5")
    if dwell_s <= 0:
        raise CommandError(EXIT_CONFIG, "--dwell-s must be > 0")
    try:
        rep = fit_scan(c, points, dwell_s)
    except AmbiguousHarmonicError as exc:
        raise CommandError(EXIT_AMBIGUOUS, str(exc)) from None
    except FitError as exc:
        raise CommandError(EXIT_AMBIGUOUS, str(exc)) from None
    except ResourceLimitError as exc:
        raise CommandError(EXIT_CONFIG, str(exc)) from None
    s = rep.scan
    fit = rep.fit
    try:
        os.makedirs(out_dir, exist_ok=True)
        _write_csv(os.path.join(out_dir, "fringe.csv"),
                   ["phase_rad", "singles_s", "singles_i", "coincidences"],
                   zip(s.phases.tolist(), s.singles_s.tolist(), s.singles_i.tolist(), s.coincidences.tolist()))
        _write_json(os.path.join(out_dir, "fit.json"), {
            "n": rep.n,
            "v": fit.v,
            "sigma_v": fit.sigma_v,
            "phi0_rad": fit.phi0,
            "sigma_phi0_rad": fit.sigma_phi0,
            "amplitude": fit.amplitude,
            "residual_rms": {str(k): f.residual_rms for k, f in rep.fits.items()},
        })
    except OSError as exc:
        raise CommandError(EXIT_IO, f"cannot write results: {exc}") from None
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="nlisim", description="Nonlinear-interferometer timetag simulator and analyser.")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", help="simulate a run into a timetag file")
    ps.add_argument("config")
    ps.add_argument("out")

    pa = sub.add_parser("analyze", help="fold a modulated run and report visibilities")
    pa.add_argument("tags")
    pa.add_argument("out_dir")
    pa.add_argument("--period-ps", type=int, required=True)
    pa.add_argument("--window-ps", type=int, default=1000, help="coincidence gate half-width")
    pa.add_argument("--bins", type=int, default=None, help="folded bins (default 64, or 16 below 10 ns periods)")
    pa.add_argument("--sweep-steps", type=int, default=101)
    pa.add_argument("--bin-width-ps", type=int, default=None, help="delay histogram bin (default window/10)")
    pa.add_argument("--hist-range-ps", type=int, default=None, help="delay histogram half-range (default 10x window)")
    pa.add_argument("--signal-channel", type=int, default=0)
    pa.add_argument("--idler-channel", type=int, default=1)

    pc = sub.add_parser("scan", help="simulate a phase-shifter scan and fit the fringe")
    pc.add_argument("config")
    pc.add_argument("out_dir")
    pc.add_argument("--points", type=int, default=32)
    pc.add_argument("--dwell-s", type=float, default=1.0)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args.config, args.out)
        if args.command == "analyze":
            return cmd_analyze(args.tags, args.out_dir, args.period_ps, args.window_ps, args.bins,
                               args.sweep_steps, args.bin_width_ps, args.hist_range_ps,
                               args.signal_channel, args.idler_channel)
        return cmd_scan(args.config, args.out_dir, args.points, args.dwell_s)
    except CommandError as exc:
        print(f"nlisim: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
