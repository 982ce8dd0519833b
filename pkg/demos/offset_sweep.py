"""
Visibility against the assumed drive-to-tagger offset.

With the true offset pinned at zero, a misassumed offset dt moves a fraction
2|dt|/T of each state's events into the other state, so v(dt) falls off as a
triangle ``(1 - 4|dt|/T) v``. Prints the sweep next to that triangle.
"""

import numpy as np

from nlisim.pipeline import analyze_streams
from nlisim.presets import drive_1ghz
from nlisim.simulator import sample_run


def main():
    period = 1_000
    c = drive_1ghz(seed=1, t0_ps=0.0)
    rep = analyze_streams(*sample_run(c), period, window_ps=c.window_ps, sweep_steps=41)
    off = rep.sweep.offsets_ps
    shape = 1.0 - 4.0 * np.abs(off) / period
    scale = shape @ rep.sweep.v / (shape @ shape)
    print("offset_ps       v   sigma_v  triangle")
    for dt, r in rep.sweep:
        print(f"{dt:9d}  {r.v:6.3f}  {r.sigma_v:7.3f}  {scale * (1 - 4 * abs(dt) / period):8.3f}")
    print(f"best offset {rep.sweep.best_offset_ps} ps")


if __name__ == "__main__":
    main()
