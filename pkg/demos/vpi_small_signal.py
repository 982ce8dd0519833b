"""
Pi voltage of the fast modulator from a 300 mV probe.

The classical configuration is scanned with the thermal shifter to calibrate
the fringe, parked at quadrature and toggled by a small square probe. The two
power levels map back to a phase swing through the fitted fringe.
"""

import numpy as np

from nlisim.pipeline import small_signal_vpi
from nlisim.presets import scan_config


def main():
    c = scan_config(0.99, interference="classical")
    est = [small_signal_vpi(c, np.random.default_rng(seed), probe_vpp=0.3) for seed in range(10)]
    for k, e in enumerate(est):
        print(f"seed {k}: swing {e.phase_swing:.5f} rad -> V_pi = {e.vpi:.4f} +- {e.sigma:.4f} V")
    v = np.array([e.vpi for e in est])
    print(f"mean {v.mean():.4f} V, spread {v.std():.4f} V (configured {c.modulator.vpi} V)")


if __name__ == "__main__":
    main()
