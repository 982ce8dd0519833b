"""Simulation and timetag analysis of a GHz-modulated silicon nonlinear interferometer."""

from .model import (
    FringeParams,
    ModulatorParams,
    PhaseState,
    cdm_transmission,
    coincidence_probability,
    fringe,
    interference_weight,
    loss_from_singles_visibility,
    phase_from_voltage,
    pump_phase_transfer,
    visibility_from_ratio,
)
from .config import ConfigError, DetectorModel, DriveWaveform, RunConfig, load_config
from .simulator import TimetagStream, instantaneous_rate, sample_run, simulate_phase_scan, waveform_voltage
from .coincidence import (
    background_subtract,
    delay_histogram,
    estimate_accidentals,
    find_coincidences,
    fold_midpoints,
    offset_sweep,
    visibility_from_fold,
)
from .analysis import estimate_vpi, fit_fringe, loss_budget, select_harmonic
from .io import read_timetags, write_timetags
from .pipeline import analyze_streams

__version__ = "0.1.0"
