"""Simulator for a polarization-independent fiber Sagnac single-photon switch."""

from .engine import (DrivePulse, PassPhases, SwitchConfig, applied_phases, calibrate_controllers,
                     detection_probabilities, drive_phase, output_state, pass_times)
from .experiment import (DetectorModel, ExperimentResult, RunPlan, SourceModel, expected_rate,
                         extinction_ratio_db, fit_fringe, run_delay_scan, run_voltage_sweep,
                         simulate_window, visibility)
from .netlist import Netlist, parse, sagnac_preset, serialize
from .optics import ComponentOp, ModeBasis, ModeState, Polarization, apply, compose, probability

__all__ = [
    "ComponentOp", "DetectorModel", "DrivePulse", "ExperimentResult", "ModeBasis", "ModeState",
    "Netlist", "PassPhases", "Polarization", "RunPlan", "SourceModel", "SwitchConfig", "apply",
    "applied_phases", "calibrate_controllers", "compose", "detection_probabilities", "drive_phase",
    "expected_rate", "extinction_ratio_db", "fit_fringe", "output_state", "parse", "pass_times",
    "probability", "run_delay_scan", "run_voltage_sweep", "sagnac_preset", "serialize",
    "simulate_window", "visibility",
]

__version__ = "0.1.0"
