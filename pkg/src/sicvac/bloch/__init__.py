"""Effective two-level Bloch engine for pulsed spin experiments."""
from .engine import PumpLink, Signal, run_family, run_program, sample_members
from .experiments import (
    Curve,
    cpmg_axis,
    cpmg_experiment,
    hahn_echo_experiment,
    rabi_experiment,
    ramsey_experiment,
    t1_experiment,
)
from .noise import dephasing_exponent, ou_step
from .propagators import apply_rf, free_evolution
from .types import (
    BlochState,
    DecoherenceParams,
    EnsembleSpec,
    LaserPulse,
    OUNoise,
    ProgramError,
    PulseProgram,
    Readout,
    RfPulse,
    Wait,
)

__all__ = [
    "BlochState", "Curve", "DecoherenceParams", "EnsembleSpec", "LaserPulse", "OUNoise",
    "ProgramError", "PulseProgram", "PumpLink", "Readout", "RfPulse", "Signal", "Wait",
    "apply_rf", "cpmg_axis", "cpmg_experiment", "dephasing_exponent", "free_evolution",
    "hahn_echo_experiment", "ou_step", "rabi_experiment", "ramsey_experiment",
    "run_family", "run_program", "sample_members", "t1_experiment",
]
