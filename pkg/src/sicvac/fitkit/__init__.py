"""Closed-form signal models and a Levenberg-Marquardt fitter."""
from .guess import Guess, initial_guess
from .io import load_csv, parse_csv
from .lm import FitResult, fit
from .models import (
    PARAM_NAMES,
    ArityError,
    DecayModel,
    ModelKind,
    arity,
    evaluate,
    jacobian,
    value,
)

__all__ = [
    "ArityError",
    "DecayModel",
    "FitResult",
    "Guess",
    "ModelKind",
    "PARAM_NAMES",
    "arity",
    "evaluate",
    "fit",
    "initial_guess",
    "jacobian",
    "load_csv",
    "parse_csv",
    "value",
]
