"""Data types for the effective two-level Bloch engine.

Times are in microseconds, frequencies in MHz, phases in radians.  ``w`` is
the population difference p1 - p0 of the driven doublet pair, so optical
pumping drives it towards +1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from ..spin import DomainError

NORM_TOL = 1e-9


class ProgramError(ValueError):
    """A pulse program violates its structural rules.

    ``indices`` lists the offending event positions (in the main program,
    or prefixed with ``ref`` for the reference program).
    """

    def __init__(self, message: str, indices=()):
        super().__init__(message)
        self.indices = tuple(indices)


@dataclass(frozen=True)
class BlochState:
    u: float = 0.0
    v: float = 0.0
    w: float = 0.0

    def __post_init__(self):
        if self.norm() > 1 + NORM_TOL:
            raise DomainError(f"Bloch vector longer than 1: {self.norm()}")

    def norm(self) -> float:
        return math.sqrt(self.u**2 + self.v**2 + self.w**2)

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v, self.w], dtype=float)

    @classmethod
    def from_array(cls, a) -> "BlochState":
        return cls(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class OUNoise:
    """Ornstein-Uhlenbeck detuning noise: stationary std ``sigma`` (MHz), correlation time ``tau_c`` (us)."""

    sigma: float
    tau_c: float

    def __post_init__(self):
        if self.sigma < 0 or not self.tau_c > 0:
            raise DomainError("OU noise needs sigma >= 0 and tau_c > 0")


@dataclass(frozen=True)
class DecoherenceParams:
    """Phenomenological relaxation.

    t1, t2 in us (``inf`` disables); t2_star in ns, used only to set the
    default width of a Lorentzian detuning ensemble.  ``w_eq`` is the value
    that w relaxes to in the dark (0 for a thermal spin).
    """

    t1: float = math.inf
    t2: float = math.inf
    t2_star: float | None = None
    noise: OUNoise | None = None
    w_eq: float = 0.0

    def __post_init__(self):
        if not self.t1 > 0 or not self.t2 > 0:
            raise DomainError("t1 and t2 must be positive")
        if math.isfinite(self.t1) and self.t2 > 2 * self.t1 * (1 + 1e-12):
            raise DomainError(f"t2 ({self.t2} us) exceeds 2*t1 ({2 * self.t1} us)")
        if self.t2_star is not None:
            if not self.t2_star > 0:
                raise DomainError("t2_star must be positive")
            if math.isfinite(self.t2) and self.t2_star / 1000 > self.t2:
                raise DomainError("t2_star exceeds t2")
        if abs(self.w_eq) > 1:
            raise DomainError("w_eq must lie in [-1, 1]")

    @property
    def relaxing(self) -> bool:
        return math.isfinite(self.t1) or math.isfinite(self.t2)

    @property
    def lorentzian_hwhm(self) -> float:
        """Detuning half width (MHz) whose ensemble decays as exp(-t/T2*)."""
        if self.t2_star is None:
            return 0.0
        return 1.0 / (2 * math.pi * self.t2_star / 1000)


def _check_duration(d: float, allow_zero: bool = False) -> None:
    if not np.isfinite(d) or d < 0 or (d == 0 and not allow_zero):
        raise DomainError(f"duration must be positive, got {d}")


@dataclass(frozen=True)
class LaserPulse:
    duration: float


@dataclass(frozen=True)
class RfPulse:
    """Rectangular RF pulse.

    ``hard=True`` applies the ideal rotation 2*pi*rabi*duration about the
    phase axis instantaneously (no evolution time, no detuning).
    """

    duration: float
    phase: float = 0.0
    rabi: float = 0.0
    detuning: float = 0.0
    hard: bool = False


@dataclass(frozen=True)
class Wait:
    duration: float


@dataclass(frozen=True)
class Readout:
    duration: float


Event = Union[LaserPulse, RfPulse, Wait, Readout]


def _problems(events, tag: str) -> list[tuple[str, str]]:
    bad = []
    for i, ev in enumerate(events):
        d = ev.duration
        if not np.isfinite(d) or d <= 0:
            bad.append((f"{tag}{i}", f"nonpositive duration {d}"))
    readouts = [i for i, ev in enumerate(events) if isinstance(ev, Readout)]
    if not readouts:
        bad.append((f"{tag}-", "no readout"))
    elif len(readouts) > 1:
        bad.extend((f"{tag}{i}", "more than one readout") for i in readouts[1:])
    elif readouts[0] != len(events) - 1:
        bad.append((f"{tag}{readouts[0]}", "readout must be the last event"))
    if not events or not isinstance(events[0], LaserPulse):
        bad.append((f"{tag}0", "program must start with a laser pulse"))
    return bad


@dataclass(frozen=True)
class PulseProgram:
    """Main event list plus an optional reference for differential detection."""

    events: tuple = ()
    reference: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if self.reference is not None:
            object.__setattr__(self, "reference", tuple(self.reference))

    def validate(self) -> "PulseProgram":
        bad = _problems(self.events, "")
        if self.reference is not None:
            bad += _problems(self.reference, "ref")
        if bad:
            detail = "; ".join(f"event {i}: {msg}" for i, msg in bad)
            raise ProgramError(f"malformed program: {detail}", [i for i, _ in bad])
        return self


DISTRIBUTIONS = ("delta", "lorentzian", "gaussian")


@dataclass(frozen=True)
class EnsembleSpec:
    """Static inhomogeneity of the ensemble.

    ``width`` is the hwhm (Lorentzian) or standard deviation (Gaussian) of the
    detuning in MHz.  ``rabi_spread`` is the hwhm of a Lorentzian spread of
    the relative drive amplitude, which damps Rabi oscillations as
    exp(-2*pi*rabi*rabi_spread*t).
    """

    n_members: int = 1
    distribution: str = "delta"
    width: float = 0.0
    rng_seed: int = 42
    rabi_spread: float = 0.0
    block_size: int = field(default=256, repr=False)

    def __post_init__(self):
        if self.n_members < 1:
            raise DomainError("n_members must be >= 1")
        if self.distribution not in DISTRIBUTIONS:
            raise DomainError(f"distribution must be one of {DISTRIBUTIONS}")
        if self.width < 0 or self.rabi_spread < 0:
            raise DomainError("widths must be >= 0")
        if self.block_size < 1:
            raise DomainError("block_size must be >= 1")
