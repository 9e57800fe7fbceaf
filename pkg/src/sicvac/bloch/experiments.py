"""The five pulsed protocols: Rabi, T1, Ramsey, Hahn echo and CPMG.

Each returns a :class:`Curve` of the differential signal normalized so that
an ideal, relaxation-free measurement starts at +1 (Rabi: oscillates
between 0 and -2).  Time axes are in microseconds.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .engine import PumpLink, run_family
from .types import DecoherenceParams, EnsembleSpec, LaserPulse, PulseProgram, Readout, RfPulse, Wait

INIT_LASER = 300.0
READOUT = 4.0


@dataclass
class Curve:
    x: np.ndarray
    signal: np.ndarray
    stderr: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.signal = np.asarray(self.signal, dtype=float)
        self.stderr = np.asarray(self.stderr, dtype=float)

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["x_value", "signal", "stderr_over_members"])
        for row in zip(self.x, self.signal, self.stderr):
            writer.writerow([repr(float(v)) for v in row])
        return out.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {"x_value": self.x.tolist(), "signal": self.signal.tolist(),
             "stderr_over_members": self.stderr.tolist()}
        )


def _link(pump) -> PumpLink:
    return pump if isinstance(pump, PumpLink) else PumpLink.from_model(pump)


def _program(body, reference_body, laser, readout) -> PulseProgram:
    head = [LaserPulse(laser)]
    tail = [Readout(readout)]
    ref = None if reference_body is None else tuple(head + list(reference_body) + tail)
    return PulseProgram(tuple(head + list(body) + tail), ref)


def _wait(d):
    return [Wait(d)] if d > 0 else []


def _run(x, bodies, scale, relax, ens, link, laser, readout, threads):
    programs = [_program(main, ref, laser, readout) for main, ref in bodies]
    sig = run_family(programs, relax, ens, link, threads)
    norm = scale * link.w_pumped * link.readout_gain(readout)
    return Curve(
        x,
        np.array([s.value for s in sig]) / norm,
        np.array([s.stderr for s in sig]) / abs(norm),
    )


def rabi_experiment(
    tau_grid, rabi: float, relax: DecoherenceParams | None = None, ens: EnsembleSpec | None = None,
    pump=None, *, phase: float = 0.0, detuning: float = 0.0,
    laser: float = INIT_LASER, readout: float = READOUT, threads=None,
) -> Curve:
    """RF pulse of variable length minus a no-RF reference."""
    link = _link(pump)
    tau = np.asarray(tau_grid, dtype=float)
    bodies = [
        ([RfPulse(t, phase, rabi, detuning)] if t > 0 and rabi > 0 else [], [])
        for t in tau
    ]
    return _run(tau, bodies, 1.0, relax, ens, link, laser, readout, threads)


def _pi(pi_pulse: float, phase: float, hard: bool, fraction: float = 1.0) -> RfPulse:
    rabi = 1 / (2 * pi_pulse)
    return RfPulse(pi_pulse * fraction, phase, rabi, 0.0, hard)


def t1_experiment(
    tau_grid, relax: DecoherenceParams, pump=None, ens: EnsembleSpec | None = None, *,
    pi_pulse: float = 0.04, hard: bool = False,
    laser: float = INIT_LASER, readout: float = READOUT, threads=None,
) -> Curve:
    """Pump, wait tau1, read; the reference inverts with a pi pulse first."""
    link = _link(pump)
    tau = np.asarray(tau_grid, dtype=float)
    bodies = [(_wait(t), [_pi(pi_pulse, 0.0, hard)] + _wait(t)) for t in tau]
    return _run(tau, bodies, 2.0, relax, ens, link, laser, readout, threads)


def ramsey_experiment(
    tau_grid, nu_det: float, relax: DecoherenceParams | None = None,
    ens: EnsembleSpec | None = None, pump=None, *,
    pi_pulse: float = 0.04, hard: bool = False,
    laser: float = INIT_LASER, readout: float = READOUT, threads=None,
) -> Curve:
    """pi/2_x, free precession tau_f, pi/2 at phase x + phi_d minus the -x version.

    phi_d = 2*pi*nu_det*tau_f imprints a virtual detuning nu_det.
    """
    link = _link(pump)
    tau = np.asarray(tau_grid, dtype=float)
    bodies = []
    for t in tau:
        phi_d = 2 * math.pi * nu_det * t
        first = _pi(pi_pulse, 0.0, hard, 0.5)
        bodies.append((
            [first] + _wait(t) + [_pi(pi_pulse, phi_d, hard, 0.5)],
            [first] + _wait(t) + [_pi(pi_pulse, phi_d + math.pi, hard, 0.5)],
        ))
    return _run(tau, bodies, -2.0, relax, ens, link, laser, readout, threads)


def _echo_bodies(n_pi: int, gap: float, pi_pulse: float, hard: bool):
    first = _pi(pi_pulse, 0.0, hard, 0.5)
    train = []
    for _ in range(n_pi):
        train += _wait(gap / 2) + [_pi(pi_pulse, math.pi / 2, hard)] + _wait(gap / 2)
    return (
        [first] + train + [_pi(pi_pulse, 0.0, hard, 0.5)],
        [first] + train + [_pi(pi_pulse, math.pi, hard, 0.5)],
    )


def hahn_echo_experiment(
    tau_grid, relax: DecoherenceParams | None = None, ens: EnsembleSpec | None = None,
    pump=None, *, pi_pulse: float = 0.04, hard: bool = False,
    laser: float = INIT_LASER, readout: float = READOUT, threads=None,
) -> Curve:
    """pi/2 - tau2/2 - pi - tau2/2 - pi/2 with a +-x final pulse; x is tau2."""
    link = _link(pump)
    tau = np.asarray(tau_grid, dtype=float)
    bodies = [_echo_bodies(1, t, pi_pulse, hard) for t in tau]
    return _run(tau, bodies, -2.0, relax, ens, link, laser, readout, threads)


def cpmg_axis(n_pulses, tau: float, pi_pulse: float, hard: bool = False) -> np.ndarray:
    """Total evolution period n*tau + n*tau_pi (pulses of zero length when hard)."""
    n = np.asarray(n_pulses, dtype=float)
    return n * tau + (0.0 if hard else n * pi_pulse)


def cpmg_experiment(
    tau: float, n_pulses_grid, relax: DecoherenceParams | None = None,
    ens: EnsembleSpec | None = None, pump=None, *, pi_pulse: float = 0.0175,
    hard: bool = False, laser: float = INIT_LASER, readout: float = READOUT, threads=None,
) -> Curve:
    """pi/2_x, then (tau/2 - pi_y - tau/2) repeated 2N times, then pi/2_{+-x}.

    ``n_pulses_grid`` holds the pulse counts 2N; x is the total period.  A
    count of 1 is the Hahn echo with spacing tau.
    """
    counts = [int(n) for n in n_pulses_grid]
    if any(n <= 0 or n != m for n, m in zip(counts, n_pulses_grid)):
        raise ValueError("CPMG pulse counts must be positive integers")
    link = _link(pump)
    bodies = [_echo_bodies(n, tau, pi_pulse, hard) for n in counts]
    x = cpmg_axis(counts, tau, pi_pulse, hard)
    return _run(x, bodies, -2.0, relax, ens, link, laser, readout, threads)
