"""Exact propagators of the rotating-frame Bloch equations.

State rows are (u, v, w).  In the rotating frame dM/dt = omega x M with
omega = 2*pi*(rabi*cos(phase), rabi*sin(phase), detuning); transverse
components decay with T2 and w relaxes towards w_eq with T1.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import expm

from .types import BlochState, DecoherenceParams, RfPulse

TWO_PI = 2 * np.pi


def rotate(m: np.ndarray, axis: np.ndarray, angle: np.ndarray) -> np.ndarray:
    """Rodrigues rotation of rows of ``m`` about unit ``axis`` rows by ``angle``."""
    c = np.cos(angle)[:, None]
    s = np.sin(angle)[:, None]
    dot = np.sum(axis * m, axis=1)[:, None]
    return m * c + np.cross(axis, m) * s + axis * dot * (1 - c)


def rotate_z(m: np.ndarray, angle: np.ndarray) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    out = m.copy()
    out[:, 0] = c * m[:, 0] - s * m[:, 1]
    out[:, 1] = s * m[:, 0] + c * m[:, 1]
    return out


def relax(m: np.ndarray, d: float, params: DecoherenceParams) -> np.ndarray:
    """Apply pure T1/T2 relaxation over ``d`` (commutes with z rotations)."""
    if not params.relaxing or d == 0:
        return m
    e2 = math.exp(-d / params.t2)
    e1 = math.exp(-d / params.t1)
    out = m.copy()
    out[:, :2] *= e2
    out[:, 2] = params.w_eq + (m[:, 2] - params.w_eq) * e1
    return out


def free_step(m, detuning, d, params):
    """Free evolution of all rows with per-row detuning (MHz) for ``d`` us."""
    return relax(rotate_z(m, TWO_PI * detuning * d), d, params)


def pulse_axes(rabi: np.ndarray, phase: float, detuning: np.ndarray):
    """Unit rotation axes and angular speeds (rad/us) for a rectangular pulse."""
    omega = np.column_stack(
        [rabi * math.cos(phase), rabi * math.sin(phase), detuning]
    ) * TWO_PI
    speed = np.linalg.norm(omega, axis=1)
    safe = np.where(speed > 0, speed, 1.0)
    axis = omega / safe[:, None]
    axis[speed == 0] = (0.0, 0.0, 1.0)
    return axis, speed


def affine_generators(rabi, phase, detuning, params: DecoherenceParams) -> np.ndarray:
    """4x4 generators acting on (u, v, w, 1), one per row."""
    n = rabi.size
    wx = TWO_PI * rabi * math.cos(phase)
    wy = TWO_PI * rabi * math.sin(phase)
    wz = TWO_PI * detuning
    r2 = 1 / params.t2 if math.isfinite(params.t2) else 0.0
    r1 = 1 / params.t1 if math.isfinite(params.t1) else 0.0
    a = np.zeros((n, 4, 4))
    a[:, 0, 0] = -r2
    a[:, 0, 1] = -wz
    a[:, 0, 2] = wy
    a[:, 1, 0] = wz
    a[:, 1, 1] = -r2
    a[:, 1, 2] = -wx
    a[:, 2, 0] = -wy
    a[:, 2, 1] = wx
    a[:, 2, 2] = -r1
    a[:, 2, 3] = r1 * params.w_eq
    return a


class PulseMap:
    """Precomputed action of one rectangular pulse on a set of rows."""

    def __init__(self, rabi, phase, detuning, d, params: DecoherenceParams, hard=False):
        self.hard = hard
        self.relaxing = params.relaxing and not hard
        if hard:
            n = rabi.size
            self.axis = np.tile([math.cos(phase), math.sin(phase), 0.0], (n, 1))
            self.angle = TWO_PI * rabi * d
        elif self.relaxing:
            self.mat = expm(affine_generators(rabi, phase, detuning, params) * d)
        else:
            self.axis, speed = pulse_axes(rabi, phase, detuning)
            self.angle = speed * d

    def __call__(self, m: np.ndarray) -> np.ndarray:
        if self.relaxing:
            return np.einsum("nij,nj->ni", self.mat[:, :3, :3], m) + self.mat[:, :3, 3]
        return rotate(m, self.axis, self.angle)


def apply_rf(s: BlochState, pulse: RfPulse, relax_params: DecoherenceParams | None = None) -> BlochState:
    """Propagate a single Bloch vector through a rectangular RF pulse."""
    params = relax_params or DecoherenceParams()
    m = s.as_array()[None, :]
    pm = PulseMap(
        np.array([pulse.rabi]), pulse.phase, np.array([pulse.detuning]),
        pulse.duration, params, hard=pulse.hard,
    )
    return BlochState.from_array(_cap(pm(m)[0]))


def free_evolution(
    s: BlochState, detuning: float, duration: float, relax_params: DecoherenceParams | None = None
) -> BlochState:
    """Closed-form precession at ``detuning`` with T1/T2 relaxation."""
    if duration < 0:
        raise ValueError("duration must be >= 0")
    params = relax_params or DecoherenceParams()
    m = free_step(s.as_array()[None, :], np.array([detuning]), duration, params)
    return BlochState.from_array(_cap(m[0]))


def _cap(v: np.ndarray) -> np.ndarray:
    # strip round-off that pushes a unit vector a hair above 1
    n = np.linalg.norm(v)
    return v / n if 1 < n <= 1 + 1e-12 else v
