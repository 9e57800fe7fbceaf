"""Starting-point heuristics for the closed-form models."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import PARAM_NAMES, ModelKind, TWO_PI


@dataclass(frozen=True)
class Guess:
    kind: ModelKind
    params: dict[str, float]
    degenerate: bool = False
    note: str = ""


def _dominant_frequency(x: np.ndarray, y: np.ndarray) -> float:
    """Strongest nonzero FFT bin of y resampled onto a uniform grid."""
    n = x.size
    grid = np.linspace(x[0], x[-1], n)
    yu = np.interp(grid, x, y)
    dx = grid[1] - grid[0]
    pad = 4 * n
    amp = np.abs(np.fft.rfft((yu - yu.mean()) * np.hanning(n), n=pad))
    freqs = np.fft.rfftfreq(pad, dx)
    k = int(np.argmax(amp[1:])) + 1
    return float(freqs[k])


def _fold(amp: float, phi: float) -> tuple[float, float]:
    # pick the branch of (amp, phi) ~ (-amp, phi + pi) with |phi| <= pi/2
    if abs(phi) > np.pi / 2:
        amp = -amp
        phi = phi - np.pi if phi > 0 else phi + np.pi
    return amp, phi


def _oscillation_guess(kind, x, y, nu):
    """Grid over the decay time; amplitudes and phase come from linear LS."""
    span = x[-1] - x[0]
    offset = kind is ModelKind.RABI
    best = None
    for t in span * np.logspace(-2, 2, 41):
        env = np.exp(-x / t)
        cols = [np.cos(TWO_PI * nu * x) * env, np.sin(TWO_PI * nu * x) * env]
        if offset:
            cols.append(np.ones_like(x))
        a = np.column_stack(cols)
        coef, *_ = np.linalg.lstsq(a, y, rcond=None)
        rss = float(np.sum((a @ coef - y) ** 2))
        if best is None or rss < best[0]:
            best = (rss, t, coef)
    _, t, coef = best
    c, s = coef[0], coef[1]
    amp = float(np.hypot(c, s))
    if kind is ModelKind.RABI:
        # B cos(wx - phi) = B cos(phi) cos(wx) + B sin(phi) sin(wx)
        amp, phi = _fold(amp, float(np.arctan2(s, c)))
        return {"A": float(coef[2]), "B": amp, "phi": phi, "nu": nu, "T": float(t)}
    # A cos(wx + phi) = A cos(phi) cos(wx) - A sin(phi) sin(wx)
    amp, phi = _fold(amp, float(np.arctan2(-s, c)))
    return {"A": amp, "nu": nu, "phi": phi, "T": float(t)}


def _log_linear(x, y):
    """Fit log|y| = log A - x/T on the points that carry signal."""
    mag = np.abs(y)
    keep = mag > 0.05 * mag.max()
    if keep.sum() < 2:
        keep = mag > 0
    slope, intercept = np.polyfit(x[keep], np.log(mag[keep]), 1)
    sign = np.sign(y[np.argmax(mag)]) or 1.0
    return sign * float(np.exp(intercept)), slope


def initial_guess(kind, x, y) -> Guess:
    """Heuristic parameters for ``kind`` from data (x, y).

    Constant data give a flagged guess whose amplitude equals the constant.
    """
    kind = ModelKind.parse(kind)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 4:
        raise ValueError("initial_guess needs at least 4 points")
    order = np.argsort(x)
    x, y = x[order], y[order]
    span = float(x[-1] - x[0]) or 1.0

    if np.ptp(y) <= 1e-12 * max(np.abs(y).max(), 1e-300):
        const = float(y[0])
        defaults = {
            ModelKind.RABI: {"A": const, "B": 0.0, "phi": 0.0, "nu": 1.0 / span, "T": span},
            ModelKind.FID: {"A": const, "nu": 1.0 / span, "phi": 0.0, "T": span},
            ModelKind.EXP_DECAY: {"A": const, "T": span},
            ModelKind.STRETCHED_EXP: {"A": const, "T": span, "n": 1.0},
            ModelKind.SATURATION: {"s_max": const, "p0": float(np.median(np.abs(x))) or 1.0},
            ModelKind.SQRT_LINEWIDTH: {"lw0": const, "a": 0.0},
        }[kind]
        return Guess(kind, defaults, degenerate=True, note="constant data")

    if kind in (ModelKind.RABI, ModelKind.FID):
        nu = _dominant_frequency(x, y)
        params = _oscillation_guess(kind, x, y, nu)
    elif kind is ModelKind.EXP_DECAY:
        amp, slope = _log_linear(x, y)
        params = {"A": amp, "T": -1.0 / slope if slope < 0 else span}
    elif kind is ModelKind.STRETCHED_EXP:
        amp = float(y[np.argmax(np.abs(y))])
        # log(-log(y/A)) = n log x - n log T on the interior of the decay
        ratio = y / amp
        keep = (ratio > 0.05) & (ratio < 0.95) & (x > 0)
        if keep.sum() >= 2:
            n, c = np.polyfit(np.log(x[keep]), np.log(-np.log(ratio[keep])), 1)
            n = float(np.clip(n, 0.2, 6.0))
            t = float(np.exp(-c / n))
        else:
            a_lin, slope = _log_linear(x, y)
            n, t = 1.0, (-1.0 / slope if slope < 0 else span)
        params = {"A": amp, "T": t, "n": n}
    elif kind is ModelKind.SATURATION:
        s_max = float(y[np.argmax(np.abs(y))])
        half = np.abs(y) >= 0.5 * abs(s_max)
        p0 = float(x[np.argmax(half)]) if half.any() else float(np.median(x))
        params = {"s_max": s_max, "p0": max(p0, 1e-6 * max(x[-1], 1e-300))}
    elif kind is ModelKind.SQRT_LINEWIDTH:
        slope, intercept = np.polyfit(np.sqrt(np.clip(x, 0, None)), y, 1)
        params = {"lw0": float(intercept), "a": float(slope)}
    else:
        raise ValueError(kind)
    return Guess(kind, {n: params[n] for n in PARAM_NAMES[kind]})
