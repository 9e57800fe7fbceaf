"""Ornstein-Uhlenbeck detuning noise: exact sampling and dephasing integrals."""
from __future__ import annotations

import numpy as np


def ou_step(x0: np.ndarray, d: float, sigma: float, tau: float, rng: np.random.Generator):
    """Advance an OU process by ``d`` and return (x(d), integral of x over [0, d]).

    Both are drawn exactly from their joint Gaussian law conditional on x0.
    """
    if d <= 0 or sigma == 0:
        return x0.copy(), np.zeros_like(x0)
    a = d / tau
    e1 = np.exp(-a)
    e2 = np.exp(-2 * a)
    mean_x = x0 * e1
    mean_i = x0 * tau * -np.expm1(-a)
    var_x = sigma**2 * -np.expm1(-2 * a)
    if a < 1e-3:
        # series of 2a - 3 + 4e^-a - e^-2a, avoids cancellation
        bracket = a**3 * (2 / 3 - a / 2 + 7 * a**2 / 30)
    else:
        bracket = 2 * a - 3 + 4 * e1 - e2
    var_i = sigma**2 * tau**2 * bracket
    cov = sigma**2 * tau * (1 - e1) ** 2
    z1 = rng.standard_normal(x0.shape)
    z2 = rng.standard_normal(x0.shape)
    sx = np.sqrt(var_x)
    x = mean_x + sx * z1
    # conditional law of the integral given x(d)
    if sx > 0:
        slope = cov / sx
        rest = max(var_i - slope**2, 0.0)
        integral = mean_i + slope * z1 + np.sqrt(rest) * z2
    else:
        integral = mean_i + np.sqrt(max(var_i, 0.0)) * z2
    return x, integral


def ou_stationary(n: int, sigma: float, rng: np.random.Generator) -> np.ndarray:
    return sigma * rng.standard_normal(n)


def dephasing_exponent(segments, signs, sigma: float, tau: float) -> float:
    """chi with <exp(i phase)> = exp(-chi) for a piecewise sign-switched OU phase.

    ``segments`` are consecutive free-evolution lengths (us) and ``signs`` the
    +-1 toggling-frame sign of each; instantaneous pulses are assumed.  Used
    as an analytic reference for the Monte-Carlo engine.
    """
    lengths = np.asarray(segments, dtype=float)
    s = np.asarray(signs, dtype=float)
    ends = np.cumsum(lengths)
    starts = ends - lengths
    w = 2 * np.pi * sigma
    decay = -np.expm1(-lengths / tau)
    own = np.sum(s**2 * 2 * tau**2 * (lengths / tau - 1 + np.exp(-lengths / tau)))
    # pairs j < k: correlation across the gap between segment j's end and k's start
    gap = np.clip(starts[None, :] - ends[:, None], 0, None)
    pair = (s * decay)[:, None] * (s * decay)[None, :] * np.exp(-gap / tau)
    cross = 2 * tau**2 * np.sum(np.triu(pair, k=1))
    return 0.5 * w**2 * (own + cross)
