"""Levenberg-Marquardt least squares for the closed-form models."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .models import PARAM_NAMES, PHASES, POSITIVE, ModelKind, as_vector, jacobian, value

FTOL = 1e-10
GTOL = 1e-8
XTOL = 1e-14
COND_LIMIT = 1e12


@dataclass
class FitResult:
    kind: ModelKind
    params: dict[str, float]
    stderr: dict[str, float] | None
    rss: float
    converged: bool
    iterations: int
    status: str = "converged"
    message: str = ""
    condition: float = float("nan")
    costs: list[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "model": self.kind.value,
            "params": self.params,
            "stderr": self.stderr,
            "rss": self.rss,
            "converged": self.converged,
            "iterations": self.iterations,
            "status": self.status,
            "message": self.message,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)


def _wrap(phi):
    # into (-pi, pi]
    return np.pi - np.mod(np.pi - phi, 2 * np.pi)


def _default_bounds(kind: ModelKind, p0: np.ndarray):
    names = PARAM_NAMES[kind]
    lo = np.full(len(names), -np.inf)
    hi = np.full(len(names), np.inf)
    for i, name in enumerate(names):
        if name in POSITIVE:
            lo[i] = 0.0
    return lo, hi


def _positive_floor(kind: ModelKind, p0: np.ndarray) -> np.ndarray:
    floor = np.full(p0.size, -np.inf)
    for i, name in enumerate(PARAM_NAMES[kind]):
        if name in POSITIVE:
            floor[i] = 1e-9 * abs(p0[i])
    return floor


def _canonical_sign(kind: ModelKind, p: np.ndarray, init: np.ndarray) -> np.ndarray:
    """Resolve (amp, phi) ~ (-amp, phi + pi) using the sign of the initial amplitude."""
    names = PARAM_NAMES[kind]
    if "phi" not in names:
        return p
    amp = names.index("B") if kind is ModelKind.RABI else names.index("A")
    ph = names.index("phi")
    if init[amp] != 0 and np.sign(p[amp]) != np.sign(init[amp]):
        p = p.copy()
        p[amp] = -p[amp]
        p[ph] = _wrap(p[ph] + np.pi)
    return p


def levenberg_marquardt(
    kind: ModelKind,
    x: np.ndarray,
    y: np.ndarray,
    init: np.ndarray,
    sigma: np.ndarray | None = None,
    bounds=None,
    max_iter: int = 500,
) -> FitResult:
    names = PARAM_NAMES[kind]
    phase_idx = [i for i, n in enumerate(names) if n in PHASES]
    lo, hi = bounds if bounds is not None else _default_bounds(kind, init)
    lo = np.maximum(np.asarray(lo, dtype=float), _positive_floor(kind, init))
    hi = np.asarray(hi, dtype=float)
    w = 1.0 / sigma if sigma is not None else np.ones_like(y)

    def project(p):
        p = np.clip(p, lo, hi)
        if phase_idx:
            p[phase_idx] = _wrap(p[phase_idx])
        return p

    def residual(p):
        return (value(kind, p, x) - y) * w

    def jac(p):
        return jacobian(kind, p, x) * w[:, None]

    p = project(init.astype(float).copy())
    r = residual(p)
    cost = 0.5 * float(r @ r)
    floor = 1e-30 * max(float((y * w) @ (y * w)), 1e-300)
    costs = [cost]
    lam = None
    nu = 2.0
    status, message = "max_iter", f"no convergence after {max_iter} iterations"
    it = 0
    for it in range(max_iter + 1):
        j = jac(p)
        g = j.T @ r
        col_norm = np.linalg.norm(j, axis=0)
        r_norm = math.sqrt(2 * cost)
        if cost <= floor:
            status, message = "converged", "residual at round-off level"
            break
        cosine = np.abs(g) / np.where(col_norm > 0, col_norm * r_norm, 1.0)
        if np.max(cosine) < GTOL:
            status, message = "converged", "gradient below tolerance"
            break
        if it == max_iter:
            break
        a = j.T @ j
        d = np.maximum(np.diag(a), 1e-12 * max(np.max(np.diag(a)), 1e-300))
        if lam is None:
            lam = 1e-3
        accepted = False
        while not accepted:
            try:
                step = np.linalg.solve(a + lam * np.diag(d), -g)
            except np.linalg.LinAlgError:
                lam *= nu
                nu *= 2
                continue
            p_new = project(p + step)
            actual_step = p_new - p
            if np.linalg.norm(actual_step) <= XTOL * (np.linalg.norm(p) + XTOL):
                status, message = "converged", "step below tolerance"
                break
            r_new = residual(p_new)
            cost_new = 0.5 * float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new < cost:
                predicted = -(g @ actual_step) - 0.5 * actual_step @ a @ actual_step
                rho = (cost - cost_new) / predicted if predicted > 0 else 0.0
                lam *= max(1 / 3, 1 - (2 * rho - 1) ** 3)
                nu = 2.0
                rel = (cost - cost_new) / cost
                p, r, cost = p_new, r_new, cost_new
                costs.append(cost)
                accepted = True
                if rel < FTOL:
                    status, message = "converged", "relative cost change below tolerance"
            else:
                lam *= nu
                nu *= 2
                if lam > 1e16:
                    status, message = "converged", "no further decrease possible"
                    break
        if status == "converged":
            break

    j = jac(p)
    condition = float(np.linalg.cond(j)) if j.size else float("inf")
    converged = status == "converged"
    if not np.isfinite(condition) or condition > COND_LIMIT:
        status = "singular"
        message = f"Jacobian is singular (condition number {condition:.3g})"
        converged = False
    p = _canonical_sign(kind, p, init)
    stderr = None
    if converged:
        j = jac(p)
        dof = max(x.size - p.size, 1)
        cov = np.linalg.inv(j.T @ j)
        if sigma is None:
            cov *= 2 * cost / dof
        stderr = dict(zip(names, np.sqrt(np.clip(np.diag(cov), 0, None)).tolist()))
    return FitResult(
        kind=kind,
        params=dict(zip(names, p.tolist())),
        stderr=stderr,
        rss=2 * cost,
        converged=converged,
        iterations=it,
        status=status,
        message=message,
        condition=condition,
        costs=costs,
    )


def fit(
    kind,
    x,
    y,
    sigma=None,
    init=None,
    bounds=None,
    max_iter: int = 500,
    n_starts: int = 1,
    seed: int = 0,
) -> FitResult:
    """Fit one of the closed-form models to (x, y[, sigma]).

    ``init`` defaults to :func:`initial_guess`.  With ``n_starts > 1`` the
    fit is repeated from inits jittered by up to 20 % and the lowest-cost
    converged result is returned.
    """
    from .guess import initial_guess

    kind = ModelKind.parse(kind)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d arrays of equal length")
    k = len(PARAM_NAMES[kind])
    needed = max(2 * k, k + 2)
    if x.size < needed:
        raise ValueError(f"{kind.value} needs at least {needed} points, got {x.size}")
    if sigma is not None:
        sigma = np.asarray(sigma, dtype=float)
        if sigma.shape != y.shape or np.any(sigma <= 0):
            raise ValueError("sigma must be positive and match y")
    if init is None:
        init = initial_guess(kind, x, y).params
    p0 = as_vector(kind, init)
    if bounds is not None:
        lo, hi = (np.asarray(b, dtype=float) for b in bounds)
        if np.any(p0 < lo) or np.any(p0 > hi):
            raise ValueError("initial parameters lie outside the bounds")
        bounds = (lo, hi)

    best = levenberg_marquardt(kind, x, y, p0, sigma, bounds, max_iter)
    if n_starts > 1:
        rng = np.random.default_rng(seed)
        for _ in range(n_starts - 1):
            trial = p0 * (1 + rng.uniform(-0.2, 0.2, size=p0.size))
            if bounds is not None:
                trial = np.clip(trial, *bounds)
            res = levenberg_marquardt(kind, x, y, trial, sigma, bounds, max_iter)
            if res.converged and (not best.converged or res.rss < best.rss):
                best = res
    return best
