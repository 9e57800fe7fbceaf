"""Closed-form signal models and their analytic Jacobians."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping

import numpy as np

TWO_PI = 2 * np.pi


class ModelKind(str, enum.Enum):
    RABI = "rabi"
    FID = "fid"
    EXP_DECAY = "exp_decay"
    STRETCHED_EXP = "stretched_exp"
    SATURATION = "saturation"
    SQRT_LINEWIDTH = "sqrt_linewidth"

    @classmethod
    def parse(cls, value) -> "ModelKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"expdecay": "exp_decay", "exp": "exp_decay", "stretched": "stretched_exp",
                   "cpmg": "stretched_exp", "ramsey": "fid", "linewidth": "sqrt_linewidth"}
        return cls(aliases.get(key, key))


PARAM_NAMES: dict[ModelKind, tuple[str, ...]] = {
    ModelKind.RABI: ("A", "B", "phi", "nu", "T"),
    ModelKind.FID: ("A", "nu", "phi", "T"),
    ModelKind.EXP_DECAY: ("A", "T"),
    ModelKind.STRETCHED_EXP: ("A", "T", "n"),
    ModelKind.SATURATION: ("s_max", "p0"),
    ModelKind.SQRT_LINEWIDTH: ("lw0", "a"),
}

# parameters that must stay strictly positive
POSITIVE = {"T", "n", "p0"}
PHASES = {"phi"}


class ArityError(ValueError):
    pass


def arity(kind) -> int:
    return len(PARAM_NAMES[ModelKind.parse(kind)])


@dataclass(frozen=True)
class DecayModel:
    kind: ModelKind
    params: Mapping[str, float]

    def __post_init__(self):
        kind = ModelKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        names = PARAM_NAMES[kind]
        if set(self.params) != set(names):
            raise ArityError(f"{kind.value} expects parameters {names}, got {tuple(self.params)}")
        for name in names:
            value = self.params[name]
            if not np.isfinite(value):
                raise ValueError(f"parameter {name} must be finite")
            if name in POSITIVE and value <= 0:
                raise ValueError(f"parameter {name} must be > 0, got {value}")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.params[n] for n in PARAM_NAMES[self.kind]], dtype=float)

    def __call__(self, x):
        return evaluate(self, x)


def as_vector(kind, params) -> np.ndarray:
    kind = ModelKind.parse(kind)
    if isinstance(params, Mapping):
        names = PARAM_NAMES[kind]
        if set(params) != set(names):
            raise ArityError(f"{kind.value} expects parameters {names}, got {tuple(params)}")
        return np.array([params[n] for n in names], dtype=float)
    vec = np.asarray(params, dtype=float)
    if vec.shape != (arity(kind),):
        raise ArityError(f"{kind.value} expects {arity(kind)} parameters, got {vec.shape}")
    return vec


def evaluate(model: DecayModel, x) -> np.ndarray:
    """Pointwise value of a model on ``x``."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    return value(model.kind, model.vector, x)


def value(kind: ModelKind, p: np.ndarray, x: np.ndarray) -> np.ndarray:
    if kind is ModelKind.RABI:
        a, b, phi, nu, t = p
        return a + b * np.cos(TWO_PI * nu * x - phi) * np.exp(-x / t)
    if kind is ModelKind.FID:
        a, nu, phi, t = p
        return a * np.cos(TWO_PI * nu * x + phi) * np.exp(-x / t)
    if kind is ModelKind.EXP_DECAY:
        a, t = p
        return a * np.exp(-x / t)
    if kind is ModelKind.STRETCHED_EXP:
        a, t, n = p
        return a * np.exp(-((np.abs(x) / t) ** n))
    if kind is ModelKind.SATURATION:
        s, p0 = p
        return s * x / (p0 + x)
    if kind is ModelKind.SQRT_LINEWIDTH:
        lw0, slope = p
        return lw0 + slope * np.sqrt(x)
    raise ValueError(kind)


def jacobian(kind: ModelKind, p: np.ndarray, x: np.ndarray) -> np.ndarray:
    """d value / d p, shape (len(x), arity)."""
    if kind is ModelKind.RABI:
        a, b, phi, nu, t = p
        theta = TWO_PI * nu * x - phi
        env = np.exp(-x / t)
        c, s = np.cos(theta) * env, np.sin(theta) * env
        return np.column_stack(
            [np.ones_like(x), c, b * s, -b * s * TWO_PI * x, b * c * x / t**2]
        )
    if kind is ModelKind.FID:
        a, nu, phi, t = p
        theta = TWO_PI * nu * x + phi
        env = np.exp(-x / t)
        c, s = np.cos(theta) * env, np.sin(theta) * env
        return np.column_stack([c, -a * s * TWO_PI * x, -a * s, a * c * x / t**2])
    if kind is ModelKind.EXP_DECAY:
        a, t = p
        e = np.exp(-x / t)
        return np.column_stack([e, a * e * x / t**2])
    if kind is ModelKind.STRETCHED_EXP:
        a, t, n = p
        r = np.abs(x) / t
        u = r**n
        e = np.exp(-u)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_r = np.where(r > 0, np.log(np.where(r > 0, r, 1.0)), 0.0)
        return np.column_stack([e, a * e * n * u / t, -a * e * u * log_r])
    if kind is ModelKind.SATURATION:
        s, p0 = p
        return np.column_stack([x / (p0 + x), -s * x / (p0 + x) ** 2])
    if kind is ModelKind.SQRT_LINEWIDTH:
        return np.column_stack([np.ones_like(x), np.sqrt(x)])
    raise ValueError(kind)
