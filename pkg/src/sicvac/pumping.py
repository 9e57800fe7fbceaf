"""Five-level optical pumping model.

States: 0, 1 ground doublets; 2, 3 excited doublets (spin-conserving
excitation 0->2, 1->3); 4 shelving state.  Rates are in 1/us, times in us.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq

from .spin import DomainError

RATE_KEYS = ("w_pump", "k20", "k31", "k24", "k34", "k40", "k41")
REFERENCE_POWER_MW = 75.0


class AmbiguousSteadyStateError(ArithmeticError):
    """The generator has more than one stationary distribution."""


@dataclass(frozen=True)
class RateModel:
    """Rate constants of the pumping cycle.

    ``k01`` is a symmetric spin-lattice exchange between the two ground
    doublets; it makes the dark ground manifold ergodic.
    """

    w_pump: float
    k20: float
    k31: float
    k24: float
    k34: float
    k40: float
    k41: float
    k01: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not np.isfinite(value) or value < 0:
                raise DomainError(f"rate {f.name} must be finite and >= 0, got {value}")

    def with_pump(self, w_pump: float) -> "RateModel":
        return replace(self, w_pump=w_pump)

    def at_power(self, power_mw: float) -> "RateModel":
        """Scale the pump rate linearly from its value at the reference power."""
        return self.with_pump(self.w_pump * power_mw / REFERENCE_POWER_MW)

    @classmethod
    def preset(cls, name: str) -> "RateModel":
        key = name.upper().replace("/", "")
        try:
            return PRESETS[key]
        except KeyError:
            raise KeyError(f"unknown pump preset {name!r}") from None

    @classmethod
    def from_dict(cls, data: dict) -> "RateModel":
        missing = [k for k in RATE_KEYS if k not in data]
        if missing:
            raise KeyError(f"missing rate keys: {', '.join(missing)}")
        unknown = set(data) - set(RATE_KEYS) - {"k01"}
        if unknown:
            raise KeyError(f"unknown rate keys: {', '.join(sorted(unknown))}")
        return cls(**{k: float(v) for k, v in data.items()})

    @classmethod
    def load(cls, path) -> "RateModel":
        """Read a model from a JSON or TOML file."""
        path = Path(path)
        text = path.read_text()
        if path.suffix == ".json":
            data = json.loads(text)
        else:
            try:
                import tomllib
            except ImportError:  # python < 3.11
                import tomli as tomllib
            data = tomllib.loads(text)
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Populations:
    p0: float
    p1: float
    p2: float
    p3: float
    p4: float

    def __post_init__(self):
        v = self.as_array()
        if np.any(v < -1e-9) or np.any(v > 1 + 1e-9):
            raise DomainError(f"populations must lie in [0, 1]: {v}")
        if abs(v.sum() - 1) > 1e-9:
            raise DomainError(f"populations must sum to 1, got {v.sum()}")

    def as_array(self) -> np.ndarray:
        return np.array([self.p0, self.p1, self.p2, self.p3, self.p4])

    @classmethod
    def from_array(cls, v) -> "Populations":
        return cls(*(float(x) for x in v))

    @classmethod
    def thermal(cls) -> "Populations":
        return cls(0.5, 0.5, 0.0, 0.0, 0.0)

    @property
    def polarization(self) -> float:
        return self.p1 - self.p0


def rate_matrix(m: RateModel) -> np.ndarray:
    """Generator G with dp/dt = G p; G[j, i] is the rate i -> j."""
    edges = [
        (0, 2, m.w_pump), (1, 3, m.w_pump),
        (2, 0, m.k20), (3, 1, m.k31),
        (2, 4, m.k24), (3, 4, m.k34),
        (4, 0, m.k40), (4, 1, m.k41),
        (0, 1, m.k01), (1, 0, m.k01),
    ]
    g = np.zeros((5, 5))
    for src, dst, rate in edges:
        g[dst, src] += rate
    g -= np.diag(g.sum(axis=0))
    return g


def propagator(g: np.ndarray, t: float) -> np.ndarray:
    """exp(G t) for a generator with zero column sums.

    Long intervals are handled by squaring a short-step propagator; column
    sums are restored to one after every squaring so probability is kept.
    """
    norm = np.abs(g).max() * t
    k = max(0, int(np.ceil(np.log2(norm))) if norm > 1 else 0)
    p = expm(g * (t / 2**k))
    for _ in range(k):
        p = p @ p
        p /= p.sum(axis=0)
    return p


def _rk4(g: np.ndarray, p: np.ndarray, t: float, max_rate: float) -> np.ndarray:
    n = max(1, int(np.ceil(t * max_rate / 0.02)))
    h = t / n
    for _ in range(n):
        k1 = g @ p
        k2 = g @ (p + h / 2 * k1)
        k3 = g @ (p + h / 2 * k2)
        k4 = g @ (p + h * k3)
        p = p + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return p


def evolve_populations(
    m: RateModel, init: Populations, t: float, method: str = "expm"
) -> Populations:
    """Propagate populations for a time ``t``.

    ``method="expm"`` uses the matrix exponential; ``"rk4"`` integrates with
    fixed steps of at most 0.02/max-rate.
    """
    if t < 0:
        raise DomainError("time must be >= 0")
    p = init.as_array()
    if t == 0:
        return init
    g = rate_matrix(m)
    if method == "expm":
        p = propagator(g, t) @ p
    elif method == "rk4":
        p = _rk4(g, p, t, float(np.max(-np.diag(g))) or 1.0)
    else:
        raise DomainError(f"unknown method {method!r}")
    return Populations.from_array(p)


def steady_state(m: RateModel) -> Populations:
    """Stationary populations from the null space of the generator."""
    g = rate_matrix(m)
    u, s, vh = np.linalg.svd(g)
    tol = 1e-12 * max(s[0], 1e-300)
    nullity = int(np.sum(s <= tol))
    if nullity != 1:
        raise AmbiguousSteadyStateError(
            f"generator null space has dimension {nullity}; the model is not ergodic"
        )
    # refine with the normalization constraint appended
    a = np.vstack([g, np.ones(5)])
    rhs = np.zeros(6)
    rhs[-1] = 1.0
    p, *_ = np.linalg.lstsq(a, rhs, rcond=None)
    p = np.clip(p, 0.0, None)
    return Populations.from_array(p / p.sum())


def relaxation_rates(m: RateModel) -> np.ndarray:
    """Nonzero decay rates (1/us) of the generator, slowest first."""
    ev = np.linalg.eigvals(rate_matrix(m))
    rates = np.sort(-ev.real)
    return rates[1:]


def polarization_transient(
    m: RateModel,
    duration: float,
    dt: float,
    init: Populations | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Sampled p1 - p0 starting from ``init`` (thermal by default)."""
    if duration <= 0 or dt <= 0:
        raise DomainError("duration and dt must be positive")
    init = init or Populations.thermal()
    times = np.arange(0.0, duration + dt / 2, dt)
    step = propagator(rate_matrix(m), dt)
    p = init.as_array()
    series = np.empty(times.size)
    for i in range(times.size):
        series[i] = p[1] - p[0]
        p = step @ p
    return times, series


def pumping_time(m: RateModel, init: Populations | None = None) -> float:
    """Time at which p1 - p0 reaches (1 - 1/e) of its steady-state value."""
    init = init or Populations.thermal()
    target_pol = steady_state(m).polarization
    start = init.polarization
    level = start + (1 - np.exp(-1)) * (target_pol - start)
    g = rate_matrix(m)
    p_init = init.as_array()

    def excess(t):
        p = propagator(g, t) @ p_init
        return (p[1] - p[0] - level) * np.sign(target_pol - start)

    slow = relaxation_rates(m)[0]
    hi = 1.0 / slow
    while excess(hi) < 0:
        hi *= 2
    return brentq(excess, 0.0, hi, xtol=1e-10, rtol=1e-12)


def pl_rate(m: RateModel, p: Populations) -> float:
    """Photon emission rate k20*p2 + k31*p3 (arbitrary units)."""
    return m.k20 * p.p2 + m.k31 * p.p3


def odmr_contrast(m: RateModel, rf_exchange: float) -> float:
    """Steady-state relative PL change when RF exchanges the ground doublets."""
    if rf_exchange < 0:
        raise DomainError("rf_exchange must be >= 0")
    dark = pl_rate(m, steady_state(m))
    driven = pl_rate(m, steady_state(replace(m, k01=m.k01 + rf_exchange)))
    return (driven - dark) / dark


def calibrate_pump(m: RateModel, target_time: float) -> RateModel:
    """Find the pump rate at which ``pumping_time`` equals ``target_time``."""

    def mismatch(log_w):
        return np.log(pumping_time(m.with_pump(np.exp(log_w)))) - np.log(target_time)

    log_w = brentq(mismatch, np.log(1e-4), np.log(1e3), xtol=1e-12)
    return m.with_pump(float(np.exp(log_w)))


# Radiative and intersystem-crossing rates are order-of-magnitude choices;
# only w_pump is calibrated (28 us for V2, 11 us for V1/V3 at 75 mW).
# k01 = 1 / (2 T1) with the measured T1 of each site.
PRESETS = {
    "V1V3": RateModel(
        w_pump=0.8119133447892521, k20=100.0, k31=100.0, k24=10.0, k34=30.0,
        k40=1.0, k41=3.0, k01=1 / (2 * 142.1),
    ),
    "V2": RateModel(
        w_pump=0.1358117371893452, k20=100.0, k31=100.0, k24=30.0, k34=10.0,
        k40=1.0, k41=3.0, k01=1 / (2 * 107.0),
    ),
}
PUMP_TARGET_TIMES = {"V1V3": 11.0, "V2": 28.0}
