"""Continuous-wave ODMR lineshapes, RF power laws and field-frequency maps."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .spin import (
    Center,
    DomainError,
    FieldVector,
    SpinSystem,
    transition_table,
    zero_field_strength,
)

LINESHAPES = ("lorentzian", "gaussian")


@dataclass(frozen=True)
class PowerLaws:
    """Fitted RF-power dependence of amplitude (%) and FWHM linewidth (MHz).

    s_max is a magnitude; the sign of the ODMR line lives on the center.
    """

    s_max: float
    p0: float
    lw0: float
    a: float

    def __post_init__(self):
        if self.s_max < 0 or self.p0 <= 0 or self.lw0 <= 0 or self.a < 0:
            raise DomainError(f"invalid power-law constants {self}")

    @classmethod
    def preset(cls, name: str) -> "PowerLaws":
        key = name.upper().replace("/", "")
        if key == "V1V3":
            return cls(s_max=0.2087, p0=0.8573, lw0=6.193, a=2.713)
        if key == "V2":
            return cls(s_max=0.07112, p0=0.8834, lw0=7.877, a=2.579)
        raise KeyError(f"unknown center preset {name!r}")


@dataclass(frozen=True)
class LineParams:
    amplitude: float
    linewidth: float

    def __post_init__(self):
        if self.linewidth <= 0:
            raise DomainError("linewidth must be positive")


@dataclass(frozen=True)
class OdmrCenter:
    """A spin system together with its power laws and contrast sign."""

    system: SpinSystem
    laws: PowerLaws
    sign: int = 0

    def __post_init__(self):
        if self.sign == 0:
            # PL increases on resonance for V1/V3 and drops for V2
            sign = 1 if self.system.center_label is Center.V1V3 else -1
            object.__setattr__(self, "sign", sign)
        elif self.sign not in (1, -1):
            raise DomainError("sign must be +1 or -1")

    @classmethod
    def preset(cls, name: str) -> "OdmrCenter":
        return cls(SpinSystem.preset(name), PowerLaws.preset(name))

    def line_params(self, p: float) -> LineParams:
        return LineParams(
            self.sign * saturation_amplitude(self.laws, p), linewidth_vs_power(self.laws, p)
        )


@dataclass
class SpectrumMap:
    b_axis: np.ndarray
    f_axis: np.ndarray
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.b_axis = np.asarray(self.b_axis, dtype=float)
        self.f_axis = np.asarray(self.f_axis, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.b_axis.size, self.f_axis.size):
            raise DomainError(
                f"values shape {self.values.shape} does not match axes "
                f"({self.b_axis.size}, {self.f_axis.size})"
            )
        _check_grid(self.b_axis, "b_axis")
        _check_grid(self.f_axis, "f_axis")

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["b_mT", "f_MHz", "dpl_percent"])
        for i, b in enumerate(self.b_axis):
            for j, f in enumerate(self.f_axis):
                writer.writerow([repr(float(b)), repr(float(f)), repr(float(self.values[i, j]))])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SpectrumMap":
        rows = list(csv.reader(io.StringIO(text)))
        if rows[0] != ["b_mT", "f_MHz", "dpl_percent"]:
            raise ValueError(f"unexpected header {rows[0]}")
        data = np.array(rows[1:], dtype=float)
        b_axis = np.unique(data[:, 0])
        f_axis = np.unique(data[:, 1])
        values = data[:, 2].reshape(b_axis.size, f_axis.size)
        return cls(b_axis, f_axis, values)

    def to_json(self) -> str:
        return json.dumps(
            {
                "b_mT": self.b_axis.tolist(),
                "f_MHz": self.f_axis.tolist(),
                "dpl_percent": self.values.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SpectrumMap":
        obj = json.loads(text)
        return cls(obj["b_mT"], obj["f_MHz"], obj["dpl_percent"])


def _check_grid(axis: np.ndarray, name: str) -> None:
    if axis.ndim != 1 or axis.size == 0:
        raise DomainError(f"{name} must be a nonempty 1-d grid")
    if np.any(np.diff(axis) <= 0):
        raise DomainError(f"{name} must be strictly increasing")


def saturation_amplitude(laws: PowerLaws, p: float) -> float:
    """S(P) = S_max * P / (P0 + P), in percent."""
    if p < 0:
        raise DomainError(f"RF power must be >= 0, got {p}")
    if np.isinf(p):
        return laws.s_max
    return laws.s_max * p / (laws.p0 + p)


def linewidth_vs_power(laws: PowerLaws, p: float) -> float:
    """LW(P) = LW0 + a * sqrt(P), FWHM in MHz."""
    if p < 0:
        raise DomainError(f"RF power must be >= 0, got {p}")
    return laws.lw0 + laws.a * np.sqrt(p)


def dbm_to_watt(dbm: float) -> float:
    return 10 ** (dbm / 10) / 1000


def lineshape(detuning: np.ndarray, fwhm: float, kind: str = "lorentzian") -> np.ndarray:
    """Peak-normalized line profile (value 1 at zero detuning)."""
    x = np.asarray(detuning, dtype=float) / (fwhm / 2)
    if kind == "lorentzian":
        return 1.0 / (1.0 + x**2)
    if kind == "gaussian":
        return np.exp(-np.log(2) * x**2)
    raise DomainError(f"lineshape must be one of {LINESHAPES}, got {kind!r}")


def _transfer_gain(transfer, freq: float) -> float:
    if transfer is None:
        return 1.0
    f_tab, g_tab = (np.asarray(v, dtype=float) for v in transfer)
    return float(np.interp(freq, f_tab, g_tab))


def cw_spectrum(
    centers: Sequence[OdmrCenter],
    b: FieldVector,
    f_grid,
    p: float,
    *,
    kind: str = "lorentzian",
    min_strength: float = 1e-4,
    transfer=None,
) -> np.ndarray:
    """Relative PL change (percent) on ``f_grid`` for a sum of centers.

    ``transfer`` is an optional (frequencies, power_gain) table describing the
    RF delivery; each line then sees the power ``p * gain(nu)``.
    """
    f = np.asarray(f_grid, dtype=float)
    if f.size == 0:
        raise DomainError("frequency grid is empty")
    if p < 0:
        raise DomainError(f"RF power must be >= 0, got {p}")
    out = np.zeros_like(f)
    for center in centers:
        out += _center_spectrum(center, b, f, p, kind, min_strength, transfer)
    return out


def _center_spectrum(center, b, f, p, kind, min_strength, transfer):
    norm = zero_field_strength(center.system)
    out = np.zeros_like(f)
    if norm == 0:
        return out
    for t in transition_table(center.system, b, min_strength=min_strength):
        line = center.line_params(p * _transfer_gain(transfer, t.frequency))
        out += line.amplitude * (t.strength / norm) * lineshape(f - t.frequency, line.linewidth, kind)
    return out


def field_map(
    centers: Sequence[OdmrCenter],
    b_axis,
    f_axis,
    p: float,
    **kwargs,
) -> SpectrumMap:
    """Spectra for fields along the c axis, one row per entry of ``b_axis``."""
    b_axis = np.atleast_1d(np.asarray(b_axis, dtype=float))
    f_axis = np.asarray(f_axis, dtype=float)
    if np.any(b_axis < 0):
        raise DomainError("field values must be >= 0")
    _check_grid(b_axis, "b_axis")
    _check_grid(f_axis, "f_axis")
    values = np.vstack(
        [cw_spectrum(centers, FieldVector(bz=float(bz)), f_axis, p, **kwargs) for bz in b_axis]
    )
    return SpectrumMap(b_axis, f_axis, values)


def ridge_positions(
    smap: SpectrumMap, center: OdmrCenter, p: float, *, window: float = 3.0, min_separation: float = 2.0
) -> list[tuple[float, float, float]]:
    """Locate the map extremum next to each resolved transition of ``center``.

    A branch counts as resolved when every other line of the center is more
    than ``min_separation`` linewidths away; closer lines pull the apparent
    ridge.  The extremum is searched within ``window`` MHz of the analytic
    frequency, must be interior to that window and is refined by a parabola
    through three points.  Returns (b, analytic, found) triples.
    """
    f = smap.f_axis
    lw = center.line_params(p).linewidth
    out = []
    for i, bz in enumerate(smap.b_axis):
        freqs = transition_table(center.system, FieldVector(bz=float(bz))).frequencies
        y = center.sign * smap.values[i]
        for k, nu in enumerate(freqs):
            others = np.delete(freqs, k)
            if others.size and np.min(np.abs(others - nu)) < min_separation * lw:
                continue
            idx = np.flatnonzero(np.abs(f - nu) <= window)
            if idx.size < 3:
                continue
            j = idx[np.argmax(y[idx])]
            if j in (idx[0], idx[-1]):
                continue
            a, b, c = y[j - 1], y[j], y[j + 1]
            curv = a - 2 * b + c
            shift = 0.5 * (a - c) / curv if curv < 0 else 0.0
            step = 0.5 * (f[j + 1] - f[j - 1])
            out.append((float(bz), float(nu), float(f[j] + shift * step)))
    return out
