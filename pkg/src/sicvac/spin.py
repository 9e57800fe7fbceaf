"""Spin-3/2 ground-state Hamiltonian of silicon vacancies in 6H-SiC.

All energies are in MHz, fields in mT.  The z axis is the crystal c axis.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

#: Bohr magneton over Planck constant, MHz/mT (CODATA).
MU_B_MHZ_PER_MT = 13.996245

#: Zero-phonon line wavelengths (nm) of the three vacancy sites.
ZPL_WAVELENGTHS = {"V1": 865.0, "V2": 887.0, "V3": 908.0}

#: Levels closer than this (MHz) are treated as degenerate.
DEGENERACY_TOL = 1e-6


class DomainError(ValueError):
    """Raised when an input lies outside the domain of an operation."""


class Center(str, enum.Enum):
    V1V3 = "V1V3"
    V2 = "V2"


@dataclass(frozen=True)
class SpinSystem:
    """Parameters of the ground-state spin Hamiltonian.

    ``two_d`` is the zero-field splitting 2D as quoted for each site, so the
    ``D`` that multiplies ``Sz**2 - 5/4`` is ``two_d / 2``.
    """

    center_label: Center
    two_d: float
    g_factor: float = 2.0
    spin: float = 1.5
    zpl_wavelength: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "center_label", Center(self.center_label))
        if self.spin != 1.5:
            raise DomainError(f"silicon vacancies have spin 3/2, got {self.spin}")
        if not np.isfinite(self.two_d) or not np.isfinite(self.g_factor):
            raise DomainError("two_d and g_factor must be finite")

    @property
    def d(self) -> float:
        return self.two_d / 2.0

    @property
    def gamma(self) -> float:
        """Electron gyromagnetic ratio g*mu_B/h in MHz/mT."""
        return self.g_factor * MU_B_MHZ_PER_MT

    @classmethod
    def preset(cls, name: str) -> "SpinSystem":
        key = name.upper().replace("/", "")
        if key == "V1V3":
            return cls(Center.V1V3, -28.0, zpl_wavelength=ZPL_WAVELENGTHS["V1"])
        if key == "V2":
            return cls(Center.V2, 128.0, zpl_wavelength=ZPL_WAVELENGTHS["V2"])
        raise KeyError(f"unknown center preset {name!r}")


@dataclass(frozen=True)
class FieldVector:
    bx: float = 0.0
    by: float = 0.0
    bz: float = 0.0

    def __post_init__(self):
        if not all(np.isfinite((self.bx, self.by, self.bz))):
            raise DomainError("field components must be finite")

    @property
    def magnitude(self) -> float:
        return float(np.sqrt(self.bx**2 + self.by**2 + self.bz**2))

    def as_array(self) -> np.ndarray:
        return np.array([self.bx, self.by, self.bz], dtype=float)


@dataclass(frozen=True)
class Transition:
    lower_index: int
    upper_index: int
    frequency: float
    strength: float


@dataclass(frozen=True)
class TransitionTable:
    """Allowed transitions sorted by ascending frequency."""

    transitions: tuple[Transition, ...] = field(default_factory=tuple)

    def __iter__(self):
        return iter(self.transitions)

    def __len__(self):
        return len(self.transitions)

    def __getitem__(self, i):
        return self.transitions[i]

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([t.frequency for t in self.transitions])

    @property
    def strengths(self) -> np.ndarray:
        return np.array([t.strength for t in self.transitions])


def spin_operators(spin) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (Sx, Sy, Sz) in the |s, m> basis ordered m = s, s-1, ..., -s."""
    try:
        twice = Fraction(spin).limit_denominator(1000) * 2
    except (TypeError, ValueError) as exc:
        raise DomainError(f"invalid spin {spin!r}") from exc
    if twice.denominator != 1 or twice <= 0 or abs(float(twice) / 2 - float(spin)) > 1e-12:
        raise DomainError(f"spin must be a positive half-integer, got {spin!r}")
    s = float(twice) / 2
    m = s - np.arange(int(twice) + 1)
    # <m+1|S+|m> = sqrt(s(s+1) - m(m+1)), placed on the superdiagonal
    sp = np.diag(np.sqrt(s * (s + 1) - m[1:] * (m[1:] + 1)), k=1).astype(complex)
    sm = sp.conj().T
    sx = (sp + sm) / 2
    sy = (sp - sm) / 2j
    sz = np.diag(m).astype(complex)
    return sx, sy, sz


_SX, _SY, _SZ = spin_operators(1.5)
_ZFS = _SZ @ _SZ - 1.25 * np.eye(4)


def hamiltonian(sys: SpinSystem, b: FieldVector) -> np.ndarray:
    """Ground-state Hamiltonian D(Sz^2 - 5/4) + g mu_B B.S in MHz."""
    g = sys.gamma
    return sys.d * _ZFS + g * (b.bx * _SX + b.by * _SY + b.bz * _SZ)


def analytic_levels(two_d: float, bz: float, g_factor: float = 2.0) -> np.ndarray:
    """Closed-form energies for B parallel to c, ordered m = 3/2 ... -3/2."""
    m = np.array([1.5, 0.5, -0.5, -1.5])
    return (two_d / 2) * (m**2 - 1.25) + g_factor * MU_B_MHZ_PER_MT * bz * m


def eigenlevels(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Diagonalize a Hermitian matrix; eigenvalues ascending, vectors as columns."""
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {h.shape}")
    scale = max(np.linalg.norm(h), 1.0)
    if np.linalg.norm(h - h.conj().T) > 1e-9 * scale:
        raise DomainError("matrix is not Hermitian")
    return np.linalg.eigh(h)


def _drive_operator(drive) -> np.ndarray:
    if isinstance(drive, str):
        try:
            return {"x": _SX, "y": _SY, "z": _SZ}[drive.lower()]
        except KeyError:
            raise DomainError(f"drive axis must be x, y or z, got {drive!r}") from None
    op = np.asarray(drive, dtype=complex)
    if op.shape != (4, 4):
        raise DomainError("drive operator must be 4x4")
    return op


def _clusters(energies: np.ndarray, tol: float) -> list[list[int]]:
    groups = [[0]]
    for i in range(1, len(energies)):
        if energies[i] - energies[groups[-1][-1]] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def transition_table(
    sys: SpinSystem,
    b: FieldVector,
    min_strength: float = 1e-4,
    drive="x",
) -> TransitionTable:
    """Magnetic-dipole transitions between eigenlevels.

    Strength is |<u|S_drive|l>|^2.  Degenerate levels are grouped first, so a
    transition between two doublets carries the summed (basis-independent)
    strength; transitions of equal frequency are then merged.
    """
    if min_strength < 0:
        raise DomainError("min_strength must be >= 0")
    op = _drive_operator(drive)
    energies, vecs = eigenlevels(hamiltonian(sys, b))
    groups = _clusters(energies, DEGENERACY_TOL)
    elements = np.abs(vecs.conj().T @ op @ vecs) ** 2

    found = []
    for a, lower in enumerate(groups):
        for upper in groups[a + 1:]:
            freq = float(np.mean(energies[upper]) - np.mean(energies[lower]))
            strength = float(elements[np.ix_(upper, lower)].sum())
            found.append(Transition(lower[0], upper[0], freq, strength))
    found.sort(key=lambda t: t.frequency)

    merged: list[Transition] = []
    for t in found:
        if merged and t.frequency - merged[-1].frequency <= DEGENERACY_TOL:
            prev = merged[-1]
            merged[-1] = Transition(
                prev.lower_index, prev.upper_index, prev.frequency, prev.strength + t.strength
            )
        else:
            merged.append(t)
    return TransitionTable(tuple(t for t in merged if t.strength > min_strength))


def zero_field_strength(sys: SpinSystem, drive="x") -> float:
    """Total strength of the zero-field resonance, used to normalize line weights."""
    table = transition_table(sys, FieldVector(), min_strength=0.0, drive=drive)
    return float(table.strengths.max()) if len(table) else 0.0
