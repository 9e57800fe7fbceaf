"""Center presets bundling the measured constants of V1/V3 and V2.

Echo decoherence is split into a Markovian part (``t2``) and one
Ornstein-Uhlenbeck detuning process with tau_c = 1 us.  The pair (t2, sigma)
is calibrated so that an exponential fit of the simulated Hahn echo gives
3.73 / 3.31 us while CPMG at 50 / 200 ns spacing gives about 56 / 51 us.
The Rabi damping is carried by a Lorentzian spread of the drive amplitude
whose width reproduces the fitted Rabi decay time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .bloch.types import DecoherenceParams, EnsembleSpec, OUNoise
from .odmr import OdmrCenter, PowerLaws
from .pumping import RateModel
from .spin import SpinSystem


@dataclass(frozen=True)
class CenterPreset:
    name: str
    two_d: float  # MHz
    laws: PowerLaws
    t1: float  # us
    t2_hahn: float  # us, fitted echo time
    t2_cpmg: float  # us
    cpmg_n: float  # fitted stretch exponent
    cpmg_tau: float  # us, pulse spacing
    t2_star: float  # ns, from the FID
    t2_markov: float  # us
    ou_sigma: float  # MHz
    ou_tau_c: float  # us
    rabi: float  # MHz
    rabi_decay: float  # ns
    rabi_fit: tuple  # (A, B, phi, nu, T[us]) as fitted
    pi_pulse: float  # us, used in the echo experiments
    nu_det: float = 40.0  # MHz, Ramsey virtual detuning
    laser: float = 300.0  # us, initialization
    readout: float = 4.0  # us

    @property
    def system(self) -> SpinSystem:
        return SpinSystem.preset(self.name)

    @property
    def odmr(self) -> OdmrCenter:
        return OdmrCenter(self.system, self.laws)

    @property
    def pump(self) -> RateModel:
        return RateModel.preset(self.name)

    @property
    def rabi_spread(self) -> float:
        """Relative drive-amplitude hwhm giving exp(-t/rabi_decay) damping."""
        return 1.0 / (2 * math.pi * self.rabi * self.rabi_decay / 1000)

    def relax(self, noise: bool = True) -> DecoherenceParams:
        return DecoherenceParams(
            t1=self.t1,
            t2=self.t2_markov,
            t2_star=self.t2_star,
            noise=OUNoise(self.ou_sigma, self.ou_tau_c) if noise else None,
        )

    def ensemble(self, n_members: int = 4096, seed: int = 42) -> EnsembleSpec:
        return EnsembleSpec(
            n_members=n_members,
            distribution="lorentzian",
            width=self.relax().lorentzian_hwhm,
            rng_seed=seed,
        )

    def rabi_ensemble(self, n_members: int = 1024, seed: int = 42) -> EnsembleSpec:
        return EnsembleSpec(n_members=n_members, rng_seed=seed, rabi_spread=self.rabi_spread)


PRESETS = {
    "V1V3": CenterPreset(
        name="V1V3", two_d=-28.0, laws=PowerLaws.preset("V1V3"),
        t1=142.1, t2_hahn=3.73, t2_cpmg=56.0, cpmg_n=0.93, cpmg_tau=0.05, t2_star=38.0,
        t2_markov=56.48, ou_sigma=0.1103, ou_tau_c=1.0,
        rabi=12.44, rabi_decay=99.29, rabi_fit=(0.54, -0.66, 0.06 * math.pi, 12.44, 0.09929),
        pi_pulse=0.0175,
    ),
    "V2": CenterPreset(
        name="V2", two_d=128.0, laws=PowerLaws.preset("V2"),
        t1=107.0, t2_hahn=3.31, t2_cpmg=51.0, cpmg_n=3.47, cpmg_tau=0.2, t2_star=31.0,
        t2_markov=58.13, ou_sigma=0.1234, ou_tau_c=1.0,
        rabi=8.36, rabi_decay=204.81, rabi_fit=(0.65, 0.53, -0.08 * math.pi, 8.36, 0.20481),
        pi_pulse=0.021,
    ),
}


def preset(name: str) -> CenterPreset:
    key = name.upper().replace("/", "")
    try:
        return PRESETS[key]
    except KeyError:
        raise KeyError(f"unknown center preset {name!r}; choose v1v3 or v2") from None
