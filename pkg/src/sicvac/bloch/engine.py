"""Ensemble execution of pulse programs with differential readout."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import erfinv

from ..pumping import RateModel, pumping_time, steady_state
from ..spin import DomainError
from .noise import ou_stationary, ou_step
from .propagators import PulseMap, TWO_PI, free_step, rotate_z
from .types import (
    DecoherenceParams,
    EnsembleSpec,
    LaserPulse,
    PulseProgram,
    Readout,
    RfPulse,
    Wait,
)

TAIL_QUANTILE = 1e-4


@dataclass(frozen=True)
class PumpLink:
    """Optical reset target and time constant derived from a rate model.

    ``w_pumped`` is the steady-state (p1 - p0)/(p0 + p1) under illumination
    and ``tau`` the (1 - 1/e) pumping time.  Without a rate model the reset
    is instantaneous and complete.
    """

    w_pumped: float = 1.0
    tau: float = 0.0

    @classmethod
    def from_model(cls, m: RateModel | None) -> "PumpLink":
        if m is None:
            return cls()
        ss = steady_state(m)
        return cls((ss.p1 - ss.p0) / (ss.p0 + ss.p1), pumping_time(m))

    def reset(self, w: np.ndarray, duration: float) -> np.ndarray:
        if self.tau == 0:
            return np.full_like(w, self.w_pumped)
        return self.w_pumped + (w - self.w_pumped) * math.exp(-duration / self.tau)

    def readout_gain(self, duration: float) -> float:
        """Window average of the decaying spin contrast during readout."""
        if self.tau == 0:
            return 1.0
        x = duration / self.tau
        return -math.expm1(-x) / x


def inverse_cdf(kind: str, width: float, q: np.ndarray) -> np.ndarray:
    if kind == "delta" or width == 0:
        return np.zeros_like(q)
    if kind == "lorentzian":
        return width * np.tan(np.pi * (q - 0.5))
    if kind == "gaussian":
        return width * math.sqrt(2) * erfinv(2 * q - 1)
    raise DomainError(f"unknown distribution {kind!r}")


def sample_members(ens: EnsembleSpec):
    """Detunings (MHz) and relative drive scales of every ensemble member.

    Stratification runs over the whole ensemble; the jitter inside each
    stratum comes from the block generators, so the draws do not depend on
    how blocks are scheduled.
    """
    gens = _block_generators(ens)
    n, bs = ens.n_members, ens.block_size
    q_det = np.empty(n)
    q_rabi = np.empty(n)
    for b, rng in enumerate(gens):
        lo, hi = b * bs, min(n, (b + 1) * bs)
        k = np.arange(lo, hi)
        q_det[lo:hi] = TAIL_QUANTILE + (1 - 2 * TAIL_QUANTILE) * (k + rng.random(k.size)) / n
        q_rabi[lo:hi] = TAIL_QUANTILE + (1 - 2 * TAIL_QUANTILE) * (k + rng.random(k.size)) / n
    # decorrelate the two stratifications
    perm = np.random.default_rng(np.random.SeedSequence([ens.rng_seed, 1])).permutation(n)
    detuning = inverse_cdf(ens.distribution, ens.width, q_det)
    scale = 1 + inverse_cdf("lorentzian", ens.rabi_spread, q_rabi[perm])
    return detuning, scale


def _block_generators(ens: EnsembleSpec):
    n_blocks = -(-ens.n_members // ens.block_size)
    return [np.random.default_rng(s) for s in np.random.SeedSequence(ens.rng_seed).spawn(n_blocks)]


def _noise_seeds(ens: EnsembleSpec):
    n_blocks = -(-ens.n_members // ens.block_size)
    return np.random.SeedSequence([ens.rng_seed, 2]).spawn(n_blocks)


class _Block:
    """A slice of ensemble members with its own noise stream and pulse cache."""

    def __init__(self, detuning, scale, seed, relax: DecoherenceParams, link: PumpLink):
        self.detuning = detuning
        self.scale = scale
        self.seed = seed
        self.relax = relax
        self.link = link
        self.cache: dict = {}

    def _pulse(self, ev: RfPulse) -> PulseMap:
        # built at phase 0; other phases follow by conjugating with z rotations,
        # which commute with detuning and with T1/T2 relaxation
        key = (ev.duration, ev.rabi, ev.detuning, ev.hard)
        pm = self.cache.get(key)
        if pm is None:
            pm = PulseMap(
                ev.rabi * self.scale, 0.0, self.detuning + ev.detuning,
                ev.duration, self.relax, hard=ev.hard,
            )
            self.cache[key] = pm
        return pm

    def _apply_pulse(self, m: np.ndarray, ev: RfPulse) -> np.ndarray:
        pm = self._pulse(ev)
        if ev.phase == 0.0:
            return pm(m)
        return rotate_z(pm(rotate_z(m, -ev.phase)), ev.phase)

    def readout(self, events) -> np.ndarray:
        """Readout signal of each member for one event list."""
        n = self.detuning.size
        noise = self.relax.noise
        rng = np.random.default_rng(self.seed)
        x = ou_stationary(n, noise.sigma, rng) if noise else None
        m = np.zeros((n, 3))
        m[:, 2] = self.relax.w_eq
        for ev in events:
            if isinstance(ev, RfPulse) and ev.hard:
                m = self._apply_pulse(m, ev)
                continue
            d = ev.duration
            integral = None
            if noise:
                x, integral = ou_step(x, d, noise.sigma, noise.tau_c, rng)
            if isinstance(ev, RfPulse):
                if integral is not None:
                    m = rotate_z(m, np.pi * integral)
                m = self._apply_pulse(m, ev)
                if integral is not None:
                    m = rotate_z(m, np.pi * integral)
            elif isinstance(ev, Wait):
                m = free_step(m, self.detuning, d, self.relax)
                if integral is not None:
                    m = rotate_z(m, TWO_PI * integral)
            elif isinstance(ev, LaserPulse):
                m[:, :2] = 0.0
                m[:, 2] = self.link.reset(m[:, 2], d)
            elif isinstance(ev, Readout):
                return m[:, 2] * self.link.readout_gain(d)
        raise AssertionError("validated programs end with a readout")

    def differences(self, program: PulseProgram) -> np.ndarray:
        main = self.readout(program.events)
        if program.reference is None:
            return main
        return main - self.readout(program.reference)


@dataclass(frozen=True)
class Signal:
    value: float
    stderr: float


def default_threads() -> int:
    env = os.environ.get("SICVAC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"SICVAC_THREADS must be an integer, got {env!r}") from None
    return 1


def run_family(
    programs,
    relax: DecoherenceParams | None = None,
    ens: EnsembleSpec | None = None,
    pump: RateModel | PumpLink | None = None,
    threads: int | None = None,
) -> list[Signal]:
    """Run a list of programs over one ensemble.

    Every program sees the same members and noise seeds, so a swept family
    is a smooth curve.  Blocks may run on several threads; their partial
    sums are reduced in block order, so results do not depend on
    ``threads``.
    """
    programs = [p.validate() for p in programs]
    relax = relax or DecoherenceParams()
    ens = ens or EnsembleSpec()
    link = pump if isinstance(pump, PumpLink) else PumpLink.from_model(pump)
    detuning, scale = sample_members(ens)
    seeds = _noise_seeds(ens)
    bs = ens.block_size
    blocks = [
        _Block(detuning[i * bs:(i + 1) * bs], scale[i * bs:(i + 1) * bs], seeds[i], relax, link)
        for i in range(len(seeds))
    ]

    def work(block):
        sums = np.zeros((len(programs), 2))
        for k, prog in enumerate(programs):
            d = block.differences(prog)
            sums[k] = d.sum(), (d * d).sum()
        return sums

    threads = threads or default_threads()
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, blocks))
    else:
        parts = [work(b) for b in blocks]
    total = np.zeros((len(programs), 2))
    for part in parts:
        total += part
    n = ens.n_members
    mean = total[:, 0] / n
    if n > 1:
        var = np.clip(total[:, 1] / n - mean**2, 0, None) * n / (n - 1)
        err = np.sqrt(var / n)
    else:
        err = np.zeros(len(programs))
    return [Signal(float(a), float(b)) for a, b in zip(mean, err)]


def run_program(program: PulseProgram, relax=None, ens=None, pump=None, threads=None) -> Signal:
    """Mean over members of (main readout - reference readout)."""
    return run_family([program], relax, ens, pump, threads)[0]
