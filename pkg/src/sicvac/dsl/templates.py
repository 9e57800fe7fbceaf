"""Built-in sequence files for the five pulsed protocols of each center.

The shipped ``.seq`` files under ``sicvac/templates`` are the canonical
serialization of :func:`template_source`; a test keeps them in sync.
"""
from __future__ import annotations

from importlib import resources

from ..presets import CenterPreset, preset
from .parser import parse
from .serialize import fmt_number, serialize

KINDS = ("rabi", "ramsey", "hahn", "cpmg", "t1")
CENTERS = ("v1v3", "v2")


def _ns(us: float) -> str:
    return fmt_number(round(us * 1000, 9)) + "ns"


def _relax(p: CenterPreset) -> str:
    return (
        f"relax t1={fmt_number(p.t1)}us t2={fmt_number(p.t2_markov)}us "
        f"t2_star={fmt_number(p.t2_star)}ns sigma={fmt_number(p.ou_sigma)}MHz "
        f"tau_c={fmt_number(p.ou_tau_c)}us;"
    )


def _laser(p):
    return f"laser dur={fmt_number(p.laser)}us;"


def _readout(p):
    return f"readout dur={fmt_number(p.readout)}us;"


def _block(name, lines):
    return f"{name} {{\n" + "\n".join(lines) + "\n}\n"


def _rabi(p: CenterPreset, c: str) -> str:
    rate = fmt_number(p.rabi)
    stop = {"v1v3": "0:2.5:500ns", "v2": "0:4:800ns"}[c]
    return (
        f"center {c};\n{_relax(p)}\n"
        f"ensemble n=1024 dist=delta rabi_spread=1/(2*pi*{rate}MHz*{fmt_number(p.rabi_decay)}ns);\n"
        "fit rabi;\n"
        + _block("sequence", [_laser(p), f"rf dur=tau phase=x rabi={rate}MHz;", _readout(p)])
        + _block("reference", [_laser(p), _readout(p)])
        + f"sweep tau = {stop};\n"
    )


def _pulses(p):
    return f"let tpi = {_ns(p.pi_pulse)};\n"


HALF = "rf dur=tpi/2 phase={phase} rabi=1/(2*tpi);"
PI_Y = "rf dur=tpi phase=y rabi=1/(2*tpi);"


def _ramsey(p: CenterPreset, c: str) -> str:
    body = [HALF.format(phase="x"), "wait dur=tau;"]
    final = "{axis} + 2*pi*nu_det*tau"
    return (
        f"center {c};\nlet nu_det = {fmt_number(p.nu_det)}MHz;\n{_pulses(p)}{_relax(p)}\n"
        "ensemble n=4096 dist=lorentzian;\nnorm = -2;\nfit fid;\n"
        + _block("sequence", [_laser(p)] + body + [HALF.format(phase=final.format(axis="x")), _readout(p)])
        + _block("reference", [_laser(p)] + body + [HALF.format(phase=final.format(axis="-x")), _readout(p)])
        + "sweep tau = 0:1:200ns;\n"
    )


def _hahn(p: CenterPreset, c: str) -> str:
    body = [HALF.format(phase="x"), "wait dur=tau2/2;", PI_Y, "wait dur=tau2/2;"]
    return (
        f"center {c};\n{_pulses(p)}{_relax(p)}\n"
        "ensemble n=32768 dist=lorentzian;\nnorm = -2;\nfit exp_decay;\n"
        + _block("sequence", [_laser(p)] + body + [HALF.format(phase="x"), _readout(p)])
        + _block("reference", [_laser(p)] + body + [HALF.format(phase="-x"), _readout(p)])
        + "sweep tau2 = 0:0.5:15us;\n"
    )


def _cpmg(p: CenterPreset, c: str) -> str:
    train = ["repeat 2*N {", "wait dur=tau/2;", PI_Y, "wait dur=tau/2;", "}"]
    sweep = {"v1v3": "N = 40:80:1200", "v2": "N = 10:20:270"}[c]
    return (
        f"center {c};\nlet tau = {_ns(p.cpmg_tau)};\n{_pulses(p)}{_relax(p)}\n"
        "ensemble n=256 dist=lorentzian;\nnorm = -2;\naxis = 2*N*tau + 2*N*tpi;\nfit stretched_exp;\n"
        + _block("sequence", [_laser(p), HALF.format(phase="x")] + train
                 + [HALF.format(phase="x"), _readout(p)])
        + _block("reference", [_laser(p), HALF.format(phase="x")] + train
                 + [HALF.format(phase="-x"), _readout(p)])
        + f"sweep {sweep};\n"
    )


def _t1(p: CenterPreset, c: str) -> str:
    return (
        f"center {c};\n{_pulses(p)}{_relax(p)}\n"
        "ensemble n=1024 dist=lorentzian;\nnorm = 2;\nfit exp_decay;\n"
        + _block("sequence", [_laser(p), "wait dur=tau1;", _readout(p)])
        + _block("reference", [_laser(p), "rf dur=tpi phase=x rabi=1/(2*tpi);", "wait dur=tau1;", _readout(p)])
        + "sweep tau1 = 0:20:600us;\n"
    )


_BUILDERS = {"rabi": _rabi, "ramsey": _ramsey, "hahn": _hahn, "cpmg": _cpmg, "t1": _t1}


def _split(name: str) -> tuple[str, str]:
    key = name.lower().replace("/", "").replace("-", "_")
    if key.endswith(".seq"):
        key = key[:-4]
    kind, _, center = key.rpartition("_")
    if kind not in KINDS or center not in CENTERS:
        raise KeyError(
            f"unknown template {name!r}; expected <kind>_<center> with kind in {KINDS} "
            f"and center in {CENTERS}"
        )
    return kind, center


def template_source(name: str) -> str:
    """Canonical text of a built-in template such as ``"rabi_v1v3"``."""
    kind, center = _split(name)
    raw = _BUILDERS[kind](preset(center), center)
    return serialize(parse(raw, origin=f"{kind}_{center}.seq"))


def template_names() -> list[str]:
    return [f"{k}_{c}" for k in KINDS for c in CENTERS]


def shipped_template(name: str) -> str:
    """Text of the reference file shipped with the package."""
    kind, center = _split(name)
    return resources.files("sicvac").joinpath("templates", f"{kind}_{center}.seq").read_text()
