"""INI run configuration.

User-facing units are linear GHz, ns, aF, cm, ohm and mT.  Everything is
converted to rad/ns and SI exactly once, here.
"""
from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass

from .device import DeviceParams, capacitance_for_frequency, ghz
from .errors import ConfigError
from .gates import GateParams
from .noise import NoiseModel
from .readout import ReadoutParams

# key -> (DeviceParams field, converter)
_DEVICE_KEYS = {
    "T": ("T", ghz),
    "Delta": ("Delta", ghz),
    "E_os": ("E_os", ghz),
    "mu": ("mu", ghz),
    "U": ("U", ghz),
    "W": ("W", ghz),
    "B_z": ("B_z", float),
    "g_factor": ("g_factor", float),
    "L": ("L", lambda v: v * 1e-2),
    "Z0": ("Z0", float),
    "C0": ("C0", lambda v: v * 1e-12),  # pF/m
    "C_c": ("C_c", lambda v: v * 1e-18),
    "C_tot": ("C_tot", lambda v: v * 1e-18),
    "Q": ("Q", float),
    "T1": ("T1", float),
    "T2": ("T2", float),
    "T2star": ("T2star", float),
    "T_b": ("T_b", float),
    "n_bar": ("n_bar", float),
    "B_nuc_rms": ("B_nuc_rms", float),
}
DEVICE_REQUIRED = ("T", "Delta", "L", "Z0", "C_c", "C_tot", "Q")

_SIM_FREQ = ("omega0", "omega", "omega_dr", "g", "Omega", "delta_2q", "omega_z")
SIM_DEFAULTS = {"omega0": 10.0, "omega": 5.0, "omega_dr": 5.0, "g": 0.125, "Omega": 10.0,
                "delta_2q": 1.0, "omega_z": 0.001, "n_max": 5, "dispersive_ratio": 4.0}
_NOISE_KEYS = ("kind", "sigma", "tau_c", "seed", "T1", "T2", "T2star", "T_kappa")
_READOUT_KEYS = ("delta", "n_bar", "span", "points")
READOUT_DEFAULTS = {"delta": 5.0, "n_bar": 1.0, "span": 0.02, "points": 401}


@dataclass(frozen=True)
class Config:
    device: DeviceParams
    gate: GateParams
    omega_z: float
    noise: NoiseModel
    readout: ReadoutParams
    readout_span: float
    readout_points: int
    sha256: str

    @property
    def z_gate(self) -> GateParams:
        """Operating point of the z rotation: same drive, qubit moved to ``omega_z``."""
        return self.gate.with_(omega=self.omega_z)


def _float(section: str, key: str, raw: str) -> float:
    try:
        v = float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") from None
    if not math.isfinite(v):
        raise ConfigError(f"[{section}] {key} must be finite")
    return v


def _int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not an integer") from None


def _check_keys(cp, section: str, allowed) -> dict:
    if not cp.has_section(section):
        return {}
    items = dict(cp.items(section))
    unknown = sorted(set(items) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")
    return items


def parse_config(text: str) -> Config:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keys are case sensitive (T vs t)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    unknown = sorted(set(cp.sections()) - {"device", "simulation", "noise", "readout"})
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    if not cp.has_section("device"):
        raise ConfigError("missing required section [device]")

    dev = _check_keys(cp, "device", list(_DEVICE_KEYS) + ["f0"])
    missing = [k for k in DEVICE_REQUIRED if k not in dev]
    if "C0" not in dev and "f0" not in dev:
        missing.append("C0 (or f0)")
    if missing:
        raise ConfigError(f"missing required [device] key(s): {', '.join(missing)}")
    if "C0" in dev and "f0" in dev:
        raise ConfigError("[device] give either C0 or f0, not both")
    kw = {}
    for k, raw in dev.items():
        if k == "f0":
            continue
        name, conv = _DEVICE_KEYS[k]
        kw[name] = conv(_float("device", k, raw))
    if "f0" in dev:
        kw["C0"] = capacitance_for_frequency(ghz(_float("device", "f0", dev["f0"])), kw["L"], kw["Z0"])
    try:
        device = DeviceParams(**kw)
    except ValueError as exc:
        raise ConfigError(f"[device] {exc}") from None

    sim = dict(SIM_DEFAULTS)
    for k, raw in _check_keys(cp, "simulation", list(SIM_DEFAULTS)).items():
        sim[k] = _int("simulation", k, raw) if k == "n_max" else _float("simulation", k, raw)
    try:
        gate = GateParams(omega0=ghz(sim["omega0"]), omega=ghz(sim["omega"]),
                          omega_dr=ghz(sim["omega_dr"]), g=ghz(sim["g"]), Omega=ghz(sim["Omega"]),
                          delta=ghz(sim["delta_2q"]), n_max=sim["n_max"],
                          dispersive_ratio=sim["dispersive_ratio"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[simulation] {exc}") from None

    nz = _check_keys(cp, "noise", _NOISE_KEYS)
    chans = {}
    for k, name in (("T1", "T1"), ("T2", "T2"), ("T2star", "T2star"), ("T_kappa", "kappa")):
        if k in nz:
            t = _float("noise", k, nz[k])
            if not t > 0:
                raise ConfigError(f"[noise] {k} must be a positive time in ns")
            chans[name] = 1.0 / t
    try:
        noise = NoiseModel(kind=nz.get("kind", "quasi_static_gaussian"),
                           sigma=ghz(_float("noise", "sigma", nz["sigma"])) if "sigma" in nz else 0.0,
                           tau_c=_float("noise", "tau_c", nz["tau_c"]) if "tau_c" in nz else None,
                           channels=chans, seed=_int("noise", "seed", nz.get("seed", "0")))
    except ValueError as exc:
        raise ConfigError(f"[noise] {exc}") from None

    ro = dict(READOUT_DEFAULTS)
    for k, raw in _check_keys(cp, "readout", _READOUT_KEYS).items():
        ro[k] = _int("readout", k, raw) if k == "points" else _float("readout", k, raw)
    omega0 = ghz(sim["omega0"])
    readout = ReadoutParams(g=ghz(sim["g"]), delta=ghz(ro["delta"]), omega0=omega0,
                            kappa=omega0 / device.Q, n_bar=ro["n_bar"])
    return Config(device, gate, ghz(sim["omega_z"]), noise, readout, ghz(ro["span"]),
                  int(ro["points"]), hashlib.sha256(text.encode()).hexdigest())


def load_config(path) -> Config:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


DEFAULT_CONFIG = """\
# Feasibility operating point.  Frequencies in linear GHz, times in ns.
[device]
T = 2.5
Delta = 0.0
B_z = 100.0
g_factor = -0.44
# length in cm, impedance in ohm, capacitances in aF
L = 3.0
Z0 = 50.0
f0 = 10.0
C_c = 400.0
C_tot = 200.0
Q = 10000
T1 = 1000.0
T2 = 100.0
T2star = 10.0
T_b = 1.0
n_bar = 1.0
B_nuc_rms = 2.585

[simulation]
omega0 = 10.0
omega = 5.0
omega_dr = 5.0
g = 0.125
Omega = 10.0
delta_2q = 1.0
omega_z = 0.001
n_max = 5

[noise]
kind = quasi_static_gaussian
sigma = 0.0
seed = 0

[readout]
delta = 5.0
n_bar = 1.0
span = 0.02
points = 401
"""
