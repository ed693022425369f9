"""Double-dot molecule + stripline resonator device model.

All energies are angular frequencies in rad/ns.  Geometry stays in SI
(metres, ohms, farads) and is converted only where a frequency is produced.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants as sc

from .quantum import HilbertSpace, Operator

E_CHARGE = sc.e
HBAR = sc.hbar
# mu_B / hbar in rad/ns per tesla (2 pi x 13.996 GHz/T)
MU_B_OVER_HBAR = sc.physical_constants["Bohr magneton"][0] / sc.hbar * 1e-9

TWO_PI = 2.0 * math.pi

SINGLET_11, SINGLET_02, SINGLET_20, TRIPLET_0, TRIPLET_PLUS, TRIPLET_MINUS = range(6)
TWO_ELECTRON_BASIS = ("(1,1)S", "(0,2)S", "(2,0)S", "T0", "T+", "T-")


def ghz(f: float) -> float:
    """Linear frequency in GHz to angular rad/ns."""
    return TWO_PI * f


def to_ghz(w: float) -> float:
    return w / TWO_PI


@dataclass(frozen=True)
class DeviceParams:
    """Physical parameters of one DDM and the shared resonator.

    Energy-like fields are rad/ns, ``B_z``/``B_nuc_rms`` are mT, geometry is SI
    and all times are ns.  Defaults are the GaAs device of the feasibility
    analysis (resonator at 2 pi x 10 GHz, qubit gap 2 pi x 5 GHz at Delta = 0).
    """

    T: float = ghz(2.5)
    Delta: float = 0.0
    E_os: float = 0.0
    mu: float = 0.0
    U: float = ghz(250.0)
    W: float = ghz(50.0)
    B_z: float = 100.0
    g_factor: float = -0.44
    L: float = 0.03
    Z0: float = 50.0
    C0: float = math.pi / (0.03 * 50.0 * TWO_PI * 10e9)
    C_c: float = 400e-18
    C_tot: float = 200e-18
    Q: float = 1e4
    T1: float = 1000.0
    T2: float = 100.0
    T2star: float = 10.0
    T_b: float = 1.0
    n_bar: float = 1.0
    B_nuc_rms: float = 2.585

    def __post_init__(self):
        for name in ("L", "Z0", "C0", "C_c", "C_tot", "Q"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.T < 0:
            raise ValueError("tunneling T must be non-negative")
        for name in ("T1", "T2", "T2star", "T_b"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.n_bar < 0 or self.B_nuc_rms < 0:
            raise ValueError("n_bar and B_nuc_rms must be non-negative")

    def with_(self, **changes) -> "DeviceParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class DerivedQuantities:
    omega: float
    theta: float
    g: float
    omega0: float
    kappa: float
    E_z: float
    T_eff: float


def qubit_splitting(Delta: float, T: float) -> float:
    if T < 0:
        raise ValueError("T must be non-negative")
    return math.hypot(Delta, 2.0 * T)


def mixing_angle(Delta: float, T: float) -> float:
    """Half of atan2(2T, Delta); pi/4 at the optimal point, 0 with tunneling off."""
    if T < 0 or Delta < 0:
        raise ValueError("mixing_angle needs T >= 0 and Delta >= 0")
    return 0.5 * math.atan2(2.0 * T, Delta)


def resonator_frequency(L: float, Z0: float, C0: float) -> float:
    """Fundamental mode pi / (L Z0 C0), returned in rad/ns."""
    if min(L, Z0, C0) <= 0:
        raise ValueError("L, Z0 and C0 must be positive")
    return math.pi / (L * Z0 * C0) * 1e-9


def capacitance_for_frequency(omega0: float, L: float, Z0: float) -> float:
    """Inverse of :func:`resonator_frequency` (omega0 in rad/ns, result in F/m)."""
    return math.pi / (L * Z0 * omega0 * 1e9)


def coupling_strength(params: DeviceParams) -> float:
    """Vacuum coupling between one DDM and the resonator fundamental, rad/ns.

    With hbar restored the coupling reads

        g = (e / 2 hbar) (C_c / C_tot) (1 / (L C0)) sqrt(pi hbar / Z0) sin(2 theta)

    i.e. the dipole energy e (C_c/C_tot) V_rms of the (1,1)/(0,2) charge
    dipole in the zero-point voltage sqrt(pi hbar / Z0) / (L C0) of the
    fundamental, projected on the qubit by sin(2 theta).  For the default
    device it gives about 2 pi x 0.62 GHz, a factor ~5 above the commonly
    quoted 2 pi x 125 MHz; only the order of magnitude is meaningful.
    """
    theta = mixing_angle(abs(params.Delta), params.T)
    v_zpf = math.sqrt(math.pi * HBAR / params.Z0) / (params.L * params.C0)
    g_si = E_CHARGE / (2.0 * HBAR) * (params.C_c / params.C_tot) * v_zpf * math.sin(2.0 * theta)
    return g_si * 1e-9


def zeeman_splitting(params: DeviceParams) -> float:
    return abs(params.g_factor) * MU_B_OVER_HBAR * params.B_z * 1e-3


def resonator_decay(params: DeviceParams) -> float:
    return resonator_frequency(params.L, params.Z0, params.C0) / params.Q


def derive(params: DeviceParams) -> DerivedQuantities:
    omega = qubit_splitting(params.Delta, params.T)
    omega0 = resonator_frequency(params.L, params.Z0, params.C0)
    return DerivedQuantities(
        omega=omega,
        theta=mixing_angle(abs(params.Delta), params.T),
        g=coupling_strength(params),
        omega0=omega0,
        kappa=omega0 / params.Q,
        E_z=zeeman_splitting(params),
        T_eff=omega / 2.0,
    )


def build_reduced_hamiltonian(Delta: float, T: float) -> Operator:
    """Singlet Hamiltonian in the basis {|(1,1)S>, |(0,2)S>}."""
    h = np.array([[0.0, T], [T, -Delta]])
    return Operator(h, HilbertSpace((2,)))


def qubit_basis() -> np.ndarray:
    """Columns are |0> and |1> written in the {|(1,1)S>, |(0,2)S>} basis."""
    s = 1.0 / math.sqrt(2.0)
    return np.array([[s, s], [-s, s]])


def build_two_electron_hamiltonian(params: DeviceParams) -> Operator:
    """Six-level two-electron Hamiltonian.

    Basis order is :data:`TWO_ELECTRON_BASIS`.  The (1,1) sector is the energy
    zero, which absorbs the constant 2 (E_os + mu) + W.  ``Delta`` is the
    effective (1,1)-(0,2) detuning so the singlet block is exactly the reduced
    Hamiltonian; (2,0)S then sits at 2 (U - W) + Delta.  Tunneling conserves
    spin, so the triplets only carry their Zeeman energies 0, +E_z, -E_z.
    """
    e_z = zeeman_splitting(params)
    h = np.zeros((6, 6))
    h[SINGLET_02, SINGLET_02] = -params.Delta
    h[SINGLET_20, SINGLET_20] = 2.0 * (params.U - params.W) + params.Delta
    for s in (SINGLET_02, SINGLET_20):
        h[SINGLET_11, s] = h[s, SINGLET_11] = params.T
    h[TRIPLET_PLUS, TRIPLET_PLUS] = e_z
    h[TRIPLET_MINUS, TRIPLET_MINUS] = -e_z
    return Operator(h, HilbertSpace((6,)))


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def lines(self) -> list[str]:
        return [f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}" for c in self.checks]


def validate_device(params: DeviceParams, *, g: float | None = None,
                    detuning: float | None = None, dispersive: bool = False,
                    dispersive_ratio: float = 4.0,
                    top_fock_population: float | None = None,
                    fock_tol: float = 1e-6) -> ValidationReport:
    """Operating-point sanity checks.  Failures are reported, never raised.

    ``g`` overrides the geometric coupling (e.g. with the operating-point value)
    and ``detuning`` is the qubit-resonator detuning used for the dispersive flag.
    """
    dq = derive(params)
    g_val = dq.g if g is None else g
    checks = [
        Check("zeeman_exceeds_gap", dq.E_z > dq.omega,
              f"E_z/2pi = {to_ghz(dq.E_z):.4g} GHz vs omega/2pi = {to_ghz(dq.omega):.4g} GHz"),
        Check("strong_coupling", g_val * params.T2 > 1.0,
              f"g*T2 = {g_val * params.T2:.4g}"),
    ]
    if dispersive:
        d = abs(dq.omega - dq.omega0) if detuning is None else abs(detuning)
        ok = g_val == 0 or d >= dispersive_ratio * g_val
        checks.append(Check("dispersive_regime", bool(ok),
                            f"|delta|/g = {d / g_val if g_val else math.inf:.4g} (need >= {dispersive_ratio:g})"))
    if top_fock_population is not None:
        checks.append(Check("fock_truncation", top_fock_population < fock_tol,
                            f"top Fock population {top_fock_population:.3e} (need < {fock_tol:g})"))
    return ValidationReport(tuple(checks))
