"""Effective rotating-frame parameters from circuit element values.

Two wirings are supported. In model I each KPO j shares a coupling capacitor
with coupler j and the cross links KPO1-c2, KPO2-c1 are inductive (E_L). In
model II every KPO-coupler pair is linked by a capacitor C_tilde.

Subsystem order is (KPO1, KPO2, c1, c2). Energies are in joules, frequencies
in rad/s. A flux bias may be a float or a callable of time; time-dependent
quantities are evaluated at the ``t`` passed to the derive functions, with
the t = 0 value as the expansion reference.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .constants import ELEMENTARY_CHARGE, HBAR

Bias = Union[float, Callable[[float], float]]
NAMES = ("kpo1", "kpo2", "c1", "c2")


class CircuitError(ValueError):
    pass


class ValidityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class CircuitParams:
    C: float
    C_tilde: float
    E_J: tuple[float, float, float, float]
    phi_dc: tuple[Bias, Bias, Bias, Bias]
    epsilon_p: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    E_L: float = 0.0
    validity_threshold: float = 0.05

    def __post_init__(self):
        if self.C <= 0 or self.C_tilde <= 0:
            raise CircuitError("C and C_tilde must be positive")
        if len(self.E_J) != 4 or len(self.phi_dc) != 4 or len(self.epsilon_p) != 4:
            raise CircuitError("E_J, phi_dc and epsilon_p need one entry per subsystem")
        if any(abs(e) >= 0.1 for e in self.epsilon_p):
            raise CircuitError("pump amplitudes must satisfy |epsilon_p| << 1")

    def bias(self, idx: int, t: float) -> float:
        phi = self.phi_dc[idx]
        return float(phi(t)) if callable(phi) else float(phi)


def charging_energy(C: float) -> float:
    return ELEMENTARY_CHARGE**2 / (2 * C)


def effective_josephson(E_J: float, phi_dc: float) -> float:
    """SQUID energy 2 E_J cos(phi_dc / 2); the bias must keep the cosine positive."""
    c = math.cos(phi_dc / 2)
    if c <= 0:
        raise CircuitError(f"invalid flux bias {phi_dc}: cos(phi/2) <= 0")
    return 2 * E_J * c


def model1_ratios(x: float) -> tuple[float, float]:
    """(u, v) = ((1+x)/(1+2x), x/(1+2x))."""
    return (1 + x) / (1 + 2 * x), x / (1 + 2 * x)


def model2_ratios(x: float) -> tuple[float, float, float]:
    """(y, z, w) for the all-capacitive wiring."""
    den = 1 + 6 * x + 8 * x**2
    return (1 + 4 * x + 2 * x**2) / den, x / (1 + 4 * x), 2 * x**2 / den


def capacitance_matrix_model1(C: float, C_tilde: float) -> np.ndarray:
    """Capacitance matrix of one KPO-coupler pair sharing C_tilde."""
    return np.array([[C + C_tilde, -C_tilde], [-C_tilde, C + C_tilde]])


def capacitance_matrix_model2(C: float, C_tilde: float) -> np.ndarray:
    """4x4 capacitance matrix, order (KPO1, KPO2, c1, c2); each KPO links to both couplers."""
    M = np.diag([C + 2 * C_tilde] * 4)
    for i in (0, 1):
        for j in (2, 3):
            M[i, j] = M[j, i] = -C_tilde
    return M


def inverse_capacitance_check(C: float, C_tilde: float) -> float:
    """Largest discrepancy between the closed-form ratios and C * M^-1 by direct inversion."""
    x = C_tilde / C
    u, v = model1_ratios(x)
    y, z, w = model2_ratios(x)
    inv1 = np.linalg.inv(capacitance_matrix_model1(C, C_tilde)) * C
    inv2 = np.linalg.inv(capacitance_matrix_model2(C, C_tilde)) * C
    exp1 = np.array([[u, v], [v, u]])
    exp2 = np.array([[y, w, z, z], [w, y, z, z], [z, z, y, w], [z, z, w, y]])
    return float(max(np.abs(inv1 - exp1).max(), np.abs(inv2 - exp2).max()))


def _check_validity(ratio_coeff_EC: float, E_tilde: float, name: str, threshold: float):
    ratio = ratio_coeff_EC / E_tilde
    if ratio > threshold:
        warnings.warn(
            f"{name}: quartic expansion questionable, ratio {ratio:.3g} > {threshold}",
            ValidityWarning,
            stacklevel=3,
        )
    return ratio


@dataclass(frozen=True)
class DerivedParamsI:
    E_C: float
    x: float
    u: float
    v: float
    E_J_tilde: tuple[float, ...]  # at time t
    E_J_tilde0: tuple[float, ...]  # at t = 0
    omega0: tuple[float, ...]
    K: tuple[float, ...]
    p: tuple[float, ...]
    g_diag: tuple[float, float]  # g_11, g_22
    g_12: float
    g_21: float
    omega_p: float
    detuning: tuple[float, ...]
    validity: tuple[float, ...]


def derive_model1(cp: CircuitParams, t: float = 0.0, omega_p: float | None = None) -> DerivedParamsI:
    """Model I effective parameters at time ``t``.

    When ``omega_p`` is omitted the pump is set to 2(omega_KPO1^(0) - K_KPO1),
    which zeroes the KPO detunings.
    """
    E_C = charging_energy(cp.C)
    x = cp.C_tilde / cp.C
    u, v = model1_ratios(x)
    EL = cp.E_L
    E0 = tuple(effective_josephson(cp.E_J[i], cp.bias(i, 0.0)) for i in range(4))
    Et = tuple(effective_josephson(cp.E_J[i], cp.bias(i, t)) for i in range(4))
    validity = tuple(
        _check_validity(u * E_C, Et[i], NAMES[i], cp.validity_threshold) for i in range(4)
    )
    omega0 = tuple(
        math.sqrt(2 * u * E_C * (E0[i] + EL)) / HBAR * ((Et[i] + EL) / (E0[i] + EL) + 1)
        for i in range(4)
    )
    K = tuple(u * E_C / HBAR * Et[i] / (E0[i] + EL) for i in range(4))
    p = tuple(
        math.pi * cp.epsilon_p[i] * cp.E_J[i] / HBAR
        * math.sqrt(2 * u * E_C / (E0[i] + EL))
        * math.sin(cp.bias(i, t) / 2)
        for i in range(4)
    )
    g_diag = tuple(
        v / HBAR * math.sqrt(2 * E_C / u) * (E0[j] + EL) ** 0.25 * (E0[j + 2] + EL) ** 0.25
        for j in (0, 1)
    )

    def cross(kpo, coupler):
        return -EL * math.sqrt(2 * u * E_C) / (HBAR * (E0[kpo] + EL) ** 0.25 * (E0[coupler] + EL) ** 0.25)

    if omega_p is None:
        omega_p = 2 * (omega0[0] - K[0])
    detuning = tuple(omega0[i] - K[i] - omega_p / 2 for i in range(4))
    return DerivedParamsI(
        E_C=E_C, x=x, u=u, v=v, E_J_tilde=Et, E_J_tilde0=E0, omega0=omega0, K=K, p=p,
        g_diag=g_diag, g_12=cross(0, 3), g_21=cross(1, 2), omega_p=omega_p,
        detuning=detuning, validity=validity,
    )


@dataclass(frozen=True)
class DerivedParamsII:
    E_C: float
    x: float
    y: float
    z: float
    w: float
    E_J_tilde_kpo: float
    E_J_tilde_c: tuple[float, float]  # at time t
    E_J_tilde_c0: tuple[float, float]
    K: float
    p: float
    alpha: float
    chi: tuple[float, float]
    delta: tuple[float, float]
    g: tuple[float, float]
    g_kpo: float
    g_c: float
    omega_kpo0: float
    validity: tuple[float, ...]

    def to_system_params(self, kappa: float = 0.0):
        """Model II Hamiltonian parameters; Delta_1 is supplied separately by the caller."""
        from .model import SystemParamsII

        return SystemParamsII(
            K=self.K, p=self.p, chi=self.chi, g_couplers=self.g, g_kpo=self.g_kpo,
            g_c=self.g_c, delta2=self.delta[1], kappa=kappa,
        )


def derive_model2(cp: CircuitParams, t: float = 0.0) -> DerivedParamsII:
    """Model II effective parameters at time ``t``; both KPOs must be identical."""
    if cp.E_J[0] != cp.E_J[1] or cp.bias(0, t) != cp.bias(1, t) or cp.epsilon_p[0] != cp.epsilon_p[1]:
        raise CircuitError("model II assumes identical KPOs")
    E_C = charging_energy(cp.C)
    x = cp.C_tilde / cp.C
    y, z, w = model2_ratios(x)
    E_kpo = effective_josephson(cp.E_J[0], cp.bias(0, 0.0))
    Ec0 = tuple(effective_josephson(cp.E_J[i], cp.bias(i, 0.0)) for i in (2, 3))
    Ect = tuple(effective_josephson(cp.E_J[i], cp.bias(i, t)) for i in (2, 3))
    validity = (
        _check_validity(y * E_C, E_kpo, "kpo", cp.validity_threshold),
        *(_check_validity(y * E_C, Ect[k], NAMES[k + 2], cp.validity_threshold) for k in (0, 1)),
    )
    K = y * E_C / HBAR
    p = (
        math.pi * cp.epsilon_p[0] * cp.E_J[0] / HBAR
        * math.sqrt(2 * y * E_C / E_kpo)
        * math.sin(cp.bias(0, t) / 2)
    )
    chi = tuple(y * E_C / HBAR * Ect[k] / Ec0[k] for k in (0, 1))
    omega_kpo0 = 2 * math.sqrt(2 * y * E_C * E_kpo) / HBAR
    delta = tuple(
        math.sqrt(2 * y * E_C * Ec0[k]) / HBAR * (Ect[k] / Ec0[k] + 1) - chi[k] - omega_kpo0 + K
        for k in (0, 1)
    )
    g = tuple(z / HBAR * math.sqrt(E_C / y) * (E_kpo * Ec0[k]) ** 0.25 for k in (0, 1))
    g_kpo = w / HBAR * math.sqrt(E_C * E_kpo / y)
    g_c = w / HBAR * math.sqrt(E_C / y) * (Ec0[0] * Ec0[1]) ** 0.25
    return DerivedParamsII(
        E_C=E_C, x=x, y=y, z=z, w=w, E_J_tilde_kpo=E_kpo, E_J_tilde_c=Ect, E_J_tilde_c0=Ec0,
        K=K, p=p, alpha=math.sqrt(p / K) if p > 0 else 0.0, chi=chi, delta=delta, g=g,
        g_kpo=g_kpo, g_c=g_c, omega_kpo0=omega_kpo0, validity=validity,
    )


def pump_frequency_for_zero_kpo_detuning(derived) -> float:
    """omega_p = 2(omega_KPO^(0) - K), which puts the KPOs on resonance in the rotating frame."""
    if isinstance(derived, DerivedParamsI):
        return 2 * (derived.omega0[0] - derived.K[0])
    if isinstance(derived, DerivedParamsII):
        return 2 * (derived.omega_kpo0 - derived.K)
    raise CircuitError("expected derived model I or model II parameters")


def example_design(phi_c1: Bias = 0.0) -> CircuitParams:
    """Design values of the all-capacitive example circuit."""
    from .constants import PLANCK

    GHz_h = PLANCK * 1e9
    return CircuitParams(
        C=1.1e-12,
        C_tilde=2e-15,
        E_J=(800 * GHz_h, 800 * GHz_h, 660 * GHz_h, 444.69 * GHz_h),
        phi_dc=(math.pi / 2, math.pi / 2, phi_c1, 0.0),
        epsilon_p=(7e-3, 7e-3, 0.0, 0.0),
    )
