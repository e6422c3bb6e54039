"""States, fidelity metrics and closed-form dephasing results.

Logical states: |0> = |alpha>, |1> = |-alpha> per KPO, couplers in vacuum.
The gate target applies the phase exp(-i Theta) to the same-parity logical
components |00> and |11>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import C1, C2, KPO1, CompositeBasis, cat_normalizers, cat_states, coherent_state


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class GateSpec:
    theta: float
    t_f: float

    def __post_init__(self):
        if self.t_f < 0:
            raise AnalysisError("t_f must be non-negative")


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if self.norm > 1 + 1e-9:
            raise AnalysisError(f"Bloch vector length {self.norm} exceeds 1")

    @property
    def norm(self) -> float:
        return math.sqrt(self.x**2 + self.y**2 + self.z**2)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def dephasing_rate(kappa: float, alpha: float) -> float:
    """Logical dephasing rate gamma = 2 kappa alpha^2."""
    return 2 * kappa * alpha**2


def _kpo_cutoff(basis: CompositeBasis) -> int:
    return basis.modes[KPO1].fock_cutoff


def _coupler_vacua(basis):
    return [basis.vacuum(C1), basis.vacuum(C2)]


def logical_basis(alpha: float, basis: CompositeBasis) -> np.ndarray:
    """Columns |00>, |01>, |10>, |11> (coherent products x coupler vacuum) in the retained basis."""
    n = _kpo_cutoff(basis)
    coh = (coherent_state(alpha, n), coherent_state(-alpha, n))
    cols = [
        basis.product_state([coh[i], coh[j], *_coupler_vacua(basis)]) for i in (0, 1) for j in (0, 1)
    ]
    return np.column_stack(cols)


def logical_decomposition(psi: np.ndarray, alpha: float, basis: CompositeBasis) -> np.ndarray:
    """Coefficients c_ij with P psi = sum c_ij |ij>, P the projector on the logical span.

    The coherent products are not orthogonal, so the coefficients come from
    the dual frame G^-1 B^dag psi with G the Gram matrix.
    """
    B = logical_basis(alpha, basis)
    G = B.conj().T @ B
    return np.linalg.solve(G, B.conj().T @ psi)


def initial_state_vector(alpha: float, basis: CompositeBasis) -> np.ndarray:
    """|C+> x |C+> x |0, 0>_c in the retained basis."""
    plus, _ = cat_states(alpha, _kpo_cutoff(basis))
    psi = basis.product_state([plus, plus, *_coupler_vacua(basis)])
    norm2 = float(np.vdot(psi, psi).real)
    if abs(1 - norm2) > 1e-8:
        raise AnalysisError(f"retained basis loses {1 - norm2:.2e} of the initial state")
    return psi / math.sqrt(norm2)


def initial_state(alpha: float, basis: CompositeBasis) -> np.ndarray:
    """Pure density matrix of the even-cat product with both couplers in vacuum."""
    psi = initial_state_vector(alpha, basis)
    return np.outer(psi, psi.conj())


def state_infidelity(state: np.ndarray, psi_ref: np.ndarray) -> float:
    """1 - <psi_ref| rho |psi_ref>; ``state`` may be a vector or a density matrix."""
    state = np.asarray(state)
    if state.shape[0] != psi_ref.shape[0]:
        raise AnalysisError("state and reference live in different spaces")
    if state.ndim == 1:
        overlap = abs(np.vdot(psi_ref, state)) ** 2
    else:
        overlap = np.vdot(psi_ref, state @ psi_ref).real
    return float(1 - overlap)


def ideal_rzz_state(initial: np.ndarray, gate: GateSpec, alpha: float, basis: CompositeBasis) -> np.ndarray:
    """Apply exp(-i Theta delta_ij) to each logical component of ``initial`` and renormalize."""
    coeffs = logical_decomposition(initial, alpha, basis)
    phases = np.exp(-1j * gate.theta * np.array([1, 0, 0, 1]))
    psi = logical_basis(alpha, basis) @ (phases * coeffs)
    return psi / np.linalg.norm(psi)


def gate_infidelity(final_state: np.ndarray, gate: GateSpec, initial: np.ndarray, alpha: float, basis) -> float:
    return state_infidelity(final_state, ideal_rzz_state(initial, gate, alpha, basis))


def analytic_off_infidelity(t, alpha: float, gamma: float):
    """Infidelity of the idle even-cat product under logical dephasing at rate gamma."""
    t = np.asarray(t, dtype=float)
    e2 = math.exp(-2 * alpha**2)
    d = np.exp(-gamma * t)
    out = 1 - (1 + e2) ** 2 * (1 + d) ** 2 / (4 * (1 + e2 * d) ** 2)
    return float(out) if out.ndim == 0 else out


def analytic_gate_dephasing_infidelity(t_f, theta: float, alpha: float, gamma: float):
    """Gate infidelity caused only by logical dephasing over the gate time."""
    t_f = np.asarray(t_f, dtype=float)
    e2 = math.exp(-2 * alpha**2)
    e4 = e2**2
    d = np.exp(-gamma * t_f)
    c1, c2 = math.cos(theta), math.cos(2 * theta)
    num = (1 + d) ** 2 * (1 + e4) * (1 + 4 * c1 * e2 + e4) + 4 * e4 * (1 + 2 * c2 * d + d**2)
    den = (1 + 2 * c1 * e2 + e4) * (1 + 2 * c1 * e2 * d + e4 * d**2)
    out = 1 - num / (4 * den)
    return float(out) if out.ndim == 0 else out


def _dephased_qubit(alpha: float, gamma_t: float, n: int) -> np.ndarray:
    plus, minus = coherent_state(alpha, n), coherent_state(-alpha, n)
    rho = np.outer(plus, plus.conj()) + np.outer(minus, minus.conj())
    rho = rho + math.exp(-gamma_t) * (np.outer(plus, minus.conj()) + np.outer(minus, plus.conj()))
    return rho / np.trace(rho).real


def _embed_kpo_product(rho_q1, rho_q2, basis):
    T1, T2 = basis.transforms[0], basis.transforms[1]
    r1 = T1.conj().T @ rho_q1 @ T1
    r2 = T2.conj().T @ rho_q2 @ T2
    out = np.kron(r1, r2)
    for slot in (C1, C2):
        v = basis.to_retained(slot, basis.vacuum(slot))
        out = np.kron(out, np.outer(v, v.conj()))
    return out


def dephased_product_state(t: float, alpha: float, gamma: float, basis: CompositeBasis) -> np.ndarray:
    """Idle state after time t: each KPO's |alpha><-alpha| coherence damped by exp(-gamma t)."""
    if t < 0:
        raise AnalysisError("t must be non-negative")
    q = _dephased_qubit(alpha, gamma * t, _kpo_cutoff(basis))
    return _embed_kpo_product(q, q, basis)


def gate_dephased_state(t_f: float, theta: float, alpha: float, gamma: float, basis: CompositeBasis) -> np.ndarray:
    """Ideal gate output with each logical coherence damped by exp(-gamma t_f) per flipped qubit."""
    n = _kpo_cutoff(basis)
    coh = (coherent_state(alpha, n), coherent_state(-alpha, n))
    rho = np.zeros((n * n, n * n), dtype=complex)
    labels = [(i, j) for i in (0, 1) for j in (0, 1)]
    for i, j in labels:
        ket = np.kron(coh[i], coh[j])
        for k, l in labels:
            bra = np.kron(coh[k], coh[l])
            phase = np.exp(1j * theta * ((k == l) - (i == j)))
            damp = math.exp(-gamma * t_f * ((i != k) + (j != l)))
            rho += phase * damp * np.outer(ket, bra.conj())
    rho /= np.trace(rho).real
    T1, T2 = basis.transforms[0], basis.transforms[1]
    T = np.kron(T1, T2)
    out = T.conj().T @ rho @ T
    for slot in (C1, C2):
        v = basis.to_retained(slot, basis.vacuum(slot))
        out = np.kron(out, np.outer(v, v.conj()))
    return out


def two_level_annihilation(alpha: float) -> np.ndarray:
    """KPO annihilation operator in the (C+, C-) basis: alpha [[0, 1/r], [r, 0]], r = N+/N-."""
    r = cat_ratio(alpha)
    return alpha * np.array([[0, 1 / r], [r, 0]], dtype=complex)


def cat_ratio(alpha: float) -> float:
    n_plus, n_minus = cat_normalizers(alpha)
    return n_plus / n_minus


def bloch_rates(kappa: float, alpha: float) -> tuple[float, float, float, float]:
    """(rate_x, rate_y, rate_z, fixed point of b_z) of the two-level dephasing dynamics."""
    r = cat_ratio(alpha)
    s = r**-2 + r**2
    base = kappa * alpha**2
    return base * (s / 2 - 1), base * (s / 2 + 1), base * s, (r**-2 - r**2) / s


def bloch_dephasing_solution(b0: BlochVector, t, kappa: float, alpha: float):
    """Closed-form Bloch vector of one cat qubit under single-photon loss."""
    rx, ry, rz, fixed = bloch_rates(kappa, alpha)
    t = np.asarray(t, dtype=float)
    bx = b0.x * np.exp(-rx * t)
    by = b0.y * np.exp(-ry * t)
    bz = np.exp(-rz * t) * (b0.z - fixed) + fixed
    if t.ndim == 0:
        return BlochVector(float(bx), float(by), float(bz))
    return np.stack([bx, by, bz], axis=-1)


def bloch_rhs(b: np.ndarray, kappa: float, alpha: float) -> np.ndarray:
    """Linear Bloch equations obtained from the two-level Lindblad equation."""
    rx, ry, rz, fixed = bloch_rates(kappa, alpha)
    return np.array([-rx * b[0], -ry * b[1], -rz * (b[2] - fixed)])


def bloch_from_density(rho: np.ndarray) -> BlochVector:
    return BlochVector(
        float(2 * rho[1, 0].real), float(2 * rho[1, 0].imag), float((rho[0, 0] - rho[1, 1]).real)
    )


def density_from_bloch(b: BlochVector) -> np.ndarray:
    return 0.5 * np.array([[1 + b.z, b.x - 1j * b.y], [b.x + 1j * b.y, 1 - b.z]])
