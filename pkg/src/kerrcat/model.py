"""Rotating-frame Hamiltonians of the two-KPO / two-coupler system.

All coefficients are angular frequencies (rad/s) and Hamiltonians are H/hbar.
Full-system operators are scipy CSR matrices over a CompositeBasis in the
mode order (KPO1, KPO2, c1, c2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .constants import MHZ, TWO_PI
from .hilbert import C1, C2, KPO1, KPO2, CompositeBasis, cat_states, fock_annihilation


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class SystemParams:
    """Effective parameters of the main model.

    ``g`` is the 2x2 coupling matrix g[j, k] between KPO j and coupler k;
    ``chi`` holds the two coupler Kerr coefficients.
    """

    K: float
    p: float
    chi: tuple[float, float]
    g: np.ndarray
    kappa: float
    delta2: float
    g_kpo: float = 0.0  # direct KPO-KPO exchange (zero in the main model)
    g_c: float = 0.0  # direct coupler-coupler exchange

    def __post_init__(self):
        if self.K <= 0 or self.p <= 0:
            raise ModelError("K and p must be positive")
        if self.kappa < 0:
            raise ModelError("kappa must be non-negative")
        g = np.asarray(self.g, dtype=float)
        if g.shape != (2, 2):
            raise ModelError("g must be a 2x2 matrix")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "chi", tuple(float(c) for c in self.chi))

    @property
    def alpha(self) -> float:
        return math.sqrt(self.p / self.K)

    @property
    def g_scalar(self) -> float:
        """The common coupling when all g[j, k] are equal."""
        if not np.allclose(self.g, self.g[0, 0], rtol=1e-12, atol=0):
            raise ModelError("couplings are not all equal")
        return float(self.g[0, 0])


def default_params(kappa_over_2pi_hz: float = 0.0, alpha_min: float = 0.04) -> SystemParams:
    """Default parameter set with Delta_2 = -2 g alpha / alpha_min."""
    K = TWO_PI * 20 * MHZ
    p = TWO_PI * 80 * MHZ
    g = TWO_PI * 10 * MHZ
    alpha = math.sqrt(p / K)
    return SystemParams(
        K=K,
        p=p,
        chi=(TWO_PI * 10 * MHZ,) * 2,
        g=np.full((2, 2), g),
        kappa=TWO_PI * kappa_over_2pi_hz,
        delta2=-2 * g * alpha / alpha_min,
    )


@dataclass(frozen=True)
class SystemParamsII:
    """Effective parameters of the all-capacitive circuit (model II)."""

    K: float
    p: float
    chi: tuple[float, float]
    g_couplers: tuple[float, float]  # g_k, same for both KPOs
    g_kpo: float
    g_c: float
    delta2: float
    kappa: float = 0.0

    @property
    def alpha(self) -> float:
        return math.sqrt(self.p / self.K)

    def as_system_params(self) -> SystemParams:
        g1, g2 = self.g_couplers
        return SystemParams(
            K=self.K,
            p=self.p,
            chi=self.chi,
            g=np.array([[g1, g2], [g1, g2]]),
            kappa=self.kappa,
            delta2=self.delta2,
            g_kpo=self.g_kpo,
            g_c=self.g_c,
        )


@dataclass
class HamiltonianTerms:
    """H(t) = static + delta1(t) * n_c1, with n_c1 the coupler-1 number operator."""

    static: sp.csr_matrix
    n_c1: sp.csr_matrix
    basis: CompositeBasis = field(repr=False)

    def at(self, delta1: float) -> sp.csr_matrix:
        return (self.static + delta1 * self.n_c1).tocsr()


def _check_basis(params: SystemParams, basis: CompositeBasis):
    if len(basis.modes) != 4:
        raise ModelError("basis must have four modes")
    for slot in (KPO1, KPO2):
        if basis.modes[slot].kind == "kpo-eigen":
            if basis.K is None or not (
                math.isclose(basis.K, params.K, rel_tol=1e-12)
                and math.isclose(basis.p, params.p, rel_tol=1e-12)
            ):
                raise ModelError("basis was built for different K, p")


def _kpo_local(K, p, basis, slot):
    T = basis.transforms[slot]
    a = fock_annihilation(basis.modes[slot].fock_cutoff)
    ad = a.conj().T
    H = -0.5 * K * (ad @ ad @ a @ a) + 0.5 * p * (ad @ ad + a @ a)
    H = T.conj().T @ H @ T
    return 0.5 * (H + H.conj().T)


def _coupler_kerr(chi, cutoff):
    c = fock_annihilation(cutoff)
    cd = c.conj().T
    return -0.5 * chi * (cd @ cd @ c @ c)


def hamiltonian_terms(params: SystemParams, basis: CompositeBasis) -> HamiltonianTerms:
    """Split the rotating-frame Hamiltonian into its static part and the Delta_1 generator."""
    _check_basis(params, basis)
    ops = {slot: basis.embed(basis.annihilation(slot), slot) for slot in range(4)}
    dag = {slot: op.conj().T.tocsr() for slot, op in ops.items()}

    static = sp.csr_matrix((basis.total_dim, basis.total_dim), dtype=complex)
    for slot in (KPO1, KPO2):
        static = static + basis.embed(_kpo_local(params.K, params.p, basis, slot), slot)
    for k, slot in enumerate((C1, C2)):
        static = static + basis.embed(_coupler_kerr(params.chi[k], basis.dims[slot]), slot)
    static = static + params.delta2 * (dag[C2] @ ops[C2])
    for j, aslot in enumerate((KPO1, KPO2)):
        for k, cslot in enumerate((C1, C2)):
            gjk = params.g[j, k]
            if gjk:
                static = static + gjk * (ops[aslot] @ dag[cslot] + dag[aslot] @ ops[cslot])
    if params.g_kpo:
        static = static + params.g_kpo * (ops[KPO1] @ dag[KPO2] + dag[KPO1] @ ops[KPO2])
    if params.g_c:
        static = static + params.g_c * (ops[C1] @ dag[C2] + dag[C1] @ ops[C2])
    static = static.tocsr()
    static.sum_duplicates()
    n_c1 = (dag[C1] @ ops[C1]).tocsr()
    return HamiltonianTerms(static=static, n_c1=n_c1, basis=basis)


def build_h_main(params: SystemParams, delta1: float, basis: CompositeBasis) -> sp.csr_matrix:
    """Full rotating-frame Hamiltonian with coupler-1 detuning ``delta1``."""
    if params.g_kpo or params.g_c:
        raise ModelError("main model has no direct exchange terms; use build_h_circuit2")
    return hamiltonian_terms(params, basis).at(delta1)


def build_h_circuit2(params2: SystemParamsII, delta1_tilde: float, basis: CompositeBasis) -> sp.csr_matrix:
    """Model II Hamiltonian: main-model structure plus direct KPO-KPO and coupler-coupler exchange."""
    return hamiltonian_terms(params2.as_system_params(), basis).at(delta1_tilde)


def _logical_signs(labels):
    i, j = labels
    if i not in (0, 1) or j not in (0, 1):
        raise ModelError("qubit labels must be 0 or 1")
    return (1 - 2 * i, 1 - 2 * j)


def _coupler_drive(params: SystemParams, labels):
    # <s1 alpha, s2 alpha| H_I |s1 alpha, s2 alpha> = sum_k beta_k (c_k + c_k^dag)
    s = _logical_signs(labels)
    return [params.alpha * (s[0] * params.g[0, k] + s[1] * params.g[1, k]) for k in range(2)]


def conditioned_coupler_hamiltonian(
    params: SystemParams, delta1: float, labels: tuple[int, int], cutoff: int = 12
) -> np.ndarray:
    """Coupler Hamiltonian with the KPOs frozen in logical state |i, j>.

    Acts on (c1 x c2) Fock space of dimension cutoff**2 and includes the
    constant K alpha^4 from the two KPO terms. For equal couplings and
    i == j this is the displaced-oscillator form with alpha_k = 2 g alpha / Delta_k;
    for i != j the linear drive cancels and only bare coupler terms remain.
    """
    deltas = (delta1, params.delta2)
    if any(d == 0 for d in deltas):
        raise ModelError("singular detuning: Delta_k = 0")
    c = fock_annihilation(cutoff)
    cd = c.conj().T
    eye = np.eye(cutoff)
    beta = _coupler_drive(params, labels)
    H = params.K * params.alpha**4 * np.eye(cutoff * cutoff, dtype=complex)
    for k in range(2):
        local = -0.5 * params.chi[k] * (cd @ cd @ c @ c) + deltas[k] * (cd @ c) + beta[k] * (c + cd)
        H += np.kron(local, eye) if k == 0 else np.kron(eye, local)
    if params.g_c:
        H += params.g_c * (np.kron(c, cd) + np.kron(cd, c))
    return H


def conditioned_energy(params: SystemParams, delta1: float, labels: tuple[int, int]) -> float:
    """Coupler-vacuum-branch energy of the conditioned Hamiltonian at chi = 0 (closed form)."""
    s = _logical_signs(labels)
    beta = np.array(_coupler_drive(params, labels))
    M = np.array([[delta1, params.g_c], [params.g_c, params.delta2]])
    kpo = params.K * params.alpha**4 + 2 * s[0] * s[1] * params.g_kpo * params.alpha**2
    return float(kpo - beta @ np.linalg.solve(M, beta))


def coupler_displacements(params: SystemParams, delta1: float) -> tuple[float, float]:
    """alpha_k = 2 g alpha / Delta_k for both couplers (equal couplings)."""
    g = params.g_scalar
    return (2 * g * params.alpha / delta1, 2 * g * params.alpha / params.delta2)


def check_small_chi(params: SystemParams, delta1: float, threshold: float = 0.05) -> dict:
    """Ratio chi_k |alpha_k|^3 / (g alpha) per coupler; small means the displaced picture holds."""
    g = params.g_scalar
    disp = coupler_displacements(params, delta1)
    ratios = [params.chi[k] * abs(disp[k]) ** 3 / (g * params.alpha) for k in range(2)]
    return {"ratios": ratios, "threshold": threshold, "passed": max(ratios) < threshold}


def detuning_condition_model2(params2: SystemParamsII) -> float:
    """Delta_1 that makes same- and different-parity conditioned energies equal."""
    g1, g2 = params2.g_couplers
    gk, gc, d2 = params2.g_kpo, params2.g_c, params2.delta2
    den = gk * d2 - g2**2
    if abs(den) <= 1e-14 * max(abs(gk * d2), g2**2):
        raise ModelError("singular detuning condition: g_KPO Delta_2 = g_2^2")
    return (g1**2 * d2 + gk * gc**2 - 2 * g1 * g2 * gc) / den


def conditioned_energies_model2(params2: SystemParamsII, delta1: float) -> tuple[float, float]:
    """(same-parity, different-parity) conditioned energies in closed form."""
    g1, g2 = params2.g_couplers
    a2 = params2.alpha**2
    gk, gc, d2 = params2.g_kpo, params2.g_c, params2.delta2
    base = params2.K * a2**2
    same = 2 * gk * a2 + base - 4 * a2 * (g1**2 * d2 + g2**2 * delta1 - 2 * g1 * g2 * gc) / (
        delta1 * d2 - gc**2
    )
    return same, -2 * gk * a2 + base


def conditioned_drive_on_kpos(
    params: SystemParams,
    delta1: float,
    parity: str,
    basis: CompositeBasis,
    label: int = 0,
) -> sp.csr_matrix:
    """Effective drive on the two KPOs with the couplers in their conditioned displaced vacuum.

    For same parity (|i, i>) the couplers sit at -s alpha_k with s = (-1)^i and
    the drive is (-1)^(i+1) g (alpha_1 + alpha_2) sum_j (a_j + a_j^dag). For
    different parity the couplers stay in vacuum and the drive vanishes.
    Acts on the KPO1 x KPO2 retained space.
    """
    d1, d2 = basis.dims[KPO1], basis.dims[KPO2]
    if parity == "different":
        return sp.csr_matrix((d1 * d2, d1 * d2), dtype=complex)
    if parity != "same":
        raise ModelError("parity must be 'same' or 'different'")
    if label not in (0, 1):
        raise ModelError("label must be 0 or 1")
    g = params.g_scalar
    a1, a2 = coupler_displacements(params, delta1)
    coeff = (-1) ** (label + 1) * g * (a1 + a2)
    x1 = basis.annihilation(KPO1)
    x2 = basis.annihilation(KPO2)
    x1 = x1 + x1.conj().T
    x2 = x2 + x2.conj().T
    op = sp.kron(x1, np.eye(d2)) + sp.kron(np.eye(d1), x2)
    return (coeff * op).tocsr()


def kpo_spectral_gap(params: SystemParams, cutoff: int = 40) -> float:
    """Gap between the degenerate cat pair and the next isolated-KPO level (rad/s)."""
    a = fock_annihilation(cutoff)
    ad = a.conj().T
    H = -0.5 * params.K * (ad @ ad @ a @ a) + 0.5 * params.p * (ad @ ad + a @ a)
    w = np.sort(np.linalg.eigvalsh(H))[::-1]
    return float(w[1] - w[2])


def residual_zz(params: SystemParams, delta1: float, basis: CompositeBasis, n_eig: int = 16) -> dict:
    """Residual ZZ strength E_00 + E_11 - E_01 - E_10 of the dressed logical manifold.

    The four eigenstates of the full static Hamiltonian with the largest weight
    on the cat-product x coupler-vacuum subspace are mapped back onto that
    subspace by symmetric orthonormalization, giving a 4x4 effective
    Hamiltonian in the (C+, C-) x (C+, C-) basis. Logical Z is X in the cat
    basis, so ZZ = Tr(H_eff X x X).
    """
    H = hamiltonian_terms(params, basis).at(delta1)
    target = params.K * params.alpha**4
    w, v = spla.eigsh(H, k=n_eig, sigma=target, which="LM")
    cut = basis.modes[KPO1].fock_cutoff
    cats = cat_states(params.alpha, cut)
    vacs = [basis.vacuum(C1), basis.vacuum(C2)]
    B = np.column_stack(
        [basis.product_state([cats[i], cats[j], *vacs]) for i in (0, 1) for j in (0, 1)]
    )
    weight = np.sum(np.abs(B.conj().T @ v) ** 2, axis=0)
    pick = np.argsort(weight)[::-1][:4]
    O = B.conj().T @ v[:, pick]
    s, U = np.linalg.eigh(O.conj().T @ O)
    inv_sqrt = U @ np.diag(s**-0.5) @ U.conj().T
    Q = O @ inv_sqrt
    H_eff = Q @ np.diag(w[pick]) @ Q.conj().T
    X = np.array([[0, 1], [1, 0]])
    zz = float(np.trace(H_eff @ np.kron(X, X)).real)
    return {"zz": zz, "manifold_weight": float(np.min(weight[pick])), "h_eff": H_eff}
