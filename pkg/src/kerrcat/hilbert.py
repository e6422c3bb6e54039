"""Truncated bosonic bases for the two-KPO / two-coupler system.

Mode order is fixed everywhere as (KPO1, KPO2, coupler1, coupler2). KPO modes
are expanded in the highest-energy eigenstates of the isolated rotating-frame
KPO Hamiltonian; couplers use plain Fock states.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

KPO1, KPO2, C1, C2 = 0, 1, 2, 3
MODE_NAMES = ("kpo1", "kpo2", "c1", "c2")


class BasisError(ValueError):
    pass


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ModeSpec:
    kind: str  # "fock" or "kpo-eigen"
    fock_cutoff: int
    keep_dim: int | None = None

    def __post_init__(self):
        if self.kind not in ("fock", "kpo-eigen"):
            raise BasisError(f"unknown mode kind {self.kind!r}")
        if self.fock_cutoff < 2:
            raise BasisError(f"fock_cutoff must be >= 2, got {self.fock_cutoff}")
        keep = self.fock_cutoff if self.keep_dim is None else self.keep_dim
        if self.kind == "fock" and keep != self.fock_cutoff:
            raise BasisError("keep_dim must equal fock_cutoff for a Fock mode")
        if not 2 <= keep <= self.fock_cutoff:
            raise BasisError(f"keep_dim {keep} outside [2, {self.fock_cutoff}]")
        object.__setattr__(self, "keep_dim", keep)


def fock_annihilation(cutoff: int) -> np.ndarray:
    """Annihilation operator truncated to ``cutoff`` Fock states."""
    if cutoff < 2:
        raise BasisError(f"cutoff must be >= 2, got {cutoff}")
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), 1).astype(complex)


def coherent_state(alpha: complex, cutoff: int) -> np.ndarray:
    """Truncated coherent state |alpha>, renormalized after truncation.

    Emits a TruncationWarning when the retained Fock weight is below 1 - 1e-10.
    """
    n = np.arange(cutoff)
    if alpha == 0:
        psi = np.zeros(cutoff, dtype=complex)
        psi[0] = 1.0
        return psi
    mag = abs(alpha)
    log_amp = -0.5 * mag**2 + n * math.log(mag) - 0.5 * gammaln(n + 1)
    psi = np.exp(log_amp) * np.exp(1j * np.angle(alpha) * n)
    norm2 = float(np.vdot(psi, psi).real)
    if norm2 < 1 - 1e-10:
        warnings.warn(
            f"coherent state alpha={alpha} truncated at {cutoff}: norm^2={norm2:.3e}",
            TruncationWarning,
            stacklevel=2,
        )
    return psi / math.sqrt(norm2)


def cat_states(alpha: float, cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    """Even and odd cat states N+-(|alpha> +- |-alpha>) in the Fock basis."""
    if alpha <= 0:
        raise BasisError("alpha must be positive")
    plus = coherent_state(alpha, cutoff)
    minus = coherent_state(-alpha, cutoff)
    even = plus + minus
    odd = plus - minus
    return even / np.linalg.norm(even), odd / np.linalg.norm(odd)


def cat_normalizers(alpha: float) -> tuple[float, float]:
    """Closed-form N+ and N- = [2(1 +- exp(-2 alpha^2))]^(-1/2)."""
    e = math.exp(-2 * alpha**2)
    return (2 * (1 + e)) ** -0.5, (2 * (1 - e)) ** -0.5


def kpo_hamiltonian(K: float, p: float, cutoff: int) -> np.ndarray:
    """-(K/2) a^2+ a^2 + (p/2)(a^2+ + a^2) in the Fock basis (rad/s)."""
    a = fock_annihilation(cutoff)
    ad = a.conj().T
    return -0.5 * K * (ad @ ad @ a @ a) + 0.5 * p * (ad @ ad + a @ a)


def _fix_phase(vecs: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vecs), axis=0)
    ph = vecs[idx, np.arange(vecs.shape[1])]
    return vecs * (np.abs(ph) / ph)


def kpo_eigen_truncation(K: float, p: float, spec: ModeSpec):
    """Diagonalize the isolated KPO and keep its ``spec.keep_dim`` highest levels.

    The Hamiltonian conserves photon-number parity, so each parity sector is
    diagonalized separately; the exactly degenerate top pair then comes out
    as the even and odd cat states instead of an arbitrary mixture.

    Returns
    -------
    transform : (fock_cutoff, keep_dim) isometry, columns ordered by
        descending energy (even before odd on ties)
    a_proj : annihilation operator projected into the retained subspace
    energies : retained eigenvalues (rad/s)
    """
    if spec.kind != "kpo-eigen":
        raise BasisError("spec.kind must be 'kpo-eigen'")
    if K <= 0 or p < 0:
        raise BasisError("need K > 0 and p >= 0")
    n = spec.fock_cutoff
    H = kpo_hamiltonian(K, p, n).real
    energies, columns, parity = [], [], []
    for par in (0, 1):
        sel = np.arange(par, n, 2)
        w, v = np.linalg.eigh(H[np.ix_(sel, sel)])
        full = np.zeros((n, len(sel)))
        full[sel, :] = v
        energies.append(w)
        columns.append(full)
        parity.append(np.full(len(sel), par))
    energies = np.concatenate(energies)
    columns = np.concatenate(columns, axis=1)
    parity = np.concatenate(parity)
    # descending energy, even parity first within (numerical) degeneracy
    scale = max(abs(K), abs(p)) * 1e-9
    order = sorted(range(len(energies)), key=lambda i: (-round(energies[i] / scale), parity[i]))
    order = np.array(order[: spec.keep_dim])
    T = _fix_phase(columns[:, order].astype(complex))

    alpha = math.sqrt(p / K)
    top = T[:, :2]
    for s in (1, -1):
        psi = coherent_state(s * alpha, n)
        captured = float(np.linalg.norm(top.conj().T @ psi) ** 2)
        if captured < 1 - 1e-6:
            raise BasisError(
                f"top KPO pair captures only {captured:.8f} of |{s * alpha:+.3f}>"
            )
    a = fock_annihilation(n)
    return T, T.conj().T @ a @ T, energies[order]


@dataclass
class CompositeBasis:
    """Tensor-product basis over the four modes.

    ``transforms[m]`` maps retained-basis amplitudes of mode ``m`` to its Fock
    amplitudes; ``kpo_energies`` holds the retained isolated-KPO eigenvalues.
    """

    modes: tuple[ModeSpec, ...]
    transforms: tuple[np.ndarray, ...]
    kpo_energies: np.ndarray | None = None
    K: float | None = None
    p: float | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if len(self.modes) != len(self.transforms):
            raise BasisError("one transform per mode is required")
        for spec, T in zip(self.modes, self.transforms):
            if T.shape != (spec.fock_cutoff, spec.keep_dim):
                raise BasisError(f"transform shape {T.shape} does not match {spec}")

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(m.keep_dim for m in self.modes)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def annihilation(self, slot: int) -> np.ndarray:
        """Mode annihilation operator expressed in the retained basis of ``slot``."""
        key = ("a", slot)
        if key not in self._cache:
            T = self.transforms[slot]
            a = fock_annihilation(self.modes[slot].fock_cutoff)
            self._cache[key] = T.conj().T @ a @ T
        return self._cache[key]

    def to_retained(self, slot: int, fock_vec: np.ndarray) -> np.ndarray:
        return self.transforms[slot].conj().T @ fock_vec

    def product_state(self, fock_vectors: Sequence[np.ndarray]) -> np.ndarray:
        """Kronecker product of per-mode Fock-basis vectors, in the retained basis."""
        if len(fock_vectors) != len(self.modes):
            raise BasisError("need one vector per mode")
        out = np.ones(1, dtype=complex)
        for slot, v in enumerate(fock_vectors):
            out = np.kron(out, self.to_retained(slot, np.asarray(v, dtype=complex)))
        return out

    def vacuum(self, slot: int) -> np.ndarray:
        v = np.zeros(self.modes[slot].fock_cutoff, dtype=complex)
        v[0] = 1.0
        return v

    def embed(self, op, slot: int) -> sp.csr_matrix:
        return embed(op, slot, self)


def make_basis(
    K: float,
    p: float,
    kpo_cutoff: int = 30,
    kpo_keep: int = 6,
    coupler_cutoff: int = 10,
) -> CompositeBasis:
    """Standard basis: two eigen-truncated KPOs followed by two Fock couplers."""
    kspec = ModeSpec("kpo-eigen", kpo_cutoff, kpo_keep)
    cspec = ModeSpec("fock", coupler_cutoff)
    T, _, energies = kpo_eigen_truncation(K, p, kspec)
    eye_c = np.eye(coupler_cutoff, dtype=complex)
    return CompositeBasis(
        modes=(kspec, kspec, cspec, cspec),
        transforms=(T, T, eye_c, eye_c),
        kpo_energies=energies,
        K=K,
        p=p,
    )


def embed(op, slot: int, basis: CompositeBasis) -> sp.csr_matrix:
    """identity x ... x op x ... x identity in the fixed mode order."""
    dims = basis.dims
    if not 0 <= slot < len(dims):
        raise BasisError(f"slot {slot} out of range")
    op = sp.csr_matrix(op)
    if op.shape != (dims[slot], dims[slot]):
        raise BasisError(f"operator shape {op.shape} does not match mode dim {dims[slot]}")
    left = int(np.prod(dims[:slot]))
    right = int(np.prod(dims[slot + 1 :]))
    out = sp.kron(sp.identity(left, format="csr"), op, format="csr")
    return sp.kron(out, sp.identity(right, format="csr"), format="csr").astype(complex)


def partial_trace(rho: np.ndarray, keep: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on the modes listed in ``keep`` (in mode order)."""
    keep = sorted(set(keep))
    if not keep:
        raise BasisError("keep must name at least one mode")
    if any(not 0 <= k < len(dims) for k in keep):
        raise BasisError(f"invalid mode subset {keep}")
    n = len(dims)
    t = np.asarray(rho).reshape(tuple(dims) * 2)
    row = list(range(n))
    col = [n + m if m in keep else m for m in range(n)]
    red = np.einsum(t, row + col, keep + [n + m for m in keep])
    d = int(np.prod([dims[k] for k in keep]))
    return red.reshape(d, d)
