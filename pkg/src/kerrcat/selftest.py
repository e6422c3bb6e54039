"""Fast invariant checks runnable without pytest (``kerrcat selftest``)."""

from __future__ import annotations

import math

import numpy as np

from . import analysis
from .circuit import example_design, derive_model2, inverse_capacitance_check
from .dynamics import LindbladProblem, TimeDependentOperator, lindblad_rhs
from .hilbert import cat_states, coherent_state, fock_annihilation, make_basis
from .model import build_h_main, default_params
from .schedule import DetuningSchedule, integrated_lambda, solve_u, theta_of_schedule


def _check(name, ok, detail):
    return (name, bool(ok), detail)


def run_selftest() -> list[tuple[str, bool, str]]:
    out = []
    a = fock_annihilation(6)
    n = a.conj().T @ a
    err = np.abs(np.diag(n) - np.arange(6)).max()
    out.append(_check("number operator", err < 1e-14, f"max error {err:.1e}"))

    psi = coherent_state(2.0, 30)
    norm_err = abs(np.vdot(psi, psi).real - 1)
    out.append(_check("coherent state norm", norm_err < 1e-12, f"{norm_err:.1e}"))

    plus, minus = cat_states(2.0, 30)
    ov = abs(np.vdot(plus, minus))
    out.append(_check("cat orthogonality", ov < 1e-12, f"<C+|C-> = {ov:.1e}"))

    params = default_params()
    basis = make_basis(params.K, params.p, 30, 4, 3)
    H = build_h_main(params, -params.delta2, basis)
    herm = abs(H - H.conj().T).max() / abs(H).max()
    out.append(_check("Hamiltonian Hermitian", herm < 1e-12, f"relative {herm:.1e}"))

    rng = np.random.default_rng(1)
    d = basis.total_dim
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = m @ m.conj().T
    rho /= np.trace(rho).real
    L = basis.embed(basis.annihilation(2), 2)
    prob = LindbladProblem(TimeDependentOperator(H), rho, (0.0, 0.0), [], [(L, 1e6)])
    drho = lindblad_rhs(rho, 0.0, prob)
    tr = abs(np.trace(drho)) / np.abs(drho).max()
    out.append(_check("GKSL trace preservation", tr < 1e-13, f"relative {tr:.1e}"))

    alpha, gamma = 2.0, math.log(2)
    small = make_basis(params.K, params.p, 30, 2, 2)
    psi0 = analysis.initial_state_vector(alpha, small)
    rho_t = analysis.dephased_product_state(1.0, alpha, gamma, small)
    diff = abs(analysis.state_infidelity(rho_t, psi0) - analysis.analytic_off_infidelity(1.0, alpha, gamma))
    out.append(_check("idle dephasing closed form", diff < 1e-12, f"{diff:.1e}"))

    s = DetuningSchedule(0.04, 0.524, 16e-9, params.g_scalar, params.alpha)
    rt = max(abs(integrated_lambda(solve_u(t, s), s) - t) for t in np.linspace(0, s.t_f, 17))
    out.append(_check("schedule inversion", rt < 1e-10 * s.t_f, f"{rt:.1e} s"))
    theta = theta_of_schedule(s)
    out.append(_check("Theta near -pi/2", abs(theta / (-math.pi / 2) - 1) < 0.1, f"{theta:.4f} rad"))

    inv = inverse_capacitance_check(1.1e-12, 2e-15)
    out.append(_check("capacitance inverse", inv < 1e-10, f"{inv:.1e}"))
    dp = derive_model2(example_design())
    out.append(_check("circuit alpha", abs(dp.alpha - 1.99) < 0.005, f"{dp.alpha:.4f}"))
    return out
