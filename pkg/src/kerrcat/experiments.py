"""Numerical experiments: idle-state residual coupling, R_zz gate runs and alpha_max sweeps.

Runs without loss evolve a state vector; runs with loss evolve the density
matrix in a smaller truncation (see ``Truncation``).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import analysis
from .circuit import example_design, derive_model2
from .dynamics import LindbladProblem, TimeDependentOperator, evolve
from .hilbert import C1, C2, KPO1, KPO2, make_basis
from .model import (
    SystemParams,
    SystemParamsII,
    detuning_condition_model2,
    hamiltonian_terms,
)
from .schedule import DetuningSchedule, delta1_of_t, find_alpha_max, theta_of_schedule

TARGET_THETA = -math.pi / 2

# Optimal alpha_max per gate time (ns) from the reference optimization.
REFERENCE_ALPHA_MAX = {
    8: 0.404, 10: 0.460, 12: 0.496, 14: 0.524, 15: 0.528, 16: 0.524, 17: 0.510,
    18: 0.486, 19: 0.468, 20: 0.440, 21: 0.412, 22: 0.408, 24: 0.390, 26: 0.370,
    28: 0.336, 30: 0.314, 32: 0.318, 34: 0.296, 36: 0.280, 38: 0.264, 40: 0.252,
    42: 0.244, 44: 0.232, 46: 0.226, 48: 0.230, 50: 0.212, 52: 0.220, 54: 0.202,
    56: 0.198, 58: 0.192, 60: 0.188,
}


@dataclass(frozen=True)
class Truncation:
    kpo_cutoff: int = 30
    kpo_keep: int = 6
    coupler_cutoff: int = 10

    def basis(self, K, p):
        return make_basis(K, p, self.kpo_cutoff, self.kpo_keep, self.coupler_cutoff)

    def grown(self, extra: int = 2) -> "Truncation":
        return replace(self, kpo_keep=self.kpo_keep + extra, coupler_cutoff=self.coupler_cutoff + extra)


# Gate runs need coupler levels up to about Delta_1/chi at the schedule peak;
# the idle state keeps the couplers within a few percent of vacuum.
GATE_TRUNCATION = Truncation(30, 6, 10)
IDLE_TRUNCATION = Truncation(30, 6, 4)
DM_GATE_TRUNCATION = Truncation(30, 4, 4)
DM_IDLE_TRUNCATION = Truncation(30, 4, 3)
OPTIMIZER_TRUNCATION = Truncation(30, 4, 8)


@dataclass(frozen=True)
class Tolerances:
    rtol: float = 1e-9
    atol: float = 1e-12

    def halved(self) -> "Tolerances":
        return Tolerances(self.rtol / 2, self.atol / 2)


def _collapse_ops(ht, basis, kappa):
    if kappa <= 0:
        return []
    return [(basis.embed(basis.annihilation(slot), slot), kappa) for slot in (KPO1, KPO2, C1, C2)]


def _infidelity_observable(psi_ref):
    return lambda t, state: analysis.state_infidelity(state, psi_ref)


def secular_growth(t: np.ndarray, infidelity: np.ndarray) -> dict:
    """Linear-fit drift of an oscillating curve relative to its oscillation amplitude."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(infidelity, dtype=float)
    slope, intercept = np.polyfit(t, y, 1)
    amplitude = float(y.max() - y.min())
    drift = abs(slope) * float(t[-1] - t[0])
    ratio = drift / amplitude if amplitude > 0 else math.inf
    return {"slope": float(slope), "drift": drift, "amplitude": amplitude, "ratio": ratio}


def run_off_residual(
    params: SystemParams | SystemParamsII,
    t_samples,
    truncation: Truncation | None = None,
    delta1: float | None = None,
    tol: Tolerances = Tolerances(),
    **evolve_kwargs,
) -> dict:
    """Infidelity of the idle even-cat product against itself while the coupling is off.

    ``delta1`` defaults to -Delta_2 for the main model and to the residual-ZZ
    cancelling value for model II parameters.
    """
    if isinstance(params, SystemParamsII):
        if delta1 is None:
            delta1 = detuning_condition_model2(params)
        sp_params = params.as_system_params()
    else:
        sp_params = params
        if delta1 is None:
            delta1 = -params.delta2
    kappa = sp_params.kappa
    if truncation is None:
        truncation = DM_IDLE_TRUNCATION if kappa > 0 else IDLE_TRUNCATION
    basis = truncation.basis(sp_params.K, sp_params.p)
    ht = hamiltonian_terms(sp_params, basis)
    H = TimeDependentOperator(ht.at(delta1))
    psi0 = analysis.initial_state_vector(sp_params.alpha, basis)
    state0 = psi0 if kappa <= 0 else np.outer(psi0, psi0.conj())
    t_samples = np.asarray(t_samples, dtype=float)
    problem = LindbladProblem(
        hamiltonian=H,
        rho0=state0,
        t_span=(0.0, float(t_samples[-1])),
        sample_times=t_samples,
        collapse_ops=_collapse_ops(ht, basis, kappa),
        observables={"infidelity": _infidelity_observable(psi0)},
        keep_states=False,
    )
    ts = evolve(problem, rtol=tol.rtol, atol=tol.atol, **evolve_kwargs)
    gamma = analysis.dephasing_rate(kappa, sp_params.alpha)
    return {
        "t": ts.times,
        "infidelity": ts.scalars["infidelity"],
        "analytic_infidelity": analysis.analytic_off_infidelity(ts.times, sp_params.alpha, gamma),
        "delta1": delta1,
        "stats": ts.stats,
        "dim": basis.total_dim,
        "truncation": truncation,
    }


def model2_params(kappa: float = 0.0) -> SystemParamsII:
    """Effective model II parameters of the example circuit design."""
    return derive_model2(example_design()).to_system_params(kappa=kappa)


def gate_run(
    params: SystemParams,
    t_f: float,
    alpha_max: float,
    alpha_min: float = 0.04,
    kappa: float | None = None,
    truncation: Truncation | None = None,
    tol: Tolerances = Tolerances(),
    target_theta: float = TARGET_THETA,
    n_samples: int = 0,
) -> dict:
    """Simulate one R_zz gate and score it against the ideal target.

    ``kappa`` overrides params.kappa. ``n_samples`` > 0 also returns the
    infidelity against the target at that many evenly spaced times.
    """
    kappa = params.kappa if kappa is None else kappa
    if truncation is None:
        truncation = DM_GATE_TRUNCATION if kappa > 0 else GATE_TRUNCATION
    g = params.g_scalar
    sched = DetuningSchedule(alpha_min, alpha_max, t_f, g, params.alpha)
    if not math.isclose(params.delta2, sched.delta2, rel_tol=1e-12):
        params = replace(params, delta2=sched.delta2)
    basis = truncation.basis(params.K, params.p)
    ht = hamiltonian_terms(params, basis)
    H = TimeDependentOperator(ht.static, [(ht.n_c1, lambda t: delta1_of_t(t, sched))])
    psi0 = analysis.initial_state_vector(params.alpha, basis)
    target = analysis.ideal_rzz_state(psi0, analysis.GateSpec(target_theta, t_f), params.alpha, basis)
    state0 = psi0 if kappa <= 0 else np.outer(psi0, psi0.conj())
    samples = np.linspace(0, t_f, n_samples + 1)[1:] if n_samples else np.array([t_f])
    problem = LindbladProblem(
        hamiltonian=H,
        rho0=state0,
        t_span=(0.0, t_f),
        sample_times=samples,
        collapse_ops=_collapse_ops(ht, basis, kappa),
        observables={"infidelity": _infidelity_observable(target)},
        keep_states=False,
    )
    ts = evolve(problem, rtol=tol.rtol, atol=tol.atol)
    gamma = analysis.dephasing_rate(kappa, params.alpha)
    return {
        "infidelity": float(ts.scalars["infidelity"][-1]),
        "t": ts.times,
        "infidelity_curve": ts.scalars["infidelity"],
        "theta": theta_of_schedule(sched),
        "analytic_dephasing": analysis.analytic_gate_dephasing_infidelity(
            t_f, target_theta, params.alpha, gamma
        ),
        "stats": ts.stats,
        "dim": basis.total_dim,
        "truncation": truncation,
    }


def run_rzz_gate(
    params: SystemParams,
    t_f: float,
    alpha_max: float,
    kappa_on: float,
    alpha_min: float = 0.04,
    truncation: Truncation | None = None,
    dm_truncation: Truncation | None = None,
    tol: Tolerances = Tolerances(),
) -> dict:
    """Gate infidelity without and with loss, plus the accumulated Theta."""
    off = gate_run(params, t_f, alpha_max, alpha_min, 0.0, truncation or GATE_TRUNCATION, tol)
    on = gate_run(params, t_f, alpha_max, alpha_min, kappa_on, dm_truncation or DM_GATE_TRUNCATION, tol)
    return {
        "t_f": t_f,
        "alpha_max": alpha_max,
        "infidelity_k0": off["infidelity"],
        "infidelity_kon": on["infidelity"],
        "theta": off["theta"],
        "analytic_dephasing": on["analytic_dephasing"],
        "stats_k0": off["stats"],
        "stats_kon": on["stats"],
    }


def _optimize_one(args):
    params, t_f, alpha_min, truncation, tol = args

    def infidelity(alpha_max):
        return gate_run(params, t_f, alpha_max, alpha_min, 0.0, truncation, tol)["infidelity"]

    best, value, scan = find_alpha_max(
        TARGET_THETA, t_f, params.g_scalar, params.alpha, alpha_min, mode="refined", infidelity=infidelity
    )
    return {"t_f": t_f, "alpha_max": best, "infidelity": value, "scan": scan}


def run_alpha_max_sweep(
    params: SystemParams,
    t_f_list,
    alpha_min: float = 0.04,
    truncation: Truncation = OPTIMIZER_TRUNCATION,
    tol: Tolerances = Tolerances(),
    max_workers: int = 1,
) -> list[dict]:
    """Refined alpha_max per gate time (loss off), with the reference value alongside."""
    jobs = [(params, float(t), alpha_min, truncation, tol) for t in t_f_list]
    if max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(_optimize_one, jobs))
    else:
        rows = [_optimize_one(j) for j in jobs]
    for row in rows:
        row["reference"] = REFERENCE_ALPHA_MAX.get(round(row["t_f"] * 1e9))
    return rows
