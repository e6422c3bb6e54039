"""Time integration of the Schrodinger and GKSL master equations.

The integrator is an adaptive 8(5,3) Dormand-Prince pair with a PI step
controller. Density matrices are re-Hermitized after every accepted step and
the run aborts if the trace drifts by more than ``trace_tolerance``.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

# Butcher tableau and error weights of DOP853; scipy ships them as data.
from scipy.integrate._ivp import dop853_coefficients as _dop

log = logging.getLogger(__name__)

_N = _dop.N_STAGES
_A = _dop.A[:_N, :_N]
_B = _dop.B
_C = _dop.C[:_N]
_E3 = _dop.E3
_E5 = _dop.E5
_ORDER = 8


class IntegrationError(RuntimeError):
    pass


class StepSizeUnderflow(IntegrationError):
    pass


class TraceDriftError(IntegrationError):
    pass


class TimeDependentOperator:
    """H(t) = static + sum_k coeff_k(t) * op_k with sparse operators."""

    def __init__(self, static, terms: Sequence[tuple[object, Callable[[float], float]]] = ()):
        self.static = sp.csr_matrix(static)
        self.terms = [(sp.csr_matrix(op), fn) for op, fn in terms]
        self.dim = self.static.shape[0]

    def at(self, t: float) -> sp.csr_matrix:
        out = self.static.copy()
        for op, fn in self.terms:
            out = out + fn(t) * op
        return out.tocsr()

    def apply(self, t: float, x: np.ndarray) -> np.ndarray:
        out = self.static @ x
        for op, fn in self.terms:
            c = fn(t)
            if c:
                out += c * (op @ x)
        return out

    def shifted(self, extra) -> "TimeDependentOperator":
        return TimeDependentOperator(self.static + sp.csr_matrix(extra), self.terms)

    @classmethod
    def constant(cls, op) -> "TimeDependentOperator":
        return cls(op)


@dataclass
class LindbladProblem:
    """Master-equation problem; a 1-D ``rho0`` is treated as a pure state (Schrodinger path)."""

    hamiltonian: TimeDependentOperator
    rho0: np.ndarray
    t_span: tuple[float, float]
    sample_times: Sequence[float]
    collapse_ops: Sequence[tuple[object, float]] = ()
    observables: dict[str, Callable[[float, np.ndarray], float]] = field(default_factory=dict)
    keep_states: bool = True

    def __post_init__(self):
        for _, rate in self.collapse_ops:
            if rate < 0:
                raise ValueError("collapse rates must be non-negative")
        ts = np.asarray(self.sample_times, dtype=float)
        if ts.size and (np.any(np.diff(ts) <= 0) or ts[0] < self.t_span[0] or ts[-1] > self.t_span[1]):
            raise ValueError("sample_times must be strictly increasing inside t_span")
        self.sample_times = ts
        if self.is_pure and any(rate > 0 for _, rate in self.collapse_ops):
            raise ValueError("a pure-state problem cannot carry dissipation")
        d = self.hamiltonian.dim
        expect = (d,) if self.is_pure else (d, d)
        if np.shape(self.rho0) != expect:
            raise ValueError(f"initial state shape {np.shape(self.rho0)} != {expect}")

    @property
    def is_pure(self) -> bool:
        return np.ndim(self.rho0) == 1


@dataclass
class TimeSeries:
    times: np.ndarray
    states: list
    scalars: dict[str, np.ndarray]
    stats: dict


class _Rhs:
    def __init__(self, problem: LindbladProblem):
        self.H = problem.hamiltonian
        self.pure = problem.is_pure
        self.jumps = [
            (sp.csr_matrix(L), rate) for L, rate in problem.collapse_ops if rate > 0
        ]
        if self.jumps:
            damp = sum(rate * (L.conj().T @ L) for L, rate in self.jumps)
            self.H_eff = self.H.shifted(-0.5j * damp)
            self.jumps_dag = [(L, L.conj().T.tocsr(), rate) for L, rate in self.jumps]
        else:
            self.H_eff = self.H
            self.jumps_dag = []
        self.calls = 0

    def __call__(self, t, y):
        self.calls += 1
        if self.pure:
            return -1j * self.H.apply(t, y)
        x = self.H_eff.apply(t, y)
        out = -1j * x
        out += out.conj().T
        for L, _, rate in self.jumps_dag:
            ly = L @ y
            out += rate * (L @ ly.conj().T)
        return out


def lindblad_rhs(rho: np.ndarray, t: float, problem: LindbladProblem) -> np.ndarray:
    """d rho/dt = -i[H(t), rho] + sum_k rate_k (L rho L^dag - {L^dag L, rho}/2) for Hermitian rho."""
    return _Rhs(
        LindbladProblem(problem.hamiltonian, rho, (0.0, 0.0), [], problem.collapse_ops)
    )(t, np.asarray(rho, dtype=complex))


def _error_norm(K, h, y, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    err5 = np.tensordot(_E5, K, axes=1) / scale
    err3 = np.tensordot(_E3, K, axes=1) / scale
    e5 = float(np.vdot(err5, err5).real)
    e3 = float(np.vdot(err3, err3).real)
    if e5 == 0 and e3 == 0:
        return 0.0
    return abs(h) * e5 / math.sqrt((e5 + 0.01 * e3) * y.size)


def _save_checkpoint(path, t, y, h, times, states, scalars, stats):
    np.savez(
        path,
        t=t,
        y=y,
        h=h,
        times=np.asarray(times),
        states=np.asarray(states) if states else np.zeros(0),
        scalar_names=np.array(list(scalars)),
        scalar_values=np.array([scalars[k] for k in scalars]),
        stats=np.array([stats["steps"], stats["rejected"], stats["max_trace_error"]]),
    )


def evolve(
    problem: LindbladProblem,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    first_step: float | None = None,
    max_first_step: float = 1e-11,
    max_step: float = np.inf,
    trace_tolerance: float = 1e-7,
    hermitize: bool = True,
    checkpoint_path: str | None = None,
    checkpoint_every: int = 0,
    resume_from: str | None = None,
) -> TimeSeries:
    """Integrate ``problem`` and record states/observables at its sample times.

    For density matrices the trace is checked after every accepted step;
    for pure states the squared norm is. ``checkpoint_every`` > 0 writes an
    ``.npz`` snapshot to ``checkpoint_path`` every that many accepted steps, and
    ``resume_from`` continues from such a snapshot.
    """
    rhs = _Rhs(problem)
    t0, t_end = map(float, problem.t_span)
    y = np.array(problem.rho0, dtype=complex)
    samples = list(problem.sample_times)
    times, states = [], []
    scalars = {name: [] for name in problem.observables}
    stats = {"steps": 0, "rejected": 0, "max_trace_error": 0.0}
    span = t_end - t0
    h = first_step if first_step is not None else span / 1e4
    h = min(h, max_first_step, max_step) if span > 0 else 0.0

    if resume_from is not None:
        ck = np.load(resume_from, allow_pickle=False)
        t0, y, h = float(ck["t"]), ck["y"].astype(complex), float(ck["h"])
        times = list(ck["times"])
        states = list(ck["states"]) if ck["states"].size else []
        for name, vals in zip(ck["scalar_names"], ck["scalar_values"]):
            scalars[str(name)] = list(vals)
        steps, rejected, mte = ck["stats"]
        stats.update(steps=int(steps), rejected=int(rejected), max_trace_error=float(mte))
        samples = [s for s in samples if s > t0 * (1 + 1e-15)]

    def trace_of(v):
        return float(np.vdot(v, v).real) if problem.is_pure else float(np.trace(v).real)

    def record(t, v):
        times.append(t)
        if problem.keep_states:
            states.append(v.copy())
        for name, fn in problem.observables.items():
            scalars[name].append(fn(t, v))

    ref_trace = trace_of(y)
    t = t0
    while samples and samples[0] <= t + 1e-15 * max(abs(t), 1e-30):
        record(samples.pop(0), y)

    started = time.perf_counter()
    f = rhs(t, y)
    K = np.empty((_N + 1,) + y.shape, dtype=complex)
    err_prev = 1e-4
    rejected_last = False
    while samples and t < t_end:
        target = samples[0]
        h = min(h, max_step)
        last = t + h >= target
        step = target - t if last else h
        # Runge-Kutta stages
        K[0] = f
        for s in range(1, _N):
            dy = np.tensordot(_A[s, :s], K[:s], axes=1)
            K[s] = rhs(t + _C[s] * step, y + step * dy)
        y_new = y + step * np.tensordot(_B, K[:_N], axes=1)
        f_new = rhs(t + step, y_new)
        K[-1] = f_new
        err = _error_norm(K, step, y, y_new, rtol, atol)

        if err <= 1.0:
            t = target if last else t + step
            if hermitize and not problem.is_pure:
                y_new = 0.5 * (y_new + y_new.conj().T)
            y, f = y_new, f_new
            stats["steps"] += 1
            drift = abs(trace_of(y) - ref_trace)
            stats["max_trace_error"] = max(stats["max_trace_error"], drift)
            if drift > trace_tolerance:
                raise TraceDriftError(
                    f"trace drift {drift:.3e} at t={t:.6e} s after {stats['steps']} steps "
                    f"(h={step:.3e} s, rtol={rtol}, atol={atol})"
                )
            if last:
                record(samples.pop(0), y)
            err = max(err, 1e-10)
            factor = 0.9 * err ** (-0.7 / _ORDER) * err_prev ** (0.4 / _ORDER)
            factor = min(5.0, max(0.2, factor))
            if rejected_last:
                factor = min(1.0, factor)
            # a step clipped to hit a sample does not say much about the next one
            if not last or step >= h:
                h = step * factor
            err_prev = err
            rejected_last = False
            if checkpoint_every and checkpoint_path and stats["steps"] % checkpoint_every == 0:
                _save_checkpoint(checkpoint_path, t, y, h, times, states, scalars, stats)
        else:
            stats["rejected"] += 1
            h = step * max(0.2, 0.9 * err ** (-1.0 / _ORDER))
            rejected_last = True
        if h < 1e-15 * max(abs(t), span, 1e-30):
            raise StepSizeUnderflow(f"step size underflow at t={t:.6e} s (h={h:.3e} s)")

    stats["rhs_calls"] = rhs.calls
    stats["wall_seconds"] = time.perf_counter() - started
    log.debug("evolve finished: %s", stats)
    return TimeSeries(
        times=np.asarray(times),
        states=states,
        scalars={k: np.asarray(v) for k, v in scalars.items()},
        stats=stats,
    )
