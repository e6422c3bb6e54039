"""Coupler-1 detuning schedule and the rotation angle it accumulates.

The schedule is written through the coupler displacement lambda = 2 g alpha / Delta_1.
lambda rises from ``alpha_min`` to ``alpha_max`` and back along a smooth step
in an auxiliary variable u, and physical time is t = F(u) = int_0^u lambda(x) dx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar

TWO_PI = 2 * math.pi


class ScheduleError(ValueError):
    pass


class InfeasibleScheduleError(ScheduleError):
    pass


@dataclass(frozen=True)
class DetuningSchedule:
    alpha_min: float
    alpha_max: float
    t_f: float
    g: float
    alpha: float

    def __post_init__(self):
        if not 0 < self.alpha_min <= self.alpha_max < 1:
            raise ScheduleError(
                f"need 0 < alpha_min <= alpha_max < 1, got {self.alpha_min}, {self.alpha_max}"
            )
        if self.t_f <= 0:
            raise ScheduleError("t_f must be positive")

    @property
    def T(self) -> float:
        return self.t_f / (self.alpha_max + self.alpha_min)

    @property
    def delta2(self) -> float:
        """Fixed coupler-2 detuning, chosen so Delta_1(0) = -Delta_2."""
        return -2 * self.g * self.alpha / self.alpha_min

    @property
    def is_flat(self) -> bool:
        return self.alpha_max == self.alpha_min


def _smooth_step(x, T):
    return x / T - np.sin(TWO_PI * x / T) / TWO_PI


def lambda_profile(x, s: DetuningSchedule):
    """Coupler displacement as a function of the auxiliary variable x in [0, 2T]."""
    T = s.T
    xa = np.asarray(x, dtype=float)
    if np.any(xa < -1e-12 * T) or np.any(xa > 2 * T * (1 + 1e-12)):
        raise ScheduleError("x outside [0, 2T]")
    xa = np.clip(xa, 0.0, 2 * T)
    span = s.alpha_max - s.alpha_min
    rise = s.alpha_min + span * _smooth_step(xa, T)
    fall = 2 * s.alpha_max - s.alpha_min - span * _smooth_step(xa, T)
    out = np.where(xa <= T, rise, fall)
    return float(out) if np.ndim(out) == 0 else out


def integrated_lambda(u, s: DetuningSchedule):
    """F(u) = int_0^u lambda(x) dx in closed form; F(2T) = t_f."""
    T = s.T
    ua = np.clip(np.asarray(u, dtype=float), 0.0, 2 * T)
    span = s.alpha_max - s.alpha_min
    osc = T / TWO_PI**2 * (1 - np.cos(TWO_PI * ua / T))
    first = s.alpha_min * ua + span * (ua**2 / (2 * T) - osc)
    second = (2 * s.alpha_max - s.alpha_min) * ua - span * (ua**2 / (2 * T) + T - osc)
    out = np.where(ua <= T, first, second)
    return float(out) if np.ndim(out) == 0 else out


def _lambda_scalar(x, s):
    T, span = s.T, s.alpha_max - s.alpha_min
    step = x / T - math.sin(TWO_PI * x / T) / TWO_PI
    if x <= T:
        return s.alpha_min + span * step
    return 2 * s.alpha_max - s.alpha_min - span * step


def _integrated_scalar(u, s):
    T, span = s.T, s.alpha_max - s.alpha_min
    osc = T / TWO_PI**2 * (1 - math.cos(TWO_PI * u / T))
    if u <= T:
        return s.alpha_min * u + span * (u * u / (2 * T) - osc)
    return (2 * s.alpha_max - s.alpha_min) * u - span * (u * u / (2 * T) + T - osc)


def solve_u(t: float, s: DetuningSchedule) -> float:
    """Invert t = F(u): bracketed root to 1e-13 T, then one Newton polish."""
    if t < -1e-12 * s.t_f or t > s.t_f * (1 + 1e-12):
        raise ScheduleError(f"t={t} outside [0, t_f]")
    T = s.T
    if s.is_flat:
        return min(max(t, 0.0), s.t_f) / s.alpha_min
    t_end = _integrated_scalar(2 * T, s)
    t = min(max(float(t), 0.0), t_end)
    if t == 0.0:
        return 0.0
    if t == t_end:
        return 2 * T
    u = brentq(lambda v: _integrated_scalar(v, s) - t, 0.0, 2 * T, xtol=1e-13 * T, rtol=1e-15)
    u -= (_integrated_scalar(u, s) - t) / _lambda_scalar(u, s)
    return min(max(u, 0.0), 2 * T)


def lambda_of_t(t: float, s: DetuningSchedule) -> float:
    return _lambda_scalar(solve_u(t, s), s)


def delta1_of_t(t: float, s: DetuningSchedule) -> float:
    """Delta_1(t) = 2 g alpha / lambda[u(t)] in rad/s."""
    return 2 * s.g * s.alpha / lambda_of_t(t, s)


def theta_of_schedule(s: DetuningSchedule, form: str = "lambda") -> float:
    """Rotation angle Theta = -4 g^2 alpha^2 int_0^tf [1/Delta_1 + 1/Delta_2] dt.

    ``form="lambda"`` substitutes dt = lambda(u) du so the integrand is explicit;
    ``form="direct"`` integrates over physical time through the implicit u(t).
    Both reach a relative quadrature error below 1e-9.
    """
    if s.is_flat:
        return 0.0
    scale = -4 * s.g**2 * s.alpha**2
    if form == "lambda":
        # 1/Delta_1 dt = lambda/(2 g alpha) * lambda du
        def integrand(u):
            lam = lambda_profile(u, s)
            return lam * (lam - s.alpha_min) / (2 * s.g * s.alpha)

        total = 0.0
        for lo, hi in ((0.0, s.T), (s.T, 2 * s.T)):
            val, _ = quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)
            total += val
        return scale * total
    if form == "direct":
        t_mid = integrated_lambda(s.T, s)

        def integrand(t):
            return 1 / delta1_of_t(t, s) + 1 / s.delta2

        total = 0.0
        for lo, hi in ((0.0, t_mid), (t_mid, s.t_f)):
            val, _ = quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-11, limit=200)
            total += val
        return scale * total
    raise ScheduleError(f"unknown form {form!r}")


def _coarse_root(target_theta, t_f, g, alpha, alpha_min, upper=0.999):
    def resid(amax):
        return theta_of_schedule(DetuningSchedule(alpha_min, amax, t_f, g, alpha)) - target_theta

    lo, hi = alpha_min, upper
    f_lo, f_hi = resid(lo), resid(hi)
    if f_lo * f_hi > 0:
        raise InfeasibleScheduleError(
            f"Theta={target_theta:.4f} rad not reachable at t_f={t_f:.3e} s with alpha_max < {upper}"
        )
    return brentq(resid, lo, hi, xtol=1e-12)


def find_alpha_max(
    target_theta: float,
    t_f: float,
    g: float,
    alpha: float,
    alpha_min: float,
    mode: str = "coarse",
    infidelity: Callable[[float], float] | None = None,
    coarse_step: float = 0.01,
    grid_step: float = 0.002,
    fine_window: float = 0.02,
):
    """Choose alpha_max for a gate of duration ``t_f``.

    Coarse mode solves theta_of_schedule = target and raises
    InfeasibleScheduleError if no alpha_max < 1 reaches it.

    Refined mode minimizes the simulated ``infidelity(alpha_max)``. Nonadiabatic
    corrections pull the optimum below the Theta root (far below it for short
    gates), so the search first scans ``coarse_step`` from half the root up to
    just past it (or over [0.1, 0.9] when the root does not exist), then scans
    ``grid_step`` within ``fine_window`` of the best coarse point and finishes
    with a bounded golden-section polish. Returns ``(alpha_max, infidelity, scan)``
    with ``scan`` the sorted list of evaluated (alpha_max, infidelity) pairs.
    """
    if mode == "coarse":
        return _coarse_root(target_theta, t_f, g, alpha, alpha_min)
    if mode != "refined":
        raise ScheduleError(f"unknown mode {mode!r}")
    if infidelity is None:
        raise ScheduleError("refined mode needs an infidelity callable")
    try:
        root = _coarse_root(target_theta, t_f, g, alpha, alpha_min)
        lo, hi = max(alpha_min + coarse_step, 0.5 * root), min(0.95, root + 2 * coarse_step)
    except InfeasibleScheduleError:
        lo, hi = 0.1, 0.9

    cache: dict[float, float] = {}

    def f(x):
        key = round(float(x), 10)
        if key not in cache:
            cache[key] = float(infidelity(key))
        return cache[key]

    def scan_grid(a, b, step):
        grid = np.arange(a, b + 0.5 * step, step)
        values = [f(x) for x in grid]
        return grid, int(np.argmin(values))

    grid, k = scan_grid(lo, hi, coarse_step)
    centre = grid[k]
    grid, k = scan_grid(
        max(alpha_min + grid_step, centre - fine_window), min(0.999, centre + fine_window), grid_step
    )
    best_x, best_f = float(grid[k]), f(grid[k])
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    if b > a:
        res = minimize_scalar(f, bounds=(a, b), method="bounded", options={"xatol": 2e-4})
        if res.fun < best_f:
            best_x, best_f = float(res.x), float(res.fun)
    return best_x, best_f, sorted(cache.items())
