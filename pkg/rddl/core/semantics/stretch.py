"""Time stretching: canonical stretch functions, stretched dynamics and synchronized runs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Mapping

import numpy as np

from ..algebra import exit_functions, lie_derivative, sync_vector_field
from ..errors import MismatchedEndpoints, MonotonicityViolated, NonMonotoneSamples
from ..logger import get_logger
from ..syntax.ast import Dynamics, RddFormula
from .compile import CompiledDynamics, CompiledTerm, state_vector
from .integrator import Trajectory, integrate, trajectory_names

log = get_logger(__name__)

__all__ = [
    "TimeStretch",
    "StretchResidual",
    "SynchronizedRun",
    "canonical_time_stretch",
    "check_stretched_solution",
    "simulate_synchronized",
]

START_MATCH = 1e-9


@dataclass(frozen=True)
class TimeStretch:
    """Grid samples ``k(s_i)`` of a time stretch function."""

    s: np.ndarray
    k: np.ndarray

    def __call__(self, s: float) -> float:
        return float(np.interp(s, self.s, self.k))

    @property
    def strictly_increasing(self) -> bool:
        return bool(np.all(np.diff(self.s) > 0) and np.all(np.diff(self.k) > 0))

    def rates(self) -> np.ndarray:
        """Finite-difference derivative on each grid interval."""
        return np.diff(self.k) / np.diff(self.s)

    @classmethod
    def identity(cls, t: float, grid: int) -> "TimeStretch":
        s = np.linspace(0.0, t, grid + 1)
        return cls(s, s.copy())


@dataclass
class StretchResidual:
    max_residual: float
    per_variable: Dict[str, float]


@dataclass
class SynchronizedRun:
    trajectory: Trajectory
    gap: np.ndarray

    @property
    def max_gap(self) -> float:
        return float(np.max(np.abs(self.gap))) if self.gap.size else 0.0


def _check_monotone(trajectory: Trajectory, lie: CompiledTerm, side: str) -> int:
    values = lie(trajectory.states)
    interior = values[1:] if values.size > 1 else values
    sign = int(np.sign(interior[0])) if interior.size else 0
    if sign == 0:
        raise MonotonicityViolated(float(trajectory.times[min(1, len(trajectory) - 1)]), side)
    bad = np.nonzero(np.sign(interior) != sign)[0]
    if bad.size:
        raise MonotonicityViolated(float(trajectory.times[bad[0] + 1]), side)
    return sign


def canonical_time_stretch(
    a: RddFormula,
    x0: Mapping[str, float],
    x0s: Mapping[str, float],
    t: float,
    ts: float,
    grid: int = 20,
    step: float = 1e-4,
    tolerance: float = 1e-6,
) -> TimeStretch:
    """Sample ``k = (g# o psi#)^-1 o (g o psi)`` on ``grid`` intervals of ``[0, t]``.

    The exit terms may have a vanishing derivative at the initial instant only.
    """
    g, g_sharp = exit_functions(a)
    left = integrate(a.left, x0, step, t)
    right = integrate(a.right, x0s, step, ts)
    g_left = CompiledTerm(g, left.names)(left.states)
    g_right = CompiledTerm(g_sharp, right.names)(right.states)
    if abs(g_left[0] - g_right[0]) > START_MATCH:
        raise MismatchedEndpoints(f"start values {g_left[0]:.12g} and {g_right[0]:.12g}")
    if abs(g_left[-1] - g_right[-1]) > tolerance * (1 + abs(g_left[-1])):
        raise MismatchedEndpoints(f"end values {g_left[-1]:.12g} and {g_right[-1]:.12g}")
    sign = _check_monotone(left, CompiledTerm(lie_derivative(a.left, g), left.names), "left")
    sign_sharp = _check_monotone(right, CompiledTerm(lie_derivative(a.right, g_sharp), right.names), "right")
    if sign != sign_sharp:
        raise MonotonicityViolated(0.0, "right")

    s = np.linspace(0.0, t, grid + 1)
    levels = np.interp(s, left.times, g_left)
    if sign > 0:
        k = np.interp(levels, g_right, right.times)
    else:
        k = np.interp(-levels, -g_right, right.times)
    k[0], k[-1] = 0.0, ts
    log.debug("Canonical stretch on %d intervals, k(t)=%g", grid, ts)
    return TimeStretch(s, k)


def _advance(compiled: CompiledDynamics, row: np.ndarray, span: float, step: float, scale: float = 1.0) -> np.ndarray:
    if span <= 0:
        return row
    m = max(1, int(math.ceil(span / step - 1e-9)))
    h = span / m
    for _ in range(m):
        row = compiled.rk4_step(row, h, scale)[0][0]
    return row


def check_stretched_solution(
    d_sharp: Dynamics,
    k: TimeStretch,
    x0s: Mapping[str, float],
    step: float = 1e-4,
) -> StretchResidual:
    """Integrate ``x#' = f#(x#) * k'(s)`` and compare with ``psi#(k(s))`` on the grid."""
    if not k.strictly_increasing:
        raise NonMonotoneSamples("k must be strictly increasing on its grid")
    names = trajectory_names(d_sharp, x0s)
    compiled = CompiledDynamics(d_sharp, names)
    stretched = original = state_vector(x0s, names)
    worst = np.zeros(len(names))
    for i, rate in enumerate(k.rates()):
        stretched = _advance(compiled, stretched, k.s[i + 1] - k.s[i], step, float(rate))
        original = _advance(compiled, original, k.k[i + 1] - k.k[i], step)
        worst = np.maximum(worst, np.abs(stretched - original))
    per_variable = {name: float(value) for name, value in zip(names, worst)}
    return StretchResidual(float(worst.max()) if worst.size else 0.0, per_variable)


def simulate_synchronized(
    a: RddFormula,
    x0: Mapping[str, float],
    x0s: Mapping[str, float],
    step: float = 1e-4,
    horizon: float = 10.0,
) -> SynchronizedRun:
    """Integrate the synchronized dynamics and report ``g - g#`` along the run."""
    g, g_sharp = exit_functions(a)
    merged = {**x0, **x0s}
    synced = sync_vector_field(a)
    names = trajectory_names(synced, merged)
    start = state_vector(merged, names)
    g_fn, g_sharp_fn = CompiledTerm(g, names), CompiledTerm(g_sharp, names)
    if abs(g_fn(start)[0] - g_sharp_fn(start)[0]) > START_MATCH:
        raise MismatchedEndpoints("exit terms differ at the initial states")
    trajectory = integrate(synced, merged, step, horizon, names=names)
    gap = g_fn(trajectory.states) - g_sharp_fn(trajectory.states)
    return SynchronizedRun(trajectory, gap)

