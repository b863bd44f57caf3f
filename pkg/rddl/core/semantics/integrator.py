"""Fixed-step RK4 integration with domain-exit refinement and level-crossing search."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, TextIO, Tuple, Union

import numpy as np

from ..errors import DomainViolatedAtStart, PoleEncountered
from ..logger import get_logger
from ..syntax.ast import Dyn, Dynamics, Term, free_variables
from .compile import CompiledDynamics, CompiledTerm, as_rows, state_dict, state_vector

log = get_logger(__name__)

__all__ = [
    "Trajectory",
    "BatchTrajectory",
    "integrate",
    "integrate_batch",
    "solve_exit",
    "trajectory_names",
    "crossing_in_interval",
]

BISECTION_ITERATIONS = 80
EXIT_RESIDUAL = 1e-10

HORIZON = "horizon"
DOMAIN_VIOLATION = "domain_violation"
EXIT_EVENT = "exit_event"


@dataclass
class Trajectory:
    names: Tuple[str, ...]
    times: np.ndarray
    states: np.ndarray
    terminated_by: str = HORIZON
    exit_time: Optional[float] = None

    def __len__(self) -> int:
        return len(self.times)

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.names.index(name)]

    def state(self, index: int) -> Dict[str, float]:
        return state_dict(self.states[index], self.names)

    @property
    def final_state(self) -> Dict[str, float]:
        return self.state(-1)

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    def at(self, t: float) -> np.ndarray:
        """Linearly interpolated state row at time ``t`` within the sampled range."""
        return np.array([np.interp(t, self.times, self.states[:, j]) for j in range(len(self.names))])

    def write_csv(self, stream: TextIO, columns: Optional[Sequence[str]] = None, header_only: bool = False,
                  extra: Optional[Mapping[str, np.ndarray]] = None) -> None:
        """``t,<var>,...`` rows; an ``exit`` column flags the exit-event row when present."""
        columns = tuple(columns or self.names)
        extra = dict(extra or {})
        flag_exit = self.terminated_by == EXIT_EVENT
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["t", *columns, *extra, *(["exit"] if flag_exit else [])])
        if header_only:
            return
        idx = [self.names.index(c) for c in columns]
        last = len(self.times) - 1
        for i, t in enumerate(self.times):
            row = [repr(float(t))] + [repr(float(self.states[i, j])) for j in idx]
            row += [repr(float(values[i])) for values in extra.values()]
            if flag_exit:
                row.append("1" if i == last else "0")
            writer.writerow(row)


@dataclass
class BatchTrajectory:
    """Subsampled trajectories of many initial states; ``alive[i, n]`` is False once sample
    ``n`` has left its domain or met a pole, and its state stays frozen from then on."""

    names: Tuple[str, ...]
    times: np.ndarray
    states: np.ndarray
    alive: np.ndarray
    poles: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def sample(self, n: int) -> Tuple[np.ndarray, np.ndarray]:
        keep = self.alive[:, n]
        return self.times[keep], self.states[keep, n, :]


def trajectory_names(d: Dynamics, *extra) -> Tuple[str, ...]:
    others = set(free_variables(Dyn(d)))
    for item in extra:
        others |= set(item)
    return tuple(d.variables) + tuple(sorted(others - set(d.variables)))


def _refine_exit(compiled: CompiledDynamics, row: np.ndarray, h: float) -> Tuple[float, np.ndarray]:
    """Largest sub-step ``s <= h`` after which the domain still holds, by bisection."""
    lo, hi = 0.0, h
    best = row
    for _ in range(BISECTION_ITERATIONS):
        if hi - lo <= 1e-14:
            break
        mid = 0.5 * (lo + hi)
        nxt, poles = compiled.rk4_step(row, mid)
        if not poles[0] and compiled.domain.holds(nxt[0]):
            lo, best = mid, nxt[0]
        else:
            hi = mid
    return lo, best


def integrate(
    d: Dynamics,
    x0: Union[Mapping[str, float], np.ndarray],
    step: float = 1e-4,
    horizon: float = 10.0,
    names: Optional[Sequence[str]] = None,
    slack: float = 1e-9,
    tolerance: float = 1e-6,
    compiled: Optional[CompiledDynamics] = None,
) -> Trajectory:
    """Integrate ``d`` from ``x0`` until the domain fails or the horizon is reached."""
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    if names is None:
        names = trajectory_names(d, x0 if isinstance(x0, Mapping) else ())
    names = tuple(names)
    compiled = compiled or CompiledDynamics(d, names, slack, tolerance)
    row = state_vector(x0, names) if isinstance(x0, Mapping) else np.asarray(x0, dtype=float)
    if compiled.pole_mask(row)[0]:
        raise PoleEncountered(0.0, "at the initial state")
    if not compiled.domain.holds(row):
        raise DomainViolatedAtStart(", ".join(f"{k}={v:g}" for k, v in state_dict(row, names).items()))

    times: List[float] = [0.0]
    rows: List[np.ndarray] = [row]
    terminated = HORIZON
    t = 0.0
    n_steps = int(math.ceil(horizon / step - 1e-9)) if horizon > 0 else 0
    for i in range(n_steps):
        h = min(step, horizon - t)
        if h <= 0:
            break
        nxt, poles = compiled.rk4_step(row, h)
        if poles[0]:
            raise PoleEncountered(t)
        nxt = nxt[0]
        if not compiled.domain.holds(nxt):
            s, boundary = _refine_exit(compiled, row, h)
            if s > 0:
                times.append(t + s)
                rows.append(boundary)
            terminated = DOMAIN_VIOLATION
            log.debug("Domain exit at t=%.6g", t + s)
            break
        t = (i + 1) * step if i + 1 < n_steps else horizon
        row = nxt
        times.append(t)
        rows.append(row)
    return Trajectory(names, np.asarray(times), np.asarray(rows), terminated)


def integrate_batch(
    d: Dynamics,
    x0: np.ndarray,
    names: Sequence[str],
    step: float = 1e-4,
    horizon: float = 10.0,
    max_samples: int = 400,
    slack: float = 1e-9,
    tolerance: float = 1e-6,
) -> BatchTrajectory:
    """Array RK4 over many initial rows at once, recording about ``max_samples`` time points.

    Rows that start outside the domain are never alive. Recorded times are multiples of the
    step, so a recorded state can seed an exact local re-integration.
    """
    names = tuple(names)
    compiled = CompiledDynamics(d, names, slack, tolerance)
    rows = as_rows(x0).copy()
    n_steps = int(math.ceil(horizon / step - 1e-9)) if horizon > 0 else 0
    stride = max(1, int(math.ceil(n_steps / max(1, max_samples))))
    poles = compiled.pole_mask(rows)
    alive = compiled.domain(rows) & ~poles
    times = [0.0]
    snapshots = [rows.copy()]
    alive_log = [alive.copy()]
    t = 0.0
    for i in range(n_steps):
        h = min(step, horizon - t)
        if h <= 0 or not alive.any():
            break
        nxt, stage_poles = compiled.rk4_step(rows, h)
        still = alive & ~stage_poles
        still &= compiled.domain(np.where(still[:, None], nxt, rows))
        poles |= alive & stage_poles
        rows = np.where(still[:, None], nxt, rows)
        alive = still
        t = (i + 1) * step if i + 1 < n_steps else horizon
        if (i + 1) % stride == 0 or i + 1 == n_steps:
            times.append(t)
            snapshots.append(rows.copy())
            alive_log.append(alive.copy())
    return BatchTrajectory(names, np.asarray(times), np.stack(snapshots), np.stack(alive_log), poles)


def solve_exit(
    d: Dynamics,
    x0: Union[Mapping[str, float], np.ndarray],
    target: Term,
    level: float,
    step: float = 1e-4,
    horizon: float = 10.0,
    names: Optional[Sequence[str]] = None,
    trajectory: Optional[Trajectory] = None,
) -> Optional[Tuple[float, Dict[str, float]]]:
    """First time ``target`` reaches ``level``, bisected to a residual of 1e-10."""
    if trajectory is None:
        trajectory = integrate(d, x0, step, horizon, names=names)
    names = trajectory.names
    compiled = CompiledDynamics(d, names)
    g = CompiledTerm(target, names)
    residual = g(trajectory.states) - level
    if abs(residual[0]) <= EXIT_RESIDUAL:
        return 0.0, trajectory.state(0)
    signs = np.sign(residual)
    crossings = np.nonzero((signs[1:] != signs[:-1]) | (np.abs(residual[1:]) <= EXIT_RESIDUAL))[0]
    if crossings.size == 0:
        return None
    i = int(crossings[0])
    row, t0 = trajectory.states[i], float(trajectory.times[i])
    h = float(trajectory.times[i + 1]) - t0
    return _bisect_level(compiled, g, row, t0, h, level, residual[i], names)


def _bisect_level(compiled, g, row, t0, h, level, r0, names) -> Tuple[float, Dict[str, float]]:
    lo, hi = 0.0, h
    best_t, best_row = t0 + h, compiled.rk4_step(row, h)[0][0]
    for _ in range(BISECTION_ITERATIONS):
        mid = 0.5 * (lo + hi)
        nxt = compiled.rk4_step(row, mid)[0][0]
        r = g(nxt)[0] - level
        best_t, best_row = t0 + mid, nxt
        if abs(r) <= EXIT_RESIDUAL or hi - lo <= 1e-15:
            break
        if np.sign(r) == np.sign(r0):
            lo = mid
        else:
            hi = mid
    return best_t, state_dict(best_row, names)


def crossing_in_interval(
    compiled: CompiledDynamics,
    g: CompiledTerm,
    row: np.ndarray,
    t0: float,
    span: float,
    level: float,
    step: float,
) -> Optional[Tuple[float, np.ndarray]]:
    """First crossing of ``g = level`` within ``[t0, t0 + span]`` integrating from ``row``."""
    r0 = g(row)[0] - level
    if abs(r0) <= EXIT_RESIDUAL:
        return t0, row
    t, current = t0, row
    remaining = span
    while remaining > 1e-15:
        h = min(step, remaining)
        nxt, poles = compiled.rk4_step(current, h)
        if poles[0]:
            return None
        r = g(nxt)[0] - level
        if abs(r) <= EXIT_RESIDUAL or np.sign(r) != np.sign(r0):
            when, state = _bisect_level(compiled, g, current, t, h, level, g(current)[0] - level, compiled.names)
            return when, np.array([state[n] for n in compiled.names])
        t += h
        remaining -= h
        current = nxt[0]
    return None
