from __future__ import annotations

import sys
from contextlib import nullcontext
from fractions import Fraction
from typing import Dict, Optional

import numpy as np

from ...core.algebra import exit_functions, sync_vector_field
from ...core.arith.refuter import exact_value
from ...core.errors import RddlError, RddlSyntaxError
from ...core.logger import get_logger
from ...core.model_file import Model, load_model
from ...core.semantics.compile import CompiledTerm
from ...core.semantics.falsifier import solve_definitions
from ...core.semantics.integrator import EXIT_EVENT, Trajectory, integrate, solve_exit, trajectory_names
from ...core.semantics.stretch import simulate_synchronized
from ...core.syntax.ast import Dynamics, free_variables
from ...core.syntax.parser import parse_term
from . import EXIT_OK

log = get_logger(__name__)


def parse_init(text: str) -> Dict[str, float]:
    """``x=0,v=1.5`` as a mapping."""
    values: Dict[str, float] = {}
    for item in filter(None, (part.strip() for part in text.split(","))):
        name, sep, value = item.partition("=")
        try:
            if not sep:
                raise ValueError(item)
            values[name.strip()] = float(value)
        except ValueError:
            raise RddlSyntaxError(0, ["name=number"], item) from None
    return values


def initial_state(model: Model, overrides: Dict[str, float]) -> Dict[str, float]:
    """Bound parameters, then equalities of the model's assumptions, then ``--init`` values."""
    env: Dict[str, Fraction] = {k: Fraction(v) for k, v in {**model.fixed, **overrides}.items()}
    for name, term in solve_definitions(model.gamma):
        if name in env or not free_variables(term) <= set(env):
            continue
        value = exact_value(term, env)
        if value is not None:
            env[name] = value
    state = {k: float(v) for k, v in env.items()}
    state.update(overrides)
    return state


def _require(dynamics: Dynamics, state: Dict[str, float]) -> None:
    missing = sorted(set(trajectory_names(dynamics)) - set(state))
    if missing:
        raise RddlError(f"no initial value for {', '.join(missing)}; pass --init")


def _cut_at_exit(trajectory: Trajectory, dynamics: Dynamics, target: str, level: float) -> Trajectory:
    found = solve_exit(dynamics, {}, parse_term(target), level, trajectory=trajectory)
    if found is None:
        log.info("%s never reaches %g within the horizon", target, level)
        return trajectory
    when, state = found
    keep = trajectory.times < when
    row = np.array([state[name] for name in trajectory.names])
    times = np.append(trajectory.times[keep], when)
    states = np.vstack([trajectory.states[keep], row])
    log.info("Exit at t=%.9g: %s", when, ", ".join(f"{k}={v:.9g}" for k, v in state.items()))
    return Trajectory(trajectory.names, times, states, EXIT_EVENT, when)


def run(args, config) -> int:
    model = load_model(args.model)
    state = initial_state(model, parse_init(args.init))
    extra: Optional[Dict[str, np.ndarray]] = None
    if args.sync:
        if model.rdd is None:
            raise RddlError(f"{args.model} has no rdd to synchronize")
        run_ = simulate_synchronized(model.rdd, state, {}, config.step, config.horizon)
        trajectory = run_.trajectory
        dynamics = sync_vector_field(model.rdd)
        log.info("Synchronized run: max |g - g#| = %.3g", run_.max_gap)
    else:
        dynamics = model.side(args.side)
        _require(dynamics, state)
        trajectory = integrate(dynamics, state, config.step, config.horizon, names=trajectory_names(dynamics),
                               slack=config.slack, tolerance=config.tolerance)
    if args.target is not None and args.exit_level is not None:
        trajectory = _cut_at_exit(trajectory, dynamics, args.target, args.exit_level)
    if args.sync:
        extra = {"gap": _gap(model, trajectory)}
    with (open(args.csv, "w", encoding="utf-8", newline="") if args.csv else nullcontext(sys.stdout)) as stream:
        trajectory.write_csv(stream, header_only=config.horizon == 0, extra=extra)
    log.info("Final state at t=%.9g: %s", trajectory.final_time,
             ", ".join(f"{k}={v:.9g}" for k, v in trajectory.final_state.items()))
    return EXIT_OK


def _gap(model: Model, trajectory: Trajectory) -> np.ndarray:
    g, g_sharp = exit_functions(model.rdd)
    return np.abs(CompiledTerm(g, trajectory.names)(trajectory.states)
                  - CompiledTerm(g_sharp, trajectory.names)(trajectory.states))
