"""Numeric semantics: compiled evaluation, RK4 integration, falsification and simulation checks."""

from .falsifier import BoxCounterexample, Counterexample, falsify_box, falsify_rdd
from .integrator import Trajectory, integrate, solve_exit
from .models import (
    collision_speed,
    constant_acceleration,
    decaying_stage,
    drag,
    random_dynamics,
    random_polynomial,
    random_rational,
    random_state,
)
from .simulation import SimulationReport, check_simulation_numeric
from .stretch import TimeStretch, canonical_time_stretch, check_stretched_solution, simulate_synchronized

__all__ = [
    "BoxCounterexample",
    "Counterexample",
    "falsify_box",
    "falsify_rdd",
    "Trajectory",
    "integrate",
    "solve_exit",
    "collision_speed",
    "constant_acceleration",
    "decaying_stage",
    "drag",
    "random_dynamics",
    "random_polynomial",
    "random_rational",
    "random_state",
    "SimulationReport",
    "check_simulation_numeric",
    "TimeStretch",
    "canonical_time_stretch",
    "check_stretched_solution",
    "simulate_synchronized",
]
