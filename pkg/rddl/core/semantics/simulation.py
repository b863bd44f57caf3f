"""Lattice check of a candidate simulation relation between the two sides of an RDD formula."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np

from ..logger import get_logger
from ..syntax.ast import And, Cmp, Falsity, Formula, RddFormula, Sub, Truth
from .compile import CompiledDynamics, CompiledFormula, CompiledTerm, state_dict, state_names
from .falsifier import Interval, ReachOracle, enumerate_exit_pairs, lattice_region
from .integrator import integrate_batch

log = get_logger(__name__)

__all__ = ["Violation", "SimulationReport", "relation_violation", "check_simulation_numeric"]

# Cap on reported examples per clause.
EXAMPLES = 10


@dataclass
class Violation:
    state: Dict[str, float]
    amount: float


@dataclass
class SimulationReport:
    checked_points: int = 0
    checked_successors: int = 0
    checked_exit_pairs: int = 0
    simulation_violations: List[Violation] = field(default_factory=list)
    support_violations: List[Violation] = field(default_factory=list)
    essential_inclusion_violations: List[Violation] = field(default_factory=list)
    counts: Dict[str, int] = field(
        default_factory=lambda: {"simulation": 0, "support": 0, "essential_inclusion": 0}
    )

    @property
    def vacuous(self) -> bool:
        """No exit pair was reached, so the essential-inclusion clause saw nothing."""
        return self.checked_exit_pairs == 0

    @property
    def clean(self) -> bool:
        return not self.vacuous and not any(self.counts.values())

    def add(self, clause: str, state: Dict[str, float], amount: float) -> None:
        self.counts[clause] += 1
        bucket = getattr(self, f"{clause}_violations")
        if len(bucket) < EXAMPLES:
            bucket.append(Violation(state, amount))

    def report(self) -> str:
        lines = [
            f"points: {self.checked_points}",
            f"successors: {self.checked_successors}",
            f"exit_pairs: {self.checked_exit_pairs}",
        ]
        for clause in ("simulation", "support", "essential_inclusion"):
            lines.append(f"{clause}_violations: {self.counts[clause]}")
            for item in getattr(self, f"{clause}_violations"):
                shown = ", ".join(f"{k}={v:.9g}" for k, v in item.state.items())
                lines.append(f"  - {shown} (off by {item.amount:.3g})")
        return "\n".join(lines)


def relation_violation(formula: Formula, names: Sequence[str]) -> Callable[[np.ndarray], np.ndarray]:
    """Nonnegative distance-like measure that is zero exactly where ``formula`` holds."""
    if isinstance(formula, Truth):
        return lambda rows: np.zeros(rows.shape[0])
    if isinstance(formula, Falsity):
        return lambda rows: np.full(rows.shape[0], np.inf)
    if isinstance(formula, Cmp):
        diff = CompiledTerm(Sub(formula.left, formula.right), names)
        op = formula.op

        def measure(rows: np.ndarray) -> np.ndarray:
            d = diff(rows)
            if op == "=":
                out = np.abs(d)
            elif op in (">", ">="):
                out = np.maximum(0.0, -d)
            else:
                out = np.maximum(0.0, d)
            return np.where(np.isfinite(out), out, np.inf)

        return measure
    if isinstance(formula, And):
        left = relation_violation(formula.left, names)
        right = relation_violation(formula.right, names)
        return lambda rows: np.maximum(left(rows), right(rows))
    compiled = CompiledFormula(formula, names)
    return lambda rows: np.where(compiled(rows), 0.0, 1.0)


def _pairings(left: np.ndarray, right: np.ndarray, columns: Sequence[int]) -> np.ndarray:
    rows = np.repeat(left, right.shape[0], axis=0)
    rows[:, columns] = np.tile(right[:, columns], (left.shape[0], 1))
    return rows


def check_simulation_numeric(
    r: Formula,
    a: RddFormula,
    grid: int = 20,
    box: Optional[Mapping[str, Interval]] = None,
    step: float = 1e-3,
    horizon: float = 2.0,
    tolerance: float = 1e-6,
    radius: float = 10.0,
    fixed: Optional[Mapping[str, float]] = None,
    successors: int = 20,
    slack: float = 1e-9,
) -> SimulationReport:
    """Check the simulation, support and essential-inclusion clauses of ``r`` on a lattice.

    For every lattice state in ``r`` and every sampled left successor, the right run is
    searched for a partner keeping ``r``; the best grid partner is refined on the integration
    step, and a miss counts only when it exceeds the tolerance plus the variation of the
    measure between neighbouring steps.
    """
    names = state_names(r, a, first=tuple(a.left.variables) + tuple(a.right.variables))
    report = SimulationReport()
    points = lattice_region(r, names, grid, box, radius, slack, tolerance, fixed=fixed)
    report.checked_points = len(points)
    if not len(points):
        return report
    right_columns = [names.index(v) for v in a.right.variables]
    measure = relation_violation(r, names)
    right_compiled = CompiledDynamics(a.right, names, slack, tolerance)

    left_batch = integrate_batch(a.left, points, names, step, horizon, successors, slack, tolerance)
    right_batch = integrate_batch(a.right, points, names, step, horizon, 200, slack, tolerance)
    n_steps = int(math.ceil(horizon / step - 1e-9)) if horizon > 0 else 0
    stride = max(1, int(math.ceil(n_steps / 200)))

    starts: List[np.ndarray] = []
    targets: List[np.ndarray] = []
    for n in range(len(points)):
        _, lefts = left_batch.sample(n)
        _, rights = right_batch.sample(n)
        if not len(lefts) or not len(rights):
            continue
        scores = measure(_pairings(lefts, rights, right_columns)).reshape(len(lefts), len(rights))
        best = np.argmin(scores, axis=1)
        for i, j in enumerate(best):
            report.checked_successors += 1
            if scores[i, j] <= tolerance:
                continue
            starts.append(rights[max(int(j) - 1, 0)])
            targets.append(lefts[i])

    if starts:
        _refine(report, measure, right_compiled, np.stack(starts), np.stack(targets),
                right_columns, step, 2 * stride, tolerance)

    exit_check = CompiledFormula(a.exit, names, slack, tolerance)
    post_check = ReachOracle(names, step, horizon, slack=slack, tolerance=tolerance)
    on_exit = points[exit_check(points)]
    if len(on_exit):
        ok = post_check.holds(a.post, on_exit)
        for row in on_exit[~ok]:
            report.add("support", state_dict(row, names), 1.0)

    for pairs in enumerate_exit_pairs(a, points, names, step, horizon, 400, slack, tolerance):
        if not pairs:
            continue
        rows = np.stack([p.row for p in pairs])
        report.checked_exit_pairs += len(rows)
        off = measure(rows)
        for row, amount in zip(rows[off > tolerance], off[off > tolerance]):
            report.add("essential_inclusion", state_dict(row, names), float(amount))
        in_r = rows[off <= tolerance]
        if len(in_r):
            ok = post_check.holds(a.post, in_r)
            for row in in_r[~ok]:
                report.add("support", state_dict(row, names), 1.0)
    log.info(
        "Simulation check: %d points, %d successors, %d exit pairs",
        report.checked_points, report.checked_successors, report.checked_exit_pairs,
    )
    if report.vacuous:
        log.warning("No exit pair reached from the %d lattice points; the check is vacuous", len(points))
    return report


def _refine(
    report: SimulationReport,
    measure,
    compiled: CompiledDynamics,
    starts: np.ndarray,
    targets: np.ndarray,
    right_columns: Sequence[int],
    step: float,
    steps: int,
    tolerance: float,
) -> None:
    """Step-resolution search around the best grid partner of each unmatched successor."""
    rows = starts.copy()

    def score(states: np.ndarray) -> np.ndarray:
        merged = targets.copy()
        merged[:, right_columns] = states[:, right_columns]
        values = measure(merged)
        return np.where(compiled.domain(states), values, np.inf)

    previous = score(rows)
    best = previous.copy()
    jump = np.zeros(len(rows))
    for _ in range(steps):
        rows, poles = compiled.rk4_step(rows, step)
        current = np.where(poles, np.inf, score(rows))
        finite = np.isfinite(current) & np.isfinite(previous)
        jump = np.where(finite, np.maximum(jump, np.abs(current - previous)), jump)
        best = np.minimum(best, current)
        previous = current
    names = compiled.names
    for target, amount, spread in zip(targets, best, jump):
        if amount > tolerance + spread:
            report.add("simulation", state_dict(target, names), float(amount))

