"""Sampling falsifiers for RDD formulas and plain box formulas.

Both falsifiers draw initial states satisfying an assumption formula, integrate the dynamics
involved and look for a reachable state that violates the postcondition. A clean run is
evidence, never proof. Reports are deterministic for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..errors import GammaUnsatisfiedInBox, NonArithmeticInput, QuantifierNotSupported
from ..logger import get_logger
from ..syntax.ast import (
    And,
    Box,
    Choice,
    Cmp,
    Diamond,
    Dyn,
    Forall,
    Formula,
    Not,
    Program,
    RddFormula,
    Seq,
    Sub,
    Term,
    Test,
    Variable,
    conj,
    conjuncts,
    free_variables,
    is_first_order,
)
from ..syntax.printer import pretty
from .compile import CompiledDynamics, CompiledFormula, CompiledTerm, state_dict, state_names
from .integrator import crossing_in_interval, integrate_batch

log = get_logger(__name__)

__all__ = [
    "Counterexample",
    "BoxCounterexample",
    "ReachOracle",
    "ExitPair",
    "solve_definitions",
    "sample_region",
    "lattice_region",
    "enumerate_exit_pairs",
    "falsify_rdd",
    "falsify_box",
]

Interval = Tuple[float, float]

# Grid states kept per side when an exit has no equality to pin it down.
FREE_EXIT_CANDIDATES = 60
REJECTION_BATCH = 50_000
DRAWS_PER_SAMPLE = 10_000


def _format_state(state: Mapping[str, float]) -> str:
    return ", ".join(f"{name}={value:.9g}" for name, value in state.items())


@dataclass
class Counterexample:
    """Initial pair, exit pair and the postcondition it violates."""

    sample: int
    initial: Dict[str, float]
    left_time: float
    right_time: float
    exit_state: Dict[str, float]
    violated: Formula

    def report(self) -> str:
        lines = [
            "result: counterexample",
            f"sample: {self.sample}",
            f"initial: {_format_state(self.initial)}",
            f"exit_times: t={self.left_time:.9g}, t#={self.right_time:.9g}",
            f"exit_state: {_format_state(self.exit_state)}",
            f"violated: {pretty(self.violated)}",
        ]
        return "\n".join(lines)


@dataclass
class BoxCounterexample:
    sample: int
    initial: Dict[str, float]
    violated: Formula

    def report(self) -> str:
        return "\n".join(
            [
                "result: counterexample",
                f"sample: {self.sample}",
                f"initial: {_format_state(self.initial)}",
                f"violated: {pretty(self.violated)}",
            ]
        )


# --- initial states -------------------------------------------------------------------


def _definition_options(formula: Formula) -> List[List[Tuple[str, Term]]]:
    options = []
    for atom in conjuncts(formula):
        if not isinstance(atom, Cmp) or atom.op != "=":
            continue
        choices = []
        for var, other in ((atom.left, atom.right), (atom.right, atom.left)):
            if isinstance(var, Variable) and var.name not in free_variables(other):
                choices.append((var.name, other))
        if choices:
            options.append(choices)
    return options


def _acyclic(defs: Mapping[str, Term]) -> bool:
    state: Dict[str, int] = {}

    def visit(name: str) -> bool:
        mark = state.get(name)
        if mark == 1:
            return False
        if mark == 2 or name not in defs:
            return True
        state[name] = 1
        ok = all(visit(dep) for dep in free_variables(defs[name]))
        state[name] = 2
        return ok

    return all(visit(name) for name in defs)


def solve_definitions(formula: Formula) -> List[Tuple[str, Term]]:
    """Orient ``var = term`` conjuncts into acyclic definitions, most definitions first.

    The result is in evaluation order: every definition reads only sampled variables or
    variables defined before it.
    """
    options = _definition_options(formula)
    best: Dict[str, Term] = {}

    def search(i: int, chosen: Dict[str, Term]) -> None:
        nonlocal best
        if len(chosen) + (len(options) - i) <= len(best):
            return
        if i == len(options):
            best = dict(chosen)
            return
        for name, term in options[i]:
            if name in chosen:
                continue
            chosen[name] = term
            if _acyclic(chosen):
                search(i + 1, chosen)
            del chosen[name]
        search(i + 1, chosen)

    search(0, {})
    ordered: List[Tuple[str, Term]] = []
    pending = dict(best)
    while pending:
        for name, term in list(pending.items()):
            if not (free_variables(term) & set(pending)):
                ordered.append((name, term))
                del pending[name]
    return ordered


def _apply_definitions(rows: np.ndarray, definitions, names: Sequence[str]) -> np.ndarray:
    for name, compiled in definitions:
        rows[:, names.index(name)] = compiled(rows)
    return rows


def _layout(gamma: Formula, names: Tuple[str, ...], fixed: Mapping[str, float]):
    """Definitions to apply and the variables left to draw; fixed values win over both."""
    definitions = [
        (n, CompiledTerm(t, names)) for n, t in solve_definitions(gamma) if n in names and n not in fixed
    ]
    defined = {n for n, _ in definitions}
    drawn = [n for n in names if n not in defined and n not in fixed]
    return definitions, drawn


def _seed_rows(size: int, names: Tuple[str, ...], fixed: Mapping[str, float]) -> np.ndarray:
    rows = np.zeros((size, len(names)))
    for name, value in fixed.items():
        if name in names:
            rows[:, names.index(name)] = value
    return rows


def sample_region(
    gamma: Formula,
    names: Sequence[str],
    samples: int,
    rng: np.random.Generator,
    box: Optional[Mapping[str, Interval]] = None,
    radius: float = 10.0,
    slack: float = 1e-9,
    tolerance: float = 1e-6,
    fixed: Optional[Mapping[str, float]] = None,
) -> np.ndarray:
    """Up to ``samples`` rows satisfying ``gamma``: definitions solved, the rest drawn in the box."""
    names = tuple(names)
    box, fixed = dict(box or {}), dict(fixed or {})
    definitions, drawn = _layout(gamma, names, fixed)
    columns = [names.index(n) for n in drawn]
    lows = np.array([box.get(n, (-radius, radius))[0] for n in drawn], dtype=float)
    highs = np.array([box.get(n, (-radius, radius))[1] for n in drawn], dtype=float)
    check = CompiledFormula(gamma, names, slack, tolerance)
    budget = DRAWS_PER_SAMPLE * samples
    found: List[np.ndarray] = []
    count = used = 0
    while count < samples and used < budget:
        size = min(REJECTION_BATCH, budget - used)
        rows = _seed_rows(size, names, fixed)
        rows[:, columns] = rng.uniform(lows, highs, size=(size, len(drawn)))
        rows = _apply_definitions(rows, definitions, names)
        keep = rows[check(rows) & np.all(np.isfinite(rows), axis=1)]
        found.append(keep[: samples - count])
        count += min(len(keep), samples - count)
        used += size
    if count == 0:
        raise GammaUnsatisfiedInBox(f"{pretty(gamma)} after {used} draws")
    log.debug("Sampled %d states for %s in %d draws", count, pretty(gamma), used)
    return np.concatenate(found)[:samples]


def lattice_region(
    gamma: Formula,
    names: Sequence[str],
    points: int,
    box: Optional[Mapping[str, Interval]] = None,
    radius: float = 10.0,
    slack: float = 1e-9,
    tolerance: float = 1e-6,
    max_rows: int = 20_000,
    fixed: Optional[Mapping[str, float]] = None,
) -> np.ndarray:
    """Lattice over the undefined variables, definitions applied, filtered by ``gamma``."""
    names = tuple(names)
    box, fixed = dict(box or {}), dict(fixed or {})
    definitions, drawn = _layout(gamma, names, fixed)
    per_axis = points
    while drawn and per_axis > 2 and per_axis ** len(drawn) > max_rows:
        per_axis -= 1
    rows = _seed_rows(per_axis ** len(drawn) if drawn else 1, names, fixed)
    if drawn:
        axes = [np.linspace(*box.get(n, (-radius, radius)), per_axis) for n in drawn]
        mesh = np.meshgrid(*axes, indexing="ij")
        for n, values in zip(drawn, mesh):
            rows[:, names.index(n)] = values.ravel()
    rows = _apply_definitions(rows, definitions, names)
    keep = CompiledFormula(gamma, names, slack, tolerance)(rows) & np.all(np.isfinite(rows), axis=1)
    return rows[keep]


# --- reachability ---------------------------------------------------------------------


class ReachOracle:
    """Set-based evaluation of formulas with modalities over sampled runs.

    ``reach`` maps a batch of states to the states a program can reach from them, tagged with
    the index of the state they came from. Boxes hold when every reached state satisfies the
    postcondition, diamonds when one does.
    """

    def __init__(
        self,
        names: Sequence[str],
        step: float = 1e-4,
        horizon: float = 10.0,
        max_samples: int = 60,
        slack: float = 1e-9,
        tolerance: float = 1e-6,
    ):
        self.names = tuple(names)
        self.step = step
        self.horizon = horizon
        self.max_samples = max_samples
        self.slack = slack
        self.tolerance = tolerance
        self._compiled: Dict[Formula, CompiledFormula] = {}

    def _first_order(self, formula: Formula) -> CompiledFormula:
        compiled = self._compiled.get(formula)
        if compiled is None:
            compiled = CompiledFormula(formula, self.names, self.slack, self.tolerance)
            self._compiled[formula] = compiled
        return compiled

    def holds(self, formula: Formula, rows: np.ndarray) -> np.ndarray:
        rows = np.atleast_2d(rows)
        if rows.shape[0] == 0:
            return np.zeros(0, dtype=bool)
        if is_first_order(formula):
            return self._first_order(formula)(rows)
        if isinstance(formula, Not):
            return ~self.holds(formula.arg, rows)
        if isinstance(formula, And):
            return self.holds(formula.left, rows) & self.holds(formula.right, rows)
        if isinstance(formula, (Box, Diamond)):
            reached, owner = self.reach(formula.program, rows)
            ok = self.holds(formula.post, reached)
            if isinstance(formula, Box):
                result = np.ones(rows.shape[0], dtype=bool)
                np.logical_and.at(result, owner, ok)
            else:
                result = np.zeros(rows.shape[0], dtype=bool)
                np.logical_or.at(result, owner, ok)
            return result
        if isinstance(formula, Forall):
            raise QuantifierNotSupported(pretty(formula))
        raise NonArithmeticInput(f"cannot evaluate {type(formula).__name__}")

    def reach(self, program: Program, rows: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        rows = np.atleast_2d(rows)
        owner = np.arange(rows.shape[0])
        if rows.shape[0] == 0:
            return rows, owner
        if isinstance(program, Test):
            mask = self.holds(program.cond, rows)
            return rows[mask], owner[mask]
        if isinstance(program, Dyn):
            batch = integrate_batch(
                program.dynamics, rows, self.names, self.step, self.horizon,
                self.max_samples, self.slack, self.tolerance,
            )
            alive = batch.alive
            reached = batch.states[alive]
            tags = np.broadcast_to(owner, alive.shape)[alive]
            return reached, tags
        if isinstance(program, Seq):
            mid, first_owner = self.reach(program.first, rows)
            end, second_owner = self.reach(program.second, mid)
            return end, first_owner[second_owner]
        if isinstance(program, Choice):
            left, left_owner = self.reach(program.left, rows)
            right, right_owner = self.reach(program.right, rows)
            return np.concatenate([left, right]), np.concatenate([left_owner, right_owner])
        raise TypeError(f"not a program: {program!r}")


# --- exit pairs -----------------------------------------------------------------------


@dataclass
class ExitPair:
    sample: int
    left_time: float
    right_time: float
    row: np.ndarray


def _crossing_indices(values: np.ndarray) -> np.ndarray:
    signs = np.sign(values)
    return np.nonzero((signs[1:] != signs[:-1]) | (values[1:] == 0))[0]


def _is_equality(atom: Formula) -> bool:
    return isinstance(atom, Cmp) and atom.op == "="


class _ExitPlan:
    """Exit atoms split by the side whose variables they read."""

    def __init__(self, a: RddFormula, names: Sequence[str], slack: float, tolerance: float):
        left, right = set(a.left.variables), set(a.right.variables)
        self.left_atoms: List[Formula] = []
        self.right_atoms: List[Formula] = []
        self.cross: Optional[Tuple[Term, Term]] = None
        for atom in conjuncts(a.exit):
            used = free_variables(atom)
            if not used & right:
                self.left_atoms.append(atom)
            elif not used & left:
                self.right_atoms.append(atom)
            elif self.cross is None and _is_equality(atom):
                lhs, rhs = free_variables(atom.left), free_variables(atom.right)
                if not lhs & right and not rhs & left:
                    self.cross = (atom.left, atom.right)
                elif not lhs & left and not rhs & right:
                    self.cross = (atom.right, atom.left)
        self.left_level = self._level(self.left_atoms, names)
        self.right_level = self._level(self.right_atoms, names)
        self.left_filter = CompiledFormula(conj(*self.left_atoms), names, slack, tolerance)
        self.right_filter = CompiledFormula(conj(*self.right_atoms), names, slack, tolerance)
        self.exit = CompiledFormula(a.exit, names, slack, tolerance)
        if self.cross is not None:
            self.cross_left = CompiledTerm(self.cross[0], names)
            self.cross_right = CompiledTerm(self.cross[1], names)

    @staticmethod
    def _level(atoms: List[Formula], names) -> Optional[CompiledTerm]:
        for atom in atoms:
            if _is_equality(atom):
                return CompiledTerm(Sub(atom.left, atom.right), names)
        return None


def _level_hits(
    compiled: CompiledDynamics,
    term: CompiledTerm,
    times: np.ndarray,
    states: np.ndarray,
    level: float,
    step: float,
) -> List[Tuple[float, np.ndarray]]:
    """Every crossing of ``term = level`` along a sampled run, refined between grid states."""
    values = term(states) - level
    found: List[Tuple[float, np.ndarray]] = []
    if values[0] == 0:
        found.append((float(times[0]), states[0]))
    for j in _crossing_indices(values):
        hit = crossing_in_interval(
            compiled, term, states[j], float(times[j]), float(times[j + 1] - times[j]), level, step
        )
        if hit is not None and (not found or hit[0] > found[-1][0]):
            found.append((float(hit[0]), hit[1]))
    return found


def _side_candidates(
    compiled: CompiledDynamics,
    level: Optional[CompiledTerm],
    filt: CompiledFormula,
    times: np.ndarray,
    states: np.ndarray,
    step: float,
) -> List[Tuple[float, np.ndarray]]:
    if level is None:
        idx = np.arange(len(times))
        if len(idx) > FREE_EXIT_CANDIDATES:
            idx = np.unique(np.linspace(0, len(times) - 1, FREE_EXIT_CANDIDATES).astype(int))
        found = [(float(times[i]), states[i]) for i in idx]
    else:
        found = _level_hits(compiled, level, times, states, 0.0, step)
    return _keep(filt, found)


def _keep(filt: CompiledFormula, found: List[Tuple[float, np.ndarray]]) -> List[Tuple[float, np.ndarray]]:
    if not found:
        return found
    keep = filt(np.stack([row for _, row in found]))
    return [item for item, ok in zip(found, keep) if ok]


def enumerate_exit_pairs(
    a: RddFormula,
    initial: np.ndarray,
    names: Sequence[str],
    step: float = 1e-4,
    horizon: float = 10.0,
    max_samples: int = 400,
    slack: float = 1e-9,
    tolerance: float = 1e-6,
) -> Iterator[List[ExitPair]]:
    """For each initial row, the exit pairs found on the grid and refined by bisection.

    Side-local equalities pin each side separately. A cross-side equality ``g = g#`` then pins
    the other side: when the right side has its own equality, the left exit is searched where
    ``g`` reaches the value of ``g#`` at each right exit, otherwise the right exit is searched
    where ``g#`` reaches the value of ``g`` at each left candidate. Remaining exit atoms filter.
    """
    names = tuple(names)
    plan = _ExitPlan(a, names, slack, tolerance)
    left_compiled = CompiledDynamics(a.left, names, slack, tolerance)
    right_compiled = CompiledDynamics(a.right, names, slack, tolerance)
    left_batch = integrate_batch(a.left, initial, names, step, horizon, max_samples, slack, tolerance)
    right_batch = integrate_batch(a.right, initial, names, step, horizon, max_samples, slack, tolerance)
    right_columns = [names.index(v) for v in a.right.variables]

    for n in range(initial.shape[0]):
        pairs: List[ExitPair] = []
        left_times, left_states = left_batch.sample(n)
        right_times, right_states = right_batch.sample(n)
        if not len(left_times) or not len(right_times):
            yield pairs
            continue
        if plan.cross is not None and plan.right_level is not None:
            rights = _side_candidates(
                right_compiled, plan.right_level, plan.right_filter, right_times, right_states, step
            )
            for ts, right_row in rights:
                c = float(plan.cross_right(right_row)[0])
                hits = _level_hits(left_compiled, plan.cross_left, left_times, left_states, c, step)
                for t, left_row in _keep(plan.left_filter, hits):
                    pairs.append(_merge(n, t, left_row, ts, right_row, right_columns))
        elif plan.cross is not None:
            lefts = _side_candidates(
                left_compiled, plan.left_level, plan.left_filter, left_times, left_states, step
            )
            for t, left_row in lefts:
                c = float(plan.cross_left(left_row)[0])
                hits = _level_hits(right_compiled, plan.cross_right, right_times, right_states, c, step)
                for ts, right_row in _keep(plan.right_filter, hits):
                    pairs.append(_merge(n, t, left_row, ts, right_row, right_columns))
        else:
            lefts = _side_candidates(
                left_compiled, plan.left_level, plan.left_filter, left_times, left_states, step
            )
            rights = _side_candidates(
                right_compiled, plan.right_level, plan.right_filter, right_times, right_states, step
            )
            for t, left_row in lefts:
                for ts, right_row in rights:
                    pairs.append(_merge(n, t, left_row, ts, right_row, right_columns))
        if pairs:
            ok = plan.exit(np.stack([p.row for p in pairs]))
            pairs = [p for p, good in zip(pairs, ok) if good]
        yield pairs


def _merge(n: int, t: float, left_row: np.ndarray, ts: float, right_row: np.ndarray, columns) -> ExitPair:
    row = left_row.copy()
    row[columns] = right_row[columns]
    return ExitPair(n, t, ts, row)


def falsify_rdd(
    a: RddFormula,
    gamma: Formula,
    samples: int = 500,
    box: Optional[Mapping[str, Interval]] = None,
    step: float = 1e-4,
    horizon: float = 10.0,
    seed: int = 42,
    radius: float = 10.0,
    slack: float = 1e-9,
    tolerance: float = 1e-6,
    max_samples: int = 400,
    fixed: Optional[Mapping[str, float]] = None,
) -> Optional[Counterexample]:
    """First sampled exit pair that violates the postcondition, or ``None``."""
    names = state_names(gamma, a, first=tuple(a.left.variables) + tuple(a.right.variables))
    rng = np.random.default_rng(seed)
    initial = sample_region(gamma, names, samples, rng, box, radius, slack, tolerance, fixed)
    _, first = np.unique(initial, axis=0, return_index=True)
    initial = initial[np.sort(first)]
    oracle = ReachOracle(names, step, horizon, slack=slack, tolerance=tolerance)
    log.debug("Falsifying %s over %d initial states", pretty(a), len(initial))
    for pairs in enumerate_exit_pairs(a, initial, names, step, horizon, max_samples, slack, tolerance):
        if not pairs:
            continue
        ok = oracle.holds(a.post, np.stack([p.row for p in pairs]))
        bad = np.nonzero(~ok)[0]
        if bad.size:
            pair = pairs[int(bad[0])]
            log.info("Counterexample at sample %d", pair.sample)
            return Counterexample(
                pair.sample,
                state_dict(initial[pair.sample], names),
                pair.left_time,
                pair.right_time,
                state_dict(pair.row, names),
                a.post,
            )
    return None


def falsify_box(
    gamma: Formula,
    formula: Formula,
    samples: int = 200,
    box: Optional[Mapping[str, Interval]] = None,
    step: float = 1e-3,
    horizon: float = 2.0,
    seed: int = 42,
    radius: float = 10.0,
    slack: float = 1e-9,
    tolerance: float = 1e-6,
    max_samples: int = 60,
    fixed: Optional[Mapping[str, float]] = None,
) -> Optional[BoxCounterexample]:
    """First sampled ``gamma`` state at which ``formula`` fails on the sampled runs."""
    names = state_names(gamma, formula)
    rng = np.random.default_rng(seed)
    initial = sample_region(gamma, names, samples, rng, box, radius, slack, tolerance, fixed)
    oracle = ReachOracle(names, step, horizon, max_samples, slack, tolerance)
    ok = oracle.holds(formula, initial)
    bad = np.nonzero(~ok)[0]
    if not bad.size:
        return None
    i = int(bad[0])
    return BoxCounterexample(i, state_dict(initial[i], names), formula)

