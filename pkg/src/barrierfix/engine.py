"""The counterexample-guided repair loop."""
from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

from .constraints import (
    Clause,
    Constraint,
    EmptyWitness,
    Strategy,
    generate_clause,
    solve,
    solve_wpms,
)
from .instrument import InstrumentedKernel, WeightConfig, apply_solution, instrument
from .lang.ast import Kernel, LaunchConfig, Level, Origin, SourceLoc
from .oracle import (
    DEFAULT_CAP,
    DEFAULT_STEP_BUDGET,
    Divergence,
    KernelOracle,
    Other,
    Race,
    ResourceLimit,
    Safe,
    Verdict,
)
from .solution import Solution

log = logging.getLogger(__name__)


class Action(enum.Enum):
    ADD_BARRIER = "add_barrier"
    REMOVE_BARRIER = "remove_barrier"


class Reason(enum.Enum):
    UNSAT_CONSTRAINTS = "unsat_constraints"
    NON_REPAIRABLE_ERROR = "non_repairable_error"
    EMPTY_WITNESS = "empty_witness"


@dataclass(frozen=True)
class Change:
    action: Action
    level: Level
    loc: SourceLoc
    var: int = field(default=0, compare=False)

    def __str__(self) -> str:
        verb = "add" if self.action is Action.ADD_BARRIER else "remove"
        kind = "grid barrier" if self.level is Level.GRID else "barrier"
        where = "before" if self.action is Action.ADD_BARRIER else "at"
        return f"{self.loc.file}:{self.loc.line}:{self.loc.col}: {verb} {kind} {where} line {self.loc.line}"


@dataclass(frozen=True)
class RepairConfig:
    strategy: Strategy = Strategy.MHS
    weights: WeightConfig = WeightConfig()
    max_iterations: int = 1000
    launch: Optional[LaunchConfig] = None
    unroll: Optional[int] = None
    step_budget: int = DEFAULT_STEP_BUDGET
    time_limit: Optional[float] = None
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True)
class Step:
    """One loop iteration: the proposed solution, its verdict, the new clause."""

    solution: Solution
    verdict: Verdict
    clause: Optional[Clause] = None


@dataclass
class Stats:
    iterations: int = 0
    verifier_calls: int = 0
    solver_calls: int = 0
    fallbacks: int = 0


@dataclass
class Repaired:
    solution: Solution
    kernel: Kernel
    changes: List[Change]
    iterations: int
    verifier_calls: int
    instrumented: InstrumentedKernel
    constraint: Constraint
    history: List[Step]
    stats: Stats


@dataclass
class CannotRepair:
    reason: Reason
    detail: str
    instrumented: Optional[InstrumentedKernel]
    constraint: Constraint
    history: List[Step]
    stats: Stats
    verdict: Optional[Verdict] = None


@dataclass
class Timeout:
    iterations: int
    instrumented: InstrumentedKernel
    constraint: Constraint
    history: List[Step]
    stats: Stats


RepairOutcome = Union[Repaired, CannotRepair, Timeout]


def progress_check(history: Sequence[Clause], new: Clause) -> bool:
    """True iff ``new`` has not been generated before."""
    return new not in set(history)


def compute_changes(ik: InstrumentedKernel, sol: Solution) -> List[Change]:
    out = []
    for v in ik.vars:
        if v.origin is Origin.INSTRUMENTED and sol[v.id]:
            out.append(Change(Action.ADD_BARRIER, v.level, v.loc, v.id))
        elif v.origin is Origin.PROGRAMMER and not sol[v.id]:
            out.append(Change(Action.REMOVE_BARRIER, v.level, v.loc, v.id))
    return out


def repair(k: Union[Kernel, InstrumentedKernel], cfg: RepairConfig = RepairConfig()) -> RepairOutcome:
    """Repair data races and barrier divergence in ``k``.

    Never raises for well-formed input: every failure is reported as a
    :class:`CannotRepair` or :class:`Timeout` outcome.
    """
    ik = k if isinstance(k, InstrumentedKernel) else instrument(k, cfg.weights)
    weights = ik.weights
    # equal-weight ties keep the barriers the programmer wrote
    keep = [v.id for v in ik.vars if v.origin is Origin.PROGRAMMER]
    phi = Constraint()
    history: List[Step] = []
    stats = Stats()
    clauses: List[Clause] = []
    started = time.monotonic()

    def cannot(reason: Reason, detail: str, verdict: Optional[Verdict] = None) -> CannotRepair:
        log.info("cannot repair %s: %s", ik.kernel.name, detail)
        return CannotRepair(reason, detail, ik, phi, history, stats, verdict)

    try:
        oracle = KernelOracle(ik, cfg.launch, cfg.unroll, cfg.step_budget, cfg.cap)
    except ResourceLimit as e:
        return cannot(Reason.NON_REPAIRABLE_ERROR, str(e))

    def check(sol: Solution) -> Verdict:
        stats.verifier_calls += 1
        return oracle.verify(sol)

    solver_stats: dict = {}
    while True:
        out_of_time = cfg.time_limit is not None and time.monotonic() - started > cfg.time_limit
        if stats.iterations >= cfg.max_iterations or out_of_time:
            _sync(stats, solver_stats)
            return Timeout(stats.iterations, ik, phi, history, stats)
        stats.iterations += 1
        sol = solve(list(phi), weights, cfg.strategy, solver_stats, keep)
        if sol is None:
            _sync(stats, solver_stats)
            return cannot(Reason.UNSAT_CONSTRAINTS,
                          "no barrier assignment avoids all error traces seen so far")
        verdict = check(sol)
        log.debug("iteration %d: %s -> %s", stats.iterations, sol, type(verdict).__name__)
        if isinstance(verdict, Safe):
            history.append(Step(sol, verdict))
            break
        if not isinstance(verdict, (Race, Divergence)):
            history.append(Step(sol, verdict))
            _sync(stats, solver_stats)
            return cannot(Reason.NON_REPAIRABLE_ERROR, verdict.description, verdict)
        try:
            clause = generate_clause(verdict)
        except EmptyWitness as e:
            history.append(Step(sol, verdict))
            _sync(stats, solver_stats)
            return cannot(Reason.EMPTY_WITNESS, str(e), verdict)
        history.append(Step(sol, verdict, clause))
        if not progress_check(clauses, clause):
            _sync(stats, solver_stats)
            return cannot(Reason.NON_REPAIRABLE_ERROR,
                          f"oracle repeated the witness {clause}; aborting", verdict)
        clauses.append(clause)
        phi.add(clause)

    if cfg.strategy is Strategy.MHS:
        solver_stats["solver_calls"] = solver_stats.get("solver_calls", 0) + 1
        best = solve_wpms(list(phi), weights, keep)
        # lighter wins; at equal weight, fewer edits to the source wins
        def rank(x: Solution):
            return (x.total_weight, len(compute_changes(ik, x)))

        if best is not None and rank(best) < rank(sol):
            if isinstance(check(best), Safe):
                sol = best
    _sync(stats, solver_stats)
    return Repaired(
        solution=sol,
        kernel=apply_solution(ik, sol),
        changes=compute_changes(ik, sol),
        iterations=stats.iterations,
        verifier_calls=stats.verifier_calls,
        instrumented=ik,
        constraint=phi,
        history=history,
        stats=stats,
    )


def _sync(stats: Stats, solver_stats: dict) -> None:
    stats.solver_calls = solver_stats.get("solver_calls", 0)
    stats.fallbacks = solver_stats.get("fallbacks", 0)


def outcome_name(o: RepairOutcome) -> str:
    if isinstance(o, Repaired):
        return "already_safe" if not o.changes else "repaired"
    if isinstance(o, CannotRepair):
        return "cannot_repair"
    return "timeout"


def verdict_of(o: RepairOutcome) -> Tuple[str, Optional[Verdict]]:
    """Last verdict seen by the loop (useful for trace dumps)."""
    for step in reversed(o.history):
        if not isinstance(step.verdict, Safe):
            return type(step.verdict).__name__, step.verdict
    return "Safe", None
