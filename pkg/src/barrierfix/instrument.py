"""Guarded-barrier instrumentation.

Every candidate barrier position gets a barrier whose guard ``b<i>`` decides
whether it is present in the final program. Candidate positions are:

* immediately before a statement that reads or writes a shared array,
* immediately before every ``if`` statement,
* at the head of every loop body,
* immediately before every inlined call that touches a shared array.

Programmer barriers get their own guard so the repair can remove them.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, List, Mapping, Optional, Tuple, Union

from .lang.ast import (
    Assert,
    Assign,
    Barrier,
    Block,
    Call,
    If,
    Kernel,
    Level,
    Origin,
    SourceLoc,
    Stmt,
    Var,
    While,
    child_blocks,
    shared_reads,
    shared_writes,
    walk_stmts,
)
from .solution import MissingAssignment, Solution

MAX_LOOP_DEPTH = 6


@dataclass(frozen=True)
class WeightConfig:
    gw: int = 12
    lw: int = 10
    grid_enabled: bool = True
    inspect_existing: bool = True

    def __post_init__(self):
        if self.gw < 1 or self.lw < 1:
            raise ValueError("gw and lw must be positive integers")

    def weight(self, level: Level, loop_depth: int) -> int:
        gb = 1 if level is Level.GRID else 0
        return self.gw * gb + self.lw ** min(loop_depth, MAX_LOOP_DEPTH)


@dataclass(frozen=True)
class BarrierVariable:
    id: int
    loc: SourceLoc
    level: Level
    origin: Origin
    loop_depth: int
    weight: int

    @property
    def name(self) -> str:
        return f"b{self.id}"


@dataclass(frozen=True)
class InstrumentedKernel:
    kernel: Kernel
    vars: Tuple[BarrierVariable, ...]
    source: Kernel

    @property
    def weights(self) -> Dict[int, int]:
        return {v.id: v.weight for v in self.vars}

    @property
    def m(self) -> int:
        return len(self.vars)

    def var(self, i: int) -> BarrierVariable:
        return self.vars[i - 1]


def is_instrumented(k: Kernel) -> bool:
    return any(
        isinstance(s, Barrier) and (s.guard is not None or s.origin is Origin.INSTRUMENTED)
        for s in walk_stmts(k.body)
    )


def _touches_shared(s: Stmt, shared) -> bool:
    if isinstance(s, Call):
        if any(isinstance(a, Var) and a.name in shared for a in s.args):
            return True
        return any(shared_reads(x, shared) or shared_writes(x, shared) for x in walk_stmts(s.body))
    return bool(shared_reads(s, shared) or shared_writes(s, shared))


def _subtree_touches_shared(s: Stmt, shared) -> bool:
    # scope boundaries that never reach shared memory need no guard
    if _touches_shared(s, shared):
        return True
    return any(_touches_shared(x, shared) for b in child_blocks(s) for x in walk_stmts(b))


class _Instrumenter:
    def __init__(self, k: Kernel, cfg: WeightConfig):
        self.k = k
        self.cfg = cfg
        self.shared = k.shared_arrays
        self.vars: List[BarrierVariable] = []

    def new_var(self, loc: SourceLoc, level: Level, origin: Origin, depth: int) -> int:
        i = len(self.vars) + 1
        self.vars.append(
            BarrierVariable(i, loc, level, origin, depth, self.cfg.weight(level, depth)))
        return i

    def guards_at(self, loc: SourceLoc, depth: int) -> List[Barrier]:
        levels = [Level.BLOCK, Level.GRID] if self.cfg.grid_enabled else [Level.BLOCK]
        return [
            Barrier(lv, Origin.INSTRUMENTED, self.new_var(loc, lv, Origin.INSTRUMENTED, depth), loc)
            for lv in levels
        ]

    def needs_point(self, s: Stmt) -> bool:
        if isinstance(s, If):
            return _subtree_touches_shared(s, self.shared)
        if isinstance(s, (Assign, Assert, While, Call)):
            return _touches_shared(s, self.shared)
        return False

    def block(self, b: Block, depth: int, loop_head: Optional[SourceLoc] = None) -> Block:
        out: List[Stmt] = []
        stmts = list(b)
        if loop_head is not None:
            # the loop-head point coincides with "before the first statement"
            loc = stmts[0].loc if stmts else loop_head
            out.extend(self.guards_at(loc, depth))
        for idx, s in enumerate(stmts):
            if self.needs_point(s) and not (loop_head is not None and idx == 0):
                out.extend(self.guards_at(s.loc, depth))
            out.append(self.stmt(s, depth))
        return replace(b, stmts=tuple(out))

    def stmt(self, s: Stmt, depth: int) -> Stmt:
        if isinstance(s, Barrier):
            if not self.cfg.inspect_existing:
                return s
            return replace(s, guard=self.new_var(s.loc, s.level, Origin.PROGRAMMER, depth))
        if isinstance(s, If):
            then = self.block(s.then, depth)
            orelse = None if s.orelse is None else self.block(s.orelse, depth)
            return replace(s, then=then, orelse=orelse)
        if isinstance(s, While):
            head = s.loc if _subtree_touches_shared(s, self.shared) else None
            return replace(s, body=self.block(s.body, depth + 1, loop_head=head))
        if isinstance(s, Call):
            return replace(s, body=self.block(s.body, depth))
        return s


def instrument(k: Kernel, cfg: WeightConfig = WeightConfig()) -> InstrumentedKernel:
    """Insert guarded barriers into ``k`` and weigh each guard."""
    if is_instrumented(k):
        raise ValueError(f"kernel {k.name!r} is already instrumented")
    ins = _Instrumenter(k, cfg)
    body = ins.block(k.body, 0)
    return InstrumentedKernel(k.with_body(body), tuple(ins.vars), k)


def _values(sol: Union[Solution, Mapping[int, bool]], m: int) -> Dict[int, bool]:
    if isinstance(sol, Solution):
        if len(sol) != m:
            raise MissingAssignment(f"solution assigns {len(sol)} of {m} variables")
        return sol.as_dict()
    missing = [i for i in range(1, m + 1) if i not in sol]
    if missing:
        raise MissingAssignment(f"no value for b{missing[0]}")
    return dict(sol)


def _map_barriers(b: Block, fn) -> Block:
    out: List[Stmt] = []
    for s in b:
        if isinstance(s, Barrier):
            r = fn(s)
            if r is not None:
                out.append(r)
        elif isinstance(s, If):
            out.append(replace(
                s,
                then=_map_barriers(s.then, fn),
                orelse=None if s.orelse is None else _map_barriers(s.orelse, fn),
            ))
        elif isinstance(s, (While, Call)):
            out.append(replace(s, body=_map_barriers(s.body, fn)))
        else:
            out.append(s)
    return replace(b, stmts=tuple(out))


def apply_solution(ik: InstrumentedKernel, sol) -> Kernel:
    """Materialize ``sol``: enabled guards become plain barriers, the rest vanish."""
    values = _values(sol, ik.m)

    def keep(s: Barrier):
        if s.guard is None:
            return replace(s, origin=Origin.PROGRAMMER)
        if values[s.guard]:
            return replace(s, origin=Origin.PROGRAMMER, guard=None)
        return None

    return ik.kernel.with_body(_map_barriers(ik.kernel.body, keep))


def strip_instrumentation(k: Kernel) -> Kernel:
    """Drop instrumented barriers and un-guard programmer ones."""

    def keep(s: Barrier):
        if s.origin is Origin.INSTRUMENTED:
            return None
        return replace(s, guard=None)

    return k.with_body(_map_barriers(k.body, keep))
