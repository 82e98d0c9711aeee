"""Enumerative two-thread verification oracle.

Each thread of the launch grid is executed on its own over the loop-unrolled
kernel, recording shared-memory accesses and the barrier occurrences it
reaches. Control flow never depends on barrier guards, so these per-thread
traces are computed once per (kernel, launch, unroll) and every later
``verify`` call only re-scores them under a new guard assignment.

For every pair of distinct threads:

* enabled barriers must be reached identically by both threads (block-level
  barriers only matter inside one block, grid-level ones everywhere),
  otherwise the pair witnesses barrier divergence;
* two conflicting accesses race when the same number of qualifying enabled
  barrier occurrences precede them in their respective threads.
"""
from __future__ import annotations

import enum
import functools
import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple, Union

from .instrument import InstrumentedKernel
from .lang.ast import (
    Assert,
    Assign,
    Barrier,
    BinOp,
    Block,
    Call,
    Expr,
    If,
    Index,
    IntLit,
    Kernel,
    LaunchConfig,
    Level,
    SourceLoc,
    UnOp,
    Var,
    While,
)
from .solution import MissingAssignment, Solution

DEFAULT_STEP_BUDGET = 100_000
DEFAULT_CAP = 8

Thread = Tuple[int, int]  # (block, tid)
VKey = Union[int, Tuple[str, tuple]]  # guard id, or ("u", path) for an unguarded barrier


class ResourceLimit(RuntimeError):
    """A thread exceeded the per-thread step budget."""


class AccessKind(enum.Enum):
    READ = "read"
    WRITE = "write"


@dataclass(frozen=True)
class AccessInfo:
    array: str
    index: int
    kind: AccessKind
    thread: Thread
    loc: SourceLoc = field(compare=False)

    def to_json(self) -> dict:
        return {
            "array": self.array,
            "index": self.index,
            "kind": self.kind.value,
            "block": self.thread[0],
            "tid": self.thread[1],
            "line": self.loc.line,
            "col": self.loc.col,
        }


@dataclass(frozen=True)
class Safe:
    pass


@dataclass(frozen=True)
class Race:
    access1: AccessInfo
    access2: AccessInfo
    disabled_on_path: FrozenSet[int]
    trace: tuple = field(default=(), compare=False, repr=False)


@dataclass(frozen=True)
class Divergence:
    at: Optional[int]
    enabled_at_fault: FrozenSet[int]
    threads: Tuple[Thread, Thread] = ((0, 0), (0, 0))
    loc: Optional[SourceLoc] = field(default=None, compare=False)
    trace: tuple = field(default=(), compare=False, repr=False)


@dataclass(frozen=True)
class Other:
    description: str


Verdict = Union[Safe, Race, Divergence, Other]


class Eligibility(enum.Enum):
    REPAIRABLE = "repairable"
    NOT_REPAIRABLE = "not_repairable"
    ALREADY_SAFE = "already_safe"


def classify(v: Verdict) -> Eligibility:
    if isinstance(v, Safe):
        return Eligibility.ALREADY_SAFE
    if isinstance(v, (Race, Divergence)):
        return Eligibility.REPAIRABLE
    return Eligibility.NOT_REPAIRABLE


# -- single-thread execution ---------------------------------------------------


class _Fault(Exception):
    pass


def _cdiv(a: int, b: int) -> int:
    if b == 0:
        raise _Fault("division by zero")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


_BINOPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _cdiv,
    "%": lambda a, b: a - b * _cdiv(a, b),
    "==": lambda a, b: int(a == b),
    "!=": lambda a, b: int(a != b),
    "<": lambda a, b: int(a < b),
    "<=": lambda a, b: int(a <= b),
    ">": lambda a, b: int(a > b),
    ">=": lambda a, b: int(a >= b),
}


@dataclass(frozen=True)
class BarrierHit:
    key: VKey
    level: Level
    occurrence: tuple
    loc: SourceLoc = field(compare=False)


class _ThreadRun:
    """Run one thread in isolation; it observes only its own shared writes."""

    def __init__(self, k: Kernel, launch: LaunchConfig, thread: Thread,
                 unroll: Optional[int], budget: int):
        self.thread = thread
        self.shared = set(k.shared_arrays)
        self.unroll = unroll
        self.budget = budget
        self.steps = 0
        self.env: Dict[str, int] = {p.name: p.default for p in k.params if not p.shared}
        self.env.update(tid=thread[1], bid=thread[0], bdim=launch.threads, gdim=launch.blocks)
        self.memory: Dict[Tuple[str, int], int] = {}
        self.events: List[Union[AccessInfo, BarrierHit]] = []
        self.iters: List[int] = []
        self.error: Optional[str] = None
        try:
            self.block(k.body, ())
        except _Fault as e:
            self.error = str(e)

    def tick(self):
        self.steps += 1
        if self.steps > self.budget:
            raise ResourceLimit(
                f"thread {self.thread} exceeded the step budget of {self.budget}")

    def eval(self, e: Expr) -> int:
        if isinstance(e, IntLit):
            return e.value
        if isinstance(e, Var):
            return self.env.get(e.name, 0)
        if isinstance(e, Index):
            i = self.eval(e.index)
            self.events.append(AccessInfo(e.array, i, AccessKind.READ, self.thread, e.loc))
            return self.memory.get((e.array, i), 0)
        if isinstance(e, UnOp):
            v = self.eval(e.operand)
            return -v if e.op == "-" else int(not v)
        if isinstance(e, BinOp):
            if e.op == "&&":
                return int(bool(self.eval(e.left)) and bool(self.eval(e.right)))
            if e.op == "||":
                return int(bool(self.eval(e.left)) or bool(self.eval(e.right)))
            a = self.eval(e.left)
            b = self.eval(e.right)
            return _BINOPS[e.op](a, b)
        raise TypeError(e)

    def block(self, b: Block, path: tuple):
        for i, s in enumerate(b):
            self.stmt(s, path + (i,))

    def stmt(self, s, path: tuple):
        self.tick()
        if isinstance(s, Assign):
            t = s.target
            if isinstance(t, Index):
                i = self.eval(t.index)
                v = self.eval(s.value)
                self.events.append(AccessInfo(t.array, i, AccessKind.WRITE, self.thread, s.loc))
                self.memory[(t.array, i)] = v
            else:
                self.env[t.name] = self.eval(s.value)
        elif isinstance(s, Barrier):
            key = s.guard if s.guard is not None else ("u", path)
            self.events.append(BarrierHit(key, s.level, (path, tuple(self.iters)), s.loc))
        elif isinstance(s, If):
            if self.eval(s.cond):
                self.block(s.then, path + (0,))
            elif s.orelse is not None:
                self.block(s.orelse, path + (1,))
        elif isinstance(s, While):
            bound = s.unroll if self.unroll is None else self.unroll
            self.iters.append(0)
            for n in range(bound):
                if not self.eval(s.cond):
                    break
                self.iters[-1] = n
                self.block(s.body, path + (0,))
                self.tick()
            self.iters.pop()
        elif isinstance(s, Call):
            self.block(s.body, path + (0,))
        elif isinstance(s, Assert):
            if not self.eval(s.cond):
                raise _Fault(f"assertion failed at {s.loc} in thread {self.thread}")


# -- pairwise checking ---------------------------------------------------------


@dataclass
class _Trace:
    thread: Thread
    error: Optional[str]
    accesses: List[AccessInfo]
    before: List[Dict[VKey, int]]  # barrier counts preceding each access
    occ: Dict[VKey, tuple]
    first_hit: Dict[VKey, BarrierHit]
    cells: Dict[Tuple[str, int], List[int]]


def _summarize(run: _ThreadRun) -> _Trace:
    accesses, before = [], []
    counts: Dict[VKey, int] = defaultdict(int)
    occ: Dict[VKey, list] = defaultdict(list)
    first: Dict[VKey, BarrierHit] = {}
    cells: Dict[Tuple[str, int], List[int]] = defaultdict(list)
    for ev in run.events:
        if isinstance(ev, BarrierHit):
            counts[ev.key] += 1
            occ[ev.key].append(ev.occurrence)
            first.setdefault(ev.key, ev)
        else:
            cells[(ev.array, ev.index)].append(len(accesses))
            accesses.append(ev)
            before.append({k: c for k, c in counts.items() if c})
    return _Trace(run.thread, run.error, accesses, before,
                  {k: tuple(v) for k, v in occ.items()}, first, dict(cells))


def check_launch(launch: LaunchConfig, cap: int = DEFAULT_CAP) -> LaunchConfig:
    if launch.blocks < 1 or launch.threads < 1:
        raise ValueError("launch dimensions must be positive")
    if launch.size < 2:
        raise ValueError("a launch needs at least two threads to race")
    if launch.blocks > cap or launch.threads > cap:
        raise ValueError(f"launch {launch.blocks}x{launch.threads} exceeds the cap of {cap}")
    return launch


class KernelOracle:
    """Verifier bound to one instrumented kernel and launch configuration."""

    def __init__(self, ik: InstrumentedKernel, launch: Optional[LaunchConfig] = None,
                 unroll: Optional[int] = None, step_budget: int = DEFAULT_STEP_BUDGET,
                 cap: int = DEFAULT_CAP):
        self.ik = ik
        self.launch = check_launch(launch or ik.kernel.launch, cap)
        self.unroll = unroll
        threads = [(b, t) for b in range(self.launch.blocks) for t in range(self.launch.threads)]
        runs = [_ThreadRun(ik.kernel, self.launch, th, unroll, step_budget) for th in threads]
        self.traces = [_summarize(r) for r in runs]
        self.levels: Dict[VKey, Level] = {}
        for r in runs:
            for ev in r.events:
                if isinstance(ev, BarrierHit):
                    self.levels[ev.key] = ev.level
        self._conflicts: Dict[Tuple[int, int], list] = {}

    def conflicts(self, i: int, j: int) -> list:
        key = (i, j)
        if key not in self._conflicts:
            ti, tj = self.traces[i], self.traces[j]
            out = []
            for cell, idx_i in ti.cells.items():
                idx_j = tj.cells.get(cell)
                if not idx_j:
                    continue
                for a, b in itertools.product(idx_i, idx_j):
                    if (ti.accesses[a].kind is AccessKind.WRITE
                            or tj.accesses[b].kind is AccessKind.WRITE):
                        out.append((a, b))
            out.sort()
            self._conflicts[key] = out
        return self._conflicts[key]

    def verify(self, sol: Union[Solution, Mapping[int, bool]]) -> Verdict:
        values = _assignment(sol, self.ik.m)

        def enabled(key: VKey) -> bool:
            return values[key] if isinstance(key, int) else True

        for t in self.traces:
            if t.error is not None:
                return Other(t.error)

        for i, j in itertools.combinations(range(len(self.traces)), 2):
            ti, tj = self.traces[i], self.traces[j]
            same_block = ti.thread[0] == tj.thread[0]

            def qualifies(key: VKey) -> bool:
                return same_block or self.levels[key] is Level.GRID

            keys = sorted(set(ti.occ) | set(tj.occ), key=_vkey_order)
            differing = [
                k for k in keys
                if qualifies(k) and enabled(k) and ti.occ.get(k, ()) != tj.occ.get(k, ())
            ]
            if differing:
                return self._divergence(ti, tj, differing)

            for a, b in self.conflicts(i, j):
                ca, cb = ti.before[a], tj.before[b]
                touched = set(ca) | set(cb)
                gap = sum(
                    ca.get(k, 0) - cb.get(k, 0)
                    for k in touched if qualifies(k) and enabled(k)
                )
                if gap == 0:
                    path = frozenset(
                        k for k in touched
                        if isinstance(k, int) and qualifies(k) and not values[k]
                        and ca.get(k, 0) != cb.get(k, 0)
                    )
                    trace = tuple(x.to_json() for x in ti.accesses + tj.accesses)
                    return Race(ti.accesses[a], tj.accesses[b], path, trace)
        return Safe()

    def _divergence(self, ti: _Trace, tj: _Trace, differing: List[VKey]) -> Divergence:
        hits = [ti.first_hit.get(k) or tj.first_hit[k] for k in differing]
        trace = tuple(
            {"block": t.thread[0], "tid": t.thread[1], "barrier": _vkey_str(h.key),
             "line": h.loc.line, "col": h.loc.col}
            for t in (ti, tj) for h in t.first_hit.values()
        )
        if any(not isinstance(k, int) for k in differing):
            # an always-on barrier diverges: no guard can fix this
            h = hits[[not isinstance(k, int) for k in differing].index(True)]
            return Divergence(None, frozenset(), (ti.thread, tj.thread), h.loc, trace)
        return Divergence(differing[0], frozenset(differing), (ti.thread, tj.thread),
                          hits[0].loc, trace)


def _vkey_order(k: VKey):
    return (0, k, ()) if isinstance(k, int) else (1, 0, k[1])


def _vkey_str(k: VKey) -> str:
    return f"b{k}" if isinstance(k, int) else "unguarded"


def _assignment(sol, m: int) -> Dict[int, bool]:
    if isinstance(sol, Solution):
        if len(sol) != m:
            raise MissingAssignment(f"solution assigns {len(sol)} of {m} variables")
        return sol.as_dict()
    missing = [i for i in range(1, m + 1) if i not in sol]
    if missing:
        raise MissingAssignment(f"no value for b{missing[0]}")
    return dict(sol)


@functools.lru_cache(maxsize=64)
def _cached_oracle(ik, launch, unroll, step_budget, cap) -> KernelOracle:
    return KernelOracle(ik, launch, unroll, step_budget, cap)


def verify(ik: InstrumentedKernel, sol, launch: Optional[LaunchConfig] = None,
           unroll: Optional[int] = None, step_budget: int = DEFAULT_STEP_BUDGET,
           cap: int = DEFAULT_CAP) -> Verdict:
    """Check ``ik`` under the guard assignment ``sol``."""
    return _cached_oracle(ik, launch, unroll, step_budget, cap).verify(sol)
