"""Immutable AST for MiniKernel programs.

All nodes are frozen dataclasses with tuple children, so kernels are hashable
and can be shared freely. Source locations never take part in equality:
two kernels are structurally equal when they differ only in layout.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Tuple, Union

BUILTINS = ("tid", "bid", "bdim", "gdim")


@dataclass(frozen=True, order=True)
class SourceLoc:
    file: str
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


NOLOC = SourceLoc("<generated>", 1, 1)


def _loc() -> SourceLoc:
    return field(default=NOLOC, compare=False, repr=False)


class Level(enum.Enum):
    BLOCK = "block"
    GRID = "grid"


class Origin(enum.Enum):
    PROGRAMMER = "programmer"
    INSTRUMENTED = "instrumented"


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class IntLit:
    value: int
    loc: SourceLoc = _loc()


@dataclass(frozen=True)
class Var:
    name: str
    loc: SourceLoc = _loc()


@dataclass(frozen=True)
class Index:
    array: str
    index: "Expr"
    loc: SourceLoc = _loc()


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    loc: SourceLoc = _loc()


@dataclass(frozen=True)
class UnOp:
    op: str
    operand: "Expr"
    loc: SourceLoc = _loc()


Expr = Union[IntLit, Var, Index, BinOp, UnOp]


# -- statements --------------------------------------------------------------


@dataclass(frozen=True)
class Block:
    stmts: Tuple["Stmt", ...] = ()
    loc: SourceLoc = _loc()

    def __iter__(self) -> Iterator["Stmt"]:
        return iter(self.stmts)

    def __len__(self) -> int:
        return len(self.stmts)


@dataclass(frozen=True)
class Assign:
    """``target = value``; ``declares`` marks ``int x = value``."""

    target: Union[Var, Index]
    value: Expr
    declares: bool = False
    loc: SourceLoc = _loc()


@dataclass(frozen=True)
class Barrier:
    level: Level = Level.BLOCK
    origin: Origin = Origin.PROGRAMMER
    guard: Optional[int] = None
    loc: SourceLoc = _loc()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: Block
    orelse: Optional[Block] = None
    loc: SourceLoc = _loc()


@dataclass(frozen=True)
class While:
    cond: Expr
    body: Block
    unroll: int = 2
    loc: SourceLoc = _loc()


@dataclass(frozen=True)
class Call:
    """An inlined call site. ``body`` holds the renamed callee statements."""

    callee: str
    args: Tuple[Expr, ...]
    body: Block
    loc: SourceLoc = _loc()


@dataclass(frozen=True)
class Assert:
    cond: Expr
    loc: SourceLoc = _loc()


Stmt = Union[Assign, Barrier, If, While, Call, Assert]


# -- kernels -----------------------------------------------------------------


@dataclass(frozen=True)
class LaunchConfig:
    blocks: int = 1
    threads: int = 4

    @property
    def size(self) -> int:
        return self.blocks * self.threads


@dataclass(frozen=True)
class Param:
    name: str
    shared: bool
    default: int = 0
    loc: SourceLoc = _loc()


@dataclass(frozen=True)
class Kernel:
    name: str
    params: Tuple[Param, ...]
    body: Block
    launch: LaunchConfig = LaunchConfig()
    loc: SourceLoc = _loc()

    @property
    def shared_arrays(self) -> Tuple[str, ...]:
        return tuple(p.name for p in self.params if p.shared)

    def with_body(self, body: Block) -> "Kernel":
        return replace(self, body=body)


# -- traversal helpers -------------------------------------------------------


def sub_exprs(e: Expr) -> Iterator[Expr]:
    """Pre-order walk over an expression tree."""
    yield e
    if isinstance(e, Index):
        yield from sub_exprs(e.index)
    elif isinstance(e, BinOp):
        yield from sub_exprs(e.left)
        yield from sub_exprs(e.right)
    elif isinstance(e, UnOp):
        yield from sub_exprs(e.operand)


def arrays_read(e: Expr) -> set:
    return {x.array for x in sub_exprs(e) if isinstance(x, Index)}


def stmt_exprs(s: Stmt) -> Tuple[Expr, ...]:
    """Expressions evaluated directly by ``s`` (not by nested blocks)."""
    if isinstance(s, Assign):
        if isinstance(s.target, Index):
            return (s.target.index, s.value)
        return (s.value,)
    if isinstance(s, (If, While, Assert)):
        return (s.cond,)
    if isinstance(s, Call):
        return s.args
    return ()


def shared_reads(s: Stmt, shared: Tuple[str, ...]) -> set:
    out = set()
    for e in stmt_exprs(s):
        out |= arrays_read(e) & set(shared)
    return out


def shared_writes(s: Stmt, shared: Tuple[str, ...]) -> set:
    if isinstance(s, Assign) and isinstance(s.target, Index) and s.target.array in shared:
        return {s.target.array}
    return set()


def walk_stmts(block: Block) -> Iterator[Stmt]:
    for s in block:
        yield s
        for child in child_blocks(s):
            yield from walk_stmts(child)


def child_blocks(s: Stmt) -> Tuple[Block, ...]:
    if isinstance(s, If):
        return (s.then,) if s.orelse is None else (s.then, s.orelse)
    if isinstance(s, (While, Call)):
        return (s.body,)
    return ()
