"""Canonical MiniKernel pretty-printer (inverse of :func:`parse`)."""
from __future__ import annotations

from typing import List

from .ast import (
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
    Level,
    Origin,
    UnOp,
    Var,
    While,
)
from .parser import DEFAULT_UNROLL

INDENT = "    "

_PREC = {
    "||": 1, "&&": 2, "==": 3, "!=": 3,
    "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6, "%": 6,
}
_UNARY_PREC = 7


def format_expr(e: Expr, parent: int = 0) -> str:
    if isinstance(e, IntLit):
        s = str(e.value)
        return f"({s})" if e.value < 0 and parent >= _UNARY_PREC else s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Index):
        return f"{e.array}[{format_expr(e.index)}]"
    if isinstance(e, UnOp):
        s = f"{e.op}{format_expr(e.operand, _UNARY_PREC)}"
        return f"({s})" if parent > _UNARY_PREC else s
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        # left-associative: the right operand needs parens at equal precedence
        s = f"{format_expr(e.left, p)} {e.op} {format_expr(e.right, p + 1)}"
        return f"({s})" if p < parent else s
    raise TypeError(f"not an expression: {e!r}")


def format_barrier(s: Barrier) -> str:
    kw = "gridbarrier" if s.level is Level.GRID else "barrier"
    if s.guard is None:
        return f"{kw};"
    suffix = " original" if s.origin is Origin.PROGRAMMER else ""
    return f"{kw} when b{s.guard}{suffix};"


def _block(b: Block, depth: int, out: List[str]) -> None:
    for s in b:
        _stmt(s, depth, out)


def _stmt(s, depth: int, out: List[str]) -> None:
    pad = INDENT * depth
    if isinstance(s, Assign):
        lhs = format_expr(s.target)
        if s.declares:
            lhs = "int " + lhs
        out.append(f"{pad}{lhs} = {format_expr(s.value)};")
    elif isinstance(s, Barrier):
        out.append(pad + format_barrier(s))
    elif isinstance(s, If):
        out.append(f"{pad}if ({format_expr(s.cond)}) {{")
        _block(s.then, depth + 1, out)
        if s.orelse is not None:
            out.append(f"{pad}}} else {{")
            _block(s.orelse, depth + 1, out)
        out.append(pad + "}")
    elif isinstance(s, While):
        hint = f" unroll {s.unroll}" if s.unroll != DEFAULT_UNROLL else ""
        out.append(f"{pad}while ({format_expr(s.cond)}){hint} {{")
        _block(s.body, depth + 1, out)
        out.append(pad + "}")
    elif isinstance(s, Call):
        args = ", ".join(format_expr(a) for a in s.args)
        out.append(f"{pad}call {s.callee}({args}) {{")
        _block(s.body, depth + 1, out)
        out.append(pad + "}")
    elif isinstance(s, Assert):
        out.append(f"{pad}assert({format_expr(s.cond)});")
    else:
        raise TypeError(f"not a statement: {s!r}")


def pretty_print(k: Kernel) -> str:
    params = []
    for p in k.params:
        if p.shared:
            params.append(f"shared int {p.name}[]")
        elif p.default:
            params.append(f"int {p.name} = {p.default}")
        else:
            params.append(f"int {p.name}")
    lines = [
        f"kernel {k.name}({', '.join(params)}) "
        f"<<<{k.launch.blocks}, {k.launch.threads}>>> {{"
    ]
    _block(k.body, 1, lines)
    lines.append("}")
    return "\n".join(lines) + "\n"
