"""The MiniKernel language: AST, parser and pretty-printer."""
from .ast import (
    BUILTINS,
    Assert,
    Assign,
    Barrier,
    BinOp,
    Block,
    Call,
    If,
    Index,
    IntLit,
    Kernel,
    LaunchConfig,
    Level,
    Origin,
    Param,
    SourceLoc,
    UnOp,
    Var,
    While,
)
from .parser import ParseError, SemanticError, check_kernel, parse, parse_file
from .printer import format_expr, pretty_print

__all__ = [
    "BUILTINS", "Assert", "Assign", "Barrier", "BinOp", "Block", "Call", "If",
    "Index", "IntLit", "Kernel", "LaunchConfig", "Level", "Origin", "Param",
    "SourceLoc", "UnOp", "Var", "While", "ParseError", "SemanticError",
    "check_kernel", "parse", "parse_file", "format_expr", "pretty_print",
]
