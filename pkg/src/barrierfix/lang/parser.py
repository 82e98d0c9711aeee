"""Recursive-descent parser for MiniKernel source text.

The parser performs two lowering steps so later passes never see them:

* an assignment that both reads and writes the same shared array is split
  into a read into a fresh temporary followed by the write;
* calls to ``func`` definitions are inlined into :class:`Call` nodes whose
  body is a renamed copy of the callee.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .ast import (
    BUILTINS,
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
    Origin,
    Param,
    SourceLoc,
    Stmt,
    UnOp,
    Var,
    While,
    arrays_read,
    walk_stmts,
)

KEYWORDS = {
    "kernel", "func", "shared", "int", "barrier", "gridbarrier", "when",
    "original", "if", "else", "while", "unroll", "assert", "return", "call",
}

DEFAULT_UNROLL = 2


class ParseError(Exception):
    def __init__(self, msg: str, loc: SourceLoc):
        super().__init__(f"{loc}: {msg}")
        self.msg = msg
        self.loc = loc


class SemanticError(ParseError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident', 'int', 'op', 'eof'
    text: str
    loc: SourceLoc


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><<<|>>>|==|!=|<=|>=|&&|\|\||[-+*/%<>=!(){}\[\];,])
    """,
    re.VERBOSE | re.DOTALL,
)


def tokenize(text: str, filename: str = "<input>") -> List[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            loc = SourceLoc(filename, line, pos - line_start + 1)
            raise ParseError(f"unexpected character {text[pos]!r}", loc)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, chunk, SourceLoc(filename, line, pos - line_start + 1)))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", SourceLoc(filename, line, pos - line_start + 1)))
    return tokens


# binary operator precedence, loosest first
_PRECEDENCE = [
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
]


@dataclass
class _Func:
    name: str
    params: Tuple[Param, ...]
    body: Block
    returns: Optional[Expr]
    loc: SourceLoc


class _Parser:
    def __init__(self, tokens: List[Token], filename: str):
        self.toks = tokens
        self.i = 0
        self.filename = filename
        self.names: Set[str] = {t.text for t in tokens if t.kind == "ident"}
        self._temps = itertools.count()
        self._inlines = itertools.count(1)
        self.funcs: Dict[str, _Func] = {}
        self.in_func = False

    # -- token plumbing ---------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "ident")

    def accept(self, text: str) -> Optional[Token]:
        if self.at(text):
            return self.advance()
        return None

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def expect_ident(self) -> Token:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            self.fail(f"expected identifier, found {t.text or 'end of input'!r}")
        return self.advance()

    def expect_int(self) -> int:
        neg = self.accept("-") is not None
        t = self.tok
        if t.kind != "int":
            self.fail(f"expected integer, found {t.text or 'end of input'!r}")
        self.advance()
        return -int(t.text) if neg else int(t.text)

    def fail(self, msg: str):
        raise ParseError(msg, self.tok.loc)

    def fresh_temp(self) -> str:
        while True:
            name = f"t{next(self._temps)}"
            if name not in self.names:
                self.names.add(name)
                return name

    def fresh_local(self, callee: str, name: str, n: int) -> str:
        base = f"_{callee}{n}_{name}"
        cand = base
        k = 0
        while cand in self.names:
            k += 1
            cand = f"{base}_{k}"
        self.names.add(cand)
        return cand

    # -- top level --------------------------------------------------------

    def parse_file(self) -> Kernel:
        kernel = None
        pending: List[Tuple[int, int]] = []
        # functions may be defined after the kernel; collect them first
        while self.tok.kind != "eof":
            if self.at("func"):
                f = self.parse_func()
                if f.name in self.funcs:
                    raise SemanticError(f"function {f.name!r} defined twice", f.loc)
                self.funcs[f.name] = f
            elif self.at("kernel"):
                if kernel is not None:
                    self.fail("only one kernel per file")
                start = self.i
                self.skip_kernel()
                pending.append((start, self.i))
                kernel = True
            else:
                self.fail(f"expected 'kernel' or 'func', found {self.tok.text!r}")
        if kernel is None:
            raise ParseError("no kernel found", self.tok.loc)
        start, end = pending[0]
        self.i = start
        k = self.parse_kernel()
        assert self.i == end
        return k

    def skip_kernel(self):
        depth = 0
        while self.tok.kind != "eof":
            t = self.advance()
            if t.text == "{":
                depth += 1
            elif t.text == "}":
                depth -= 1
                if depth == 0:
                    return
        self.fail("unterminated kernel body")

    def parse_params(self) -> Tuple[Param, ...]:
        self.expect("(")
        params: List[Param] = []
        if not self.at(")"):
            while True:
                loc = self.tok.loc
                if self.accept("shared"):
                    self.expect("int")
                    name = self.expect_ident().text
                    self.expect("[")
                    self.expect("]")
                    params.append(Param(name, True, 0, loc))
                else:
                    self.expect("int")
                    name = self.expect_ident().text
                    default = self.expect_int() if self.accept("=") else 0
                    params.append(Param(name, False, default, loc))
                if not self.accept(","):
                    break
        self.expect(")")
        seen = set()
        for p in params:
            if p.name in seen or p.name in BUILTINS:
                raise SemanticError(f"bad or duplicate parameter {p.name!r}", p.loc)
            seen.add(p.name)
        return tuple(params)

    def parse_func(self) -> _Func:
        loc = self.expect("func").loc
        self.accept("int")  # optional return type
        name = self.expect_ident().text
        params = self.parse_params()
        self.in_func = True
        try:
            body, returns = self.parse_block(allow_return=True)
        finally:
            self.in_func = False
        return _Func(name, params, body, returns, loc)

    def parse_kernel(self) -> Kernel:
        loc = self.expect("kernel").loc
        name = self.expect_ident().text
        params = self.parse_params()
        launch = LaunchConfig()
        if self.accept("<<<"):
            blocks = self.expect_int()
            self.expect(",")
            threads = self.expect_int()
            self.expect(">>>")
            if blocks < 1 or threads < 1:
                raise SemanticError("launch dimensions must be positive", loc)
            launch = LaunchConfig(blocks, threads)
        body, _ = self.parse_block()
        return Kernel(name, params, body, launch, loc)

    # -- statements -------------------------------------------------------

    def parse_block(self, allow_return: bool = False) -> Tuple[Block, Optional[Expr]]:
        loc = self.expect("{").loc
        stmts: List[Stmt] = []
        returns = None
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.fail("unexpected end of input inside block")
            if self.at("return"):
                if not allow_return:
                    self.fail("'return' is only allowed as the last statement of a func")
                self.advance()
                returns = self.parse_expr()
                self.expect(";")
                if not self.at("}"):
                    self.fail("'return' must be the last statement of a func")
                continue
            stmts.extend(self.parse_stmt())
        self.expect("}")
        return Block(tuple(stmts), loc), returns

    def parse_stmt(self) -> List[Stmt]:
        t = self.tok
        loc = t.loc
        if self.at("barrier") or self.at("gridbarrier"):
            self.advance()
            level = Level.GRID if t.text == "gridbarrier" else Level.BLOCK
            guard, origin = None, Origin.PROGRAMMER
            if self.accept("when"):
                g = self.expect_ident()
                m = re.fullmatch(r"b([1-9]\d*)", g.text)
                if m is None:
                    raise ParseError(f"bad barrier guard {g.text!r}", g.loc)
                guard = int(m.group(1))
                origin = Origin.PROGRAMMER if self.accept("original") else Origin.INSTRUMENTED
            self.expect(";")
            return [Barrier(level, origin, guard, loc)]
        if self.at("if"):
            return [self.parse_if()]
        if self.at("while"):
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            unroll = DEFAULT_UNROLL
            if self.accept("unroll"):
                unroll = self.expect_int()
                if unroll < 0:
                    raise SemanticError("unroll hint must be non-negative", loc)
            body, _ = self.parse_block()
            return [While(cond, body, unroll, loc)]
        if self.at("assert"):
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            self.expect(";")
            return [Assert(cond, loc)]
        if self.at("call"):
            self.advance()
            callee = self.expect_ident().text
            args = self.parse_args()
            body, _ = self.parse_block()
            return [Call(callee, args, body, loc)]
        if self.at("int"):
            self.advance()
            name_tok = self.expect_ident()
            target = Var(name_tok.text, name_tok.loc)
            if self.accept("="):
                if self.is_call():
                    # int x = f(...);  ->  int x = 0; <inlined call assigning x>
                    decl = Assign(target, IntLit(0, loc), True, loc)
                    return [decl] + self.parse_call(target)
                eq_loc = self.toks[self.i - 1].loc
                value = self.parse_expr()
                self.expect(";")
                return self.split(Assign(target, value, True, loc), eq_loc)
            self.expect(";")
            return [Assign(target, IntLit(0, loc), True, loc)]
        if t.kind == "ident" and t.text not in KEYWORDS:
            if self.peek().text == "(":
                return self.parse_call(None)
            target = self.parse_lvalue()
            eq_loc = self.expect("=").loc
            if self.is_call():
                if not isinstance(target, Var):
                    self.fail("call results may only be assigned to locals")
                return self.parse_call(target)
            value = self.parse_expr()
            self.expect(";")
            return self.split(Assign(target, value, False, loc), eq_loc)
        self.fail(f"unexpected {t.text or 'end of input'!r}")

    def parse_if(self) -> If:
        loc = self.expect("if").loc
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        then, _ = self.parse_block()
        orelse = None
        if self.accept("else"):
            if self.at("if"):
                inner = self.parse_if()
                orelse = Block((inner,), inner.loc)
            else:
                orelse, _ = self.parse_block()
        return If(cond, then, orelse, loc)

    def parse_lvalue(self):
        t = self.expect_ident()
        if self.accept("["):
            idx = self.parse_expr()
            self.expect("]")
            return Index(t.text, idx, t.loc)
        return Var(t.text, t.loc)

    def is_call(self) -> bool:
        return (
            self.tok.kind == "ident"
            and self.tok.text not in KEYWORDS
            and self.peek().text == "("
        )

    def parse_args(self) -> Tuple[Expr, ...]:
        self.expect("(")
        args = []
        if not self.at(")"):
            while True:
                args.append(self.parse_expr())
                if not self.accept(","):
                    break
        self.expect(")")
        return tuple(args)

    def parse_call(self, target: Optional[Var]) -> List[Stmt]:
        name_tok = self.expect_ident()
        args = self.parse_args()
        self.expect(";")
        if self.in_func:
            raise SemanticError("calls inside func bodies are not supported", name_tok.loc)
        f = self.funcs.get(name_tok.text)
        if f is None:
            raise SemanticError(f"call to undefined function {name_tok.text!r}", name_tok.loc)
        return [self.inline(f, args, target, name_tok.loc)]

    # -- lowering ---------------------------------------------------------

    def split(self, s: Assign, eq_loc: SourceLoc) -> List[Stmt]:
        """Split ``A[i] = f(A[j])`` into a temp read followed by the write."""
        if not isinstance(s.target, Index):
            return [s]
        arr = s.target.array
        pre: List[Stmt] = []
        index, value = s.target.index, s.value
        if arr in arrays_read(index):
            tmp = self.fresh_temp()
            pre.append(Assign(Var(tmp, s.loc), index, True, s.loc))
            index = Var(tmp, eq_loc)
        if arr in arrays_read(value):
            tmp = self.fresh_temp()
            pre.append(Assign(Var(tmp, s.loc), value, True, s.loc))
            value = Var(tmp, eq_loc)
        if not pre:
            return [s]
        write = Assign(Index(arr, index, s.target.loc), value, False, eq_loc)
        return pre + [write]

    def inline(self, f: _Func, args: Tuple[Expr, ...], target: Optional[Var], loc: SourceLoc) -> Call:
        if len(args) != len(f.params):
            raise SemanticError(
                f"{f.name} expects {len(f.params)} arguments, got {len(args)}", loc)
        n = next(self._inlines)
        rename: Dict[str, str] = {}
        prologue: List[Stmt] = []
        for p, a in zip(f.params, args):
            if p.shared:
                if not isinstance(a, Var):
                    raise SemanticError(
                        f"argument for shared parameter {p.name!r} must be an array name", loc)
                rename[p.name] = a.name
            else:
                local = self.fresh_local(f.name, p.name, n)
                rename[p.name] = local
                # bound at the parameter's declaration so the inlined block
                # stays in source order
                prologue.append(Assign(Var(local, p.loc), a, True, p.loc))
        for s in _walk(f.body):
            if isinstance(s, Assign) and s.declares:
                rename[s.target.name] = self.fresh_local(f.name, s.target.name, n)
        body = [_rename_stmt(s, rename) for s in f.body]
        if f.returns is not None:
            ret = _rename_expr(f.returns, rename)
            if target is not None:
                body.append(Assign(target, ret, False, ret.loc))
            else:
                tmp = self.fresh_local(f.name, "ret", n)
                body.append(Assign(Var(tmp, ret.loc), ret, True, ret.loc))
        elif target is not None:
            raise SemanticError(f"{f.name} does not return a value", loc)
        return Call(f.name, args, Block(tuple(prologue + body), f.body.loc), loc)

    # -- expressions ------------------------------------------------------

    def parse_expr(self, level: int = 0) -> Expr:
        if level == len(_PRECEDENCE):
            return self.parse_unary()
        left = self.parse_expr(level + 1)
        while self.tok.kind == "op" and self.tok.text in _PRECEDENCE[level]:
            op = self.advance()
            right = self.parse_expr(level + 1)
            left = BinOp(op.text, left, right, op.loc)
        return left

    def parse_unary(self) -> Expr:
        t = self.tok
        if t.kind == "op" and t.text in ("-", "!"):
            self.advance()
            operand = self.parse_unary()
            if t.text == "-" and isinstance(operand, IntLit):
                return IntLit(-operand.value, t.loc)
            return UnOp(t.text, operand, t.loc)
        if self.accept("("):
            e = self.parse_expr()
            self.expect(")")
            return e
        if t.kind == "int":
            self.advance()
            return IntLit(int(t.text), t.loc)
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.advance()
            if self.at("("):
                self.fail("calls are only allowed as statements or assignment right-hand sides")
            if self.accept("["):
                idx = self.parse_expr()
                self.expect("]")
                return Index(t.text, idx, t.loc)
            return Var(t.text, t.loc)
        self.fail(f"expected expression, found {t.text or 'end of input'!r}")


def _walk(block: Block):
    return walk_stmts(block)


def _rename_expr(e: Expr, m: Dict[str, str]) -> Expr:
    if isinstance(e, Var):
        return replace(e, name=m.get(e.name, e.name))
    if isinstance(e, Index):
        return replace(e, array=m.get(e.array, e.array), index=_rename_expr(e.index, m))
    if isinstance(e, BinOp):
        return replace(e, left=_rename_expr(e.left, m), right=_rename_expr(e.right, m))
    if isinstance(e, UnOp):
        return replace(e, operand=_rename_expr(e.operand, m))
    return e


def _rename_block(b: Block, m: Dict[str, str]) -> Block:
    return replace(b, stmts=tuple(_rename_stmt(s, m) for s in b))


def _rename_stmt(s: Stmt, m: Dict[str, str]) -> Stmt:
    if isinstance(s, Assign):
        return replace(s, target=_rename_expr(s.target, m), value=_rename_expr(s.value, m))
    if isinstance(s, If):
        return replace(
            s,
            cond=_rename_expr(s.cond, m),
            then=_rename_block(s.then, m),
            orelse=None if s.orelse is None else _rename_block(s.orelse, m),
        )
    if isinstance(s, While):
        return replace(s, cond=_rename_expr(s.cond, m), body=_rename_block(s.body, m))
    if isinstance(s, Assert):
        return replace(s, cond=_rename_expr(s.cond, m))
    return s


# -- semantic checks -----------------------------------------------------------


def check_kernel(k: Kernel) -> None:
    """Raise :class:`SemanticError` if ``k`` violates the kernel invariants."""
    shared = set(k.shared_arrays)
    scalars = {p.name for p in k.params if not p.shared}
    _check_block(k.body, shared, [set(BUILTINS) | scalars])


def _check_block(b: Block, shared: Set[str], scopes: List[Set[str]]) -> None:
    scopes = scopes + [set()]
    for s in b:
        _check_stmt(s, shared, scopes)


def _visible(name: str, scopes: Sequence[Set[str]]) -> bool:
    return any(name in sc for sc in scopes)


def _check_expr(e: Expr, shared: Set[str], scopes, allow_array: bool = False) -> None:
    if isinstance(e, Var):
        if e.name in shared:
            if not allow_array:
                raise SemanticError(f"shared array {e.name!r} used without an index", e.loc)
            return
        if not _visible(e.name, scopes):
            raise SemanticError(f"undeclared identifier {e.name!r}", e.loc)
    elif isinstance(e, Index):
        if e.array not in shared:
            raise SemanticError(f"{e.array!r} is not a shared array", e.loc)
        _check_expr(e.index, shared, scopes)
    elif isinstance(e, BinOp):
        _check_expr(e.left, shared, scopes)
        _check_expr(e.right, shared, scopes)
    elif isinstance(e, UnOp):
        _check_expr(e.operand, shared, scopes)


def _check_stmt(s: Stmt, shared: Set[str], scopes: List[Set[str]]) -> None:
    if isinstance(s, Assign):
        _check_expr(s.value, shared, scopes)
        t = s.target
        if isinstance(t, Index):
            _check_expr(t, shared, scopes)
            if t.array in arrays_read(t.index) | arrays_read(s.value):
                raise SemanticError(
                    f"statement both reads and writes shared array {t.array!r}", s.loc)
        elif s.declares:
            if t.name in scopes[-1] or t.name in shared or t.name in BUILTINS:
                raise SemanticError(f"redeclaration of {t.name!r}", t.loc)
            scopes[-1].add(t.name)
        else:
            if t.name in BUILTINS or t.name in shared:
                raise SemanticError(f"cannot assign to {t.name!r}", t.loc)
            if not _visible(t.name, scopes):
                raise SemanticError(f"undeclared identifier {t.name!r}", t.loc)
    elif isinstance(s, If):
        _check_expr(s.cond, shared, scopes)
        _check_block(s.then, shared, scopes)
        if s.orelse is not None:
            _check_block(s.orelse, shared, scopes)
    elif isinstance(s, While):
        _check_expr(s.cond, shared, scopes)
        _check_block(s.body, shared, scopes)
    elif isinstance(s, Call):
        for a in s.args:
            _check_expr(a, shared, scopes, allow_array=True)
        _check_block(s.body, shared, scopes)
    elif isinstance(s, Assert):
        _check_expr(s.cond, shared, scopes)


def parse(text: str, filename: str = "<input>") -> Kernel:
    """Parse MiniKernel source into a checked :class:`Kernel`."""
    p = _Parser(tokenize(text, filename), filename)
    k = p.parse_file()
    check_kernel(k)
    return k


def parse_file(path) -> Kernel:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read(), str(path))
